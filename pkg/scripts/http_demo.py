#!/usr/bin/env python3
"""End-to-end demo over localhost HTTP.

Starts a service in this process, creates one session, then runs every
player on its own thread through the real JSON wire format.  Prints the
published statistics, each player's rank and its validation bits.
"""

import argparse
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from blindbench.client import run_player
from blindbench.httpd import serve_background
from blindbench.keys import PrivateBundle, make_roster, new_mac_key, roster_digests
from blindbench.paillier import keygen
from blindbench.rng import SecretStream
from blindbench.service import BenchmarkService, ServiceConfig


def parse_args(argv):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--values", default="12.50,9.25,17.00,9.25",
                        help="comma-separated KPIs, one per player")
    parser.add_argument("--bits", type=int, default=768)
    parser.add_argument("--seed", default="http-demo",
                        help="seed label for keys, tokens and player blinds")
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    raw = args.values.split(",")
    values = [Fraction(tok) for tok in raw]
    n = len(values)
    root = SecretStream(args.seed.encode())
    keypair = keygen(args.bits, root.fork("keys"),
                     allow_insecure=args.bits < 512)
    mac_key = new_mac_key(root.fork("mac"))
    tokens = make_roster(n, root.fork("roster"))

    with tempfile.TemporaryDirectory(prefix="blindbench-demo-") as tmp:
        service = BenchmarkService(ServiceConfig(data_dir=Path(tmp)))
        server, thread = serve_background(service)
        host, port = server.server_address[:2]
        base = f"http://{host}:{port}"
        try:
            created = service.create_session({
                "n": n,
                "modulus_bits": keypair.bits,
                "public_modulus": format(keypair.n, "x"),
                "roster": roster_digests(tokens),
            })
            session_id = created["session_id"]
            print(f"serving at {base}, session {session_id}, n={n}")

            def play(seat):
                bundle = PrivateBundle(key=keypair, mac_key=mac_key,
                                       join_token=tokens[seat])
                return run_player(base, session_id, bundle, values[seat],
                                  rng=root.fork(f"player/{seat}"))
            with ThreadPoolExecutor(max_workers=n) as pool:
                results = list(pool.map(play, range(n)))
        finally:
            server.shutdown()
            thread.join(timeout=10)
            service.close()

    results.sort(key=lambda r: r.index)
    print("published statistics:")
    for name, text in sorted(results[0].stats.items()):
        print(f"  {name:>16}: {text}")
    print("per-player view:")
    for res in results:
        bits = "".join(str(res.bits[m]) for m in sorted(res.bits))
        print(f"  player {res.index}: kpi={raw[res.index - 1]} "
              f"rank={res.rank} validation_bits={bits}")
    if all(all(b == 1 for b in res.bits.values()) for res in results):
        print("integrity: every player validated every statistic")
        return 0
    print("integrity: at least one validation bit is zero")
    return 4


if __name__ == "__main__":
    sys.exit(main())
