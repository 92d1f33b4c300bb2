"""Command line surface.

Subcommands: setup-keys, serve, join, simulate, bench, oracle.
Exit codes: 0 success, 2 usage or configuration problem, 3 protocol
failure, 4 integrity-bit failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from . import oracle as oracle_mod
from .client import run_player
from .encoding import parse_kpi
from .engine import TamperSpec
from .errors import (
    BlindbenchError,
    BudgetExceeded,
    KeyFileError,
    PeerGroupTooSmall,
    PlaintextOutOfRange,
    SchemaViolation,
    WeakKeyRejected,
)
from .httpd import make_server
from .keys import (
    make_roster,
    new_mac_key,
    read_private_bundle,
    read_public_key,
    read_roster,
    roster_digests,
    write_private_bundle,
    write_public_key,
    write_roster,
)
from .paillier import key_fingerprint, keygen
from .rng import SecretStream
from .service import BenchmarkService, ServiceConfig
from .simulate import ScenarioConfig, run_session
from .wire import BLINDED_MEASURES, STATISTICS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROTOCOL = 3
EXIT_INTEGRITY = 4

_USAGE_ERRORS = (BudgetExceeded, PeerGroupTooSmall, SchemaViolation,
                 KeyFileError, WeakKeyRejected, PlaintextOutOfRange)


def _stream(seed_hex: str | None) -> SecretStream | None:
    if seed_hex is None:
        return None
    return SecretStream(bytes.fromhex(seed_hex))


def _parse_inputs(text: str, decimal_places: int):
    return [parse_kpi(part.strip(), decimal_places)
            for part in text.split(",") if part.strip()]


def cmd_setup_keys(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = _stream(args.seed) or SecretStream.from_entropy()
    sk = keygen(args.bits, rng, allow_insecure=args.allow_insecure)
    mac_key = new_mac_key(rng)
    tokens = make_roster(args.seats, rng)
    write_public_key(out / "public-key.json", sk.public_key())
    write_roster(out / "roster.json", tokens)
    for seat, token in enumerate(tokens, start=1):
        write_private_bundle(out / f"bundle-{seat:02d}.json", sk, mac_key,
                             token=token)
    print(f"key fingerprint: {key_fingerprint(sk.n)}")
    print(f"wrote public-key.json, roster.json and {args.seats} bundles "
          f"to {out}")
    print("distribute one bundle to each player over a secure channel; "
          "the service only ever needs public-key.json and the roster "
          "digests")
    return EXIT_OK


def _session_config_from_file(path: Path) -> dict:
    data = json.loads(path.read_text())
    if not isinstance(data, dict):
        raise SchemaViolation(f"{path}: expected a JSON object")
    base = path.parent
    if "public_key" in data:
        pk = read_public_key(base / str(data.pop("public_key")))
        data["public_modulus"] = format(pk.n, "x")
        data.setdefault("modulus_bits", pk.bits)
    if isinstance(data.get("roster"), str):
        tokens = read_roster(base / data["roster"])
        data["roster"] = roster_digests(tokens)
    return data


def cmd_serve(args) -> int:
    service = BenchmarkService(ServiceConfig(
        data_dir=Path(args.data_dir),
        min_n=args.min_n,
        min_session_interval_seconds=args.min_session_interval,
    ))
    server = make_server(service, host=args.host, port=args.port)
    try:
        host, port = server.server_address[:2]
        print(f"listening on http://{host}:{port}", flush=True)
        if args.session_config:
            created = service.create_session(
                _session_config_from_file(Path(args.session_config)))
            print(f"created session {created['session_id']} "
                  f"(key {created['key_fingerprint']})", flush=True)
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        service.close()
    return EXIT_OK


def _print_player_result(result, as_json: bool) -> None:
    if as_json:
        print(json.dumps({
            "index": result.index,
            "rank": result.rank,
            "stats": result.stats,
            "validation_bits": result.bits,
        }, indent=2))
        return
    print(f"seat {result.index}, observed rank {result.rank}")
    for name in STATISTICS:
        bit = result.bits.get(name)
        flag = "ok" if bit == 1 else "INVALID"
        print(f"  {name:16} {result.stats.get(name, '?'):>14}  [{flag}]")


def cmd_join(args) -> int:
    bundle = read_private_bundle(args.bundle)
    result = run_player(
        base_url=args.url,
        session_id=args.session,
        bundle=bundle,
        kpi=args.kpi,
        token=args.token,
        poll_interval=args.poll_interval,
        deadline=args.deadline,
    )
    _print_player_result(result, args.json)
    return EXIT_OK if result.all_valid() else EXIT_INTEGRITY


def cmd_simulate(args) -> int:
    values = None
    if args.inputs:
        parsed = _parse_inputs(args.inputs, args.decimal_places)
        if len(parsed) != args.n:
            raise SchemaViolation(
                f"--inputs lists {len(parsed)} values but n={args.n}")
        values = tuple(parsed)
    tamper = None
    if args.tamper:
        measure, _, victim = args.tamper.partition(":")
        if measure not in BLINDED_MEASURES or not victim.isdigit():
            raise SchemaViolation(
                "--tamper wants MEASURE:VICTIM, for example median:2")
        tamper = TamperSpec(measure=measure, victim=int(victim))
    config = ScenarioConfig(
        n=args.n,
        modulus_bits=args.key_bits,
        decimal_places=args.decimal_places,
        seed=args.seed,
        concurrent=args.concurrent,
        tamper=tamper,
        values=values,
    )
    report = run_session(config)
    expected = report.oracle.quantized(args.decimal_places)
    agree = report.matches_oracle(args.decimal_places)
    valid = report.all_bits_valid()
    if args.json:
        print(json.dumps({
            "session_id": report.session_id,
            "n": report.n,
            "elapsed_seconds": report.elapsed_seconds,
            "stats": report.result.stats,
            "oracle": expected,
            "ranks": sorted(report.ranks),
            "matches_oracle": agree,
            "all_bits_valid": valid,
        }, indent=2))
    else:
        print(f"session {report.session_id}: n={report.n}, "
              f"{report.elapsed_seconds:.2f}s")
        for name in STATISTICS:
            marker = "" if report.result.stats[name] == expected[name] \
                else "  != oracle " + expected[name]
            print(f"  {name:16} {report.result.stats[name]:>14}{marker}")
        print(f"  ranks observed: {sorted(report.ranks)}")
        print(f"  oracle agreement: {'yes' if agree else 'NO'}; "
              f"validation bits: {'all 1' if valid else 'FAILED'}")
    if not valid:
        return EXIT_INTEGRITY
    return EXIT_OK if agree else EXIT_PROTOCOL


def cmd_bench(args) -> int:
    n_values = [int(part) for part in args.n_list.split(",") if part.strip()]
    report = bench_mod.run_bench(
        n_values, modulus_bits=args.key_bits, seed=args.seed)
    print(report.table_text())
    if args.out:
        paths = bench_mod.write_report(report, Path(args.out))
        for path in paths:
            print(f"wrote {path}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    values = _parse_inputs(args.inputs, args.decimal_places)
    report = oracle_mod.compute(values, min_n=args.min_n)
    quantized = report.quantized(args.decimal_places)
    if args.json:
        print(json.dumps(quantized, indent=2))
    else:
        exact = report.as_dict()
        for name in STATISTICS:
            print(f"  {name:16} {quantized[name]:>14}   (exact {exact[name]})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blindbench",
        description="privacy-preserving KPI benchmarking over one "
                    "untrusted service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup-keys",
                       help="generate the shared key material for one "
                            "peer group")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seats", type=int, required=True,
                   help="number of players")
    p.add_argument("--bits", type=int, default=768,
                   help="modulus size in bits (default 768)")
    p.add_argument("--seed", help="hex seed for reproducible keys "
                                  "(testing only)")
    p.add_argument("--allow-insecure", action="store_true",
                   help="permit moduli below the secure minimum")
    p.set_defaults(func=cmd_setup_keys)

    p = sub.add_parser("serve", help="run the benchmarking service")
    p.add_argument("--data-dir", required=True,
                   help="directory for session logs")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--min-n", type=int, default=4,
                   help="smallest admissible peer group (default 4)")
    p.add_argument("--min-session-interval", type=float, default=0.0,
                   help="seconds a peer group must wait between sessions")
    p.add_argument("--session-config",
                   help="JSON file describing a session to create at "
                        "startup")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("join", help="participate in a session as a player")
    p.add_argument("--url", required=True, help="service base URL")
    p.add_argument("--session", required=True, help="session id")
    p.add_argument("--bundle", required=True,
                   help="path to this player's private bundle")
    p.add_argument("--kpi", required=True,
                   help="this player's KPI value, e.g. 1234.56")
    p.add_argument("--token", help="join token (defaults to the bundle's)")
    p.add_argument("--poll-interval", type=float, default=0.2)
    p.add_argument("--deadline", type=float, default=600.0,
                   help="give up after this many seconds")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_join)

    p = sub.add_parser("simulate",
                       help="run a whole session in-process and compare "
                            "against the oracle")
    p.add_argument("-n", type=int, required=True, help="peer group size")
    p.add_argument("--key-bits", type=int, default=768)
    p.add_argument("--seed", type=int, help="reproducible run")
    p.add_argument("--inputs", help="comma-separated KPI values "
                                    "(default: random)")
    p.add_argument("--decimal-places", type=int, default=2)
    p.add_argument("--concurrent", action="store_true",
                   help="drive players from threads")
    p.add_argument("--tamper", metavar="MEASURE:VICTIM",
                   help="corrupt one blinded measure to demonstrate "
                        "detection")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="scaling benchmark over several n")
    p.add_argument("--n-list", default="10,20,40",
                   help="comma-separated peer group sizes")
    p.add_argument("--key-bits", type=int, default=768)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for the JSON report and "
                                 "CSV plot data")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle",
                       help="brute-force statistics over plaintext inputs")
    p.add_argument("--inputs", required=True,
                   help="comma-separated KPI values")
    p.add_argument("--decimal-places", type=int, default=2)
    p.add_argument("--min-n", type=int, default=oracle_mod.MIN_PLAYERS)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BlindbenchError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
