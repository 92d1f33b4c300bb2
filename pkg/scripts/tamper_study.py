#!/usr/bin/env python3
"""Show what a corrupted broadcast does to the validation bits.

Runs one honest session, then one tampered session per blinded measure
(the provider swaps the victim's share for a random residue before the
final broadcast).  Prints the bit matrix players end up with; a zero
means the published hash did not match the recomputed tag set.
"""

import argparse
import sys

from blindbench import wire
from blindbench.engine import TamperSpec
from blindbench.paillier import keygen
from blindbench.rng import SecretStream
from blindbench.simulate import ScenarioConfig, run_session


def bit_matrix(report):
    order = ("mean",) + wire.BLINDED_MEASURES
    lines = ["          " + " ".join(f"{m[:6]:>6}" for m in order)]
    for player in report.player_results:
        row = " ".join(f"{player.bits[m]:>6}" for m in order)
        lines.append(f"player {player.index:>2}: {row}")
    return "\n".join(lines)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=5)
    parser.add_argument("--bits", type=int, default=512)
    parser.add_argument("--victim", type=int, default=2)
    parser.add_argument("--seed", type=int, default=424_242)
    args = parser.parse_args(argv)

    keypair = keygen(args.bits, SecretStream(b"tamper-study"),
                     allow_insecure=args.bits < 512)

    honest = run_session(
        ScenarioConfig(n=args.n, modulus_bits=args.bits, seed=args.seed),
        keypair=keypair)
    print("honest session:")
    print(bit_matrix(honest))

    for measure in wire.BLINDED_MEASURES:
        report = run_session(
            ScenarioConfig(n=args.n, modulus_bits=args.bits, seed=args.seed,
                           tamper=TamperSpec(measure=measure,
                                             victim=args.victim)),
            keypair=keypair)
        print(f"\ntampered {measure} (victim {args.victim}):")
        print(bit_matrix(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
