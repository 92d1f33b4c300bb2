"""Scaling benchmarks: operation counters and wall-clock versus n.

The interesting claim is the quadratic one: the comparison matrix
(step 3) costs Theta(n^2) while every player's own workload stays flat.
Counters are the reproducible measurement; wall-clock is reported for
sanity, not asserted here.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .counters import (
    ENC,
    EXP,
    INV,
    MUL,
    SENT,
    expected_provider_totals,
    fit_quadratic,
    player_table_totals,
    provider_totals,
)
from .paillier import PrivateKey, keygen
from .rng import SecretStream
from .simulate import ScenarioConfig, run_session

STEP3_OPS = (ENC, EXP, INV, MUL, SENT)


@dataclass
class BenchRow:
    n: int
    modulus_bits: int
    elapsed_seconds: float
    step3: dict[str, int]
    provider: dict[str, int]
    player: dict[str, int]


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    #: op -> (coefficient, max abs residual) for step-3 counts ~ c*n*(n-1)
    fits: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "n": r.n,
                    "modulus_bits": r.modulus_bits,
                    "elapsed_seconds": r.elapsed_seconds,
                    "step3": r.step3,
                    "provider_totals": r.provider,
                    "player_totals": r.player,
                    "provider_expected": expected_provider_totals(r.n),
                }
                for r in self.rows
            ],
            "step3_fits": {
                op: {"coefficient": c, "max_residual": resid}
                for op, (c, resid) in self.fits.items()
            },
        }

    def table_text(self) -> str:
        lines = [
            f"{'n':>4} {'bits':>5} {'seconds':>8} {'step3 sent':>11} "
            f"{'provider sent':>14} {'player sent':>12}"
        ]
        for r in self.rows:
            lines.append(
                f"{r.n:>4} {r.modulus_bits:>5} {r.elapsed_seconds:>8.2f} "
                f"{r.step3.get(SENT, 0):>11} {r.provider[SENT]:>14} "
                f"{r.player[SENT]:>12}"
            )
        for op, (c, resid) in sorted(self.fits.items()):
            lines.append(
                f"step-3 {op}: ~ {c:.3f} * n*(n-1), max residual {resid:.3f}"
            )
        return "\n".join(lines)


def run_bench(n_values: list[int], modulus_bits: int = 768,
              seed: int | None = None,
              keypair: PrivateKey | None = None) -> BenchReport:
    """Run one simulation per n and fit the step-3 scaling."""
    if keypair is None:
        key_rng = (SecretStream(seed.to_bytes(16, "big"))
                   if seed is not None else None)
        keypair = keygen(modulus_bits, key_rng,
                         allow_insecure=modulus_bits < 512)
    report = BenchReport()
    for pos, n in enumerate(n_values):
        config = ScenarioConfig(
            n=n, modulus_bits=modulus_bits,
            seed=None if seed is None else seed + pos)
        sim = run_session(config, keypair=keypair)
        report.rows.append(BenchRow(
            n=n,
            modulus_bits=modulus_bits,
            elapsed_seconds=sim.elapsed_seconds,
            step3=sim.provider_counters.step("3"),
            provider=provider_totals(sim.provider_counters),
            player=player_table_totals(sim.player_counters[0]),
        ))
    for op in STEP3_OPS:
        samples = [(r.n, r.step3.get(op, 0)) for r in report.rows]
        report.fits[op] = fit_quadratic(samples)
    return report


def write_report(report: BenchReport, out_dir: Path) -> list[Path]:
    """Persist the machine-readable report and CSV plot data."""
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "bench_report.json"
    json_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    csv_path = out_dir / "bench_scaling.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "modulus_bits", "elapsed_seconds"]
                        + [f"step3_{op}" for op in STEP3_OPS]
                        + ["provider_sent", "player_sent"])
        for r in report.rows:
            writer.writerow(
                [r.n, r.modulus_bits, f"{r.elapsed_seconds:.4f}"]
                + [r.step3.get(op, 0) for op in STEP3_OPS]
                + [r.provider[SENT], r.player[SENT]])
    return [json_path, csv_path]
