"""Reference statistics computed directly on plaintext inputs.

This module deliberately shares no code with the protocol engine: the
rank positions and aggregates are derived again from sorted plaintext
lists, so the two sides can check each other.  All results are exact
rationals; quantize them for comparison against published fixed-point
results.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .encoding import format_fixed, quantize
from .errors import PeerGroupTooSmall

#: Smallest peer group for which quartile statistics are offered.
MIN_PLAYERS = 4


@dataclass(frozen=True)
class OracleReport:
    n: int
    mean: Fraction
    variance: Fraction
    median: Fraction
    best_in_class: Fraction
    maximum: Fraction
    bottom_quartile: Fraction
    top_quartile: Fraction

    def as_dict(self) -> dict[str, Fraction]:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "median": self.median,
            "best_in_class": self.best_in_class,
            "maximum": self.maximum,
            "bottom_quartile": self.bottom_quartile,
            "top_quartile": self.top_quartile,
        }

    def quantized(self, decimal_places: int) -> dict[str, str]:
        return {
            name: format_fixed(quantize(value, decimal_places), decimal_places)
            for name, value in self.as_dict().items()
        }


def compute(values: list[Fraction], min_n: int = MIN_PLAYERS) -> OracleReport:
    """Statistics over one peer group's plaintext KPI values.

    The median and both quartiles are order statistics (no interpolation):
    with the values sorted ascending and positions counted from 1, the
    median sits at position ceil(n/2), the bottom quartile at ceil(n/4),
    and the top quartile at floor(3n/4)+1.  Best in class is the plain
    average of the values from the top-quartile position upward.
    """
    n = len(values)
    if n < min_n:
        raise PeerGroupTooSmall(f"got {n} values, need at least {min_n}")
    ordered = sorted(values)
    mean = Fraction(sum(values), n)
    variance = sum((v - mean) ** 2 for v in values) / n
    top_position = 3 * n // 4 + 1
    leaders = ordered[top_position - 1:]
    return OracleReport(
        n=n,
        mean=mean,
        variance=variance,
        median=ordered[(n + 1) // 2 - 1],
        best_in_class=Fraction(sum(leaders), len(leaders)),
        maximum=ordered[-1],
        bottom_quartile=ordered[(n + 3) // 4 - 1],
        top_quartile=ordered[top_position - 1],
    )
