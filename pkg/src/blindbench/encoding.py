"""Fixed-point encoding of KPI values into the additive plaintext ring.

A KPI is a signed decimal with at most ``decimal_places`` fractional
digits.  It is scaled by 10^decimal_places to an integer, which must fit
``input_bits``, and mapped into Z_N as a centred residue: non-negative
values keep their value, negatives wrap to N - |v|.  Decoding reads any
residue below N/2 as positive and anything above as negative, so sums,
differences and blinded comparisons all decode correctly as long as the
magnitude budgets below hold.

Budgets (checked before any ciphertext is produced):

* variance terms: each player encrypts (n*x_i - sum)^2 and the provider
  sums n of them, so the worst case needs
  2*(input_bits + ceil(log2 n)) + ceil(log2 n) + 2 bits of headroom;
* blinded comparisons: entries are r2*(x'_i - x'_j) + r3 over tie-broken
  values x' = x * 2^tiebreak_bits + tiebreak, which needs
  input_bits + tiebreak_bits + compare_blind_bits + 2 bits.

Both must stay strictly below modulus_bits - 1 so the centred decode of a
worst-case value cannot cross N/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Optional, Union

from .errors import BudgetExceeded, PlaintextOutOfRange

#: KPI values are exact rationals throughout the engine.
KpiValue = Fraction

KpiInput = Union[int, str, Decimal, Fraction]

DEFAULT_INPUT_BITS = 40
DEFAULT_COMPARE_BLIND_BITS = 64
DEFAULT_DECIMAL_PLACES = 2


def tiebreak_bits_for(n_max: int) -> int:
    """Bits reserved for the comparison tie-break: one more than needed
    to count n_max distinct positions, so a real difference of 1 always
    dominates any tie-break difference."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return max(1, math.ceil(math.log2(n_max)) + 1)


@dataclass(frozen=True)
class PlaintextDomain:
    """Magnitude bookkeeping for one peer group's sessions."""

    modulus_bits: int
    input_bits: int = DEFAULT_INPUT_BITS
    compare_blind_bits: int = DEFAULT_COMPARE_BLIND_BITS
    tiebreak_bits: int = 1
    decimal_places: int = DEFAULT_DECIMAL_PLACES

    @classmethod
    def for_peer_group(
        cls,
        modulus_bits: int,
        n_max: int,
        input_bits: int = DEFAULT_INPUT_BITS,
        compare_blind_bits: int = DEFAULT_COMPARE_BLIND_BITS,
        decimal_places: int = DEFAULT_DECIMAL_PLACES,
    ) -> "PlaintextDomain":
        return cls(
            modulus_bits=modulus_bits,
            input_bits=input_bits,
            compare_blind_bits=compare_blind_bits,
            tiebreak_bits=tiebreak_bits_for(n_max),
            decimal_places=decimal_places,
        )


@dataclass(frozen=True)
class BudgetViolation:
    budget: str       # "variance" | "comparison" | "domain"
    needed_bits: int
    available_bits: int
    detail: str

    def __str__(self) -> str:
        return f"{self.budget} budget: {self.detail}"


def check_budget(domain: PlaintextDomain, n: int) -> list[BudgetViolation]:
    """Return all violated budget inequalities for a session of n players.

    Empty list means every protocol intermediate fits the modulus.  The
    check is monotone in n: if it passes for n it passes for any smaller
    peer group (log2 terms only grow with n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    violations = []
    available = domain.modulus_bits - 1
    log_n = math.ceil(math.log2(n)) if n > 1 else 0

    if domain.decimal_places < 0 or domain.input_bits < 1:
        violations.append(BudgetViolation(
            budget="domain",
            needed_bits=0,
            available_bits=available,
            detail="decimal_places must be >= 0 and input_bits >= 1",
        ))
        return violations

    variance_bits = 2 * (domain.input_bits + log_n) + log_n + 2
    if not variance_bits < available:
        violations.append(BudgetViolation(
            budget="variance",
            needed_bits=variance_bits,
            available_bits=available,
            detail=(
                f"2*({domain.input_bits}+{log_n})+{log_n}+2 = "
                f"{variance_bits} >= {available}"
            ),
        ))

    comparison_bits = (
        domain.input_bits + domain.tiebreak_bits
        + domain.compare_blind_bits + 2
    )
    if not comparison_bits < available:
        violations.append(BudgetViolation(
            budget="comparison",
            needed_bits=comparison_bits,
            available_bits=available,
            detail=(
                f"{domain.input_bits}+{domain.tiebreak_bits}+"
                f"{domain.compare_blind_bits}+2 = "
                f"{comparison_bits} >= {available}"
            ),
        ))
    return violations


def require_budget(domain: PlaintextDomain, n: int) -> None:
    violations = check_budget(domain, n)
    if violations:
        raise BudgetExceeded("; ".join(str(v) for v in violations))


def parse_kpi(value: KpiInput, decimal_places: int) -> KpiValue:
    """Parse a KPI into an exact Fraction, enforcing the fractional-digit
    limit.  Accepts ints, decimal strings and Decimal/Fraction objects;
    floats are rejected because they do not carry an exact decimal value.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise PlaintextOutOfRange(f"unsupported KPI type {type(value).__name__}")
    if isinstance(value, int):
        frac = Fraction(value)
    elif isinstance(value, Fraction):
        frac = value
    elif isinstance(value, (str, Decimal)):
        try:
            frac = Fraction(Decimal(str(value).strip()))
        except (InvalidOperation, ValueError) as exc:
            raise PlaintextOutOfRange(f"not a decimal: {value!r}") from exc
    else:
        raise PlaintextOutOfRange(f"unsupported KPI type {type(value).__name__}")

    scaled = frac * 10 ** decimal_places
    if scaled.denominator != 1:
        raise PlaintextOutOfRange(
            f"{value} has more than {decimal_places} fractional digits"
        )
    return frac


def encode_kpi(value: KpiValue, domain: PlaintextDomain, modulus: int) -> int:
    """Scale by 10^decimal_places and map to a centred residue mod N."""
    scaled = value * 10 ** domain.decimal_places
    if scaled.denominator != 1:
        raise PlaintextOutOfRange(
            f"{value} not representable at {domain.decimal_places} places"
        )
    magnitude = int(scaled)
    if abs(magnitude) >= 1 << domain.input_bits:
        raise BudgetExceeded(
            f"|{value}| needs more than input_bits={domain.input_bits} bits"
        )
    return magnitude % modulus


def centered(residue: int, modulus: int) -> int:
    """Map a residue in [0, N) to the signed representative in
    (-N/2, N/2]."""
    if not 0 <= residue < modulus:
        raise PlaintextOutOfRange(f"residue {residue} outside [0, N)")
    return residue if 2 * residue < modulus else residue - modulus


def decode_centered(residue: int, modulus: int, decimal_places: int) -> KpiValue:
    """Inverse of encode_kpi for any in-budget intermediate."""
    return Fraction(centered(residue, modulus), 10 ** decimal_places)


def quantize(value: Fraction, decimal_places: int) -> Fraction:
    """Round an exact rational to decimal_places digits, ties to even.

    Both the protocol results and the reference oracle are quantized by
    this one function so "equal at fixed-point precision" is exact
    equality.
    """
    scale = 10 ** decimal_places
    num = value.numerator * scale
    den = value.denominator
    q, r = divmod(num, den)
    # divmod floors, so r >= 0 and q is the floor; round half to even.
    twice = 2 * r
    if twice > den or (twice == den and q % 2 == 1):
        q += 1
    return Fraction(q, scale)


def format_fixed(value: Fraction, decimal_places: int) -> str:
    """Render a quantized rational as a plain decimal string."""
    scale = 10 ** decimal_places
    scaled = value * scale
    if scaled.denominator != 1:
        raise ValueError(f"{value} is not on the {decimal_places}-digit grid")
    magnitude = int(scaled)
    sign = "-" if magnitude < 0 else ""
    digits = abs(magnitude)
    if decimal_places == 0:
        return f"{sign}{digits}"
    whole, frac = divmod(digits, scale)
    return f"{sign}{whole}.{frac:0{decimal_places}d}"


def parse_fixed(text: str, decimal_places: int) -> Fraction:
    """Inverse of format_fixed (used by the wire codec)."""
    value = parse_kpi(text, decimal_places)
    return value
