"""Shared fixtures.

Key generation at secure sizes dominates test runtime, so one 768-bit
and one 512-bit keypair are generated once per session from fixed seeds
and shared by every test that does not specifically exercise keygen.
"""

from fractions import Fraction

import pytest

from blindbench.paillier import keygen, keypair_from_primes
from blindbench.rng import SecretStream


@pytest.fixture(scope="session")
def key768():
    return keygen(768, SecretStream(b"suite-768-bit-keypair"))


@pytest.fixture(scope="session")
def key512():
    return keygen(512, SecretStream(b"suite-512-bit-keypair"))


@pytest.fixture(scope="session")
def toy_key():
    # p=5, q=7: small enough to enumerate the whole plaintext space.
    return keypair_from_primes(5, 7)


@pytest.fixture()
def stream():
    return SecretStream(b"per-test-stream")


def frac(text) -> Fraction:
    return Fraction(str(text))


#: One line per acceptance criterion, echoed after the test summary so the
#: verdicts stay visible even when every test passes under capture.
_criterion_lines: list[str] = []


def record_criterion(name: str, ok: bool, detail: str = "") -> str:
    verdict = "PASS" if ok else "FAIL"
    line = f"[{verdict}] {name}"
    if detail:
        line = f"{line} :: {detail}"
    _criterion_lines.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
