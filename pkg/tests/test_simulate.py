"""Scenario runner configuration handling."""

from fractions import Fraction

import pytest

from blindbench.errors import BudgetExceeded, PeerGroupTooSmall
from blindbench.simulate import ScenarioConfig, run_session


def test_budget_is_checked_before_any_key_work():
    # 64-bit moduli cannot hold the protocol intermediates, and the
    # config should be rejected before the expensive steps start.
    with pytest.raises(BudgetExceeded):
        run_session(ScenarioConfig(n=4, modulus_bits=64, seed=1))


def test_value_count_must_match_n(key512):
    config = ScenarioConfig(n=4, modulus_bits=512, seed=1,
                            values=(Fraction(1), Fraction(2)))
    with pytest.raises(ValueError):
        run_session(config, keypair=key512)


def test_keypair_bits_must_match_config(key512):
    with pytest.raises(ValueError):
        run_session(ScenarioConfig(n=4, modulus_bits=768, seed=1),
                    keypair=key512)


def test_minimum_peer_group(key512):
    with pytest.raises(PeerGroupTooSmall):
        run_session(ScenarioConfig(n=1, modulus_bits=512, seed=1),
                    keypair=key512)
    report = run_session(ScenarioConfig(n=2, modulus_bits=512, seed=1),
                         keypair=key512)
    assert report.matches_oracle(2)


def test_drawn_values_respect_input_bits(key512):
    report = run_session(
        ScenarioConfig(n=6, modulus_bits=512, input_bits=12, seed=3),
        keypair=key512)
    for value in report.values:
        scaled = value * 100
        assert scaled.denominator == 1
        assert abs(int(scaled)) < 1 << 12


def test_decimal_places_zero(key512):
    report = run_session(
        ScenarioConfig(n=4, modulus_bits=512, decimal_places=0, seed=4,
                       values=tuple(Fraction(v) for v in (5, 9, 2, 7))),
        keypair=key512)
    assert report.result.stats["mean"] == "6"      # 5.75 rounds half-even
    assert report.result.stats["variance"] == "7"  # 6.6875 rounds to 7
    assert report.matches_oracle(0)


def test_report_is_self_describing(key512):
    report = run_session(ScenarioConfig(n=4, modulus_bits=512, seed=5),
                         keypair=key512)
    assert report.n == 4
    assert report.session_id.startswith("sim-")
    assert len(report.values) == 4
    assert len(report.player_results) == 4
    assert report.elapsed_seconds > 0
    assert report.result.session_id == report.session_id
