"""Provider and player state machines driven through whole sessions.

Unit-level expected values are frozen literals computed by hand; the
full randomized cross-check against the plaintext reference lives in
the acceptance suite.
"""

from dataclasses import replace
from fractions import Fraction

import pytest

from blindbench.encoding import PlaintextDomain
from blindbench.engine import (
    BOUNDARY_COUNT,
    BenchmarkResult,
    PlayerState,
    ProviderSession,
    TamperSpec,
    choice_bit,
    draw_blinding,
    measure_position,
    selection_count,
)
from blindbench.errors import (
    DuplicateMessage,
    PeerGroupTooSmall,
    PhaseViolation,
    SchemaViolation,
    UnknownSession,
)
from blindbench.rng import SecretStream
from blindbench.simulate import ScenarioConfig, run_session
from blindbench.wire import WireMessage, encode_message

F = Fraction


def run512(key512, **kw):
    kw.setdefault("modulus_bits", 512)
    return run_session(ScenarioConfig(**kw), keypair=key512)


class TestMeasurePositions:
    def test_frozen_position_table(self):
        # (measure, n) -> (mode, 1-based rank position)
        assert measure_position("median", 4) == ("exact", 2)
        assert measure_position("median", 5) == ("exact", 3)
        assert measure_position("median", 8) == ("exact", 4)
        assert measure_position("maximum", 8) == ("exact", 8)
        assert measure_position("bottom_quartile", 8) == ("exact", 2)
        assert measure_position("top_quartile", 8) == ("exact", 7)
        assert measure_position("bottom_quartile", 20) == ("exact", 5)
        assert measure_position("top_quartile", 20) == ("exact", 16)
        assert measure_position("best_in_class", 8) == ("at_least", 7)

    def test_positions_always_in_range(self):
        for n in range(2, 60):
            for measure in ("median", "maximum", "best_in_class",
                            "bottom_quartile", "top_quartile"):
                mode, pos = measure_position(measure, n)
                assert 1 <= pos <= n
                assert mode in ("exact", "at_least")

    def test_choice_bits_select_the_right_players(self):
        n = 8
        # exactly one player holds the median rank
        holders = [r for r in range(1, n + 1)
                   if choice_bit("median", r, n) == 1]
        assert holders == [4]
        # best-in-class selects the whole top quartile
        leaders = [r for r in range(1, n + 1)
                   if choice_bit("best_in_class", r, n) == 1]
        assert leaders == [7, 8]
        assert selection_count("best_in_class", n) == 2
        assert selection_count("median", n) == 1

    def test_selection_count_matches_choice_bits(self):
        for n in range(2, 40):
            for measure in ("median", "maximum", "best_in_class",
                            "bottom_quartile", "top_quartile"):
                holders = sum(choice_bit(measure, r, n)
                              for r in range(1, n + 1))
                assert holders == selection_count(measure, n)


class TestTamperSpec:
    def test_valid(self):
        TamperSpec(measure="median", victim=2)

    def test_rejects_unknown_measure(self):
        with pytest.raises(ValueError):
            TamperSpec(measure="mean", victim=1)

    def test_rejects_bad_victim(self):
        with pytest.raises(ValueError):
            TamperSpec(measure="median", victim=0)


def test_draw_blinding_spans_modulus():
    stream = SecretStream(b"blinding")
    draws = {draw_blinding(stream, 11) for _ in range(300)}
    assert draws == set(range(11))


def test_benchmark_result_canonical_bytes():
    result = BenchmarkResult(session_id="s", n=4, stats={"b": "1", "a": "2"})
    blob = result.canonical_bytes()
    assert blob == b'{"n":4,"session_id":"s","stats":{"a":"2","b":"1"}}'


class TestFullSession:
    def test_worked_example(self, key512):
        report = run512(key512, n=4, seed=101,
                        values=tuple(F(v) for v in (5, 9, 2, 7)))
        assert report.result.stats == {
            "mean": "5.75",
            "variance": "6.69",
            "median": "5.00",
            "maximum": "9.00",
            "best_in_class": "9.00",
            "bottom_quartile": "2.00",
            "top_quartile": "9.00",
        }
        assert report.matches_oracle(2)
        assert report.all_bits_valid()
        assert sorted(report.ranks) == [1, 2, 3, 4]

    def test_constant_inputs_and_ties(self, key512):
        report = run512(key512, n=5, seed=102,
                        values=tuple(F(3) for _ in range(5)))
        assert report.result.stats["variance"] == "0.00"
        assert report.result.stats["median"] == "3.00"
        assert report.matches_oracle(2)
        # ties are both ranked and distinct
        assert sorted(report.ranks) == [1, 2, 3, 4, 5]

    def test_negative_and_fractional_inputs(self, key512):
        values = tuple(F(s) for s in ("-2.50", "0.01", "-0.01", "7.25"))
        report = run512(key512, n=4, seed=103, values=values)
        assert report.matches_oracle(2)
        assert report.result.stats["mean"] == "1.19"  # 4.75/4 = 1.1875

    def test_phase_boundaries_recorded(self, key512):
        n = 4
        report = run512(key512, n=n, seed=104)
        assert len(report.phase_events) == BOUNDARY_COUNT
        labels = [phase for phase, _ in report.phase_events]
        assert labels == [
            "DISTRIBUTE_AND_OT", "SUM_REVEAL", "RERANDOMIZE_AND_VARIANCE",
            "MEASURE_DISTRIBUTE", "MEASURE_REVEAL", "RESULT_PUBLISH",
            "INTEGRITY_PUBLISH", "DONE",
        ]
        counts = [count for _, count in report.phase_events]
        assert counts == [n, 6 * n, 8 * n, 14 * n, 14 * n,
                          26 * n, 26 * n, 26 * n]

    def test_same_seed_reproduces_transcript(self, key512):
        first = run512(key512, n=4, seed=105)
        second = run512(key512, n=4, seed=105)
        assert first.result == second.result
        first_bytes = b"".join(encode_message(m)
                               for m in first.provider.outbox)
        second_bytes = b"".join(encode_message(m)
                                for m in second.provider.outbox)
        assert first_bytes == second_bytes

    def test_different_seeds_draw_different_inputs(self, key512):
        assert (run512(key512, n=4, seed=1).values
                != run512(key512, n=4, seed=2).values)

    def test_concurrent_schedule_same_transcript(self, key512):
        serial = run512(key512, n=5, seed=106)
        threaded = run512(key512, n=5, seed=106, concurrent=True)
        assert serial.result == threaded.result
        assert (serial.provider_counters.snapshot()
                == threaded.provider_counters.snapshot())
        serial_bytes = b"".join(encode_message(m)
                                for m in serial.provider.outbox)
        threaded_bytes = b"".join(encode_message(m)
                                  for m in threaded.provider.outbox)
        assert serial_bytes == threaded_bytes

    def test_tamper_flips_victim_bits(self, key512):
        report = run512(key512, n=4, seed=107,
                        tamper=TamperSpec(measure="maximum", victim=2))
        assert not report.all_bits_valid()
        flagged = [p for p in report.player_results if not p.all_valid()]
        assert flagged
        for player in flagged:
            assert player.bits["maximum"] == 0
        # untampered measures still validate everywhere
        for player in report.player_results:
            assert player.bits["median"] == 1
            assert player.bits["mean"] == 1


class TestProviderGuards:
    @pytest.fixture()
    def provider(self, key512):
        domain = PlaintextDomain.for_peer_group(modulus_bits=512, n_max=3)
        return ProviderSession(
            session_id="s-guard", public_key=key512.public_key(), n=3,
            domain=domain, seed=b"\x00" * 32)

    def make_input(self, provider, index=1, ciphertext="1a"):
        return WireMessage(
            session_id=provider.session_id, phase="SUBMIT", step="1",
            sender="player", sender_index=index,
            recipient="provider", recipient_index=0,
            kind="input", payload={"ciphertext": ciphertext})

    def test_requires_two_players(self, key512):
        domain = PlaintextDomain.for_peer_group(modulus_bits=512, n_max=2)
        with pytest.raises(PeerGroupTooSmall):
            ProviderSession(session_id="s", public_key=key512.public_key(),
                            n=1, domain=domain, seed=b"\x00" * 32)

    def test_rejects_wrong_session(self, provider):
        wrong = replace(self.make_input(provider), session_id="other")
        with pytest.raises(UnknownSession):
            provider.process(wrong)

    def test_rejects_out_of_phase_kind(self, provider):
        late = WireMessage(
            session_id=provider.session_id, phase="SUM_REVEAL", step="7",
            sender="player", sender_index=1,
            recipient="provider", recipient_index=0,
            kind="sum_reveal", payload={"blinded": "1"})
        with pytest.raises(PhaseViolation):
            provider.process(late)

    def test_rejects_duplicate_input(self, provider):
        provider.process(self.make_input(provider, index=1))
        with pytest.raises(DuplicateMessage):
            provider.process(self.make_input(provider, index=1))

    def test_rejects_unknown_player_index(self, provider):
        with pytest.raises(SchemaViolation):
            provider.process(self.make_input(provider, index=4))

    def test_rejects_provider_sent_kind(self, provider):
        msg = WireMessage(
            session_id=provider.session_id, phase="DISTRIBUTE_AND_OT",
            step="2", sender="provider", sender_index=0,
            recipient="player", recipient_index=1,
            kind="blinded_sum", payload={"ciphertext": "1a"})
        with pytest.raises(SchemaViolation):
            provider.process(msg)

    def test_failed_message_leaves_no_trace(self, provider):
        before = provider.inbound_count
        with pytest.raises(PhaseViolation):
            provider.process(WireMessage(
                session_id=provider.session_id, phase="SUM_REVEAL", step="7",
                sender="player", sender_index=1,
                recipient="provider", recipient_index=0,
                kind="sum_reveal", payload={"blinded": "1"}))
        assert provider.inbound_count == before
        assert provider.outbox == []


class TestPlayerGuards:
    def test_player_validates_inbound_messages(self, key512):
        domain = PlaintextDomain.for_peer_group(modulus_bits=512, n_max=4)
        player = PlayerState(
            session_id="s-p", index=1, n=4, private_key=key512,
            mac_key=b"m" * 32, domain=domain, kpi=F(1),
            rng=SecretStream(b"p1"))
        player.start()
        stray = WireMessage(
            session_id="s-p", phase="SUBMIT", step="1",
            sender="player", sender_index=2,
            recipient="provider", recipient_index=0,
            kind="input", payload={"ciphertext": "1a"})
        with pytest.raises(SchemaViolation):
            player.receive([stray])

    def test_player_rejects_other_recipients_messages(self, key512):
        domain = PlaintextDomain.for_peer_group(modulus_bits=512, n_max=4)
        player = PlayerState(
            session_id="s-p", index=1, n=4, private_key=key512,
            mac_key=b"m" * 32, domain=domain, kpi=F(1),
            rng=SecretStream(b"p1"))
        player.start()
        misdirected = WireMessage(
            session_id="s-p", phase="DISTRIBUTE_AND_OT", step="2",
            sender="provider", sender_index=0,
            recipient="player", recipient_index=2,
            kind="blinded_sum", payload={"ciphertext": "1a"})
        with pytest.raises(SchemaViolation):
            player.receive([misdirected])
