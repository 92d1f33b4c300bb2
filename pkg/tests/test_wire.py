"""Message envelopes, payload schemas and the canonical codec."""

import json

import pytest

from blindbench import wire
from blindbench.errors import SchemaViolation
from blindbench.wire import (
    BLINDED_MEASURES,
    MESSAGE_KINDS,
    OT_MEASURES,
    STATISTICS,
    STEP_LABELS,
    WireMessage,
    decode_int,
    decode_message,
    encode_int,
    encode_message,
    message_from_dict,
    message_to_dict,
    validate_message,
)


def make_input(**overrides) -> WireMessage:
    fields = dict(
        session_id="s-1", phase="SUBMIT", step="1",
        sender="player", sender_index=3,
        recipient="provider", recipient_index=0,
        kind="input", payload={"ciphertext": "1a2b"},
    )
    fields.update(overrides)
    return WireMessage(**fields)


def make_result(**overrides) -> WireMessage:
    fields = dict(
        session_id="s-1", phase="RESULT_PUBLISH", step="28",
        sender="provider", sender_index=0,
        recipient="player", recipient_index=2,
        kind="result", payload={"measure": "median", "value": "4.50"},
    )
    fields.update(overrides)
    return WireMessage(**fields)


class TestIntCodec:
    def test_canonical_hex(self):
        assert encode_int(0) == "0"
        assert encode_int(255) == "ff"
        assert decode_int("ff", "t") == 255
        assert decode_int("0", "t") == 0

    def test_rejects_non_canonical_forms(self):
        for bad in ("0ff", "FF", "", "0x1", "-1", 12):
            with pytest.raises(SchemaViolation):
                decode_int(bad, "t")

    def test_roundtrip_large(self):
        value = (1 << 1536) - 12345
        assert decode_int(encode_int(value), "t") == value


class TestMeasureTables:
    def test_statistics_cover_the_seven_outputs(self):
        assert set(STATISTICS) == {
            "mean", "variance", "median", "maximum", "best_in_class",
            "bottom_quartile", "top_quartile",
        }
        assert set(OT_MEASURES) == set(BLINDED_MEASURES) - {"variance"}

    def test_every_kind_declares_known_steps(self):
        for kind, spec in MESSAGE_KINDS.items():
            assert spec["steps"] <= STEP_LABELS, kind


class TestValidation:
    def test_valid_messages_pass(self):
        validate_message(make_input())
        validate_message(make_result())

    def test_unknown_step_rejected(self):
        with pytest.raises(SchemaViolation):
            validate_message(make_input(step="35"))

    def test_step_kind_mismatch_rejected(self):
        with pytest.raises(SchemaViolation):
            validate_message(make_input(step="7"))

    def test_phase_kind_mismatch_rejected(self):
        with pytest.raises(SchemaViolation):
            validate_message(make_input(phase="SUM_REVEAL"))

    def test_direction_enforced(self):
        with pytest.raises(SchemaViolation):
            validate_message(make_input(sender="provider", sender_index=0,
                                        recipient="player",
                                        recipient_index=1))

    def test_player_index_must_be_positive(self):
        with pytest.raises(SchemaViolation):
            validate_message(make_input(sender_index=0))
        with pytest.raises(SchemaViolation):
            validate_message(make_result(recipient_index=0))

    def test_payload_schema_enforced(self):
        with pytest.raises(SchemaViolation):
            validate_message(make_input(payload={}))
        with pytest.raises(SchemaViolation):
            validate_message(make_input(payload={"ciphertext": "1a", "x": 1}))
        with pytest.raises(SchemaViolation):
            validate_message(make_input(payload={"ciphertext": "0F"}))

    def test_measure_step_agreement(self):
        # median results travel at step 28; maximum results at step 30
        with pytest.raises(SchemaViolation):
            validate_message(make_result(
                payload={"measure": "maximum", "value": "1"}))
        validate_message(make_result(
            step="30", payload={"measure": "maximum", "value": "1"}))

    def test_decimal_field_shape(self):
        for bad in ("", "1.", ".5", "1e3", "nan", "--1"):
            with pytest.raises(SchemaViolation):
                validate_message(make_result(
                    payload={"measure": "median", "value": bad}))
        for good in ("0", "-0.01", "123.45", "4"):
            validate_message(make_result(
                payload={"measure": "median", "value": good}))

    def test_sum_hash_goes_out_early_other_hashes_late(self):
        digest = "00" * 32
        sum_hash = WireMessage(
            session_id="s", phase="MEASURE_DISTRIBUTE", step="18",
            sender="provider", sender_index=0,
            recipient="player", recipient_index=1,
            kind="tag_hash", payload={"measure": "mean", "digest": digest})
        validate_message(sum_hash)
        late = WireMessage(
            session_id="s", phase="INTEGRITY_PUBLISH", step="32",
            sender="provider", sender_index=0,
            recipient="player", recipient_index=1,
            kind="tag_hash", payload={"measure": "median", "digest": digest})
        validate_message(late)
        with pytest.raises(SchemaViolation):
            validate_message(WireMessage(
                session_id="s", phase="INTEGRITY_PUBLISH", step="18",
                sender="provider", sender_index=0,
                recipient="player", recipient_index=1,
                kind="tag_hash",
                payload={"measure": "mean", "digest": digest}))


class TestEnvelopeCodec:
    def test_roundtrip(self):
        msg = make_result()
        again = decode_message(encode_message(msg))
        assert again == msg

    def test_canonical_bytes_are_stable(self):
        msg = make_input()
        assert encode_message(msg) == encode_message(msg)
        data = json.loads(encode_message(msg))
        assert list(data) == sorted(data)

    def test_extra_envelope_field_rejected(self):
        data = message_to_dict(make_input())
        data["note"] = "hi"
        with pytest.raises(SchemaViolation):
            message_from_dict(data)

    def test_missing_envelope_field_rejected(self):
        data = message_to_dict(make_input())
        del data["step"]
        with pytest.raises(SchemaViolation):
            message_from_dict(data)

    def test_bool_indices_rejected(self):
        data = message_to_dict(make_input())
        data["recipient_index"] = False
        with pytest.raises(SchemaViolation):
            message_from_dict(data)

    def test_decode_rejects_non_object(self):
        with pytest.raises(SchemaViolation):
            decode_message(b"[]")
        with pytest.raises(SchemaViolation):
            decode_message(b"not json")

    def test_ciphertext_payload_fits_published_size_bound(self, key768):
        # A 768-bit modulus gives 192-byte ciphertexts, so the hex field
        # is at most 384 characters and the whole envelope stays small.
        pk = key768.public_key()
        biggest = pk.n_sq - 1
        msg = make_input(payload={"ciphertext": encode_int(biggest)})
        assert len(encode_message(msg)) < 600

    def test_rank_vector_items_charged_per_entry(self):
        msg = WireMessage(
            session_id="s", phase="DISTRIBUTE_AND_OT", step="3",
            sender="provider", sender_index=0,
            recipient="player", recipient_index=1,
            kind="rank_vector", payload={"entries": ["1", "2", "3"]})
        validate_message(msg)
        assert msg.payload_items() == 3

    def test_all_kind_tables_have_item_accounting(self):
        for kind, spec in MESSAGE_KINDS.items():
            assert spec["items"] is not None or kind == "rank_vector"
