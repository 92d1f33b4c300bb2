"""Protocol vocabulary and message codec.

Everything that crosses the transport is a WireMessage: a session id, the
phase it belongs to, a step label, sender/recipient addressing, a kind,
and a payload whose schema is fixed per kind.  Encoding is canonical JSON
(sorted keys, compact separators) so decode(encode(m)) == m and logged
bytes are replay-stable.  Big integers travel as lowercase big-endian hex
without leading zeros ("0" for zero); group elements use a fixed-width
hex encoding; tags and digests are fixed-width hex bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from . import ot
from .errors import SchemaViolation


class Phase(str, Enum):
    SUBMIT = "SUBMIT"
    DISTRIBUTE_AND_OT = "DISTRIBUTE_AND_OT"
    SUM_REVEAL = "SUM_REVEAL"
    RERANDOMIZE_AND_VARIANCE = "RERANDOMIZE_AND_VARIANCE"
    MEASURE_DISTRIBUTE = "MEASURE_DISTRIBUTE"
    MEASURE_REVEAL = "MEASURE_REVEAL"
    RESULT_PUBLISH = "RESULT_PUBLISH"
    INTEGRITY_PUBLISH = "INTEGRITY_PUBLISH"
    DONE = "DONE"


PHASE_ORDER = list(Phase)

# The five rank-selected measures, in protocol step order, then the two
# aggregate statistics derived without selection.
OT_MEASURES = (
    "median", "best_in_class", "maximum", "bottom_quartile", "top_quartile",
)
BLINDED_MEASURES = ("variance",) + OT_MEASURES
STATISTICS = ("mean",) + BLINDED_MEASURES

OT_STEPS = {
    "median": "4", "best_in_class": "5", "maximum": "6",
    "bottom_quartile": "6B", "top_quartile": "6C",
}
RERAND_STEPS = {
    "median": "10", "best_in_class": "11", "maximum": "12",
    "bottom_quartile": "12B", "top_quartile": "12C",
}
BLINDED_STEPS = {
    "variance": "14", "median": "15", "best_in_class": "16",
    "maximum": "17", "bottom_quartile": "17B", "top_quartile": "17C",
}
REVEAL_STEPS = {
    "variance": "19", "median": "21", "best_in_class": "23",
    "maximum": "25", "bottom_quartile": "25B", "top_quartile": "25C",
}
REVEAL_TAG_STEPS = {
    "variance": "20", "median": "22", "best_in_class": "24",
    "maximum": "26", "bottom_quartile": "26B", "top_quartile": "26C",
}
RESULT_STEPS = {
    "variance": "27", "median": "28", "best_in_class": "29",
    "maximum": "30", "bottom_quartile": "30B", "top_quartile": "30C",
}
TAG_HASH_STEPS = {
    "mean": "18", "variance": "31", "median": "32", "best_in_class": "33",
    "maximum": "34", "bottom_quartile": "34B", "top_quartile": "34C",
}

STEP_LABELS = frozenset(
    {"1", "2", "3", "7", "8", "9", "13"}
    | set(OT_STEPS.values())
    | set(RERAND_STEPS.values())
    | set(BLINDED_STEPS.values())
    | set(REVEAL_STEPS.values())
    | set(REVEAL_TAG_STEPS.values())
    | set(RESULT_STEPS.values())
    | set(TAG_HASH_STEPS.values())
)

PROVIDER = "provider"
PLAYER = "player"

_HEXINT_RE = re.compile(r"^(0|[1-9a-f][0-9a-f]*)$")


def encode_int(value: int) -> str:
    if value < 0:
        raise SchemaViolation("wire integers are non-negative")
    return format(value, "x")


def decode_int(text: str, path: str) -> int:
    if not isinstance(text, str) or not _HEXINT_RE.match(text):
        raise SchemaViolation(f"{path}: not canonical lowercase hex")
    return int(text, 16)


def encode_bytes(value: bytes) -> str:
    return value.hex()


def decode_bytes(text: str, path: str, width: int | None = None) -> bytes:
    if not isinstance(text, str) or len(text) % 2 != 0:
        raise SchemaViolation(f"{path}: not hex bytes")
    try:
        blob = bytes.fromhex(text)
    except ValueError as exc:
        raise SchemaViolation(f"{path}: not hex bytes") from exc
    if width is not None and len(blob) != width:
        raise SchemaViolation(f"{path}: expected {width} bytes")
    return blob


# Field type tags used by the per-kind schemas.
HEXINT = "hexint"
HEXINT_LIST = "hexint_list"
TAG32 = "tag32"
GROUP_ELEMENT = "group_element"
WRAPPED = "wrapped_payload"
DECIMAL = "decimal"

#: kind -> (direction, allowed steps, payload schema, payload item count)
#: direction is "in" (player to provider) or "out" (provider to player).
#: The item count is what the values-sent accounting charges per message.
MESSAGE_KINDS: dict[str, dict] = {
    "input": {
        "direction": "in", "phase": Phase.SUBMIT,
        "steps": {"1"},
        "schema": {"ciphertext": HEXINT},
        "items": 1,
    },
    "ot_response": {
        "direction": "in", "phase": Phase.DISTRIBUTE_AND_OT,
        "steps": set(OT_STEPS.values()),
        "schema": {"measure": ("choice", OT_MEASURES),
                   "element": GROUP_ELEMENT},
        "items": 1,
    },
    "sum_reveal": {
        "direction": "in", "phase": Phase.SUM_REVEAL,
        "steps": {"7"},
        "schema": {"blinded": HEXINT},
        "items": 1,
    },
    "sum_tag": {
        "direction": "in", "phase": Phase.SUM_REVEAL,
        "steps": {"8"},
        "schema": {"tag": TAG32},
        "items": 1,
    },
    "rerandomized": {
        "direction": "in", "phase": Phase.RERANDOMIZE_AND_VARIANCE,
        "steps": set(RERAND_STEPS.values()),
        "schema": {"measure": ("choice", OT_MEASURES),
                   "ciphertext": HEXINT},
        "items": 1,
    },
    "variance_term": {
        "direction": "in", "phase": Phase.RERANDOMIZE_AND_VARIANCE,
        "steps": {"13"},
        "schema": {"ciphertext": HEXINT},
        "items": 1,
    },
    "measure_reveal": {
        "direction": "in", "phase": Phase.MEASURE_REVEAL,
        "steps": set(REVEAL_STEPS.values()),
        "schema": {"measure": ("choice", BLINDED_MEASURES),
                   "blinded": HEXINT},
        "items": 1,
    },
    "measure_tag": {
        "direction": "in", "phase": Phase.MEASURE_REVEAL,
        "steps": set(REVEAL_TAG_STEPS.values()),
        "schema": {"measure": ("choice", BLINDED_MEASURES),
                   "tag": TAG32},
        "items": 1,
    },
    "blinded_sum": {
        "direction": "out", "phase": Phase.DISTRIBUTE_AND_OT,
        "steps": {"2"},
        "schema": {"ciphertext": HEXINT},
        "items": 1,
    },
    "rank_vector": {
        "direction": "out", "phase": Phase.DISTRIBUTE_AND_OT,
        "steps": {"3"},
        "schema": {"entries": HEXINT_LIST},
        "items": None,  # charged per entry
    },
    "ot_announce": {
        "direction": "out", "phase": Phase.DISTRIBUTE_AND_OT,
        "steps": set(OT_STEPS.values()),
        "schema": {"measure": ("choice", OT_MEASURES),
                   "element": GROUP_ELEMENT},
        "items": 1,
    },
    "ot_payloads": {
        "direction": "out", "phase": Phase.DISTRIBUTE_AND_OT,
        "steps": set(OT_STEPS.values()),
        "schema": {"measure": ("choice", OT_MEASURES),
                   "payload0": WRAPPED, "payload1": WRAPPED},
        "items": 2,
    },
    "sum_publish": {
        "direction": "out", "phase": Phase.SUM_REVEAL,
        "steps": {"9"},
        "schema": {"value": HEXINT},
        "items": 1,
    },
    "blinded_measure": {
        "direction": "out", "phase": Phase.MEASURE_DISTRIBUTE,
        "steps": set(BLINDED_STEPS.values()),
        "schema": {"measure": ("choice", BLINDED_MEASURES),
                   "ciphertext": HEXINT},
        "items": 1,
    },
    "tag_hash": {
        "direction": "out",
        "phase": (Phase.MEASURE_DISTRIBUTE, Phase.INTEGRITY_PUBLISH),
        "steps": set(TAG_HASH_STEPS.values()),
        "schema": {"measure": ("choice", STATISTICS), "digest": TAG32},
        "items": 1,
    },
    "result": {
        "direction": "out", "phase": Phase.RESULT_PUBLISH,
        "steps": set(RESULT_STEPS.values()),
        "schema": {"measure": ("choice", BLINDED_MEASURES),
                   "value": DECIMAL},
        "items": 1,
    },
}

_DECIMAL_RE = re.compile(r"^-?\d+(\.\d+)?$")


@dataclass(frozen=True)
class WireMessage:
    session_id: str
    phase: str
    step: str
    sender: str           # "provider" or "player"
    sender_index: int     # 0 for provider, 1-based for players
    recipient: str        # "provider" or "player"
    recipient_index: int  # 0 when recipient is the provider
    kind: str
    payload: dict = field(compare=True)

    def payload_items(self) -> int:
        spec = MESSAGE_KINDS[self.kind]
        if spec["items"] is not None:
            return spec["items"]
        if self.kind == "rank_vector":
            return len(self.payload["entries"])
        raise SchemaViolation(f"no item accounting for kind {self.kind}")


def _check_payload(kind: str, payload: dict) -> None:
    spec = MESSAGE_KINDS[kind]
    schema = spec["schema"]
    if set(payload) != set(schema):
        missing = set(schema) - set(payload)
        extra = set(payload) - set(schema)
        raise SchemaViolation(
            f"payload[{kind}]: missing={sorted(missing)} extra={sorted(extra)}"
        )
    for name, ftype in schema.items():
        value = payload[name]
        path = f"payload[{kind}].{name}"
        if isinstance(ftype, tuple) and ftype[0] == "choice":
            if value not in ftype[1]:
                raise SchemaViolation(f"{path}: {value!r} not in {ftype[1]}")
        elif ftype == HEXINT:
            decode_int(value, path)
        elif ftype == HEXINT_LIST:
            if not isinstance(value, list):
                raise SchemaViolation(f"{path}: expected a list")
            for pos, item in enumerate(value):
                decode_int(item, f"{path}[{pos}]")
        elif ftype == TAG32:
            decode_bytes(value, path, width=32)
        elif ftype == GROUP_ELEMENT:
            if (not isinstance(value, str)
                    or len(value) != 2 * ot.ELEMENT_BYTES):
                raise SchemaViolation(
                    f"{path}: group element must be "
                    f"{2 * ot.ELEMENT_BYTES} hex chars"
                )
            decode_bytes(value, path, width=ot.ELEMENT_BYTES)
        elif ftype == WRAPPED:
            decode_bytes(value, path)
        elif ftype == DECIMAL:
            if not isinstance(value, str) or not _DECIMAL_RE.match(value):
                raise SchemaViolation(f"{path}: not a decimal literal")
        else:  # pragma: no cover - schema table mistake
            raise SchemaViolation(f"{path}: unknown field type {ftype}")


def validate_message(msg: WireMessage) -> None:
    if not isinstance(msg.session_id, str) or not msg.session_id:
        raise SchemaViolation("session_id must be a non-empty string")
    if msg.phase not in {p.value for p in Phase}:
        raise SchemaViolation(f"unknown phase label {msg.phase!r}")
    if msg.step not in STEP_LABELS:
        raise SchemaViolation(f"unknown step label {msg.step!r}")
    if msg.kind not in MESSAGE_KINDS:
        raise SchemaViolation(f"unknown message kind {msg.kind!r}")
    spec = MESSAGE_KINDS[msg.kind]
    if msg.step not in spec["steps"]:
        raise SchemaViolation(
            f"kind {msg.kind!r} does not belong to step {msg.step!r}"
        )
    if msg.kind == "tag_hash":
        # The aggregate hash for the sum goes out with the blinded
        # measures; the per-measure hashes close the session.
        allowed = (Phase.MEASURE_DISTRIBUTE,) if msg.step == "18" \
            else (Phase.INTEGRITY_PUBLISH,)
    else:
        declared = spec["phase"]
        allowed = declared if isinstance(declared, tuple) else (declared,)
    if msg.phase not in {p.value for p in allowed}:
        raise SchemaViolation(
            f"kind {msg.kind!r} at step {msg.step!r} does not belong to "
            f"phase {msg.phase!r}"
        )
    inbound = spec["direction"] == "in"
    if inbound:
        if msg.sender != PLAYER or msg.recipient != PROVIDER:
            raise SchemaViolation(f"kind {msg.kind!r} flows player->provider")
        if msg.sender_index < 1 or msg.recipient_index != 0:
            raise SchemaViolation("player messages carry the sender index")
    else:
        if msg.sender != PROVIDER or msg.recipient != PLAYER:
            raise SchemaViolation(f"kind {msg.kind!r} flows provider->player")
        if msg.sender_index != 0 or msg.recipient_index < 1:
            raise SchemaViolation("provider messages carry the recipient index")
    if not isinstance(msg.payload, dict):
        raise SchemaViolation("payload must be an object")
    _check_payload(msg.kind, msg.payload)
    # Measure label and step label must agree where both appear.
    measure = msg.payload.get("measure")
    if measure is not None:
        step_map = {
            "ot_response": OT_STEPS, "ot_announce": OT_STEPS,
            "ot_payloads": OT_STEPS, "rerandomized": RERAND_STEPS,
            "blinded_measure": BLINDED_STEPS, "measure_reveal": REVEAL_STEPS,
            "measure_tag": REVEAL_TAG_STEPS, "result": RESULT_STEPS,
            "tag_hash": TAG_HASH_STEPS,
        }[msg.kind]
        if step_map[measure] != msg.step:
            raise SchemaViolation(
                f"measure {measure!r} belongs to step {step_map[measure]!r},"
                f" not {msg.step!r}"
            )


def message_to_dict(msg: WireMessage) -> dict:
    return {
        "session_id": msg.session_id,
        "phase": msg.phase,
        "step": msg.step,
        "sender": msg.sender,
        "sender_index": msg.sender_index,
        "recipient": msg.recipient,
        "recipient_index": msg.recipient_index,
        "kind": msg.kind,
        "payload": msg.payload,
    }


def encode_message(msg: WireMessage) -> bytes:
    validate_message(msg)
    return json.dumps(message_to_dict(msg), sort_keys=True,
                      separators=(",", ":")).encode()


_ENVELOPE_FIELDS = {
    "session_id": str, "phase": str, "step": str, "sender": str,
    "sender_index": int, "recipient": str, "recipient_index": int,
    "kind": str, "payload": dict,
}


def message_from_dict(data: dict) -> WireMessage:
    if not isinstance(data, dict):
        raise SchemaViolation("message must be a JSON object")
    if set(data) != set(_ENVELOPE_FIELDS):
        raise SchemaViolation(
            f"envelope fields must be exactly {sorted(_ENVELOPE_FIELDS)}"
        )
    for name, ftype in _ENVELOPE_FIELDS.items():
        if not isinstance(data[name], ftype) or isinstance(data[name], bool):
            raise SchemaViolation(f"envelope.{name}: expected {ftype.__name__}")
    msg = WireMessage(**data)
    validate_message(msg)
    return msg


def decode_message(blob: bytes) -> WireMessage:
    try:
        data = json.loads(blob.decode())
    except (UnicodeDecodeError, ValueError) as exc:
        raise SchemaViolation(f"not canonical JSON: {exc}") from exc
    return message_from_dict(data)
