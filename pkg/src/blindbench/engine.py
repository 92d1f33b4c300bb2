"""Provider and player state machines for one benchmarking session.

The provider advances through barrier phases: it buffers inbound
messages, and when a phase's expected set is complete it performs all
computation for the next round in one deterministic pass (players in
ascending index order, measures in protocol order).  Every random draw
comes from one seeded stream, so the full outbound transcript is a pure
function of the seed and the inbound message contents.  Replaying a
logged inbound sequence through a fresh ProviderSession rebuilds the
outbound queue byte for byte, which is what crash recovery relies on.

Players are driven by receive(): feed them whatever arrived, collect
whatever they now want to send.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from . import ot, paillier, wire
from .counters import ADD, DEC, ENC, EXP, INV, MUL, SENT, OpCounters
from .encoding import (
    PlaintextDomain,
    centered,
    encode_kpi,
    format_fixed,
    quantize,
    require_budget,
)
from .errors import (
    DuplicateMessage,
    PeerGroupTooSmall,
    PhaseViolation,
    SchemaViolation,
    UnknownSession,
)
from .integrity import TagSet, mac_tag, tag_hash, validate
from .paillier import Ciphertext, PrivateKey, PublicKey
from .rng import SecretStream
from .wire import Phase, WireMessage

#: Number of provider phase transitions in a completed session.
BOUNDARY_COUNT = 8


def measure_position(measure: str, n: int) -> tuple[str, int]:
    """Selection rule for a rank-selected measure: ("exact", k) picks the
    value at rank k, ("at_least", k) averages the values at ranks >= k.
    Rank 1 is the smallest value, rank n the largest."""
    if n < 1:
        raise PeerGroupTooSmall(f"no ranks in a group of {n}")
    if measure == "median":
        return "exact", (n + 1) // 2
    if measure == "maximum":
        return "exact", n
    if measure == "bottom_quartile":
        return "exact", (n + 3) // 4
    if measure == "top_quartile":
        return "exact", 3 * n // 4 + 1
    if measure == "best_in_class":
        return "at_least", 3 * n // 4 + 1
    raise ValueError(f"not a rank-selected measure: {measure!r}")


def choice_bit(measure: str, rank: int, n: int) -> int:
    mode, position = measure_position(measure, n)
    if mode == "exact":
        return 1 if rank == position else 0
    return 1 if rank >= position else 0


def selection_count(measure: str, n: int) -> int:
    """How many values the selection for a measure adds together."""
    mode, position = measure_position(measure, n)
    return 1 if mode == "exact" else n - position + 1


def draw_blinding(stream: SecretStream, modulus: int) -> int:
    """Additive blinding for a published residue: uniform over [0, N), so
    the blinded value carries no information about the plaintext."""
    return stream.randbelow(modulus)


@dataclass(frozen=True)
class TamperSpec:
    """Corrupt the blinded-measure ciphertext sent to one player.

    The corruption shifts the plaintext by one without consuming
    randomness or touching the operation counters, so a tampered run is
    otherwise identical to the honest one.
    """

    measure: str
    victim: int

    def __post_init__(self):
        if self.measure not in wire.BLINDED_MEASURES:
            raise ValueError(f"{self.measure!r} is not a blinded measure")
        if self.victim < 1:
            raise ValueError("victim index is 1-based")


@dataclass(frozen=True)
class BenchmarkResult:
    """The provider's published statistics, as fixed-point strings."""

    session_id: str
    n: int
    stats: dict[str, str]

    def canonical_bytes(self) -> bytes:
        return json.dumps(
            {"n": self.n, "session_id": self.session_id, "stats": self.stats},
            sort_keys=True, separators=(",", ":"),
        ).encode()


class ProviderSession:
    """Single-session provider: holds only ciphertexts and blinds."""

    def __init__(self, session_id: str, public_key: PublicKey, n: int,
                 domain: PlaintextDomain, seed: bytes,
                 tamper: TamperSpec | None = None):
        if n < 2:
            raise PeerGroupTooSmall(f"need at least 2 players, got {n}")
        require_budget(domain, n)
        if tamper is not None and tamper.victim > n:
            raise ValueError(f"tamper victim {tamper.victim} > n={n}")
        self.session_id = session_id
        self.pk = public_key
        self.n = n
        self.domain = domain
        self.tamper = tamper
        self.counters = OpCounters()
        self.phase = Phase.SUBMIT
        self.phase_events: list[tuple[str, int]] = []
        self.inbound_count = 0
        self.outbox: list[WireMessage] = []
        self.result: BenchmarkResult | None = None
        self._stream = SecretStream(seed)
        self._residue_bytes = (domain.modulus_bits + 7) // 8
        # Inbound stores, keyed by player index (and measure where needed).
        self._inputs: dict[int, Ciphertext] = {}
        self._ot_responses: dict[tuple[str, int], int] = {}
        self._sum_reveals: dict[int, int] = {}
        self._sum_tags: dict[int, bytes] = {}
        self._rerandomized: dict[tuple[str, int], Ciphertext] = {}
        self._variance_terms: dict[int, Ciphertext] = {}
        self._measure_reveals: dict[tuple[str, int], int] = {}
        self._measure_tags: dict[tuple[str, int], bytes] = {}
        # Computed state carried between barriers.
        self._ot_senders: dict[tuple[str, int], ot.SenderSession] = {}
        self._ot_masks: dict[tuple[str, int], int] = {}
        self._sum_blind = 0
        self._measure_blinds: dict[str, int] = {}
        self._sum_residue: int | None = None
        self._mean_hash: bytes | None = None

    # -- counted homomorphic primitives ---------------------------------

    def _enc(self, step: str, plaintext: int) -> Ciphertext:
        self.counters.add(step, ENC)
        return paillier.encrypt(self.pk, plaintext, self._stream)

    def _mul(self, step: str, a: Ciphertext, b: Ciphertext) -> Ciphertext:
        self.counters.add(step, MUL)
        return paillier.hom_add(self.pk, a, b)

    def _exp(self, step: str, ct: Ciphertext, k: int) -> Ciphertext:
        self.counters.add(step, EXP)
        return paillier.scalar_mul(self.pk, ct, k)

    def _inv(self, step: str, ct: Ciphertext) -> Ciphertext:
        self.counters.add(step, INV)
        return paillier.negate(self.pk, ct)

    # -- messaging -------------------------------------------------------

    def _out(self, kind: str, step: str, recipient: int, payload: dict) -> None:
        declared = wire.MESSAGE_KINDS[kind]["phase"]
        if isinstance(declared, tuple):
            phase = (Phase.MEASURE_DISTRIBUTE if step == "18"
                     else Phase.INTEGRITY_PUBLISH)
        else:
            phase = declared
        msg = WireMessage(
            session_id=self.session_id, phase=phase.value, step=step,
            sender=wire.PROVIDER, sender_index=0,
            recipient=wire.PLAYER, recipient_index=recipient,
            kind=kind, payload=payload,
        )
        self.counters.add(step, SENT, msg.payload_items())
        self.outbox.append(msg)

    def _ct_payload(self, ct: Ciphertext) -> str:
        return wire.encode_int(ct.value)

    def _parse_ct(self, text: str, path: str) -> Ciphertext:
        value = wire.decode_int(text, path)
        if value >= self.pk.n_sq:
            raise SchemaViolation(f"{path}: ciphertext out of range")
        return Ciphertext(value=value, key_id=self.pk.key_id)

    def _advance(self, phase: Phase) -> None:
        self.phase = phase
        self.phase_events.append((phase.value, self.inbound_count))

    # -- inbound dispatch --------------------------------------------------

    def process(self, msg: WireMessage) -> None:
        """Accept one player message; advance the session when a phase's
        inbound set completes.  Raises without side effects on any
        invalid message, so callers can log only accepted traffic."""
        wire.validate_message(msg)
        if msg.session_id != self.session_id:
            raise UnknownSession(f"message for session {msg.session_id!r}")
        if wire.MESSAGE_KINDS[msg.kind]["direction"] != "in":
            raise SchemaViolation(f"kind {msg.kind!r} is provider-sent")
        if not 1 <= msg.sender_index <= self.n:
            raise SchemaViolation(f"no player at index {msg.sender_index}")
        if self.phase is Phase.DONE:
            raise PhaseViolation("session already finished")
        if msg.phase != self.phase.value:
            raise PhaseViolation(
                f"{msg.kind} arrived during {self.phase.value}"
            )
        handler = {
            "input": self._on_input,
            "ot_response": self._on_ot_response,
            "sum_reveal": self._on_sum_reveal,
            "sum_tag": self._on_sum_tag,
            "rerandomized": self._on_rerandomized,
            "variance_term": self._on_variance_term,
            "measure_reveal": self._on_measure_reveal,
            "measure_tag": self._on_measure_tag,
        }[msg.kind]
        handler(msg)
        self.inbound_count += 1
        self._maybe_fire_barrier()

    def _on_input(self, msg: WireMessage) -> None:
        i = msg.sender_index
        if i in self._inputs:
            raise DuplicateMessage(f"player {i} already submitted an input")
        self._inputs[i] = self._parse_ct(msg.payload["ciphertext"], "input")

    def _on_ot_response(self, msg: WireMessage) -> None:
        key = (msg.payload["measure"], msg.sender_index)
        if key in self._ot_responses:
            raise DuplicateMessage(f"duplicate transfer response {key}")
        element = ot.decode_element(msg.payload["element"])
        ot.validate_element(element)
        self._ot_responses[key] = element

    def _on_sum_reveal(self, msg: WireMessage) -> None:
        i = msg.sender_index
        if i in self._sum_reveals:
            raise DuplicateMessage(f"player {i} already revealed the sum")
        value = wire.decode_int(msg.payload["blinded"], "sum_reveal")
        if value >= self.pk.n:
            raise SchemaViolation("revealed residue out of range")
        self._sum_reveals[i] = value

    def _on_sum_tag(self, msg: WireMessage) -> None:
        i = msg.sender_index
        if i in self._sum_tags:
            raise DuplicateMessage(f"player {i} already tagged the sum")
        self._sum_tags[i] = wire.decode_bytes(msg.payload["tag"], "sum_tag", 32)

    def _on_rerandomized(self, msg: WireMessage) -> None:
        key = (msg.payload["measure"], msg.sender_index)
        if key in self._rerandomized:
            raise DuplicateMessage(f"duplicate rerandomized ciphertext {key}")
        self._rerandomized[key] = self._parse_ct(
            msg.payload["ciphertext"], "rerandomized")

    def _on_variance_term(self, msg: WireMessage) -> None:
        i = msg.sender_index
        if i in self._variance_terms:
            raise DuplicateMessage(f"player {i} already sent a variance term")
        self._variance_terms[i] = self._parse_ct(
            msg.payload["ciphertext"], "variance_term")

    def _on_measure_reveal(self, msg: WireMessage) -> None:
        key = (msg.payload["measure"], msg.sender_index)
        if key in self._measure_reveals:
            raise DuplicateMessage(f"duplicate measure reveal {key}")
        value = wire.decode_int(msg.payload["blinded"], "measure_reveal")
        if value >= self.pk.n:
            raise SchemaViolation("revealed residue out of range")
        self._measure_reveals[key] = value

    def _on_measure_tag(self, msg: WireMessage) -> None:
        key = (msg.payload["measure"], msg.sender_index)
        if key in self._measure_tags:
            raise DuplicateMessage(f"duplicate measure tag {key}")
        self._measure_tags[key] = wire.decode_bytes(
            msg.payload["tag"], "measure_tag", 32)

    # -- barriers ---------------------------------------------------------

    def _maybe_fire_barrier(self) -> None:
        n = self.n
        if self.phase is Phase.SUBMIT and len(self._inputs) == n:
            self._advance(Phase.DISTRIBUTE_AND_OT)
            self._emit_distribute()
        elif (self.phase is Phase.DISTRIBUTE_AND_OT
                and len(self._ot_responses) == 5 * n):
            self._advance(Phase.SUM_REVEAL)
            self._emit_ot_payloads()
        elif (self.phase is Phase.SUM_REVEAL
                and len(self._sum_reveals) == n and len(self._sum_tags) == n):
            self._advance(Phase.RERANDOMIZE_AND_VARIANCE)
            self._emit_sum()
        elif (self.phase is Phase.RERANDOMIZE_AND_VARIANCE
                and len(self._rerandomized) == 5 * n
                and len(self._variance_terms) == n):
            self._advance(Phase.MEASURE_DISTRIBUTE)
            self._emit_blinded_measures()
            self._advance(Phase.MEASURE_REVEAL)
        elif (self.phase is Phase.MEASURE_REVEAL
                and len(self._measure_reveals) == 6 * n
                and len(self._measure_tags) == 6 * n):
            self._advance(Phase.RESULT_PUBLISH)
            self._emit_results()
            self._advance(Phase.INTEGRITY_PUBLISH)
            self._emit_tag_hashes()
            self._advance(Phase.DONE)

    def _emit_distribute(self) -> None:
        n, pk = self.n, self.pk
        # Blinded sum of all inputs, one ciphertext broadcast to everyone.
        total = self._inputs[1]
        for i in range(2, n + 1):
            total = self._mul("2", total, self._inputs[i])
        self._sum_blind = draw_blinding(self._stream, pk.n)
        blinded_sum = self._mul("2", total, self._enc("2", self._sum_blind))
        for i in range(1, n + 1):
            self._out("blinded_sum", "2", i,
                      {"ciphertext": self._ct_payload(blinded_sum)})
        # Tie-broken comparands: shift each input left and add a distinct
        # per-value offset, so equal inputs still compare strictly.
        shift = 1 << self.domain.tiebreak_bits
        offsets = list(range(n))
        self._stream.shuffle(offsets)
        comparands = {}
        for k in range(1, n + 1):
            shifted = self._exp("3t", self._inputs[k], shift)
            comparands[k] = self._mul(
                "3t", shifted, self._enc("3t", offsets[k - 1]))
        # Random assignment of values to players, and a second shuffle for
        # the comparison order inside each vector.
        assignment = list(range(1, n + 1))
        self._stream.shuffle(assignment)
        column_order = list(range(1, n + 1))
        self._stream.shuffle(column_order)
        self._assignment = assignment
        lo = 1 << (self.domain.compare_blind_bits - 1)
        hi = 1 << self.domain.compare_blind_bits
        for i in range(1, n + 1):
            mine = assignment[i - 1]
            entries = []
            for other in column_order:
                if other == mine:
                    continue
                diff = self._mul(
                    "3", comparands[mine], self._inv("3", comparands[other]))
                scale = self._stream.randrange(lo, hi)
                scaled = self._exp("3", diff, scale)
                offset = self._stream.randbelow(scale)
                entry = self._mul("3", scaled, self._enc("3", offset))
                entries.append(wire.encode_int(entry.value))
            self._out("rank_vector", "3", i, {"entries": entries})
        # Per-measure transfers: the masked assigned value or the bare
        # mask, announced now, wrapped after the responses arrive.
        width = pk.ciphertext_bytes()
        for measure in wire.OT_MEASURES:
            step = wire.OT_STEPS[measure]
            for i in range(1, n + 1):
                mask = self._stream.randbelow(pk.n)
                self._ot_masks[(measure, i)] = mask
                bare = self._enc(step, mask)
                masked = self._mul(step, self._inputs[assignment[i - 1]], bare)
                session = ot.sender_start(
                    paillier.serialize_ciphertext(pk, bare),
                    paillier.serialize_ciphertext(pk, masked),
                    self._stream, pad_to=width,
                )
                self._ot_senders[(measure, i)] = session
                self._out("ot_announce", step, i, {
                    "measure": measure,
                    "element": ot.encode_element(session.announce),
                })

    def _emit_ot_payloads(self) -> None:
        for measure in wire.OT_MEASURES:
            step = wire.OT_STEPS[measure]
            for i in range(1, self.n + 1):
                session = self._ot_senders.pop((measure, i))
                response = self._ot_responses[(measure, i)]
                wrapped0, wrapped1 = ot.sender_finish(session, response)
                self._out("ot_payloads", step, i, {
                    "measure": measure,
                    "payload0": wrapped0.hex(),
                    "payload1": wrapped1.hex(),
                })

    def _emit_sum(self) -> None:
        reveal = self._sum_reveals[min(self._sum_reveals)]
        self.counters.add("9", ADD)
        self._sum_residue = (reveal - self._sum_blind) % self.pk.n
        tags = TagSet(measure="mean", n=self.n,
                      tags=tuple(self._sum_tags[i]
                                 for i in range(1, self.n + 1)))
        self._mean_hash = tag_hash(tags)
        for i in range(1, self.n + 1):
            self._out("sum_publish", "9", i,
                      {"value": wire.encode_int(self._sum_residue)})

    def _blind_for_reveal(self, step: str, measure: str,
                          total: Ciphertext) -> Ciphertext:
        blind = draw_blinding(self._stream, self.pk.n)
        self._measure_blinds[measure] = blind
        return self._mul(step, total, self._enc(step, blind))

    def _emit_blinded_measures(self) -> None:
        n, pk = self.n, self.pk
        blinded: dict[str, Ciphertext] = {}
        total = self._variance_terms[1]
        for i in range(2, n + 1):
            total = self._mul("14", total, self._variance_terms[i])
        blinded["variance"] = self._blind_for_reveal("14", "variance", total)
        for measure in wire.OT_MEASURES:
            step = wire.BLINDED_STEPS[measure]
            total = None
            for i in range(1, n + 1):
                unmask = self._enc(
                    step, (pk.n - self._ot_masks[(measure, i)]) % pk.n)
                stripped = self._mul(
                    step, self._rerandomized[(measure, i)], unmask)
                total = stripped if total is None else self._mul(
                    step, total, stripped)
            blinded[measure] = self._blind_for_reveal(step, measure, total)
        for measure in wire.BLINDED_MEASURES:
            step = wire.BLINDED_STEPS[measure]
            for i in range(1, n + 1):
                ct = blinded[measure]
                if (self.tamper is not None
                        and self.tamper.measure == measure
                        and self.tamper.victim == i):
                    ct = Ciphertext(
                        value=ct.value * (pk.n + 1) % pk.n_sq,
                        key_id=ct.key_id,
                    )
                self._out("blinded_measure", step, i,
                          {"measure": measure,
                           "ciphertext": self._ct_payload(ct)})
        for i in range(1, n + 1):
            self._out("tag_hash", "18", i,
                      {"measure": "mean", "digest": self._mean_hash.hex()})

    def _emit_results(self) -> None:
        n, d = self.n, self.domain.decimal_places
        scale = 10 ** d
        stats: dict[str, str] = {}
        mean = Fraction(centered(self._sum_residue, self.pk.n), n * scale)
        stats["mean"] = format_fixed(quantize(mean, d), d)
        for measure in wire.BLINDED_MEASURES:
            step = wire.RESULT_STEPS[measure]
            reveal = self._measure_reveals[
                min(k for k in self._measure_reveals if k[0] == measure)]
            self.counters.add(step, ADD)
            raw = centered(
                (reveal - self._measure_blinds[measure]) % self.pk.n,
                self.pk.n)
            if measure == "variance":
                value = Fraction(raw, n ** 3 * scale * scale)
            else:
                value = Fraction(raw, selection_count(measure, n) * scale)
            stats[measure] = format_fixed(quantize(value, d), d)
            for i in range(1, n + 1):
                self._out("result", step, i,
                          {"measure": measure, "value": stats[measure]})
        self.result = BenchmarkResult(
            session_id=self.session_id, n=n, stats=stats)

    def _emit_tag_hashes(self) -> None:
        for measure in wire.BLINDED_MEASURES:
            step = wire.TAG_HASH_STEPS[measure]
            tags = TagSet(measure=measure, n=self.n,
                          tags=tuple(self._measure_tags[(measure, i)]
                                     for i in range(1, self.n + 1)))
            digest = tag_hash(tags).hex()
            for i in range(1, self.n + 1):
                self._out("tag_hash", step, i,
                          {"measure": measure, "digest": digest})


class PlayerPhase(str, Enum):
    AWAIT_DISTRIBUTE = "AWAIT_DISTRIBUTE"
    AWAIT_PAYLOADS = "AWAIT_PAYLOADS"
    AWAIT_SUM = "AWAIT_SUM"
    AWAIT_MEASURES = "AWAIT_MEASURES"
    AWAIT_RESULTS = "AWAIT_RESULTS"
    AWAIT_INTEGRITY = "AWAIT_INTEGRITY"
    DONE = "DONE"


@dataclass(frozen=True)
class PlayerResult:
    """What one player knows at the end: the published statistics, the
    rank it observed for its assigned value, and one validation bit per
    statistic (1 means the integrity hash checked out)."""

    index: int
    rank: int
    stats: dict[str, str]
    bits: dict[str, int]

    def all_valid(self) -> bool:
        return all(bit == 1 for bit in self.bits.values())


class PlayerState:
    def __init__(self, session_id: str, index: int, n: int,
                 private_key: PrivateKey, mac_key: bytes,
                 domain: PlaintextDomain, kpi: Fraction,
                 rng: SecretStream | None = None):
        if index < 1 or index > n:
            raise ValueError(f"index {index} outside 1..{n}")
        require_budget(domain, n)
        self.session_id = session_id
        self.index = index
        self.n = n
        self.domain = domain
        self.counters = OpCounters()
        self.phase = PlayerPhase.AWAIT_DISTRIBUTE
        self.rank: int | None = None
        self.result: PlayerResult | None = None
        self._sk = private_key
        self._pk = private_key.public_key()
        self._mac_key = mac_key
        self._stream = rng if rng is not None else SecretStream.from_entropy()
        self._residue_bytes = (domain.modulus_bits + 7) // 8
        scaled = kpi * 10 ** domain.decimal_places
        if scaled.denominator != 1:
            raise ValueError("kpi has more fractional digits than the domain")
        self._scaled = int(scaled)
        self._residue = encode_kpi(kpi, domain, self._pk.n)
        self._store: dict[tuple[str, str], WireMessage] = {}
        self._choices: dict[str, int] = {}
        self._receiver: dict[str, tuple[int, int]] = {}
        self._held: dict[str, Ciphertext] = {}
        self._blinded_sum: int | None = None
        self._blinded_values: dict[str, int] = {}
        self._stats: dict[str, str] = {}
        self._bits: dict[str, int] = {}

    def _enc(self, step: str, plaintext: int) -> Ciphertext:
        self.counters.add(step, ENC)
        return paillier.encrypt(self._pk, plaintext, self._stream)

    def _dec(self, step: str, ct: Ciphertext) -> int:
        self.counters.add(step, DEC)
        return paillier.decrypt(self._sk, ct)

    def _rerand(self, step: str, ct: Ciphertext) -> Ciphertext:
        # One fresh encryption of zero folded in by one multiplication.
        self.counters.add(step, ENC)
        self.counters.add(step, MUL)
        return paillier.rerandomize(self._pk, ct, self._stream)

    def _msg(self, kind: str, step: str, payload: dict) -> WireMessage:
        phase = wire.MESSAGE_KINDS[kind]["phase"]
        msg = WireMessage(
            session_id=self.session_id, phase=phase.value, step=step,
            sender=wire.PLAYER, sender_index=self.index,
            recipient=wire.PROVIDER, recipient_index=0,
            kind=kind, payload=payload,
        )
        self.counters.add(step, SENT, msg.payload_items())
        return msg

    def _parse_ct(self, text: str, path: str) -> Ciphertext:
        value = wire.decode_int(text, path)
        if value >= self._pk.n_sq:
            raise SchemaViolation(f"{path}: ciphertext out of range")
        return Ciphertext(value=value, key_id=self._pk.key_id)

    def start(self) -> list[WireMessage]:
        """Encrypt and submit the input."""
        ct = self._enc("1", self._residue)
        return [self._msg("input", "1", {"ciphertext": wire.encode_int(ct.value)})]

    def receive(self, messages: list[WireMessage]) -> list[WireMessage]:
        for msg in messages:
            wire.validate_message(msg)
            if msg.session_id != self.session_id:
                raise UnknownSession(f"message for {msg.session_id!r}")
            if msg.recipient_index != self.index:
                raise SchemaViolation(
                    f"message addressed to player {msg.recipient_index}")
            key = (msg.kind, msg.step)
            if key in self._store:
                raise DuplicateMessage(f"already received {key}")
            self._store[key] = msg
        out: list[WireMessage] = []
        while self._try_advance(out):
            pass
        return out

    def _have(self, kind: str, steps) -> bool:
        return all((kind, step) in self._store for step in steps)

    def _try_advance(self, out: list[WireMessage]) -> bool:
        phase = self.phase
        if phase is PlayerPhase.AWAIT_DISTRIBUTE:
            needed = (self._have("blinded_sum", ["2"])
                      and self._have("rank_vector", ["3"])
                      and self._have("ot_announce", wire.OT_STEPS.values()))
            if not needed:
                return False
            self._do_distribute(out)
            self.phase = PlayerPhase.AWAIT_PAYLOADS
            return True
        if phase is PlayerPhase.AWAIT_PAYLOADS:
            if not self._have("ot_payloads", wire.OT_STEPS.values()):
                return False
            self._do_payloads(out)
            self.phase = PlayerPhase.AWAIT_SUM
            return True
        if phase is PlayerPhase.AWAIT_SUM:
            if not self._have("sum_publish", ["9"]):
                return False
            self._do_sum(out)
            self.phase = PlayerPhase.AWAIT_MEASURES
            return True
        if phase is PlayerPhase.AWAIT_MEASURES:
            needed = (self._have("blinded_measure",
                                 wire.BLINDED_STEPS.values())
                      and self._have("tag_hash", ["18"]))
            if not needed:
                return False
            self._do_measures(out)
            self.phase = PlayerPhase.AWAIT_RESULTS
            return True
        if phase is PlayerPhase.AWAIT_RESULTS:
            if not self._have("result", wire.RESULT_STEPS.values()):
                return False
            for measure, step in wire.RESULT_STEPS.items():
                self._stats[measure] = self._store[("result", step)].payload["value"]
            self.phase = PlayerPhase.AWAIT_INTEGRITY
            return True
        if phase is PlayerPhase.AWAIT_INTEGRITY:
            hash_steps = [wire.TAG_HASH_STEPS[m] for m in wire.BLINDED_MEASURES]
            if not self._have("tag_hash", hash_steps):
                return False
            self._do_integrity()
            self.phase = PlayerPhase.DONE
            return True
        return False

    def _do_distribute(self, out: list[WireMessage]) -> None:
        ct = self._parse_ct(
            self._store[("blinded_sum", "2")].payload["ciphertext"],
            "blinded_sum")
        self._blinded_sum = self._dec("7", ct)
        entries = self._store[("rank_vector", "3")].payload["entries"]
        if len(entries) != self.n - 1:
            raise SchemaViolation(
                f"rank vector has {len(entries)} entries, expected {self.n - 1}")
        above = 0
        for pos, text in enumerate(entries):
            comparison = self._dec(
                "3", self._parse_ct(text, f"rank_vector[{pos}]"))
            if centered(comparison, self._pk.n) > 0:
                above += 1
        self.rank = above + 1
        for measure in wire.OT_MEASURES:
            step = wire.OT_STEPS[measure]
            bit = choice_bit(measure, self.rank, self.n)
            self._choices[measure] = bit
            announce = ot.decode_element(
                self._store[("ot_announce", step)].payload["element"])
            secret, response = ot.receiver_respond(announce, bit, self._stream)
            self._receiver[measure] = (secret, response)
            out.append(self._msg("ot_response", step, {
                "measure": measure,
                "element": ot.encode_element(response),
            }))

    def _do_payloads(self, out: list[WireMessage]) -> None:
        for measure in wire.OT_MEASURES:
            step = wire.OT_STEPS[measure]
            announce = ot.decode_element(
                self._store[("ot_announce", step)].payload["element"])
            payload = self._store[("ot_payloads", step)].payload
            secret, response = self._receiver.pop(measure)
            plain = ot.receiver_finish(
                announce, response, secret, self._choices[measure],
                bytes.fromhex(payload["payload0"]),
                bytes.fromhex(payload["payload1"]),
            )
            self._held[measure] = paillier.deserialize_ciphertext(
                self._pk, plain)
        out.append(self._msg("sum_reveal", "7",
                             {"blinded": wire.encode_int(self._blinded_sum)}))
        tag = mac_tag(self._mac_key, self._blinded_sum, self.index,
                      self._residue_bytes)
        out.append(self._msg("sum_tag", "8", {"tag": tag.hex()}))

    def _do_sum(self, out: list[WireMessage]) -> None:
        value = wire.decode_int(
            self._store[("sum_publish", "9")].payload["value"], "sum_publish")
        if value >= self._pk.n:
            raise SchemaViolation("published sum out of range")
        self._sum_centered = centered(value, self._pk.n)
        # Deviation of this player's scaled input from the group sum; the
        # square is what the variance aggregation needs.
        self.counters.add("13", MUL)
        scaled_n = self.n * self._scaled
        self.counters.add("13", ADD)
        deviation = scaled_n - self._sum_centered
        self.counters.add("13", MUL)
        square = deviation * deviation
        for measure in wire.OT_MEASURES:
            step = wire.RERAND_STEPS[measure]
            fresh = self._rerand(step, self._held[measure])
            out.append(self._msg("rerandomized", step, {
                "measure": measure,
                "ciphertext": wire.encode_int(fresh.value),
            }))
        ct = self._enc("13", square)
        out.append(self._msg("variance_term", "13",
                             {"ciphertext": wire.encode_int(ct.value)}))

    def _do_measures(self, out: list[WireMessage]) -> None:
        digest = wire.decode_bytes(
            self._store[("tag_hash", "18")].payload["digest"], "tag_hash", 32)
        self._bits["mean"] = validate(
            "mean", digest, self._mac_key, self._blinded_sum, self.n,
            self._residue_bytes).bit
        for measure in wire.BLINDED_MEASURES:
            ct = self._parse_ct(
                self._store[("blinded_measure", wire.BLINDED_STEPS[measure])]
                .payload["ciphertext"],
                "blinded_measure")
            blinded = self._dec(wire.REVEAL_STEPS[measure], ct)
            self._blinded_values[measure] = blinded
            out.append(self._msg("measure_reveal", wire.REVEAL_STEPS[measure], {
                "measure": measure,
                "blinded": wire.encode_int(blinded),
            }))
            tag = mac_tag(self._mac_key, blinded, self.index,
                          self._residue_bytes)
            out.append(self._msg("measure_tag", wire.REVEAL_TAG_STEPS[measure],
                                 {"measure": measure, "tag": tag.hex()}))

    def _do_integrity(self) -> None:
        for measure in wire.BLINDED_MEASURES:
            step = wire.TAG_HASH_STEPS[measure]
            digest = wire.decode_bytes(
                self._store[("tag_hash", step)].payload["digest"],
                "tag_hash", 32)
            self._bits[measure] = validate(
                measure, digest, self._mac_key,
                self._blinded_values[measure], self.n,
                self._residue_bytes).bit
        d = self.domain.decimal_places
        mean = Fraction(self._sum_centered, self.n * 10 ** d)
        self._stats["mean"] = format_fixed(quantize(mean, d), d)
        self.result = PlayerResult(
            index=self.index, rank=self.rank,
            stats=dict(self._stats), bits=dict(self._bits))
