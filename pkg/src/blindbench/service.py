"""Benchmarking service: session lifecycle, enrollment, persistence.

One BenchmarkService hosts any number of sessions.  Each session is
backed by an append-only log of checksummed JSON lines (one creation
record, one record per enrollment, one per accepted inbound message).
Restoring a service from its data directory replays every log and, since
the provider engine is deterministic, rebuilds exactly the outbound
queue that existed before the restart.

Enrollment uses a static pre-shared roster: the session is created with
the digests of the players' join tokens, and a player proves membership
(and, transitively, possession of the distributed key material) by
presenting a token whose digest is on the roster.  Seats are assigned in
arrival order; repeat joins with the same token are idempotent.
"""

from __future__ import annotations

import json
import os
import threading
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

from . import wire
from .encoding import PlaintextDomain, require_budget, tiebreak_bits_for
from .engine import ProviderSession
from .errors import (
    BlindbenchError,
    CorruptLog,
    NotEnrolled,
    PeerGroupTooSmall,
    SchemaViolation,
    SessionRateLimited,
    UnknownSession,
)
from .keys import token_digest
from .paillier import PublicKey, key_fingerprint
from .rng import SecretStream
from .wire import Phase

_DIGEST_HEX = 64

#: Cumulative inbound messages (per player) needed to complete each
#: phase; status() reports the shortfall as "outstanding".
_CUMULATIVE_INBOUND = {
    Phase.SUBMIT: 1,
    Phase.DISTRIBUTE_AND_OT: 6,
    Phase.SUM_REVEAL: 8,
    Phase.RERANDOMIZE_AND_VARIANCE: 14,
    Phase.MEASURE_DISTRIBUTE: 14,
    Phase.MEASURE_REVEAL: 26,
    Phase.RESULT_PUBLISH: 26,
    Phase.INTEGRITY_PUBLISH: 26,
    Phase.DONE: 26,
}


def _canonical(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


@dataclass(frozen=True)
class ServiceConfig:
    """Deployment knobs for one service instance."""

    data_dir: Path
    min_n: int = 4
    min_session_interval_seconds: float = 0.0


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session needs at creation time."""

    n: int
    modulus_bits: int
    public_modulus: int
    roster: tuple[str, ...]  # token digests, one per seat
    input_bits: int = 40
    compare_blind_bits: int = 64
    decimal_places: int = 2

    def domain(self) -> PlaintextDomain:
        return PlaintextDomain(
            modulus_bits=self.modulus_bits,
            input_bits=self.input_bits,
            compare_blind_bits=self.compare_blind_bits,
            tiebreak_bits=tiebreak_bits_for(self.n),
            decimal_places=self.decimal_places,
        )

    def roster_fingerprint(self) -> str:
        import hashlib
        return hashlib.sha256(
            "".join(sorted(self.roster)).encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "modulus_bits": self.modulus_bits,
            "public_modulus": format(self.public_modulus, "x"),
            "roster": list(self.roster),
            "input_bits": self.input_bits,
            "compare_blind_bits": self.compare_blind_bits,
            "decimal_places": self.decimal_places,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        if not isinstance(data, dict):
            raise SchemaViolation("session config must be an object")
        required = {"n", "modulus_bits", "public_modulus", "roster"}
        missing = required - set(data)
        if missing:
            raise SchemaViolation(f"session config missing {sorted(missing)}")
        unknown = set(data) - required - {
            "input_bits", "compare_blind_bits", "decimal_places"}
        if unknown:
            raise SchemaViolation(f"unknown config fields {sorted(unknown)}")
        for name in ("n", "modulus_bits", "input_bits", "compare_blind_bits",
                     "decimal_places"):
            if name in data and (not isinstance(data[name], int)
                                 or isinstance(data[name], bool)):
                raise SchemaViolation(f"config.{name}: expected an integer")
        roster = data["roster"]
        if (not isinstance(roster, list) or not roster
                or any(not isinstance(d, str) or len(d) != _DIGEST_HEX
                       for d in roster)):
            raise SchemaViolation(
                "config.roster: expected a list of sha-256 hex digests")
        if len(set(roster)) != len(roster):
            raise SchemaViolation("config.roster: duplicate token digest")
        try:
            modulus = int(data["public_modulus"], 16)
        except (TypeError, ValueError) as exc:
            raise SchemaViolation("config.public_modulus: not hex") from exc
        return cls(
            n=data["n"],
            modulus_bits=data["modulus_bits"],
            public_modulus=modulus,
            roster=tuple(roster),
            input_bits=data.get("input_bits", 40),
            compare_blind_bits=data.get("compare_blind_bits", 64),
            decimal_places=data.get("decimal_places", 2),
        )


class _Session:
    """Mutable per-session state plus its log file handle."""

    def __init__(self, session_id: str, config: SessionConfig, seed: bytes,
                 created_at: float, log_path: Path):
        self.session_id = session_id
        self.config = config
        self.seed = seed
        self.created_at = created_at
        self.log_path = log_path
        self.lock = threading.Lock()
        self.seats: dict[str, int] = {}  # token digest -> player index
        pk = PublicKey(n=config.public_modulus, bits=config.modulus_bits)
        self.provider = ProviderSession(
            session_id=session_id, public_key=pk, n=config.n,
            domain=config.domain(), seed=seed)
        self._fh = None

    def open_log(self) -> None:
        self._fh = open(self.log_path, "ab")

    def append(self, body: dict) -> None:
        blob = _canonical(body)
        line = _canonical(
            {"body": body, "crc": format(zlib.crc32(blob), "08x")}
        ) + b"\n"
        self._fh.write(line)
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def _read_log(path: Path) -> list[dict]:
    bodies = []
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw and not raw.endswith(b"\n"):
        raise CorruptLog(f"{path.name}: truncated final record")
    for lineno, line in enumerate(raw.splitlines(), start=1):
        try:
            record = json.loads(line.decode())
        except (UnicodeDecodeError, ValueError) as exc:
            raise CorruptLog(f"{path.name}:{lineno}: unreadable") from exc
        if (not isinstance(record, dict)
                or set(record) != {"body", "crc"}
                or not isinstance(record["body"], dict)):
            raise CorruptLog(f"{path.name}:{lineno}: malformed record")
        if format(zlib.crc32(_canonical(record["body"])), "08x") != record["crc"]:
            raise CorruptLog(f"{path.name}:{lineno}: checksum mismatch")
        bodies.append(record["body"])
    return bodies


class BenchmarkService:
    """The five service operations, thread safe, persistent."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._lock = threading.Lock()
        self._sessions: dict[str, _Session] = {}
        self._last_created: dict[str, float] = {}  # roster fp -> timestamp
        self._entropy = SecretStream.from_entropy()
        config.data_dir.mkdir(parents=True, exist_ok=True)
        for path in sorted(config.data_dir.glob("*.log")):
            self._restore(path)

    # -- persistence ------------------------------------------------------

    def _restore(self, path: Path) -> None:
        bodies = _read_log(path)
        if not bodies:
            return  # a session that never finished being created
        head = bodies[0]
        if head.get("type") != "create":
            raise CorruptLog(f"{path.name}: first record is not a creation")
        try:
            config = SessionConfig.from_dict(head["config"])
            session = _Session(
                session_id=head["session_id"], config=config,
                seed=bytes.fromhex(head["seed"]),
                created_at=head["created_at"], log_path=path)
            for body in bodies[1:]:
                if body.get("type") == "join":
                    session.seats[body["digest"]] = body["index"]
                elif body.get("type") == "push":
                    session.provider.process(
                        wire.message_from_dict(body["message"]))
                else:
                    raise CorruptLog(f"{path.name}: unknown record type")
        except (KeyError, ValueError, TypeError, BlindbenchError) as exc:
            if isinstance(exc, CorruptLog):
                raise
            raise CorruptLog(f"{path.name}: {exc}") from exc
        session.open_log()
        self._sessions[session.session_id] = session
        fp = config.roster_fingerprint()
        self._last_created[fp] = max(
            self._last_created.get(fp, 0.0), session.created_at)

    def close(self) -> None:
        with self._lock:
            for session in self._sessions.values():
                session.close()

    # -- endpoint: create --------------------------------------------------

    def create_session(self, config_data: dict) -> dict:
        config = SessionConfig.from_dict(config_data)
        if config.n < self.config.min_n:
            raise PeerGroupTooSmall(
                f"n={config.n} below this service's minimum of "
                f"{self.config.min_n}")
        if len(config.roster) != config.n:
            raise SchemaViolation(
                f"roster has {len(config.roster)} seats for n={config.n}")
        require_budget(config.domain(), config.n)
        fp = config.roster_fingerprint()
        now = time.time()
        with self._lock:
            last = self._last_created.get(fp)
            interval = self.config.min_session_interval_seconds
            if last is not None and now - last < interval:
                raise SessionRateLimited(
                    f"peer group ran a session {now - last:.0f}s ago; "
                    f"configured minimum interval is {interval:.0f}s")
            session_id = self._entropy.bytes(12).hex()
            seed = self._entropy.bytes(32)
            session = _Session(
                session_id=session_id, config=config, seed=seed,
                created_at=now,
                log_path=self.config.data_dir / f"{session_id}.log")
            session.open_log()
            session.append({
                "type": "create", "session_id": session_id,
                "created_at": now, "seed": seed.hex(),
                "config": config.to_dict(),
            })
            self._sessions[session_id] = session
            self._last_created[fp] = now
        return {"session_id": session_id, "phase": Phase.SUBMIT.value,
                "key_fingerprint": key_fingerprint(config.public_modulus)}

    # -- endpoint helpers ---------------------------------------------------

    def _session(self, session_id) -> _Session:
        if not isinstance(session_id, str):
            raise SchemaViolation("session id must be a string")
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    @staticmethod
    def _seat_for(session: _Session, token) -> int:
        if not isinstance(token, str) or not token:
            raise SchemaViolation("join token must be a non-empty string")
        index = session.seats.get(token_digest(token))
        if index is None:
            raise NotEnrolled("token not enrolled in this session")
        return index

    # -- endpoint: join -----------------------------------------------------

    def join(self, session_id: str, token) -> dict:
        session = self._session(session_id)
        if not isinstance(token, str) or not token:
            raise SchemaViolation("join token must be a non-empty string")
        digest = token_digest(token)
        with session.lock:
            if digest not in session.config.roster:
                raise NotEnrolled("token digest is not on the session roster")
            index = session.seats.get(digest)
            if index is None:
                index = len(session.seats) + 1
                session.seats[digest] = index
                session.append({"type": "join", "digest": digest,
                                "index": index})
            domain = session.config.domain()
            return {
                "session_id": session_id,
                "index": index,
                "n": session.config.n,
                "phase": session.provider.phase.value,
                "key_fingerprint": key_fingerprint(
                    session.config.public_modulus),
                "domain": {
                    "modulus_bits": domain.modulus_bits,
                    "input_bits": domain.input_bits,
                    "compare_blind_bits": domain.compare_blind_bits,
                    "tiebreak_bits": domain.tiebreak_bits,
                    "decimal_places": domain.decimal_places,
                },
            }

    # -- endpoint: push -----------------------------------------------------

    def push(self, session_id: str, token, message_data: dict) -> dict:
        session = self._session(session_id)
        with session.lock:
            index = self._seat_for(session, token)
            message = wire.message_from_dict(message_data)
            if message.sender_index != index:
                raise NotEnrolled(
                    f"token is enrolled at seat {index}, message claims "
                    f"{message.sender_index}")
            session.provider.process(message)
            session.append({"type": "push", "message": message_data})
            return {"phase": session.provider.phase.value}

    # -- endpoint: poll -----------------------------------------------------

    def poll(self, session_id: str, token, cursor) -> dict:
        session = self._session(session_id)
        if not isinstance(cursor, int) or isinstance(cursor, bool) or cursor < 0:
            raise SchemaViolation("cursor must be a non-negative integer")
        with session.lock:
            index = self._seat_for(session, token)
            mine = [wire.message_to_dict(m) for m in session.provider.outbox
                    if m.recipient_index == index]
        return {
            "messages": mine[cursor:],
            "cursor": len(mine),
            "phase": session.provider.phase.value,
        }

    # -- endpoint: status ----------------------------------------------------

    def status(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            provider = session.provider
            expected = _CUMULATIVE_INBOUND[provider.phase] * session.config.n
            return {
                "session_id": session_id,
                "phase": provider.phase.value,
                "n": session.config.n,
                "joined": len(session.seats),
                "outstanding": max(0, expected - provider.inbound_count),
                "done": provider.phase is Phase.DONE,
            }
