"""In-memory end-to-end sessions for testing and experiments.

A simulation wires one ProviderSession to n PlayerStates directly,
without the HTTP transport.  The serial pump delivers messages in index
order; the concurrent pump runs each player on its own thread against a
lock-protected provider, which exercises the same arrival-order
independence the service relies on.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import oracle
from .counters import OpCounters
from .encoding import PlaintextDomain, require_budget
from .engine import (
    BenchmarkResult,
    PlayerPhase,
    PlayerResult,
    PlayerState,
    ProviderSession,
    TamperSpec,
)
from .keys import new_mac_key
from .paillier import PrivateKey, keygen
from .rng import SecretStream
from .wire import Phase


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulated session.

    With ``values`` unset, scaled inputs are drawn uniformly from the
    full signed input range.  ``seed`` makes the whole run (keys, inputs,
    blinds, permutations) reproducible.
    """

    n: int
    modulus_bits: int = 768
    input_bits: int = 40
    compare_blind_bits: int = 64
    decimal_places: int = 2
    seed: int | None = None
    concurrent: bool = False
    tamper: TamperSpec | None = None
    values: tuple[Fraction, ...] | None = None


@dataclass
class SimulationReport:
    session_id: str
    n: int
    values: list[Fraction]
    oracle: oracle.OracleReport
    result: BenchmarkResult
    player_results: list[PlayerResult]
    ranks: list[int]
    provider_counters: OpCounters
    player_counters: list[OpCounters]
    phase_events: list[tuple[str, int]]
    elapsed_seconds: float
    provider: ProviderSession = field(repr=False)

    def matches_oracle(self, decimal_places: int) -> bool:
        expected = self.oracle.quantized(decimal_places)
        if self.result.stats != expected:
            return False
        return all(p.stats == expected for p in self.player_results)

    def all_bits_valid(self) -> bool:
        return all(p.all_valid() for p in self.player_results)


def _draw_values(rng: SecretStream, config: ScenarioConfig) -> list[Fraction]:
    half = 1 << (config.input_bits - 1)
    scale = 10 ** config.decimal_places
    return [Fraction(rng.randrange(-half + 1, half), scale)
            for _ in range(config.n)]


def _seed_stream(config: ScenarioConfig) -> SecretStream:
    if config.seed is None:
        return SecretStream.from_entropy()
    return SecretStream(config.seed.to_bytes(16, "big", signed=False))


def run_session(config: ScenarioConfig,
                keypair: PrivateKey | None = None) -> SimulationReport:
    """Run one full session and return everything a test might inspect."""
    rng = _seed_stream(config)
    domain = PlaintextDomain.for_peer_group(
        modulus_bits=config.modulus_bits,
        n_max=config.n,
        input_bits=config.input_bits,
        compare_blind_bits=config.compare_blind_bits,
        decimal_places=config.decimal_places,
    )
    require_budget(domain, config.n)
    if keypair is None:
        keypair = keygen(config.modulus_bits, rng.fork("keys"),
                         allow_insecure=config.modulus_bits < 512)
    elif keypair.bits != config.modulus_bits:
        raise ValueError(
            f"keypair is {keypair.bits} bits, config wants "
            f"{config.modulus_bits}")
    pk = keypair.public_key()
    mac_key = new_mac_key(rng.fork("mac"))
    if config.values is not None:
        if len(config.values) != config.n:
            raise ValueError(f"need {config.n} values")
        values = list(config.values)
    else:
        values = _draw_values(rng.fork("values"), config)
    session_id = "sim-" + rng.fork("session").bytes(8).hex()
    provider = ProviderSession(
        session_id=session_id, public_key=pk, n=config.n, domain=domain,
        seed=rng.fork("provider").bytes(32), tamper=config.tamper)
    players = [
        PlayerState(
            session_id=session_id, index=i, n=config.n, private_key=keypair,
            mac_key=mac_key, domain=domain, kpi=values[i - 1],
            rng=rng.fork(f"player/{i}"))
        for i in range(1, config.n + 1)
    ]
    started = time.monotonic()
    if config.concurrent:
        _pump_concurrent(provider, players)
    else:
        _pump_serial(provider, players)
    elapsed = time.monotonic() - started
    report = oracle.compute(values, min_n=2)
    return SimulationReport(
        session_id=session_id,
        n=config.n,
        values=values,
        oracle=report,
        result=provider.result,
        player_results=[p.result for p in players],
        ranks=[p.rank for p in players],
        provider_counters=provider.counters,
        player_counters=[p.counters for p in players],
        phase_events=list(provider.phase_events),
        elapsed_seconds=elapsed,
        provider=provider,
    )


def _pump_serial(provider: ProviderSession,
                 players: list[PlayerState]) -> None:
    pending = []
    for player in players:
        pending.extend(player.start())
    cursors = [0] * len(players)
    while True:
        for msg in pending:
            provider.process(msg)
        pending = []
        for pos, player in enumerate(players):
            fresh = [m for m in provider.outbox[cursors[pos]:]
                     if m.recipient_index == player.index]
            cursors[pos] = len(provider.outbox)
            if fresh:
                pending.extend(player.receive(fresh))
        if not pending and all(p.phase is PlayerPhase.DONE for p in players):
            break
    if provider.phase is not Phase.DONE:
        raise RuntimeError("session stalled before completion")


def _pump_concurrent(provider: ProviderSession,
                     players: list[PlayerState]) -> None:
    lock = threading.Lock()
    failures: list[BaseException] = []

    def drive(player: PlayerState) -> None:
        try:
            with lock:
                for msg in player.start():
                    provider.process(msg)
            cursor = 0
            while player.phase is not PlayerPhase.DONE:
                with lock:
                    fresh = [m for m in provider.outbox[cursor:]
                             if m.recipient_index == player.index]
                    cursor = len(provider.outbox)
                outbound = player.receive(fresh) if fresh else []
                with lock:
                    for msg in outbound:
                        provider.process(msg)
                if not fresh:
                    time.sleep(0.001)
        except BaseException as exc:  # surfaced to the caller below
            failures.append(exc)

    threads = [threading.Thread(target=drive, args=(p,), daemon=True)
               for p in players]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=600)
    if failures:
        raise failures[0]
    if any(t.is_alive() for t in threads):
        raise RuntimeError("player thread did not finish")
