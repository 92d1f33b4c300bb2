"""Helpers for driving sessions against a BenchmarkService in-process."""

from fractions import Fraction

from blindbench import wire
from blindbench.encoding import PlaintextDomain
from blindbench.engine import PlayerPhase, PlayerState
from blindbench.keys import roster_digests
from blindbench.rng import SecretStream


def session_payload(pk, tokens, **overrides) -> dict:
    data = {
        "n": len(tokens),
        "modulus_bits": pk.bits,
        "public_modulus": format(pk.n, "x"),
        "roster": roster_digests(tokens),
    }
    data.update(overrides)
    return data


def domain_from_join(reply: dict) -> PlaintextDomain:
    return PlaintextDomain(**reply["domain"])


def make_players(session_id, keypair, mac_key, values, domain,
                 seed=b"driver-players"):
    root = SecretStream(seed)
    return [
        PlayerState(session_id=session_id, index=i, n=len(values),
                    private_key=keypair, mac_key=mac_key, domain=domain,
                    kpi=Fraction(values[i - 1]),
                    rng=root.fork(f"player/{i}"))
        for i in range(1, len(values) + 1)
    ]


def drive_to_completion(service, session_id, tokens, players,
                        submit_inputs=True) -> None:
    """Pump every player against the service until all are done.

    Join order fixes the seat order, so tokens[i-1] must belong to the
    player at index i.  Pass submit_inputs=False when the callers already
    pushed the initial submissions (e.g. resuming after a restart).
    """
    cursors = {p.index: 0 for p in players}
    if submit_inputs:
        outbound = {p.index: list(p.start()) for p in players}
    else:
        outbound = {p.index: [] for p in players}
    for _ in range(200):  # bound: a session needs far fewer rounds
        progressed = False
        for player in players:
            token = tokens[player.index - 1]
            for msg in outbound[player.index]:
                service.push(session_id, token, wire.message_to_dict(msg))
                progressed = True
            outbound[player.index] = []
            reply = service.poll(session_id, token, cursors[player.index])
            cursors[player.index] = reply["cursor"]
            if reply["messages"]:
                fresh = [wire.message_from_dict(d) for d in reply["messages"]]
                outbound[player.index].extend(player.receive(fresh))
                progressed = True
        done = all(p.phase is PlayerPhase.DONE for p in players)
        if done and not any(outbound.values()):
            return
        if not progressed:
            raise RuntimeError("session stalled")
    raise RuntimeError("session did not finish within the round bound")


def run_service_session(service, keypair, mac_key, tokens, values,
                        config_overrides=None, player_seed=b"driver-players"):
    """Create, join and complete one session; returns (session_id, players)."""
    payload = session_payload(keypair.public_key(), tokens,
                              **(config_overrides or {}))
    created = service.create_session(payload)
    session_id = created["session_id"]
    join_reply = None
    for token in tokens:
        join_reply = service.join(session_id, token)
    domain = domain_from_join(join_reply)
    players = make_players(session_id, keypair, mac_key, values, domain,
                           seed=player_seed)
    drive_to_completion(service, session_id, tokens, players)
    return session_id, players


def outbox_bytes(provider) -> bytes:
    return b"".join(wire.encode_message(m) for m in provider.outbox)
