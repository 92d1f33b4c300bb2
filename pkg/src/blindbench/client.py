"""HTTP player client: joins a session, runs the protocol to completion.

The client polls because players typically sit behind NAT; between polls
it pushes whatever the local state machine produced.  Any error body
from the service is re-raised as the matching typed exception.
"""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from fractions import Fraction

from . import wire
from .encoding import PlaintextDomain, parse_kpi
from .engine import PlayerPhase, PlayerResult, PlayerState
from .errors import ERROR_CODES, KeyMismatch, TransportError
from .keys import PrivateBundle
from .paillier import key_fingerprint
from .rng import SecretStream


class ServiceClient:
    """Thin wrapper over the five HTTP endpoints."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _call(self, method: str, path: str, body: dict | None = None,
              token: str | None = None) -> dict:
        url = self.base_url + path
        data = json.dumps(body).encode() if body is not None else None
        request = urllib.request.Request(url, data=data, method=method)
        request.add_header("Content-Type", "application/json")
        if token is not None:
            request.add_header("X-Join-Token", token)
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                payload = resp.read()
        except urllib.error.HTTPError as exc:
            payload = exc.read()
            try:
                parsed = json.loads(payload.decode())
            except (UnicodeDecodeError, ValueError):
                raise TransportError(
                    f"{method} {path}: HTTP {exc.code}") from exc
            code = parsed.get("error")
            detail = parsed.get("detail", "")
            if code in ERROR_CODES:
                raise ERROR_CODES[code](detail) from exc
            raise TransportError(f"{method} {path}: {code}: {detail}") from exc
        except urllib.error.URLError as exc:
            raise TransportError(f"{method} {path}: {exc.reason}") from exc
        try:
            parsed = json.loads(payload.decode())
        except (UnicodeDecodeError, ValueError) as exc:
            raise TransportError(f"{method} {path}: non-JSON reply") from exc
        if not isinstance(parsed, dict):
            raise TransportError(f"{method} {path}: unexpected reply shape")
        return parsed

    def create_session(self, config: dict) -> dict:
        return self._call("POST", "/v1/sessions", body=config)

    def join(self, session_id: str, token: str) -> dict:
        return self._call("POST", f"/v1/sessions/{session_id}/join",
                          body={}, token=token)

    def push(self, session_id: str, token: str, message: dict) -> dict:
        return self._call("POST", f"/v1/sessions/{session_id}/push",
                          body={"message": message}, token=token)

    def poll(self, session_id: str, token: str, cursor: int) -> dict:
        return self._call("GET", f"/v1/sessions/{session_id}/poll"
                          f"?cursor={cursor}", token=token)

    def status(self, session_id: str) -> dict:
        return self._call("GET", f"/v1/sessions/{session_id}/status")


def run_player(base_url: str, session_id: str, bundle: PrivateBundle,
               kpi, token: str | None = None,
               poll_interval: float = 0.05, deadline: float = 600.0,
               rng: SecretStream | None = None) -> PlayerResult:
    """Join and play one session end to end; returns the player's view.

    ``kpi`` may be anything parse_kpi accepts.  The token defaults to the
    one stored in the key bundle.
    """
    token = token if token is not None else bundle.join_token
    if not token:
        raise TransportError("no join token available")
    client = ServiceClient(base_url)
    joined = client.join(session_id, token)
    own = key_fingerprint(bundle.key.n)
    if joined.get("key_fingerprint") != own:
        raise KeyMismatch(
            f"session key fingerprint {joined.get('key_fingerprint')!r} "
            f"does not match our bundle ({own})")
    domain_data = joined["domain"]
    domain = PlaintextDomain(
        modulus_bits=domain_data["modulus_bits"],
        input_bits=domain_data["input_bits"],
        compare_blind_bits=domain_data["compare_blind_bits"],
        tiebreak_bits=domain_data["tiebreak_bits"],
        decimal_places=domain_data["decimal_places"],
    )
    value = kpi if isinstance(kpi, Fraction) else parse_kpi(
        kpi, domain.decimal_places)
    state = PlayerState(
        session_id=session_id, index=joined["index"], n=joined["n"],
        private_key=bundle.key, mac_key=bundle.mac_key, domain=domain,
        kpi=value, rng=rng)
    for msg in state.start():
        client.push(session_id, token, wire.message_to_dict(msg))
    cursor = 0
    give_up = time.monotonic() + deadline
    while state.phase is not PlayerPhase.DONE:
        if time.monotonic() > give_up:
            raise TransportError(
                f"session {session_id} did not finish within {deadline}s "
                f"(stuck in {state.phase.value})")
        reply = client.poll(session_id, token, cursor)
        batch = [wire.message_from_dict(d) for d in reply["messages"]]
        cursor = reply["cursor"]
        for msg in state.receive(batch):
            client.push(session_id, token, wire.message_to_dict(msg))
        if not batch:
            time.sleep(poll_interval)
    return state.result
