"""Key material files and session rosters.

Files are versioned JSON.  The public file carries only the modulus; the
private bundle additionally carries the factorization, the decryption
exponents and the shared MAC key, and is distributed to players out of
band.  The provider must never see the private bundle: session creation
takes the public file plus the roster digest list only.

A roster is a list of random join tokens, one per player seat, written
next to the key material.  The service stores only their SHA-256 digests;
presenting a token at join time is the enrollment proof that the caller
was given the key bundle for this peer group.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import KeyFileError
from .paillier import PrivateKey, PublicKey, keypair_from_primes
from .rng import SecretStream

FORMAT_VERSION = 1
MAC_KEY_BYTES = 32
TOKEN_BYTES = 16

PUBLIC_KIND = "benchmark-public-key"
PRIVATE_KIND = "benchmark-private-bundle"
ROSTER_KIND = "benchmark-roster"


def _hex(value: int) -> str:
    return format(value, "x")


def _load(path: str | Path, kind: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise KeyFileError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise KeyFileError(f"{path}: not a JSON object")
    if data.get("version") != FORMAT_VERSION:
        raise KeyFileError(f"{path}: unsupported version {data.get('version')!r}")
    if data.get("kind") != kind:
        raise KeyFileError(f"{path}: expected kind {kind!r}, got {data.get('kind')!r}")
    return data


def _int_field(data: dict, field: str, path) -> int:
    raw = data.get(field)
    if not isinstance(raw, str):
        raise KeyFileError(f"{path}: missing hex field {field!r}")
    try:
        return int(raw, 16)
    except ValueError as exc:
        raise KeyFileError(f"{path}: field {field!r} is not hex") from exc


def write_public_key(path: str | Path, pk: PublicKey) -> None:
    Path(path).write_text(json.dumps({
        "version": FORMAT_VERSION,
        "kind": PUBLIC_KIND,
        "bits": pk.bits,
        "n": _hex(pk.n),
    }, indent=2) + "\n")


def read_public_key(path: str | Path) -> PublicKey:
    data = _load(path, PUBLIC_KIND)
    n = _int_field(data, "n", path)
    bits = data.get("bits")
    if bits != n.bit_length():
        raise KeyFileError(f"{path}: bits field does not match modulus")
    return PublicKey(n=n, bits=bits)


def write_private_bundle(path: str | Path, sk: PrivateKey, mac_key: bytes,
                         token: str | None = None) -> None:
    payload = {
        "version": FORMAT_VERSION,
        "kind": PRIVATE_KIND,
        "bits": sk.bits,
        "n": _hex(sk.n),
        "p": _hex(sk.p),
        "q": _hex(sk.q),
        "lambda": _hex(sk.lam),
        "mu": _hex(sk.mu),
        "mac_key": mac_key.hex(),
    }
    if token is not None:
        payload["join_token"] = token
    target = Path(path)
    target.write_text(json.dumps(payload, indent=2) + "\n")
    try:
        os.chmod(target, 0o600)
    except OSError:
        pass


@dataclass(frozen=True)
class PrivateBundle:
    key: PrivateKey
    mac_key: bytes
    join_token: str | None = None


def read_private_bundle(path: str | Path) -> PrivateBundle:
    data = _load(path, PRIVATE_KIND)
    p = _int_field(data, "p", path)
    q = _int_field(data, "q", path)
    n = _int_field(data, "n", path)
    lam = _int_field(data, "lambda", path)
    mu = _int_field(data, "mu", path)
    if p * q != n:
        raise KeyFileError(f"{path}: p*q does not match n")
    rebuilt = keypair_from_primes(p, q)
    if rebuilt.lam != lam or rebuilt.mu != mu:
        raise KeyFileError(f"{path}: decryption exponents inconsistent")
    mac_hex = data.get("mac_key")
    if not isinstance(mac_hex, str):
        raise KeyFileError(f"{path}: missing mac_key")
    try:
        mac_key = bytes.fromhex(mac_hex)
    except ValueError as exc:
        raise KeyFileError(f"{path}: mac_key is not hex") from exc
    if len(mac_key) != MAC_KEY_BYTES:
        raise KeyFileError(f"{path}: mac_key must be {MAC_KEY_BYTES} bytes")
    token = data.get("join_token")
    if token is not None and not isinstance(token, str):
        raise KeyFileError(f"{path}: join_token must be a string")
    return PrivateBundle(key=rebuilt, mac_key=mac_key, join_token=token)


def new_mac_key(rng: SecretStream | None = None) -> bytes:
    rng = rng or SecretStream.from_entropy()
    return rng.bytes(MAC_KEY_BYTES)


def make_roster(seats: int, rng: SecretStream | None = None) -> list[str]:
    rng = rng or SecretStream.from_entropy()
    return [rng.bytes(TOKEN_BYTES).hex() for _ in range(seats)]


def token_digest(token: str) -> str:
    return hashlib.sha256(token.encode()).hexdigest()


def roster_digests(tokens: list[str]) -> list[str]:
    return [token_digest(t) for t in tokens]


def write_roster(path: str | Path, tokens: list[str]) -> None:
    target = Path(path)
    target.write_text(json.dumps({
        "version": FORMAT_VERSION,
        "kind": ROSTER_KIND,
        "tokens": tokens,
    }, indent=2) + "\n")
    try:
        os.chmod(target, 0o600)
    except OSError:
        pass


def read_roster(path: str | Path) -> list[str]:
    data = _load(path, ROSTER_KIND)
    tokens = data.get("tokens")
    if (not isinstance(tokens, list)
            or not all(isinstance(t, str) for t in tokens)):
        raise KeyFileError(f"{path}: tokens must be a list of strings")
    return tokens
