"""Two-flow 1-of-2 oblivious transfer (semi-honest model).

The provider holds two equal-length payloads and must deliver exactly the
one a player picks, without learning the choice; the player must learn
nothing about the other payload.  Flow, over a prime-order subgroup of
Z_p^*:

* sender draws a, announces A = g^a;
* receiver with choice bit b draws x, replies B = g^x * A^b.  B is
  uniform in the subgroup for either b, so the sender learns nothing;
* sender derives K_j = (B * A^-j)^a for j in {0, 1} and sends both
  payloads wrapped under K_0, K_1;
* receiver derives A^x = K_b and can open only payload b; the other
  wrap's authenticity tag fails.

Wrapping is a SHAKE-256 stream mask plus an HMAC-SHA256 tag, both keyed
from the shared group element and the (A, B, j) transcript.

Group parameters: a fixed 2048-bit modulus with a 256-bit prime-order
subgroup, generated once by deterministic search (q is the first prime at
or above a SHAKE-256 seed with the top bit set; p = k*q + 1 for the first
k at or above a second seed making p a 2048-bit prime; g = 2^((p-1)/q)).
The structure is re-verified by the test suite, and the constants below
are normative for interoperability.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from gmpy2 import mpz, powmod, invert

from .errors import InvalidGroupElement, PayloadLengthMismatch, UnwrapFailure
from .rng import SecretStream

GROUP_P = int(
    "849762c935d1f13279aa3269af01d60f72f95a9e23aacaf39d977495a95dfa12"
    "1e1d0a41b88abf9fede69a1a0eceb944ffc988ef0a0ee1b7319c6ce922e3996a"
    "f238b6a633923fb706f13ee7408f3a6a235c00a0d16ca486a2af41a8b9f087cb"
    "6ed0d756966019aeab71fcaf956576214771f49f5f9d89bf5ab524fddcb72d9c"
    "021e718e6eaac746173863eb35c8efb0fe626797995aa73cc0e3e7aa8c5c40bb"
    "5651dfb8e2252e605adefeafde151806f00971d35820edfab5f6620fc4865423"
    "b627e5d1654e1d243863b265b510850835d1669b49760793c26cec15210c46b9"
    "aea2111caca2df8dbbd23fc002d5562022e64c741b79e0de6b6d22e41c6cb1ef",
    16,
)
GROUP_Q = int(
    "c1a2692a4becc2a8073f943734ffe4908f73d3bbfa3f436180026b911e4ab6af",
    16,
)
GROUP_G = int(
    "6c1fcd48972c58e18cf5b9078aea8d9559d16ee131a37fc06109bbe14af13a49"
    "2170035f5fa1abced1da60aa77f21d8180615dc7474c4f8d15772c7205fd4026"
    "1c41ad4702456734ad4790ea2a3fb218c2d89dc263d586265e7767d2040ec115"
    "331e960d15ba3ccccc276c77a0afaf6d86635b09cadacbec2d564f5cce902e77"
    "89726137d23727b9697988e1910a2b77d7710fdd68950f9b6a45569ba18f2a13"
    "a72715b010eebb28f51513bcb033c6e7840d469c410e4fb1040de434151d8000"
    "3e99caf2c159378ce63f5310db27a6b0d31c1c8683f202b2153b467a4df0e3da"
    "52ff1d6bc3953b9d621cdf4b2cb52bbb77c294bccd581387c62483bc46643cb0",
    16,
)

ELEMENT_BYTES = 256  # 2048-bit group elements, fixed width
TAG_BYTES = 32
_LEN_BYTES = 4

_P = mpz(GROUP_P)
_Q = mpz(GROUP_Q)
_G = mpz(GROUP_G)


def encode_element(value: int) -> str:
    """Fixed-width lowercase hex (512 chars) for group elements."""
    return value.to_bytes(ELEMENT_BYTES, "big").hex()


def decode_element(text: str) -> int:
    if len(text) != 2 * ELEMENT_BYTES:
        raise InvalidGroupElement(
            f"group element must be {2 * ELEMENT_BYTES} hex chars"
        )
    try:
        value = int(text, 16)
    except ValueError as exc:
        raise InvalidGroupElement("group element is not hex") from exc
    validate_element(value)
    return value


def validate_element(value: int) -> None:
    """Membership check for the order-q subgroup (identity excluded)."""
    if not 1 < value < GROUP_P:
        raise InvalidGroupElement("element outside (1, p)")
    if powmod(mpz(value), _Q, _P) != 1:
        raise InvalidGroupElement("element not in the prime-order subgroup")


def random_scalar(rng: SecretStream) -> int:
    return rng.randrange(1, GROUP_Q)


def _derive_key(shared: int, announce: int, response: int, index: int) -> bytes:
    material = (
        b"blindbench/ot/v1"
        + shared.to_bytes(ELEMENT_BYTES, "big")
        + announce.to_bytes(ELEMENT_BYTES, "big")
        + response.to_bytes(ELEMENT_BYTES, "big")
        + bytes([index])
    )
    return hashlib.shake_256(material).digest(32)


def _wrap(key: bytes, message: bytes, width: int) -> bytes:
    body = len(message).to_bytes(_LEN_BYTES, "big") + message
    body += b"\x00" * (width + _LEN_BYTES - len(body))
    mask = hashlib.shake_256(key + b"/mask").digest(len(body))
    sealed = bytes(a ^ b for a, b in zip(body, mask))
    tag = hmac.new(
        hashlib.shake_256(key + b"/tag").digest(32),
        sealed, hashlib.sha256,
    ).digest()
    return sealed + tag


def _unwrap(key: bytes, blob: bytes) -> bytes:
    if len(blob) < TAG_BYTES + _LEN_BYTES:
        raise UnwrapFailure("wrapped payload too short")
    sealed, tag = blob[:-TAG_BYTES], blob[-TAG_BYTES:]
    expect = hmac.new(
        hashlib.shake_256(key + b"/tag").digest(32),
        sealed, hashlib.sha256,
    ).digest()
    if not hmac.compare_digest(tag, expect):
        raise UnwrapFailure("authenticity tag mismatch")
    mask = hashlib.shake_256(key + b"/mask").digest(len(sealed))
    body = bytes(a ^ b for a, b in zip(sealed, mask))
    length = int.from_bytes(body[:_LEN_BYTES], "big")
    if length > len(body) - _LEN_BYTES:
        raise UnwrapFailure("declared length exceeds payload")
    return body[_LEN_BYTES:_LEN_BYTES + length]


@dataclass
class SenderSession:
    secret: int
    announce: int
    m0: bytes
    m1: bytes
    width: int


def sender_start(m0: bytes, m1: bytes, rng: SecretStream,
                 pad_to: int | None = None) -> SenderSession:
    """First sender flow.  Payloads are padded to a common width; if
    ``pad_to`` is given, a longer payload is an error."""
    width = max(len(m0), len(m1))
    if pad_to is not None:
        if width > pad_to:
            raise PayloadLengthMismatch(
                f"payload of {width} bytes exceeds pad width {pad_to}"
            )
        width = pad_to
    a = random_scalar(rng)
    announce = int(powmod(_G, a, _P))
    return SenderSession(secret=a, announce=announce, m0=m0, m1=m1,
                         width=width)


def receiver_respond(announce: int, choice: int,
                     rng: SecretStream) -> tuple[int, int]:
    """Second flow: returns (private scalar x, response element B)."""
    if choice not in (0, 1):
        raise ValueError("choice bit must be 0 or 1")
    validate_element(announce)
    x = random_scalar(rng)
    response = powmod(_G, x, _P)
    if choice == 1:
        response = response * mpz(announce) % _P
    return x, int(response)


def sender_finish(session: SenderSession, response: int) -> tuple[bytes, bytes]:
    """Third flow: both payloads, each wrapped under its candidate key."""
    validate_element(response)
    b_elem = mpz(response)
    a_inv = invert(mpz(session.announce), _P)
    wrapped = []
    for index, message in ((0, session.m0), (1, session.m1)):
        point = b_elem if index == 0 else b_elem * a_inv % _P
        shared = int(powmod(point, session.secret, _P))
        key = _derive_key(shared, session.announce, response, index)
        wrapped.append(_wrap(key, message, session.width))
    return wrapped[0], wrapped[1]


def receiver_finish(announce: int, response: int, secret: int, choice: int,
                    payload0: bytes, payload1: bytes) -> bytes:
    """Open the chosen payload; the other one cannot be opened."""
    if len(payload0) != len(payload1):
        raise PayloadLengthMismatch(
            f"wrapped payloads differ in length: "
            f"{len(payload0)} vs {len(payload1)}"
        )
    shared = int(powmod(mpz(announce), secret, _P))
    key = _derive_key(shared, announce, response, choice)
    return _unwrap(key, payload1 if choice else payload0)
