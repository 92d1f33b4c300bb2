"""Output integrity: keyed tags over blinded reveals, and tag hashes.

Every player that decrypts a blinded intermediate value sends the
provider a tag HMAC-SHA256(K_MAC, residue || index).  The provider cannot
forge tags (it never holds K_MAC) and republishes the hash of all n tags
in index order.  Each player then recomputes all n tags from the blinded
value *it* decrypted: if the provider had sent different blinded values
to different players, at least one recomputed tag differs and the hash
comparison fails.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from .errors import WrongTagCount

TAG_BYTES = 32
_INDEX_BYTES = 4


def mac_tag(mac_key: bytes, blinded_residue: int, index: int,
            residue_bytes: int) -> bytes:
    """Tag a blinded residue under the shared MAC key.

    The residue is serialized to the session's fixed width and the
    1-based player index is appended big-endian, so tags for the same
    value at different seats never collide.
    """
    if index < 1:
        raise ValueError("player index is 1-based")
    if blinded_residue < 0:
        raise ValueError("residue must be non-negative")
    data = blinded_residue.to_bytes(residue_bytes, "big")
    data += index.to_bytes(_INDEX_BYTES, "big")
    return hmac.new(mac_key, data, hashlib.sha256).digest()


@dataclass(frozen=True)
class TagSet:
    """All n tags for one measure, in ascending player-index order."""

    measure: str
    tags: tuple[bytes, ...]
    n: int

    def __post_init__(self):
        if len(self.tags) != self.n:
            raise WrongTagCount(
                f"{self.measure}: got {len(self.tags)} tags, expected {self.n}"
            )
        if any(len(t) != TAG_BYTES for t in self.tags):
            raise WrongTagCount(f"{self.measure}: malformed tag length")


def tag_hash(tag_set: TagSet) -> bytes:
    """SHA-256 over the concatenation of the n tags in index order."""
    return hashlib.sha256(b"".join(tag_set.tags)).digest()


@dataclass(frozen=True)
class ValidationBit:
    measure: str
    bit: int


def validate(measure: str, published_hash: bytes, mac_key: bytes,
             own_blinded_residue: int, n: int,
             residue_bytes: int) -> ValidationBit:
    """Recompute every player's tag from our own blinded value and compare.

    Returns bit 1 only if the provider's published hash matches, i.e. all
    players received (and tagged) the same blinded value we did.
    """
    recomputed = TagSet(
        measure=measure,
        tags=tuple(
            mac_tag(mac_key, own_blinded_residue, index, residue_bytes)
            for index in range(1, n + 1)
        ),
        n=n,
    )
    ok = hmac.compare_digest(tag_hash(recomputed), published_hash)
    return ValidationBit(measure=measure, bit=1 if ok else 0)
