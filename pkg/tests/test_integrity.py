"""Shared-key tags over blinded residues and the published tag hashes."""

import hashlib
import hmac

import pytest

from blindbench.errors import WrongTagCount
from blindbench.integrity import TagSet, mac_tag, tag_hash, validate

KEY = b"k" * 32
WIDTH = 96


def test_hmac_sha256_reference_vector():
    # Published HMAC-SHA256 test vector: 20 bytes of 0x0b, "Hi There".
    digest = hmac.new(b"\x0b" * 20, b"Hi There", hashlib.sha256).hexdigest()
    assert digest == (
        "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"
    )


def test_tag_binds_value_and_index():
    base = mac_tag(KEY, 12345, 1, WIDTH)
    assert mac_tag(KEY, 12345, 1, WIDTH) == base
    assert mac_tag(KEY, 12346, 1, WIDTH) != base
    assert mac_tag(KEY, 12345, 2, WIDTH) != base
    assert mac_tag(b"other-key" * 4, 12345, 1, WIDTH) != base
    assert len(base) == 32


def test_tag_matches_direct_hmac_construction():
    value, index = 7, 3
    data = value.to_bytes(WIDTH, "big") + index.to_bytes(4, "big")
    assert mac_tag(KEY, value, index, WIDTH) == hmac.new(
        KEY, data, hashlib.sha256).digest()


def test_tag_rejects_bad_arguments():
    with pytest.raises(ValueError):
        mac_tag(KEY, 1, 0, WIDTH)  # index is 1-based
    with pytest.raises(ValueError):
        mac_tag(KEY, -1, 1, WIDTH)


def test_tag_set_enforces_count():
    tags = tuple(mac_tag(KEY, 5, i, WIDTH) for i in range(1, 4))
    TagSet(measure="median", tags=tags, n=3)
    with pytest.raises(WrongTagCount):
        TagSet(measure="median", tags=tags, n=4)
    with pytest.raises(WrongTagCount):
        TagSet(measure="median", tags=tags[:-1] + (b"short",), n=3)


def test_tag_hash_is_order_sensitive():
    tags = tuple(mac_tag(KEY, 5, i, WIDTH) for i in range(1, 4))
    forward = tag_hash(TagSet(measure="m", tags=tags, n=3))
    reversed_ = tag_hash(TagSet(measure="m", tags=tags[::-1], n=3))
    assert forward != reversed_
    assert forward == hashlib.sha256(b"".join(tags)).digest()


def test_validate_accepts_consistent_broadcast():
    n, value = 5, 987654321
    published = tag_hash(TagSet(
        measure="maximum",
        tags=tuple(mac_tag(KEY, value, i, WIDTH) for i in range(1, n + 1)),
        n=n,
    ))
    bit = validate("maximum", published, KEY, value, n, WIDTH)
    assert bit.bit == 1
    assert bit.measure == "maximum"


def test_validate_flags_any_single_differing_recipient():
    # Provider hands player 3 value+1 but everyone tags what they saw:
    # every honest player's recomputation then disagrees with the hash.
    n, value = 5, 987654321
    tags = []
    for i in range(1, n + 1):
        seen = value + 1 if i == 3 else value
        tags.append(mac_tag(KEY, seen, i, WIDTH))
    published = tag_hash(TagSet(measure="median", tags=tuple(tags), n=n))
    for i in range(1, n + 1):
        own = value + 1 if i == 3 else value
        assert validate("median", published, KEY, own, n, WIDTH).bit == 0


def test_validate_rejects_wrong_hash_length_gracefully():
    bit = validate("median", b"\x00" * 32, KEY, 1, 2, WIDTH)
    assert bit.bit == 0
