"""Key material files: public key, private bundle, roster."""

import json
import stat

import pytest

from blindbench.errors import KeyFileError
from blindbench.keys import (
    PrivateBundle,
    make_roster,
    new_mac_key,
    read_private_bundle,
    read_public_key,
    read_roster,
    roster_digests,
    token_digest,
    write_private_bundle,
    write_public_key,
    write_roster,
)
from blindbench.rng import SecretStream


def test_public_key_roundtrip(tmp_path, key512):
    path = tmp_path / "public-key.json"
    write_public_key(path, key512.public_key())
    assert read_public_key(path) == key512.public_key()


def test_public_key_rejects_bit_mismatch(tmp_path, key512):
    path = tmp_path / "public-key.json"
    write_public_key(path, key512.public_key())
    data = json.loads(path.read_text())
    data["bits"] = 768
    path.write_text(json.dumps(data))
    with pytest.raises(KeyFileError):
        read_public_key(path)


def test_private_bundle_roundtrip(tmp_path, key512):
    path = tmp_path / "bundle.json"
    mac_key = new_mac_key(SecretStream(b"mac"))
    write_private_bundle(path, key512, mac_key, token="tok-1")
    bundle = read_private_bundle(path)
    assert bundle == PrivateBundle(key=key512, mac_key=mac_key,
                                   join_token="tok-1")


def test_private_bundle_is_owner_only(tmp_path, key512):
    path = tmp_path / "bundle.json"
    write_private_bundle(path, key512, new_mac_key(SecretStream(b"mac")))
    mode = stat.S_IMODE(path.stat().st_mode)
    assert mode == 0o600


def test_private_bundle_token_optional(tmp_path, key512):
    path = tmp_path / "bundle.json"
    write_private_bundle(path, key512, new_mac_key(SecretStream(b"mac")))
    assert read_private_bundle(path).join_token is None


def test_private_bundle_detects_tampered_exponents(tmp_path, key512):
    path = tmp_path / "bundle.json"
    write_private_bundle(path, key512, new_mac_key(SecretStream(b"mac")))
    data = json.loads(path.read_text())
    data["mu"] = "1"
    path.write_text(json.dumps(data))
    with pytest.raises(KeyFileError):
        read_private_bundle(path)


def test_private_bundle_detects_wrong_factors(tmp_path, key512, toy_key):
    path = tmp_path / "bundle.json"
    write_private_bundle(path, key512, new_mac_key(SecretStream(b"mac")))
    data = json.loads(path.read_text())
    data["p"] = format(toy_key.p, "x")
    path.write_text(json.dumps(data))
    with pytest.raises(KeyFileError):
        read_private_bundle(path)


def test_key_files_reject_foreign_json(tmp_path):
    path = tmp_path / "listing.json"
    path.write_text('{"version": 1, "kind": "something-else"}')
    with pytest.raises(KeyFileError):
        read_public_key(path)
    missing = tmp_path / "nope.json"
    with pytest.raises(KeyFileError):
        read_public_key(missing)
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{{{{")
    with pytest.raises(KeyFileError):
        read_roster(garbage)


def test_roster_roundtrip(tmp_path):
    tokens = make_roster(5, SecretStream(b"roster"))
    path = tmp_path / "roster.json"
    write_roster(path, tokens)
    assert read_roster(path) == tokens
    assert len(set(tokens)) == 5


def test_token_digests_are_sha256(tmp_path):
    token = "deadbeef"
    digest = token_digest(token)
    assert len(digest) == 64
    assert roster_digests([token]) == [digest]
    assert token_digest("deadbeee") != digest
