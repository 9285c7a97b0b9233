"""Crypto substrate tests.

Golden vectors were frozen from independent oracles:
* the HKDF pipeline re-implemented with hmac/hashlib (RFC 5869) on top
  of the low-level Argon2id KDF;
* RFC 8032 Ed25519 test vector 1;
* the published EIP-55 checksum examples;
* Keccak-256 outputs for the empty string and "abc" from the reference
  implementation.
"""

import hashlib
import hmac
import math
import os

import pytest
from hypothesis import given, settings, strategies as st

from aesp.crypto import (
    AddressNamespace,
    AuthenticationError,
    Curve,
    DerivedKeypair,
    EncryptedEnvelope,
    MasterCredential,
    NotSerializable,
    PayloadLengthError,
    address_for,
    agree_and_decrypt,
    agree_and_encrypt,
    canonical_json,
    contextual_evm_address,
    derive_contextual_keypair,
    derive_identity_root,
    keccak_256,
    recover_signer_address,
    seal_secret,
    sign,
    sign_typed_data_with_context,
    to_checksum_address,
    unseal_secret,
    verify,
)
from aesp.crypto import secp256k1
from aesp.crypto.base58 import b58decode, b58encode

from conftest import GOLDEN_PASSPHRASE, GOLDEN_REV


# --- keccak-256 (reference vectors) ---

def test_keccak_known_vectors():
    assert keccak_256(b"").hex() == (
        "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
    )
    assert keccak_256(b"abc").hex() == (
        "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"
    )


# --- identity root + contextual derivation (independent-oracle vectors) ---

GOLDEN_ED25519_PUB = "f0a42302d55071488b83621d662586a82b6c2e91f560a1dc4dabc6fc42a98bf1"
GOLDEN_EVM_ADDRESS = "0xfB541336d0037fE2938932e5B7200B037eC85BbB"
GOLDEN_X25519_PUB = "4ed2aa09e5afc73129bc8e8c59ae0540a0a906c8c30f06f4490e9e538f0e2511"


def test_identity_root_is_deterministic_and_sealed(root):
    again = derive_identity_root(MasterCredential(GOLDEN_REV, GOLDEN_PASSPHRASE))
    kp1 = derive_contextual_keypair(root, Curve.ED25519, "determinism:")
    kp2 = derive_contextual_keypair(again, Curve.ED25519, "determinism:")
    assert kp1.public_key == kp2.public_key
    assert "sealed" in repr(root)


def test_root_requires_32_byte_payload():
    with pytest.raises(PayloadLengthError):
        MasterCredential(b"short", "x")


def test_contextual_derivation_matches_oracle(root):
    ed = derive_contextual_keypair(root, Curve.ED25519, "agent-identity:0:")
    assert ed.public_key.hex() == GOLDEN_ED25519_PUB
    assert contextual_evm_address(root, "payment:tx:123:") == GOLDEN_EVM_ADDRESS
    x = derive_contextual_keypair(root, Curve.X25519, "negotiation:s1:")
    assert x.public_key.hex() == GOLDEN_X25519_PUB


def test_hkdf_info_layout_matches_rfc5869_reimplementation(root):
    # independent HKDF over the same root bytes must reproduce the
    # package's derived ed25519 public key
    def hkdf(ikm, info, length=32):
        prk = hmac.new(b"\x00" * 32, ikm, hashlib.sha256).digest()
        okm, block = b"", b""
        i = 1
        while len(okm) < length:
            block = hmac.new(prk, block + info + bytes([i]), hashlib.sha256).digest()
            okm += block
            i += 1
        return okm[:length]

    from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

    dk = hkdf(root._key, b"ACEGF-REV32-V1-ed25519:oracle:ctx:")
    expected = Ed25519PrivateKey.from_private_bytes(dk).public_key().public_bytes_raw()
    got = derive_contextual_keypair(root, Curve.ED25519, "oracle:ctx:")
    assert got.public_key == expected


def test_distinct_contexts_distinct_keys(root):
    a = derive_contextual_keypair(root, Curve.ED25519, "ctx:a:")
    b = derive_contextual_keypair(root, Curve.ED25519, "ctx:b:")
    assert a.public_key != b.public_key


def test_empty_context_rejected(root):
    with pytest.raises(ValueError):
        derive_contextual_keypair(root, Curve.ED25519, "")


def test_context_collision_scan(root):
    """10^5 distinct contexts yield 10^5 distinct ed25519 public keys."""
    seen = set()
    for i in range(100_000):
        kp = derive_contextual_keypair(root, Curve.ED25519, f"scan:{i}:")
        seen.add(kp.public_key)
    assert len(seen) == 100_000


# --- EVM addresses ---

def test_scalar_one_evm_address():
    # well-known address of the secp256k1 generator point
    point = secp256k1.public_point(1)
    address = to_checksum_address(keccak_256(secp256k1.uncompressed_xy(point))[-20:])
    assert address == "0x7E5F4552091A69125d5DfCb7b8C2659029395Bdf"


@pytest.mark.parametrize(
    "address",
    [
        "0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed",
        "0xfB6916095ca1df60bB79Ce92cE3Ea74c37c5d359",
        "0xdbF03B407c01E7cD3CBea99509d93f8DDDC8C6FB",
        "0xD1220A0cf47c7B9Be7A2E6BA89F429762e7b9aDb",
    ],
)
def test_eip55_reference_checksums(address):
    assert to_checksum_address(bytes.fromhex(address[2:].lower())) == address


def test_ed25519_chain_address_is_base58_of_pubkey(root):
    kp = derive_contextual_keypair(root, Curve.ED25519, "sol:addr:")
    address = address_for(kp, AddressNamespace.ED25519_CHAIN)
    assert b58decode(address) == kp.public_key
    assert b58encode(b58decode(address)) == address


def test_base58_leading_zeros():
    assert b58encode(b"\x00\x00a") == "11" + b58encode(b"a")
    assert b58decode(b58encode(b"\x00\x00\x00hello")) == b"\x00\x00\x00hello"


# --- signing ---

def test_rfc8032_ed25519_vector_1():
    from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

    sk = bytes.fromhex(
        "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"
    )
    kp = DerivedKeypair(
        Curve.ED25519,
        Ed25519PrivateKey.from_private_bytes(sk).public_key().public_bytes_raw(),
        Ed25519PrivateKey.from_private_bytes(sk),
    )
    assert kp.public_key.hex() == (
        "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a"
    )
    signature = sign(kp, b"")
    assert signature.hex() == (
        "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
        "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b"
    )
    assert verify(Curve.ED25519, kp.public_key, b"", signature)


def test_sign_verify_roundtrip_both_curves(root):
    for curve in (Curve.ED25519, Curve.SECP256K1):
        kp = derive_contextual_keypair(root, curve, f"sig:{curve.value}:")
        signature = sign(kp, b"payload")
        assert verify(curve, kp.public_key, b"payload", signature)
        assert not verify(curve, kp.public_key, b"payload!", signature)


def test_x25519_cannot_sign(root):
    kp = derive_contextual_keypair(root, Curve.X25519, "nosign:")
    with pytest.raises(Exception):
        sign(kp, b"x")


def test_recoverable_signature_recovers_contextual_address(root):
    digest = os.urandom(32)
    signature = sign_typed_data_with_context(root, "recover:ctx:", digest)
    assert len(signature) == 65
    assert recover_signer_address(digest, signature) == contextual_evm_address(
        root, "recover:ctx:"
    )


def test_secp_signing_is_deterministic(root):
    digest = b"\x42" * 32
    s1 = sign_typed_data_with_context(root, "det:", digest)
    s2 = sign_typed_data_with_context(root, "det:", digest)
    assert s1 == s2  # RFC 6979 nonces


def test_secp_low_s_enforced(root):
    for i in range(8):
        signature = sign_typed_data_with_context(root, "lows:", bytes([i]) * 32)
        s = int.from_bytes(signature[32:64], "big")
        assert s <= secp256k1.N // 2


# --- canonical JSON ---

def test_canonical_json_basics():
    assert canonical_json({"b": 1, "a": 2}) == b'{"a":2,"b":1}'
    assert canonical_json([1, "x", None, True]) == b'[1,"x",null,true]'
    assert canonical_json(5.0) == b"5"


def test_canonical_json_utf16_key_order():
    # U+FF21 (FULLWIDTH A) sorts after U+0061 under UTF-16 code units,
    # while surrogate-pair characters sort differently than by code point
    data = {"Ａ": 1, "a": 2, "\U0001f600": 3}
    encoded = canonical_json(data).decode("utf-8")
    keys = sorted(data, key=lambda k: k.encode("utf-16-be"))
    assert encoded.index(keys[0]) < encoded.index(keys[1]) < encoded.index(keys[2])


def test_canonical_json_rejects_nan_and_non_string_keys():
    for bad in (float("nan"), float("inf"), {1: "x"}, {"x": object()}):
        with pytest.raises(NotSerializable):
            canonical_json(bad)


json_values = st.recursive(
    st.none()
    | st.booleans()
    | st.integers(min_value=-(2**53), max_value=2**53)
    | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=20,
)


@settings(max_examples=200, deadline=None)
@given(json_values)
def test_canonical_json_idempotent(value):
    import json

    first = canonical_json(value)
    second = canonical_json(json.loads(first))
    assert first == second


# --- encrypted envelopes ---

def test_agree_and_encrypt_roundtrip(root):
    a = derive_contextual_keypair(root, Curve.X25519, "env:a:")
    b = derive_contextual_keypair(root, Curve.X25519, "env:b:")
    envelope = agree_and_encrypt(a, b.public_key, b"secret negotiation", now_ms=1234)
    assert envelope.timestamp == 1234
    plaintext = agree_and_decrypt(b, a.public_key, envelope)
    assert plaintext == b"secret negotiation"


def test_envelope_tamper_detected(root):
    a = derive_contextual_keypair(root, Curve.X25519, "env:a:")
    b = derive_contextual_keypair(root, Curve.X25519, "env:b:")
    envelope = agree_and_encrypt(a, b.public_key, b"payload", now_ms=1)
    import base64

    raw = bytearray(base64.b64decode(envelope.ciphertext))
    raw[0] ^= 0xFF
    tampered = EncryptedEnvelope(
        envelope.version,
        envelope.algorithm,
        base64.b64encode(bytes(raw)).decode(),
        envelope.nonce,
        envelope.message_id,
        envelope.timestamp,
    )
    with pytest.raises(AuthenticationError):
        agree_and_decrypt(b, a.public_key, tampered)


def test_envelope_dict_roundtrip(root):
    a = derive_contextual_keypair(root, Curve.X25519, "env:a:")
    b = derive_contextual_keypair(root, Curve.X25519, "env:b:")
    envelope = agree_and_encrypt(a, b.public_key, b"x", now_ms=7)
    again = EncryptedEnvelope.from_dict(envelope.to_dict())
    assert agree_and_decrypt(b, a.public_key, again) == b"x"


def test_seal_unseal_roundtrip_and_wrong_passphrase():
    blob = seal_secret(b"\x01" * 32, "hunter2")
    assert blob.algorithm == "AES-256-GCM-SIV"
    assert unseal_secret(blob, "hunter2") == b"\x01" * 32
    with pytest.raises(AuthenticationError):
        unseal_secret(blob, "wrong")
