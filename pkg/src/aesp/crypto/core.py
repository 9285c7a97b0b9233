"""Key derivation, signing, hashing, key agreement, and authenticated
encryption.

No private key material crosses this module's API boundary: callers hold
opaque `DerivedKeypair` / `IdentityRoot` objects and pass them back into
the sign/agree operations. Python offers no reliable buffer wiping, so
zeroization is a code-review invariant here: secrets live only inside
these objects and are never serialized by any public operation.
"""

from __future__ import annotations

import base64
import hashlib
import os
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM, AESGCMSIV
from cryptography.hazmat.primitives.kdf.argon2 import Argon2id
from cryptography.hazmat.primitives.kdf.hkdf import HKDF, HKDFExpand

from ..constants import (
    ARGON2_ITERATIONS,
    ARGON2_MEMORY_KIB,
    ARGON2_PARALLELISM,
    HKDF_INFO_PREFIX,
    IDENTITY_ROOT_INFO,
    NEGOTIATION_KDF_INFO,
    NEGOTIATION_WIRE_VERSION,
)
from .base58 import b58encode
from .canonical import canonical_json  # re-exported  # noqa: F401
from .keccak import keccak_256
from . import secp256k1

RandomSource = Callable[[int], bytes]


class CryptoError(Exception):
    pass


class PayloadLengthError(CryptoError):
    pass


class CurveMismatchError(CryptoError):
    pass


class AuthenticationError(CryptoError):
    pass


class Curve(str, Enum):
    ED25519 = "ed25519"
    SECP256K1 = "secp256k1"
    X25519 = "x25519"


class AddressNamespace(str, Enum):
    EVM = "evm"
    ED25519_CHAIN = "ed25519_chain"


@dataclass(frozen=True)
class MasterCredential:
    """32-byte sealed REV payload plus the owner's passphrase domain."""

    rev_payload: bytes
    passphrase_domain: str

    def __post_init__(self):
        if len(self.rev_payload) != 32:
            raise PayloadLengthError(
                f"rev_payload must be 32 bytes, got {len(self.rev_payload)}"
            )

    @property
    def salt(self) -> bytes:
        # first 16 bytes are the salt partition, the rest is entropy
        return self.rev_payload[:16]


class IdentityRoot:
    """Opaque 32-byte identity root. Never serialized."""

    __slots__ = ("_key",)

    def __init__(self, key: bytes):
        if len(key) != 32:
            raise PayloadLengthError("root key must be 32 bytes")
        self._key = key

    def __repr__(self):
        return "IdentityRoot(<sealed>)"

    def __eq__(self, other):
        return isinstance(other, IdentityRoot) and self._key == other._key


class DerivedKeypair:
    """Curve-tagged keypair; the private half stays inside this object."""

    __slots__ = ("curve", "public_key", "_private")

    def __init__(self, curve: Curve, public_key: bytes, private):
        self.curve = curve
        self.public_key = public_key
        self._private = private

    def __repr__(self):
        return f"DerivedKeypair(curve={self.curve.value}, pk={self.public_key.hex()})"


@dataclass
class EncryptedEnvelope:
    version: str
    algorithm: str
    ciphertext: str  # base64
    nonce: bytes
    message_id: str
    timestamp: int  # ms since epoch UTC

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "algorithm": self.algorithm,
            "ciphertext": self.ciphertext,
            "nonce": self.nonce.hex(),
            "message_id": self.message_id,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EncryptedEnvelope":
        return cls(
            version=data["version"],
            algorithm=data["algorithm"],
            ciphertext=data["ciphertext"],
            nonce=bytes.fromhex(data["nonce"]),
            message_id=data["message_id"],
            timestamp=data["timestamp"],
        )


@dataclass
class SealedBlob:
    version: str
    algorithm: str
    salt: bytes
    nonce: bytes
    ciphertext: bytes


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _argon2id(passphrase: bytes, salt: bytes) -> bytes:
    return Argon2id(
        salt=salt,
        length=32,
        iterations=ARGON2_ITERATIONS,
        lanes=ARGON2_PARALLELISM,
        memory_cost=ARGON2_MEMORY_KIB,
    ).derive(passphrase)


def _hkdf(ikm: bytes, info: bytes, length: int = 32) -> bytes:
    # Extract salt is the RFC 5869 default (all-zero key)
    return HKDF(
        algorithm=hashes.SHA256(), length=length, salt=None, info=info
    ).derive(ikm)


def derive_identity_root(cred: MasterCredential) -> IdentityRoot:
    """Argon2id over the passphrase domain, salted from the REV payload,
    then HKDF under the identity-root label. Deterministic."""
    hardened = _argon2id(cred.passphrase_domain.encode("utf-8"), cred.salt)
    return IdentityRoot(_hkdf(hardened, IDENTITY_ROOT_INFO.encode("ascii")))


def derive_contextual_keypair(
    root: IdentityRoot, curve: Curve, ctx: str
) -> DerivedKeypair:
    if not ctx:
        raise ValueError("context string must be non-empty")
    info = (HKDF_INFO_PREFIX + curve.value + ":" + ctx).encode("utf-8")
    dk = _hkdf(root._key, info)

    if curve is Curve.ED25519:
        private = Ed25519PrivateKey.from_private_bytes(dk)
        public = private.public_key().public_bytes_raw()
        return DerivedKeypair(curve, public, private)
    if curve is Curve.X25519:
        private = X25519PrivateKey.from_private_bytes(dk)
        public = private.public_key().public_bytes_raw()
        return DerivedKeypair(curve, public, private)
    if curve is Curve.SECP256K1:
        scalar = int.from_bytes(dk, "big") % (secp256k1.N - 1) + 1
        point = secp256k1.public_point(scalar)
        return DerivedKeypair(curve, secp256k1.compress(point), scalar)
    raise ValueError(f"unsupported curve: {curve}")


def to_checksum_address(raw: bytes) -> str:
    """EIP-55 mixed-case checksum encoding of a 20-byte address."""
    lower = raw.hex()
    digest = keccak_256(lower.encode("ascii")).hex()
    chars = [
        c.upper() if c.isalpha() and int(digest[i], 16) >= 8 else c
        for i, c in enumerate(lower)
    ]
    return "0x" + "".join(chars)


def address_for(kp: DerivedKeypair, namespace: AddressNamespace) -> str:
    if namespace is AddressNamespace.EVM:
        if kp.curve is not Curve.SECP256K1:
            raise CurveMismatchError("evm addresses require a secp256k1 key")
        point = secp256k1.decompress(kp.public_key)
        return to_checksum_address(keccak_256(secp256k1.uncompressed_xy(point))[-20:])
    if namespace is AddressNamespace.ED25519_CHAIN:
        if kp.curve is not Curve.ED25519:
            raise CurveMismatchError("ed25519_chain addresses require an ed25519 key")
        return b58encode(kp.public_key)
    raise ValueError(f"unsupported namespace: {namespace}")


def sign(kp: DerivedKeypair, message: bytes) -> bytes:
    if kp.curve is Curve.ED25519:
        return kp._private.sign(message)
    if kp.curve is Curve.SECP256K1:
        return secp256k1.sign_digest(kp._private, sha256(message)).to_bytes()
    raise CurveMismatchError(f"{kp.curve.value} keys cannot sign")


def verify(curve: Curve, public_key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        if curve is Curve.ED25519:
            Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
            return True
        if curve is Curve.SECP256K1:
            sig = secp256k1.RecoverableSignature.from_bytes(signature)
            point = secp256k1.decompress(public_key)
            return secp256k1.verify_digest(point, sha256(message), sig.r, sig.s)
    except (InvalidSignature, ValueError):
        return False
    raise CurveMismatchError(f"{curve.value} keys cannot verify")


def sign_typed_data_with_context(
    root: IdentityRoot, ctx: str, typed_data_hash: bytes
) -> bytes:
    """Derive a secp256k1 key under ctx and produce a 65-byte recoverable
    ECDSA signature over the 32-byte hash."""
    if len(typed_data_hash) != 32:
        raise PayloadLengthError("typed data hash must be 32 bytes")
    kp = derive_contextual_keypair(root, Curve.SECP256K1, ctx)
    return secp256k1.sign_digest(kp._private, typed_data_hash).to_bytes()


def recover_signer_address(typed_data_hash: bytes, signature: bytes) -> str:
    """EVM address recovered from a 65-byte recoverable signature."""
    sig = secp256k1.RecoverableSignature.from_bytes(signature)
    point = secp256k1.recover_public_point(typed_data_hash, sig)
    return to_checksum_address(keccak_256(secp256k1.uncompressed_xy(point))[-20:])


def contextual_evm_address(root: IdentityRoot, ctx: str) -> str:
    return address_for(
        derive_contextual_keypair(root, Curve.SECP256K1, ctx), AddressNamespace.EVM
    )


def _negotiation_key(shared: bytes) -> bytes:
    return HKDFExpand(
        algorithm=hashes.SHA256(),
        length=32,
        info=NEGOTIATION_KDF_INFO.encode("ascii"),
    ).derive(shared)


def agree_and_encrypt(
    sender_kp: DerivedKeypair,
    recipient_pk: bytes,
    plaintext: bytes,
    *,
    rng: RandomSource = os.urandom,
    now_ms: Optional[int] = None,
) -> EncryptedEnvelope:
    if sender_kp.curve is not Curve.X25519:
        raise CurveMismatchError("key agreement requires x25519 keys")
    shared = sender_kp._private.exchange(X25519PublicKey.from_public_bytes(recipient_pk))
    nonce = rng(12)
    ciphertext = AESGCM(_negotiation_key(shared)).encrypt(nonce, plaintext, None)
    return EncryptedEnvelope(
        version=NEGOTIATION_WIRE_VERSION,
        algorithm="X25519+HKDF-SHA256+AES-256-GCM",
        ciphertext=base64.b64encode(ciphertext).decode("ascii"),
        nonce=nonce,
        message_id=str(uuid.UUID(bytes=rng(16), version=4)),
        timestamp=now_ms if now_ms is not None else int(time.time() * 1000),
    )


def agree_and_decrypt(
    recipient_kp: DerivedKeypair, sender_pk: bytes, envelope: EncryptedEnvelope
) -> bytes:
    if recipient_kp.curve is not Curve.X25519:
        raise CurveMismatchError("key agreement requires x25519 keys")
    shared = recipient_kp._private.exchange(X25519PublicKey.from_public_bytes(sender_pk))
    try:
        return AESGCM(_negotiation_key(shared)).decrypt(
            envelope.nonce, base64.b64decode(envelope.ciphertext), None
        )
    except InvalidTag as exc:
        raise AuthenticationError("envelope failed authentication") from exc


def seal_secret(
    secret: bytes, passphrase: str, *, rng: RandomSource = os.urandom
) -> SealedBlob:
    """AES-256-GCM-SIV under an Argon2id-derived key; fresh random salt."""
    salt = rng(16)
    key = _argon2id(passphrase.encode("utf-8"), salt)
    nonce = rng(12)
    return SealedBlob(
        version="1",
        algorithm="AES-256-GCM-SIV",
        salt=salt,
        nonce=nonce,
        ciphertext=AESGCMSIV(key).encrypt(nonce, secret, None),
    )


def unseal_secret(blob: SealedBlob, passphrase: str) -> bytes:
    key = _argon2id(passphrase.encode("utf-8"), blob.salt)
    try:
        return AESGCMSIV(key).decrypt(blob.nonce, blob.ciphertext, None)
    except InvalidTag as exc:
        raise AuthenticationError("wrong passphrase or corrupted blob") from exc
