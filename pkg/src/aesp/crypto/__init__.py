from .core import (  # noqa: F401
    AddressNamespace,
    AuthenticationError,
    CryptoError,
    Curve,
    CurveMismatchError,
    DerivedKeypair,
    EncryptedEnvelope,
    IdentityRoot,
    MasterCredential,
    PayloadLengthError,
    SealedBlob,
    address_for,
    agree_and_encrypt,
    canonical_json,
    contextual_evm_address,
    agree_and_decrypt,
    derive_contextual_keypair,
    derive_identity_root,
    recover_signer_address,
    seal_secret,
    sha256,
    sign,
    sign_typed_data_with_context,
    to_checksum_address,
    unseal_secret,
    verify,
)
from .canonical import NotSerializable  # noqa: F401
from .keccak import keccak_256  # noqa: F401
