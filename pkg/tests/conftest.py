import pytest

from aesp.crypto import MasterCredential, derive_identity_root

GOLDEN_REV = bytes(range(32))
GOLDEN_PASSPHRASE = "correct horse battery staple"


@pytest.fixture(scope="session")
def root():
    """Session-scoped identity root (Argon2id is deliberately slow)."""
    return derive_identity_root(MasterCredential(GOLDEN_REV, GOLDEN_PASSPHRASE))
