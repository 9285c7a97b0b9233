"""Protocol constants, shared by every subsystem."""

MAX_HIERARCHY_DEPTH = 5

SCOPE_RANKS = {
    "auto_payment": 1,
    "negotiation": 2,
    "commitment": 3,
    "full": 10,
}

MAX_NEGOTIATION_ROUNDS = 10
NEGOTIATION_TTL_MS = 24 * 60 * 60 * 1000

REVIEW_DEADLINE_MS = 30 * 60 * 1000

ADDRESS_POOL_SIZE = 5
CONSOLIDATION_INTERVAL_MS = 4 * 60 * 60 * 1000
CONSOLIDATION_JITTER_RATIO = 0.3
CONSOLIDATION_BATCH_SIZE = 5
INTER_BATCH_DELAY_MIN_MS = 10 * 60 * 1000
INTER_BATCH_DELAY_MAX_MS = 60 * 60 * 1000

AUDIT_BATCH_THRESHOLD = 50
AUDIT_TIME_WINDOW_MS = 5 * 60 * 1000

EIP712_DOMAIN_NAME = "YalletAgentCommitment"
EIP712_DOMAIN_VERSION = "1"

ARGON2_MEMORY_KIB = 4096  # 4 MiB
ARGON2_ITERATIONS = 3
ARGON2_PARALLELISM = 1

HKDF_INFO_PREFIX = "ACEGF-REV32-V1-"
IDENTITY_ROOT_INFO = "acegf:identity:root"
NEGOTIATION_KDF_INFO = "aesp:negotiation:v1"
NEGOTIATION_WIRE_VERSION = "aesp-neg/1"

# Amounts everywhere are integer micro-units (1e-6 of the settlement currency).
MICRO = 1_000_000

DAY_MS = 24 * 60 * 60 * 1000
WEEK_MS = 7 * DAY_MS
