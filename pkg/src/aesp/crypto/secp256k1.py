"""secp256k1 ECDSA with recoverable signatures.

Pure-Python group arithmetic (Jacobian coordinates) plus RFC 6979
deterministic nonces. Signatures are low-s normalized; the recovery id
follows the 0/1 convention (add 27 for the legacy Ethereum encoding).
"""

import hashlib
import hmac
from dataclasses import dataclass

P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

_INF = None  # point at infinity sentinel for affine points


def _inv(a: int, m: int) -> int:
    return pow(a, -1, m)


# --- Jacobian arithmetic ------------------------------------------------

def _jac_double(p):
    x, y, z = p
    if y == 0:
        return (0, 0, 0)
    ysq = (y * y) % P
    s = (4 * x * ysq) % P
    m = (3 * x * x) % P
    nx = (m * m - 2 * s) % P
    ny = (m * (s - nx) - 8 * ysq * ysq) % P
    nz = (2 * y * z) % P
    return (nx, ny, nz)


def _jac_add(p, q):
    if p[2] == 0:
        return q
    if q[2] == 0:
        return p
    x1, y1, z1 = p
    x2, y2, z2 = q
    z1z1 = (z1 * z1) % P
    z2z2 = (z2 * z2) % P
    u1 = (x1 * z2z2) % P
    u2 = (x2 * z1z1) % P
    s1 = (y1 * z2 * z2z2) % P
    s2 = (y2 * z1 * z1z1) % P
    if u1 == u2:
        if s1 != s2:
            return (0, 0, 0)
        return _jac_double(p)
    h = (u2 - u1) % P
    r = (s2 - s1) % P
    h2 = (h * h) % P
    h3 = (h * h2) % P
    u1h2 = (u1 * h2) % P
    nx = (r * r - h3 - 2 * u1h2) % P
    ny = (r * (u1h2 - nx) - s1 * h3) % P
    nz = (h * z1 * z2) % P
    return (nx, ny, nz)


def _jac_mul(point, scalar: int):
    result = (0, 0, 0)
    addend = point
    while scalar:
        if scalar & 1:
            result = _jac_add(result, addend)
        addend = _jac_double(addend)
        scalar >>= 1
    return result


def _to_affine(p):
    if p[2] == 0:
        return _INF
    zinv = _inv(p[2], P)
    zinv2 = (zinv * zinv) % P
    return ((p[0] * zinv2) % P, (p[1] * zinv2 * zinv) % P)


def _mul_g(scalar: int):
    return _to_affine(_jac_mul((GX, GY, 1), scalar % N))


def _mul(point, scalar: int):
    return _to_affine(_jac_mul((point[0], point[1], 1), scalar % N))


def _add(p, q):
    if p is _INF:
        return q
    if q is _INF:
        return p
    return _to_affine(_jac_add((p[0], p[1], 1), (q[0], q[1], 1)))


# --- key and point encoding ---------------------------------------------

def public_point(secret: int):
    if not 1 <= secret < N:
        raise ValueError("secret scalar out of range")
    return _mul_g(secret)


def compress(point) -> bytes:
    x, y = point
    return bytes([2 + (y & 1)]) + x.to_bytes(32, "big")


def uncompressed_xy(point) -> bytes:
    """64-byte X||Y encoding (no 0x04 prefix)."""
    return point[0].to_bytes(32, "big") + point[1].to_bytes(32, "big")


def decompress(data: bytes):
    if len(data) != 33 or data[0] not in (2, 3):
        raise ValueError("not a compressed secp256k1 point")
    x = int.from_bytes(data[1:], "big")
    y = _lift_x(x, data[0] & 1)
    return (x, y)


def _lift_x(x: int, parity: int) -> int:
    y_sq = (pow(x, 3, P) + 7) % P
    y = pow(y_sq, (P + 1) // 4, P)
    if (y * y) % P != y_sq:
        raise ValueError("x is not on the curve")
    if y & 1 != parity:
        y = P - y
    return y


# --- RFC 6979 deterministic nonce ---------------------------------------

def _rfc6979_k(secret: int, digest: bytes) -> int:
    key = secret.to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + key + digest, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + key + digest, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        candidate = int.from_bytes(v, "big")
        if 1 <= candidate < N:
            return candidate
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


@dataclass(frozen=True)
class RecoverableSignature:
    r: int
    s: int
    recovery_id: int  # 0 or 1

    def to_bytes(self) -> bytes:
        return (self.r.to_bytes(32, "big")
                + self.s.to_bytes(32, "big")
                + bytes([self.recovery_id]))

    @classmethod
    def from_bytes(cls, data: bytes) -> "RecoverableSignature":
        if len(data) != 65:
            raise ValueError("recoverable signature must be 65 bytes")
        return cls(
            r=int.from_bytes(data[:32], "big"),
            s=int.from_bytes(data[32:64], "big"),
            recovery_id=data[64],
        )


def sign_digest(secret: int, digest: bytes) -> RecoverableSignature:
    if len(digest) != 32:
        raise ValueError("digest must be 32 bytes")
    z = int.from_bytes(digest, "big")
    while True:
        k = _rfc6979_k(secret, digest)
        point = _mul_g(k)
        r = point[0] % N
        if r == 0:
            digest = hashlib.sha256(digest).digest()
            continue
        s = (_inv(k, N) * (z + r * secret)) % N
        if s == 0:
            digest = hashlib.sha256(digest).digest()
            continue
        recovery_id = (point[1] & 1) ^ (1 if point[0] >= N else 0)
        if s > N // 2:
            s = N - s
            recovery_id ^= 1
        return RecoverableSignature(r, s, recovery_id)


def verify_digest(point, digest: bytes, r: int, s: int) -> bool:
    if not (1 <= r < N and 1 <= s < N):
        return False
    z = int.from_bytes(digest, "big")
    w = _inv(s, N)
    u1 = (z * w) % N
    u2 = (r * w) % N
    candidate = _add(_mul_g(u1), _mul(point, u2))
    if candidate is _INF:
        return False
    return candidate[0] % N == r


def recover_public_point(digest: bytes, sig: RecoverableSignature):
    """Recover the signing public point from a recoverable signature."""
    if not (1 <= sig.r < N and 1 <= sig.s < N):
        raise ValueError("signature values out of range")
    x = sig.r  # high-x recovery (r >= N - P mod N) is astronomically rare
    y = _lift_x(x, sig.recovery_id & 1)
    z = int.from_bytes(digest, "big")
    r_inv = _inv(sig.r, N)
    # Q = r^-1 (s*R - z*G)
    s_r = _mul((x, y), sig.s)
    z_g = _mul_g((-z) % N)
    q = _mul(_add(s_r, z_g), r_inv)
    if q is _INF:
        raise ValueError("recovered point at infinity")
    return q
