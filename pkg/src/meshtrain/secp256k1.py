"""Minimal secp256k1 ECDSA with public-key recovery.

Implements exactly what request signing needs: deterministic (RFC 6979)
signatures in compact 64-byte form plus a recovery byte, public-key
recovery, and SEC1 compressed-point encoding. Scalar multiplication uses
Jacobian coordinates with a precomputed 4-bit window table for the base
point. Signatures are low-s normalized.

This module exists because no secp256k1 package with recovery support is
available in the target environment; tests cross-check signatures and
derived public keys against the ``cryptography`` package.
"""

from __future__ import annotations

import hashlib
import hmac

# Curve: y^2 = x^3 + 7 over F_P, group order N, generator G.
P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

_INFINITY = (0, 0, 0)  # Jacobian point at infinity (Z == 0)


class SignatureError(ValueError):
    """Malformed or out-of-range signature material."""


def _jac_double(X1, Y1, Z1):
    if not Y1 or not Z1:
        return _INFINITY
    A = X1 * X1 % P
    B = Y1 * Y1 % P
    C = B * B % P
    D = 2 * ((X1 + B) * (X1 + B) - A - C) % P
    E = 3 * A % P
    X3 = (E * E - 2 * D) % P
    Y3 = (E * (D - X3) - 8 * C) % P
    Z3 = 2 * Y1 * Z1 % P
    return X3, Y3, Z3


def _jac_add(X1, Y1, Z1, X2, Y2, Z2):
    if not Z1:
        return X2, Y2, Z2
    if not Z2:
        return X1, Y1, Z1
    Z1Z1 = Z1 * Z1 % P
    Z2Z2 = Z2 * Z2 % P
    U1 = X1 * Z2Z2 % P
    U2 = X2 * Z1Z1 % P
    S1 = Y1 * Z2 * Z2Z2 % P
    S2 = Y2 * Z1 * Z1Z1 % P
    if U1 == U2:
        if S1 != S2:
            return _INFINITY
        return _jac_double(X1, Y1, Z1)
    H = (U2 - U1) % P
    HH = H * H % P
    HHH = H * HH % P
    r = (S2 - S1) % P
    V = U1 * HH % P
    X3 = (r * r - HHH - 2 * V) % P
    Y3 = (r * (V - X3) - S1 * HHH) % P
    Z3 = Z1 * Z2 * H % P
    return X3, Y3, Z3


def _to_affine(X, Y, Z):
    if not Z:
        return None
    zi = pow(Z, -1, P)
    zi2 = zi * zi % P
    return X * zi2 % P, Y * zi2 * zi % P


def _scalar_mult(k: int, point: tuple[int, int]):
    """k * point for an arbitrary affine point; returns affine or None."""
    k %= N
    if k == 0:
        return None
    Rx, Ry, Rz = _INFINITY
    Qx, Qy, Qz = point[0], point[1], 1
    while k:
        if k & 1:
            Rx, Ry, Rz = _jac_add(Rx, Ry, Rz, Qx, Qy, Qz)
        Qx, Qy, Qz = _jac_double(Qx, Qy, Qz)
        k >>= 1
    return _to_affine(Rx, Ry, Rz)


_BASE_WINDOW: list[list[tuple[int, int]]] | None = None


def _base_window():
    """4-bit fixed-base table: entry [i][d] = d * 16^i * G, affine."""
    global _BASE_WINDOW
    if _BASE_WINDOW is None:
        table = []
        step = (GX, GY, 1)
        for _ in range(64):
            row = [None]
            acc = _INFINITY
            for _ in range(15):
                acc = _jac_add(*acc, *step)
                row.append(_to_affine(*acc))
            table.append(row)
            for _ in range(4):
                step = _jac_double(*step)
        _BASE_WINDOW = table
    return _BASE_WINDOW


def _mult_base(k: int):
    """k * G via the fixed-base window; returns affine or None."""
    k %= N
    if k == 0:
        return None
    table = _base_window()
    Rx, Ry, Rz = _INFINITY
    i = 0
    while k:
        d = k & 0xF
        if d:
            px, py = table[i][d]
            Rx, Ry, Rz = _jac_add(Rx, Ry, Rz, px, py, 1)
        k >>= 4
        i += 1
    return _to_affine(Rx, Ry, Rz)


def _lift_x(x: int, y_parity: int) -> tuple[int, int]:
    """Curve point with the given x and y parity; P % 4 == 3 so sqrt is a pow."""
    if not 0 < x < P:
        raise SignatureError("x coordinate out of field range")
    y_sq = (pow(x, 3, P) + 7) % P
    y = pow(y_sq, (P + 1) // 4, P)
    if y * y % P != y_sq:
        raise SignatureError("x is not on the curve")
    if y & 1 != y_parity:
        y = P - y
    return x, y


def public_point(private_scalar: int) -> tuple[int, int]:
    if not 0 < private_scalar < N:
        raise ValueError("private scalar out of range")
    return _mult_base(private_scalar)


def compress_point(point: tuple[int, int]) -> bytes:
    x, y = point
    return bytes([2 + (y & 1)]) + x.to_bytes(32, "big")


def decompress_point(data: bytes) -> tuple[int, int]:
    if len(data) != 33 or data[0] not in (2, 3):
        raise ValueError("not a compressed SEC1 point")
    return _lift_x(int.from_bytes(data[1:], "big"), data[0] - 2)


def _rfc6979_nonce(private_scalar: int, digest: bytes) -> int:
    """Deterministic nonce per RFC 6979 (HMAC-SHA256 DRBG)."""
    x = private_scalar.to_bytes(32, "big")
    V = b"\x01" * 32
    K = b"\x00" * 32
    K = hmac.new(K, V + b"\x00" + x + digest, hashlib.sha256).digest()
    V = hmac.new(K, V, hashlib.sha256).digest()
    K = hmac.new(K, V + b"\x01" + x + digest, hashlib.sha256).digest()
    V = hmac.new(K, V, hashlib.sha256).digest()
    while True:
        V = hmac.new(K, V, hashlib.sha256).digest()
        k = int.from_bytes(V, "big")
        if 1 <= k < N:
            return k
        K = hmac.new(K, V + b"\x00", hashlib.sha256).digest()
        V = hmac.new(K, V, hashlib.sha256).digest()


def sign_recoverable(digest: bytes, private_scalar: int) -> bytes:
    """Compact 65-byte signature r(32) || s(32) || recovery_id(1), low-s."""
    if len(digest) != 32:
        raise ValueError("digest must be 32 bytes")
    if not 0 < private_scalar < N:
        raise ValueError("private scalar out of range")
    z = int.from_bytes(digest, "big")
    k = _rfc6979_nonce(private_scalar, digest)
    while True:
        point = _mult_base(k)
        r = point[0] % N
        s = pow(k, -1, N) * (z + r * private_scalar) % N
        if r and s:
            break
        k = (k + 1) % N or 1  # astronomically unlikely; keep determinism simple
    recid = (point[1] & 1) | (2 if point[0] >= N else 0)
    if s > N // 2:
        s = N - s
        recid ^= 1
    return r.to_bytes(32, "big") + s.to_bytes(32, "big") + bytes([recid])


def recover_public_key(digest: bytes, signature: bytes) -> tuple[int, int]:
    """Recover the signer's public point from a compact signature.

    Raises SignatureError for malformed encodings or impossible values;
    a structurally valid signature always recovers *some* point, and the
    caller decides whether that point is the expected signer.
    """
    if len(digest) != 32:
        raise SignatureError("digest must be 32 bytes")
    if len(signature) != 65:
        raise SignatureError("compact signature must be 65 bytes")
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:64], "big")
    recid = signature[64]
    if recid > 3:
        raise SignatureError("recovery id out of range")
    if not 0 < r < N or not 0 < s < N:
        raise SignatureError("r or s out of range")
    x = r + N * (recid >> 1)
    R = _lift_x(x, recid & 1)
    z = int.from_bytes(digest, "big")
    r_inv = pow(r, -1, N)
    sR = _scalar_mult(s, R)
    zG = _mult_base(z % N) if z % N else None
    if zG is None:
        diff = sR
    else:
        neg_zG = (zG[0], P - zG[1])
        acc = _jac_add(sR[0], sR[1], 1, neg_zG[0], neg_zG[1], 1)
        diff = _to_affine(*acc)
    if diff is None:
        raise SignatureError("recovered point at infinity")
    Q = _scalar_mult(r_inv, diff)
    if Q is None:
        raise SignatureError("recovered point at infinity")
    return Q


def verify(digest: bytes, signature: bytes, public: tuple[int, int]) -> bool:
    """Standard ECDSA verification of the (r, s) part against a known key."""
    try:
        recovered = recover_public_key(digest, signature)
    except SignatureError:
        return False
    if recovered == public:
        return True
    # The recovery id might not match this key; check the equation directly.
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:64], "big")
    z = int.from_bytes(digest, "big")
    w = pow(s, -1, N)
    u1, u2 = z * w % N, r * w % N
    a = _mult_base(u1) if u1 else None
    b = _scalar_mult(u2, public) if u2 else None
    if a is None and b is None:
        return False
    if a is None:
        point = b
    elif b is None:
        point = a
    else:
        point = _to_affine(*_jac_add(a[0], a[1], 1, b[0], b[1], 1))
    return point is not None and point[0] % N == r
