"""Systematic Reed-Solomon erasure coding over GF(2^8).

Field arithmetic uses the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1
(0x11D), the same field used by RAID-6. Encoding is systematic: the first
K shards are verbatim slices of the zero-padded blob, and each of the M
parity shards is a Vandermonde-weighted sum of the data shards. Any K of
the K+M shards reconstruct the blob via Gauss-Jordan elimination.

Shard files use a fixed 49-byte header (see ``shard_to_bytes``):

    offset  size  field
    0       4     magic ``b"RSSH"``
    4       1     format version (1)
    5       1     K (data shard count)
    6       1     M (parity shard count)
    7       1     shard index (0..K+M-1)
    8       1     kind (0 = data, 1 = parity)
    9       8     original blob length, unsigned big-endian
    17      32    SHA-256 of the original blob

followed by the shard payload. All shards of one blob have equal payload
length ``ceil(len(blob) / K)``.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb

import numpy as np

PRIMITIVE_POLY = 0x11D
FIELD_ORDER = 256

# log/antilog tables for the multiplicative group generated by 2.
_EXP = [0] * 510
_LOG = [0] * 256
_x = 1
for _i in range(255):
    _EXP[_i] = _x
    _LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= PRIMITIVE_POLY
for _i in range(255, 510):
    _EXP[_i] = _EXP[_i - 255]
del _x, _i

_MUL_TABLE: np.ndarray | None = None


def gf_add(a: int, b: int) -> int:
    """Addition in GF(2^8) is XOR (and is its own inverse)."""
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    """Product of two field elements, reduced mod 0x11D."""
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_inv(a: int) -> int:
    """Multiplicative inverse of a nonzero element."""
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(2^8)")
    return _EXP[255 - _LOG[a]]


def gf_pow(a: int, e: int) -> int:
    """a**e in the field; a**0 == 1 by convention, also for a == 0."""
    if e == 0:
        return 1
    if a == 0:
        return 0
    return _EXP[(_LOG[a] * e) % 255]


def _mul_table() -> np.ndarray:
    """Full 256x256 product table; bit-identical to gf_mul, built lazily."""
    global _MUL_TABLE
    if _MUL_TABLE is None:
        table = np.zeros((256, 256), dtype=np.uint8)
        for a in range(1, 256):
            row_log = _LOG[a]
            for b in range(1, 256):
                table[a, b] = _EXP[row_log + _LOG[b]]
        _MUL_TABLE = table
    return _MUL_TABLE


def _mul_vec(scalar: int, vec: np.ndarray) -> np.ndarray:
    """Multiply every byte of ``vec`` by ``scalar``, vectorized."""
    return _mul_table()[scalar][vec]


class ShardKind(Enum):
    DATA = 0
    PARITY = 1


@dataclass(frozen=True)
class CodingParams:
    """Reed-Solomon geometry: K data shards plus M parity shards.

    Validation rejects geometries whose generator matrix is not MDS,
    i.e. where some K of the K+M shards could not reconstruct the blob.
    """

    k: int = 4
    m: int = 2

    def __post_init__(self) -> None:
        if self.k < 1 or self.m < 1:
            raise ValueError("k and m must be positive")
        if self.k + self.m > 255:
            raise ValueError("k + m must not exceed 255")
        _assert_mds(vandermonde_parity_matrix(self), self.k, self.m)

    @property
    def total(self) -> int:
        return self.k + self.m


def vandermonde_parity_matrix(p: CodingParams) -> list[list[int]]:
    """M x K matrix with entry (m, j) = (m+1)**j in GF(2^8)."""
    return [[gf_pow(m + 1, j) for j in range(p.k)] for m in range(p.m)]


def _assert_mds(parity: list[list[int]], k: int, m: int) -> None:
    """Verify every K x K submatrix of [I; parity] is invertible.

    Because the top K rows are the identity, a submatrix that replaces t
    data rows with t parity rows is invertible iff the t x t minor of the
    parity matrix restricted to those rows and the missing data columns
    is. Enumerating those minors is exact and far cheaper than inverting
    the full submatrices.
    """
    minor_count = sum(comb(m, t) * comb(k, t) for t in range(1, min(k, m) + 1))
    if minor_count > 1_000_000:
        raise ValueError(
            f"k={k}, m={m}: MDS validation would need {minor_count} minor checks; "
            "choose a smaller geometry"
        )
    for t in range(1, min(k, m) + 1):
        for rows in combinations(range(m), t):
            for cols in combinations(range(k), t):
                minor = [[parity[r][c] for c in cols] for r in rows]
                if not _invertible(minor):
                    raise ValueError(
                        f"k={k}, m={m}: singular {t}x{t} submatrix at parity rows "
                        f"{rows}, data columns {cols}; geometry is not MDS"
                    )


def _invertible(matrix: list[list[int]]) -> bool:
    n = len(matrix)
    a = [row[:] for row in matrix]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            return False
        a[col], a[pivot] = a[pivot], a[col]
        inv = gf_inv(a[col][col])
        a[col] = [gf_mul(inv, v) for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [v ^ gf_mul(f, p) for v, p in zip(a[r], a[col])]
    return True


def _gauss_jordan_inverse(matrix: list[list[int]]) -> list[list[int]]:
    """Invert a square matrix over GF(2^8) by Gauss-Jordan elimination."""
    n = len(matrix)
    a = [row[:] + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            raise ValueError("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        inv = gf_inv(a[col][col])
        a[col] = [gf_mul(inv, v) for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [v ^ gf_mul(f, p) for v, p in zip(a[r], a[col])]
    return [row[n:] for row in a]


@dataclass
class Shard:
    """One erasure-coded fragment of a blob.

    ``holders`` is bookkeeping for the storage layer and does not take
    part in coding.
    """

    index: int
    kind: ShardKind
    payload: bytes
    blob_id: str
    orig_len: int
    k: int
    m: int
    holders: set[str] = field(default_factory=set)


class UnrecoverableError(Exception):
    """Raised when the surviving shards cannot reconstruct the blob."""


def blob_id(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def rs_encode(blob: bytes, p: CodingParams = CodingParams()) -> list[Shard]:
    """Split ``blob`` into K data shards and M parity shards.

    The blob is zero-padded to a multiple of K; the original length is
    carried in every shard so decode can trim the padding.
    """
    if not blob:
        raise ValueError("cannot encode an empty blob")
    bid = blob_id(blob)
    shard_len = -(-len(blob) // p.k)
    padded = np.frombuffer(blob.ljust(shard_len * p.k, b"\x00"), dtype=np.uint8)
    data = padded.reshape(p.k, shard_len)

    shards = [
        Shard(j, ShardKind.DATA, data[j].tobytes(), bid, len(blob), p.k, p.m)
        for j in range(p.k)
    ]
    parity_matrix = vandermonde_parity_matrix(p)
    for m in range(p.m):
        acc = np.zeros(shard_len, dtype=np.uint8)
        for j in range(p.k):
            acc ^= _mul_vec(parity_matrix[m][j], data[j])
        shards.append(
            Shard(p.k + m, ShardKind.PARITY, acc.tobytes(), bid, len(blob), p.k, p.m)
        )
    return shards


def rs_decode(available: list[Shard], p: CodingParams | None = None) -> bytes:
    """Reconstruct the original blob from any >= K surviving shards.

    Raises UnrecoverableError when fewer than K distinct shard indices
    survive; raises ValueError on inconsistent shard metadata.
    """
    if not available:
        raise UnrecoverableError("no shards available")
    first = available[0]
    if p is None:
        p = CodingParams(first.k, first.m)
    by_index: dict[int, Shard] = {}
    for s in available:
        if (s.k, s.m, s.blob_id, s.orig_len) != (p.k, p.m, first.blob_id, first.orig_len):
            raise ValueError("shards disagree on coding parameters or blob identity")
        if not 0 <= s.index < p.total:
            raise ValueError(f"shard index {s.index} out of range for k+m={p.total}")
        if len(s.payload) != len(first.payload):
            raise ValueError("shards have inconsistent payload lengths")
        by_index.setdefault(s.index, s)
    if len(by_index) < p.k:
        raise UnrecoverableError(
            f"need {p.k} distinct shards, only {len(by_index)} available"
        )

    data_rows: list[np.ndarray] = []
    if all(j in by_index for j in range(p.k)):
        # Systematic fast path: all data shards survived.
        data_rows = [
            np.frombuffer(by_index[j].payload, dtype=np.uint8) for j in range(p.k)
        ]
    else:
        # Prefer data shards, fill up with parity shards, invert.
        chosen = sorted(by_index, key=lambda i: (i >= p.k, i))[: p.k]
        parity_matrix = vandermonde_parity_matrix(p)
        rows = []
        for idx in chosen:
            if idx < p.k:
                rows.append([1 if c == idx else 0 for c in range(p.k)])
            else:
                rows.append(parity_matrix[idx - p.k])
        inverse = _gauss_jordan_inverse(rows)
        payloads = [np.frombuffer(by_index[i].payload, dtype=np.uint8) for i in chosen]
        shard_len = len(payloads[0])
        for j in range(p.k):
            acc = np.zeros(shard_len, dtype=np.uint8)
            for c, payload in zip(inverse[j], payloads):
                if c:
                    acc ^= _mul_vec(c, payload)
            data_rows.append(acc)

    blob = b"".join(row.tobytes() for row in data_rows)[: first.orig_len]
    if blob_id(blob) != first.blob_id:
        raise UnrecoverableError("decoded blob does not match its recorded digest")
    return blob


_HEADER = struct.Struct(">4sBBBBBQ32s")
_MAGIC = b"RSSH"
_FORMAT_VERSION = 1


def shard_to_bytes(shard: Shard) -> bytes:
    """Serialize a shard with the fixed header documented in the module."""
    header = _HEADER.pack(
        _MAGIC,
        _FORMAT_VERSION,
        shard.k,
        shard.m,
        shard.index,
        shard.kind.value,
        shard.orig_len,
        bytes.fromhex(shard.blob_id),
    )
    return header + shard.payload


def shard_from_bytes(raw: bytes) -> Shard:
    if len(raw) < _HEADER.size:
        raise ValueError("shard file too short for header")
    magic, version, k, m, index, kind, orig_len, bid = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError("not a shard file (bad magic)")
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported shard format version {version}")
    return Shard(
        index=index,
        kind=ShardKind(kind),
        payload=raw[_HEADER.size :],
        blob_id=bid.hex(),
        orig_len=orig_len,
        k=k,
        m=m,
    )
