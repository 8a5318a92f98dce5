"""Node identity derivation and dual-mode request authentication.

A node's identity is bound to its wallet keypair:

    node_id = "node-" + first 16 hex chars of SHA-256(compressed pubkey)

Control-plane requests are signed over SHA-256("<node_id>:<timestamp>")
(ASCII, decimal seconds, literal colon). Wallet mode uses a compact
secp256k1 signature with recovery byte; verifiers recover the public key
and enforce the node-id binding. Cluster mode uses HMAC-SHA256 with a
shared secret and timing-safe comparison. Both modes enforce a symmetric
5-minute freshness window.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass
from enum import Enum

from . import secp256k1

FRESHNESS_WINDOW_SECONDS = 300
NODE_ID_HEX_CHARS = 16


class AuthMode(Enum):
    WALLET = "wallet"
    CLUSTER_HMAC = "cluster-hmac"


class RejectReason(Enum):
    STALE = "stale"
    BINDING = "binding"
    MAC = "mac"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: RejectReason | None = None

    @classmethod
    def accept(cls) -> "VerifyResult":
        return cls(ok=True)

    @classmethod
    def reject(cls, reason: RejectReason) -> "VerifyResult":
        return cls(ok=False, reason=reason)


def derive_node_id(pubkey_compressed: bytes) -> str:
    """Deterministic id from a 33-byte compressed public key."""
    if len(pubkey_compressed) != 33:
        raise ValueError("compressed public key must be 33 bytes")
    digest = hashlib.sha256(pubkey_compressed).hexdigest()
    return "node-" + digest[:NODE_ID_HEX_CHARS]


@dataclass(frozen=True)
class NodeIdentity:
    """Signing capability plus the derived public identity."""

    private_scalar: int
    pubkey_compressed: bytes
    node_id: str

    @classmethod
    def generate(cls, rng=None) -> "NodeIdentity":
        scalar = (rng.randrange(1, secp256k1.N) if rng is not None
                  else secrets.randbelow(secp256k1.N - 1) + 1)
        return cls.from_private_scalar(scalar)

    @classmethod
    def from_private_scalar(cls, scalar: int) -> "NodeIdentity":
        pubkey = secp256k1.compress_point(secp256k1.public_point(scalar))
        return cls(private_scalar=scalar, pubkey_compressed=pubkey,
                   node_id=derive_node_id(pubkey))


@dataclass(frozen=True)
class SignedRequest:
    node_id: str
    timestamp: int
    mode: AuthMode
    signature: bytes


def request_digest(node_id: str, timestamp: int) -> bytes:
    """SHA-256 over the exact ASCII concatenation "<node_id>:<timestamp>"."""
    return hashlib.sha256(f"{node_id}:{timestamp}".encode("ascii")).digest()


def sign_request(
    identity: NodeIdentity,
    timestamp: int,
    mode: AuthMode = AuthMode.WALLET,
    cluster_secret: bytes | None = None,
) -> SignedRequest:
    digest = request_digest(identity.node_id, timestamp)
    if mode is AuthMode.WALLET:
        sig = secp256k1.sign_recoverable(digest, identity.private_scalar)
    else:
        if not cluster_secret:
            raise ValueError("cluster mode requires a shared secret")
        sig = hmac.new(cluster_secret, digest, hashlib.sha256).digest()
    return SignedRequest(identity.node_id, int(timestamp), mode, sig)


def verify_request(
    req: SignedRequest,
    now: int,
    cluster_secret: bytes | None = None,
) -> VerifyResult:
    """Check freshness, then signature and identity binding.

    Rejections: ``stale`` when |now - timestamp| exceeds the 5-minute
    window (symmetric, so skewed-future timestamps fail too); ``binding``
    when the recovered key does not hash to the claimed node id;
    ``mac`` on HMAC mismatch; ``malformed`` on undecodable signatures.
    """
    if abs(int(now) - int(req.timestamp)) > FRESHNESS_WINDOW_SECONDS:
        return VerifyResult.reject(RejectReason.STALE)
    digest = request_digest(req.node_id, req.timestamp)
    if req.mode is AuthMode.WALLET:
        try:
            point = secp256k1.recover_public_key(digest, req.signature)
        except secp256k1.SignatureError:
            return VerifyResult.reject(RejectReason.MALFORMED)
        recovered_id = derive_node_id(secp256k1.compress_point(point))
        if recovered_id != req.node_id:
            return VerifyResult.reject(RejectReason.BINDING)
        return VerifyResult.accept()
    if not cluster_secret:
        return VerifyResult.reject(RejectReason.MAC)
    expected = hmac.new(cluster_secret, digest, hashlib.sha256).digest()
    if not hmac.compare_digest(expected, req.signature):
        return VerifyResult.reject(RejectReason.MAC)
    return VerifyResult.accept()
