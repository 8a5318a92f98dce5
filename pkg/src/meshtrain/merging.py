"""Pseudo-gradient aggregation with an outer Nesterov optimizer.

Each worker trains locally for H inner steps from a shared base
checkpoint and reports the pseudo-gradient ``delta = base - local``.
The merge applies contribution weights (normalized to sum to 1) and a
harmonic staleness factor to each delta, then one Nesterov step:

    aggregate = sum_i w_i * (1 / (1 + staleness_i)) * delta_i
    buf      <- mu * buf + aggregate
    theta    <- theta - eta * (aggregate + mu * buf)

With mu = 0, eta = 1, uniform weights, and staleness 0 this reduces to
the plain weighted average of the local parameters (FedAvg). Merged
parameters are re-quantized to ternary for serving.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .quant import ParamVector, TernaryTensor, as_params, quantize_weights

DEFAULT_OUTER_LR = 0.7
DEFAULT_OUTER_MOMENTUM = 0.9


@dataclass(frozen=True)
class PseudoGradient:
    """One worker's reported update for an outer round."""

    delta: np.ndarray
    node_id: str
    inner_steps: int
    staleness: int = 0
    local_loss: float = math.nan

    def __post_init__(self):
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be positive")
        if self.staleness < 0:
            raise ValueError("staleness must be non-negative")


@dataclass(frozen=True)
class ContributionWeight:
    node_id: str
    weight: float

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("weight must be non-negative")


@dataclass(frozen=True)
class OuterOptimizerState:
    momentum: np.ndarray
    eta: float = DEFAULT_OUTER_LR
    mu: float = DEFAULT_OUTER_MOMENTUM

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("outer learning rate must be positive")
        if not 0.0 <= self.mu < 1.0:
            raise ValueError("momentum coefficient must be in [0, 1)")

    @classmethod
    def init(cls, dim: int, eta: float = DEFAULT_OUTER_LR, mu: float = DEFAULT_OUTER_MOMENTUM):
        return cls(momentum=np.zeros(dim), eta=eta, mu=mu)


def pseudo_gradient(
    theta_base,
    theta_local,
    node_id: str,
    inner_steps: int,
    staleness: int = 0,
    local_loss: float = math.nan,
) -> PseudoGradient:
    """delta = base - local, elementwise."""
    base, local = as_params(theta_base), as_params(theta_local)
    if base.shape != local.shape:
        raise ValueError("base and local parameter lengths differ")
    return PseudoGradient(
        delta=base - local,
        node_id=node_id,
        inner_steps=inner_steps,
        staleness=staleness,
        local_loss=float(local_loss),
    )


def staleness_factor(staleness: int) -> float:
    """Harmonic down-weighting of late updates: 1 / (1 + staleness)."""
    if staleness < 0:
        raise ValueError("staleness must be non-negative")
    return 1.0 / (1.0 + staleness)


def contribution_weights(
    scores: dict[str, float], participants: list[str]
) -> list[ContributionWeight]:
    """Normalize ledger contribution scores over this merge's participants.

    Falls back to uniform weights when no participant has a positive
    score yet (bootstrap rounds).
    """
    if not participants:
        raise ValueError("no participants")
    raw = [max(0.0, float(scores.get(p, 0.0))) for p in participants]
    total = sum(raw)
    if total <= 0.0:
        return [ContributionWeight(p, 1.0 / len(participants)) for p in participants]
    return [ContributionWeight(p, r / total) for p, r in zip(participants, raw)]


def outer_update(
    theta_base,
    grads: list[PseudoGradient],
    weights: list[ContributionWeight],
    state: OuterOptimizerState,
) -> tuple[ParamVector, OuterOptimizerState]:
    """One outer step over the collected pseudo-gradients.

    Weights are normalized to sum to 1 over the gradients present;
    every gradient must have a weight entry.
    """
    theta = as_params(theta_base)
    if not grads:
        raise ValueError("cannot merge an empty gradient set")
    by_node = {w.node_id: w.weight for w in weights}
    missing = [g.node_id for g in grads if g.node_id not in by_node]
    if missing:
        raise ValueError(f"missing contribution weight for {missing}")
    total = sum(by_node[g.node_id] for g in grads)
    if total <= 0.0:
        raise ValueError("weights must sum to a positive value")

    aggregate = np.zeros_like(theta)
    for g in grads:
        delta = as_params(g.delta)
        if delta.shape != theta.shape:
            raise ValueError(f"gradient length mismatch from {g.node_id}")
        aggregate += (by_node[g.node_id] / total) * staleness_factor(g.staleness) * delta

    buf = state.mu * state.momentum + aggregate
    theta_new = theta - state.eta * (aggregate + state.mu * buf)
    return theta_new, OuterOptimizerState(momentum=buf, eta=state.eta, mu=state.mu)


def requantize_after_merge(theta) -> TernaryTensor:
    """Ternary-quantize merged parameters; this is the servable artifact."""
    return quantize_weights(theta)


def param_hash(theta) -> str:
    """Content hash of a parameter vector (hex SHA-256 of float64 bytes)."""
    return hashlib.sha256(np.ascontiguousarray(as_params(theta)).tobytes()).hexdigest()


@dataclass(frozen=True)
class MergeRecord:
    """One line of the merge log, emitted per completed outer round."""

    round: int
    participants: tuple[str, ...]
    weights: tuple[float, ...]
    pre_loss: float
    post_loss: float
    merged_hash: str
    ternary_hash: str = ""

    def as_record(self) -> dict:
        return {
            "round": self.round,
            "participants": list(self.participants),
            "weights": list(self.weights),
            "pre_loss": self.pre_loss,
            "post_loss": self.post_loss,
            "merged_hash": self.merged_hash,
            "ternary_hash": self.ternary_hash,
        }
