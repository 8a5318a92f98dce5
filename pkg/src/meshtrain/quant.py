"""Ternary weight and int8 activation quantization.

Weights map to {-1, 0, +1} with a per-tensor scale equal to the mean
absolute weight; activations map to [-127, 127] with scale 127 over the
max absolute value. Rounding is half-away-from-zero in both quantizers
(symmetric about zero); an all-zero input falls back to a tiny epsilon
scale instead of raising, so hot loops stay branch-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Scale used when the input is entirely zero (mean|w| or max|x| is 0).
ZERO_SCALE_GUARD = 1e-12

ParamVector = np.ndarray  # 1-D float64, finite


def as_params(values) -> ParamVector:
    """Coerce to a finite 1-D float64 vector."""
    w = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(w)):
        raise ValueError("parameters must be finite")
    return w


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer, ties away from zero (np.round ties to even)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class TernaryTensor:
    """Quantized weights: values in {-1, 0, +1} plus a positive scale."""

    values: np.ndarray  # int8
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class QuantActivations:
    """Quantized activations: int8 values in [-127, 127] plus the scale used."""

    values: np.ndarray  # int8
    scale: float


def quantize_weights(w) -> TernaryTensor:
    """Ternary-quantize a weight vector.

    scale = mean(|w|); each element is round(w / scale) clamped to
    [-1, 1]. An all-zero input yields all-zero values with the epsilon
    guard as scale.
    """
    w = as_params(w)
    scale = float(np.mean(np.abs(w))) if w.size else 0.0
    if scale == 0.0:
        scale = ZERO_SCALE_GUARD
    q = np.clip(round_half_away(w / scale), -1, 1).astype(np.int8)
    return TernaryTensor(values=q, scale=scale)


def quantize_activations(x) -> QuantActivations:
    """Quantize activations to int8 so the max-magnitude element hits ±127."""
    x = as_params(x)
    if x.size == 0:
        raise ValueError("activations must be nonempty")
    peak = float(np.max(np.abs(x)))
    if peak == 0.0:
        return QuantActivations(values=np.zeros(x.size, dtype=np.int8), scale=ZERO_SCALE_GUARD)
    scale = 127.0 / peak
    q = np.clip(round_half_away(x * scale), -127, 127).astype(np.int8)
    return QuantActivations(values=q, scale=scale)


def dequantize(t: TernaryTensor) -> ParamVector:
    """Reconstruct real weights: values * scale elementwise."""
    return t.values.astype(np.float64) * t.scale
