"""Symmetric uniform quantization with dual scale factors.

Weights and membrane potentials are clipped to [-alpha, alpha] and projected
onto the level set alpha * {0, +-1/M, +-2/M, ..., +-1} with M = 2**(b-1) - 1,
so every bit width has a symmetric lattice that includes zero.  The integer
representation (multiples of alpha/M) is authoritative at inference; real
levels exist for calibration, training, and the reference oracle.

The ratio between the weight scale and the membrane scale is constrained to
an exact power of two so inference can replace the rescaling multiply with a
bit shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

K_RANGE = 8  # dyadic exponent clamp: k in [-8, 8]


def _levels_per_side(b: int) -> int:
    if b < 2:
        raise ConfigError(f"bit width must be >= 2 (b=1 cannot hold a symmetric ternary level set), got {b}")
    return 2 ** (b - 1) - 1


@dataclass(frozen=True)
class QuantConfig:
    """Bit widths and scale factors for one layer.

    alpha_u scales the membrane lattice, alpha_w the weight lattice; when
    dyadic-constrained, alpha_w / alpha_u == 2**k exactly.
    """

    bits_w: int
    bits_u: int
    alpha_w: float
    alpha_u: float
    k: int | None = None

    def __post_init__(self):
        _levels_per_side(self.bits_w)
        _levels_per_side(self.bits_u)
        if not (self.alpha_w > 0 and self.alpha_u > 0):
            raise ConfigError("scale factors must be positive")
        if self.k is not None:
            if not (-K_RANGE <= self.k <= K_RANGE):
                raise ConfigError(f"k must lie in [-{K_RANGE}, {K_RANGE}], got {self.k}")
            if self.alpha_w != self.alpha_u * 2.0**self.k:
                raise ConfigError("alpha_w must equal alpha_u * 2**k when k is declared")


def _round_away(q):
    """Round half away from zero (keeps the lattice sign-symmetric)."""
    return np.sign(q) * np.floor(np.abs(q) + 0.5)


def quantize(x, alpha: float, b: int):
    """Clip x to [-alpha, alpha] and project to the nearest lattice level;
    ties round away from zero.  Works elementwise on arrays."""
    if not (alpha > 0):
        raise ConfigError(f"alpha must be > 0, got {alpha}")
    m = _levels_per_side(b)
    arr = np.asarray(x, dtype=np.float64)
    y = np.clip(arr, -alpha, alpha)
    level = _round_away(y * (m / alpha)) * (alpha / m)
    return float(level) if np.isscalar(x) or arr.ndim == 0 else level


def to_int(level, alpha: float, b: int):
    """Map a lattice level to its integer code in [-(2**(b-1)-1), 2**(b-1)-1].

    Rejects values that are not on the lattice (beyond float round-off).
    """
    m = _levels_per_side(b)
    arr = np.asarray(level, dtype=np.float64)
    q = arr * (m / alpha)
    code = np.rint(q)
    if np.any(np.abs(q - code) > 1e-9 * max(m, 1)) or np.any(np.abs(code) > m):
        raise DomainError("value is not a quantization level of Q(alpha, b)")
    out = code.astype(np.int64)
    return int(out) if np.isscalar(level) or arr.ndim == 0 else out


def from_int(code, alpha: float, b: int):
    """Integer code back to its real lattice level: code * alpha / M."""
    m = _levels_per_side(b)
    arr = np.asarray(code)
    if np.any(np.abs(arr) > m):
        raise DomainError(f"integer code out of range for b={b}")
    out = arr * (alpha / m)
    return float(out) if np.isscalar(code) or arr.ndim == 0 else out


def calibrate(tensor, b: int, mode: str = "maxabs") -> float:
    """Pick a clipping threshold for a tensor.

    maxabs: max |x| (1.0 for an all-zero tensor).  percentile: the 99.9th
    percentile of |x|, for heavy-tailed weight distributions.
    """
    _levels_per_side(b)
    arr = np.asarray(tensor, dtype=np.float64)
    if arr.size == 0:
        raise DomainError("cannot calibrate an empty tensor")
    mags = np.abs(arr)
    if mode == "maxabs":
        alpha = float(np.max(mags))
    elif mode == "percentile":
        alpha = float(np.percentile(mags, 99.9))
    else:
        raise ConfigError(f"unknown calibration mode {mode!r}")
    return alpha if alpha > 0 else 1.0


def constrain_dyadic(alpha_w: float, alpha_u: float) -> tuple[float, int]:
    """Snap alpha_w / alpha_u to the nearest power of two.

    Returns (alpha_w', k) with alpha_w' = alpha_u * 2**k and k the nearest
    integer to log2(alpha_w / alpha_u), clamped to [-8, 8].
    """
    if not (alpha_w > 0 and alpha_u > 0):
        raise ConfigError("scale factors must be positive")
    k = int(round(math.log2(alpha_w / alpha_u)))
    k = max(-K_RANGE, min(K_RANGE, k))
    return alpha_u * 2.0**k, k
