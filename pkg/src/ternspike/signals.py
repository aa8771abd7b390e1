"""Core signal and spike-train types, metrics, and synthetic corpora.

Everything here is pure and deterministic: the corpus generators draw from
a seeded PCG64 generator, so a (kind, n, length, seed) tuple reproduces the
same signals bit-for-bit on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DomainError

ENCODER_METHODS = ("TBR", "MW", "SF", "TAE")

CORPUS_KINDS = ("plateau_peak", "multisine", "chirp", "square_saw_sine")


@dataclass(frozen=True)
class AnalogSignal:
    """Uniformly sampled real-amplitude signal.

    samples are dimensionless, typically peak-normalized to [-1, 1];
    sample_rate is in Hz.  label is an optional class id attached by the
    labeled corpus generator.
    """

    samples: np.ndarray
    sample_rate: float = 1.0
    label: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", arr)
        if arr.ndim != 1:
            raise DimensionError(f"samples must be 1-D, got shape {arr.shape}")
        if arr.size and not np.all(np.isfinite(arr)):
            raise DomainError("samples contain NaN or inf")
        if not (self.sample_rate > 0):
            raise DomainError(f"sample_rate must be > 0, got {self.sample_rate}")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class EncoderMeta:
    """Identifies an encoder and the parameters needed to decode its output.

    Parameters must be present exactly for the declared method: `a` only for
    TAE, `window` only for MW.
    """

    method: str
    threshold0: float
    a: float | None = None
    window: int | None = None
    sample_rate: float = 1.0

    def __post_init__(self):
        if self.method not in ENCODER_METHODS:
            raise ConfigError(f"unknown encoder method {self.method!r}")
        if not (self.threshold0 > 0):
            raise ConfigError(f"threshold0 must be > 0, got {self.threshold0}")
        if self.method == "TAE":
            if self.a is None or not (self.a > 1):
                raise ConfigError(f"TAE requires a > 1, got {self.a}")
        elif self.a is not None:
            raise ConfigError(f"parameter a is only valid for TAE, not {self.method}")
        if self.method == "MW":
            if self.window is None or self.window < 1:
                raise ConfigError(f"MW requires window >= 1, got {self.window}")
        elif self.window is not None:
            raise ConfigError(f"parameter window is only valid for MW, not {self.method}")


@dataclass(frozen=True)
class TernarySpikeTrain:
    """Spike sequence over {-1, 0, +1} plus what is needed to decode it.

    init is the first sample of the source signal; values[0] is always 0
    because the encoders start emitting at the second sample.
    """

    values: np.ndarray
    init: float = 0.0
    meta: EncoderMeta | None = None

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.dtype.kind == "f" and arr.size and not np.all(arr == np.trunc(arr)):
            raise DomainError("spike values must be integers in {-1, 0, 1}")
        arr = arr.astype(np.int8)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1:
            raise DimensionError(f"values must be 1-D, got shape {arr.shape}")
        if arr.size and not np.all(np.isin(arr, (-1, 0, 1))):
            raise DomainError("spike values must lie in {-1, 0, 1}")
        if arr.size and arr[0] != 0:
            raise DomainError("values[0] must be 0 (encoders emit from index 2)")

    def __len__(self) -> int:
        return self.values.size


def _spike_values(t) -> np.ndarray:
    """Accept a TernarySpikeTrain or a bare sequence of ternary values."""
    return np.asarray(getattr(t, "values", t))


def mae(a: AnalogSignal, b: AnalogSignal) -> float:
    """Mean absolute error between two equal-length signals."""
    xa = np.asarray(getattr(a, "samples", a), dtype=np.float64)
    xb = np.asarray(getattr(b, "samples", b), dtype=np.float64)
    if xa.size == 0 or xb.size == 0:
        raise DomainError("mae requires non-empty signals")
    if xa.shape != xb.shape:
        raise DimensionError(f"length mismatch: {xa.shape} vs {xb.shape}")
    return float(np.mean(np.abs(xa - xb)))


def firing_rate(t) -> float:
    """Fraction of nonzero entries of a spike train, in [0, 1]."""
    v = _spike_values(t)
    if v.size == 0:
        raise DomainError("firing_rate requires a non-empty train")
    return float(np.count_nonzero(v) / v.size)


def empirical_entropy(t) -> float:
    """Plug-in Shannon entropy of the symbol frequencies, in bits.

    Uses the observed frequencies of {-1, 0, +1} with base-2 logs; empty
    symbol classes contribute zero.  Bounded by log2(3) ~ 1.585 bits.
    """
    v = _spike_values(t)
    if v.size == 0:
        raise DomainError("empirical_entropy requires a non-empty train")
    counts = np.array([np.count_nonzero(v == s) for s in (-1, 0, 1)], dtype=np.float64)
    p = counts[counts > 0] / v.size
    return float(-np.sum(p * np.log2(p)))


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------

def _normalize_peak(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x))
    if peak == 0:
        return x
    return x / peak


def _gen_plateau_peak(rng: np.random.Generator, length: int) -> np.ndarray:
    """Long flat regions alternating with loud oscillatory bursts.

    Each burst grows out of the preceding plateau under a raised-cosine
    attack envelope (no discontinuity on entry) and ends with an abrupt
    drop to the next plateau level.  Guarantees: at least one constant run
    of ceil(length/8) samples, and at least one single-step jump of
    magnitude > 0.55 (pre-normalization; normalization only scales up
    because the peak is kept below 1).
    """
    x = np.zeros(length)
    pos = 0
    long_plateau = math.ceil(length / 8)
    level = float(rng.uniform(-0.3, 0.3))
    placed_long = False
    while pos < length:
        remaining = length - pos
        p_len = long_plateau if not placed_long else int(rng.integers(length // 25, length // 10))
        placed_long = True
        p_len = min(p_len, remaining)
        x[pos : pos + p_len] = level
        pos += p_len
        if pos >= length:
            break
        # burst: center glides from the plateau level toward a new center,
        # oscillation fades in so the encoderless eye sees a smooth onset
        b_len = min(int(rng.integers(length // 8, length // 4)), length - pos)
        tt = np.arange(b_len)
        center_to = float(rng.uniform(-0.35, 0.35))
        center = level + (center_to - level) * tt / b_len
        amp = float(rng.uniform(0.4, (0.95 - abs(center_to)) / 1.3))
        period = float(rng.uniform(18.0, 40.0))
        phase = float(rng.uniform(0, 2 * np.pi))
        attack = min(int(0.3 * b_len), 90)
        env = np.ones(b_len)
        env[:attack] = 0.5 * (1 - np.cos(np.pi * np.arange(attack) / attack))
        osc = amp * (np.sin(2 * np.pi * tt / period + phase)
                     + 0.3 * np.sin(2 * np.pi * tt * 3.1 / period + 2 * phase))
        x[pos : pos + b_len] = center + env * osc
        pos += b_len
        if pos >= length:
            break
        # sharp transient: jump off the burst tail toward zero-crossing side
        last = x[pos - 1]
        jump = float(rng.uniform(0.55, 0.8))
        level = float(np.clip(last - math.copysign(jump, last), -0.9, 0.9))
    return _normalize_peak(x)


def _gen_multisine(rng: np.random.Generator, length: int) -> np.ndarray:
    t = np.arange(length) / length
    x = np.zeros(length)
    for _ in range(int(rng.integers(3, 6))):
        f = float(rng.uniform(1.0, 8.0))
        a = float(rng.uniform(0.3, 1.0))
        phi = float(rng.uniform(0, 2 * np.pi))
        x += a * np.sin(2 * np.pi * f * t + phi)
    return _normalize_peak(x)


def _gen_chirp(rng: np.random.Generator, length: int) -> np.ndarray:
    t = np.arange(length) / length
    f0 = float(rng.uniform(1.0, 4.0))
    f1 = float(rng.uniform(8.0, 20.0))
    phi = float(rng.uniform(0, 2 * np.pi))
    x = np.sin(2 * np.pi * (f0 * t + 0.5 * (f1 - f0) * t * t) + phi)
    return _normalize_peak(x)


def _gen_waveform(rng: np.random.Generator, length: int, label: int) -> np.ndarray:
    """One of square/saw/sine (labels 0/1/2) with jittered frequency and phase."""
    t = np.arange(length) / length
    f = float(rng.uniform(2.0, 6.0))
    phi = float(rng.uniform(0, 1.0))
    arg = f * t + phi
    if label == 0:
        x = np.sign(np.sin(2 * np.pi * arg))
        x[x == 0] = 1.0
    elif label == 1:
        x = 2.0 * (arg - np.floor(arg)) - 1.0
    else:
        x = np.sin(2 * np.pi * arg)
    x = x * float(rng.uniform(0.8, 1.0)) + rng.normal(0.0, 0.02, length)
    return _normalize_peak(x)


def gen_corpus(kind: str, n: int, length: int, seed: int) -> list[AnalogSignal]:
    """Deterministic synthetic corpus of n signals, peak-normalized to [-1, 1].

    Kinds: plateau_peak (long smooth regions with sharp transients),
    multisine, chirp, and square_saw_sine (labeled 0/1/2 round-robin, for
    training).  The generator is PCG64 seeded with (seed), so output is
    bit-reproducible across runs and platforms.
    """
    if kind not in CORPUS_KINDS:
        raise ConfigError(f"unknown corpus kind {kind!r}; choose from {CORPUS_KINDS}")
    if n <= 0 or length <= 0:
        raise ConfigError(f"n and length must be positive, got n={n} length={length}")
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for i in range(n):
        if kind == "plateau_peak":
            out.append(AnalogSignal(_gen_plateau_peak(rng, length)))
        elif kind == "multisine":
            out.append(AnalogSignal(_gen_multisine(rng, length)))
        elif kind == "chirp":
            out.append(AnalogSignal(_gen_chirp(rng, length)))
        else:
            label = i % 3
            out.append(AnalogSignal(_gen_waveform(rng, length, label), label=label))
    return out
