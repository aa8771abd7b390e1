"""Threshold-based ternary spike encoders, exact decoders, and a comparison harness.

Four encoders are provided:

* SF   step-forward: spike when the signal departs from a running baseline
       by a fixed threshold; the baseline moves by that threshold.
* TAE  threshold-adaptive: like SF, but every spike multiplies the threshold
       by a > 1 and every silent step divides it by a, so the baseline can
       track both flat stretches and violent swings.
* TBR  first-difference thresholding.
* MW   moving-window mean baseline thresholding.

SF, TAE, and TBR are exactly invertible given the spike train and encoder
metadata: decode() replays the encoder's baseline state machine and is
guaranteed to reproduce the encoder's own base trace element for element.
MW is not invertible from spikes alone and decode() rejects it.

Branch conventions are deliberate and load-bearing: SF compares strictly
(> / <) while TAE compares non-strictly (>= / <=).  Reconstruction emits the
baseline *after* each step's update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .signals import (
    AnalogSignal,
    EncoderMeta,
    TernarySpikeTrain,
    empirical_entropy,
    firing_rate,
    mae,
)

# TAE threshold exponent bounds: keep threshold within about
# [threshold0 * 1e-6, threshold0 * 1e6] without leaving the a**m lattice.
_TAE_CLAMP_DECADES = 6.0


@dataclass(frozen=True)
class EncoderTrace:
    """Per-step encoder internals: running baseline, and for TAE the
    post-update threshold at every step."""

    base_trace: np.ndarray
    threshold_trace: np.ndarray | None = None


def default_threshold(signal: AnalogSignal) -> float:
    """Scale-free threshold default: the standard deviation of the signal's
    first differences (1.0 if the signal is constant or too short)."""
    x = signal.samples
    if x.size < 2:
        return 1.0
    sd = float(np.std(np.diff(x)))
    return sd if sd > 0 else 1.0


def _check_signal(signal: AnalogSignal):
    x = np.asarray(signal.samples, dtype=np.float64)
    if x.size == 0:
        raise DomainError("cannot encode an empty signal")
    if not np.all(np.isfinite(x)):
        raise DomainError("signal contains non-finite samples")
    return x


def _resolve_threshold(signal: AnalogSignal, threshold0) -> float:
    if threshold0 is None:
        return default_threshold(signal)
    if not (threshold0 > 0):
        raise ConfigError(f"threshold0 must be > 0, got {threshold0}")
    return float(threshold0)


def encode_sf(signal: AnalogSignal, threshold0: float | None = None):
    """Step-forward encoding.

    Baseline starts at the first sample.  From the second sample on:
    emit +1 and raise the baseline by threshold0 when the sample exceeds
    base + threshold0 (strictly); emit -1 and lower it when the sample falls
    below base - threshold0; otherwise emit 0.
    """
    x = _check_signal(signal)
    th = _resolve_threshold(signal, threshold0)
    n = x.size
    spikes = np.zeros(n, dtype=np.int8)
    base_trace = np.empty(n)
    base = x[0]
    base_trace[0] = base
    for i in range(1, n):
        if x[i] > base + th:
            spikes[i] = 1
            base = base + th
        elif x[i] < base - th:
            spikes[i] = -1
            base = base - th
        base_trace[i] = base
    meta = EncoderMeta("SF", th, sample_rate=signal.sample_rate)
    return TernarySpikeTrain(spikes, init=float(x[0]), meta=meta), EncoderTrace(base_trace)


def _tae_exponent_bounds(a: float) -> tuple[int, int]:
    span = _TAE_CLAMP_DECADES * math.log(10.0) / math.log(a)
    return -int(math.floor(span)), int(math.floor(span))


def encode_tae(signal: AnalogSignal, threshold0: float | None = None, a: float = 1.1):
    """Threshold-adaptive encoding.

    Spike branches (non-strict comparisons) move the baseline by the
    *current* threshold and then multiply the threshold by a; the silent
    branch divides it by a.  The threshold is tracked as threshold0 * a**m
    with an integer exponent m clamped so the threshold stays within about
    six decades of threshold0 on either side; clamped steps still emit per
    the branch taken.
    """
    x = _check_signal(signal)
    th0 = _resolve_threshold(signal, threshold0)
    if not (a > 1):
        raise ConfigError(f"TAE requires a > 1, got {a}")
    m_min, m_max = _tae_exponent_bounds(a)
    n = x.size
    spikes = np.zeros(n, dtype=np.int8)
    base_trace = np.empty(n)
    th_trace = np.empty(n)
    base = x[0]
    m = 0
    base_trace[0] = base
    th_trace[0] = th0
    for i in range(1, n):
        th = th0 * a**m
        if x[i] >= base + th:
            spikes[i] = 1
            base = base + th
            m = min(m + 1, m_max)
        elif x[i] <= base - th:
            spikes[i] = -1
            base = base - th
            m = min(m + 1, m_max)
        else:
            m = max(m - 1, m_min)
        base_trace[i] = base
        th_trace[i] = th0 * a**m
    meta = EncoderMeta("TAE", th0, a=float(a), sample_rate=signal.sample_rate)
    return TernarySpikeTrain(spikes, init=float(x[0]), meta=meta), EncoderTrace(
        base_trace, th_trace
    )


def encode_tbr(signal: AnalogSignal, threshold0: float | None = None):
    """Threshold-based representation: sign of the first difference when its
    magnitude reaches threshold0 (inclusive).  The baseline integrates the
    emitted spikes so the train decodes like SF."""
    x = _check_signal(signal)
    th = _resolve_threshold(signal, threshold0)
    n = x.size
    spikes = np.zeros(n, dtype=np.int8)
    base_trace = np.empty(n)
    base = x[0]
    base_trace[0] = base
    for i in range(1, n):
        d = x[i] - x[i - 1]
        if d >= th:
            spikes[i] = 1
            base = base + th
        elif d <= -th:
            spikes[i] = -1
            base = base - th
        base_trace[i] = base
    meta = EncoderMeta("TBR", th, sample_rate=signal.sample_rate)
    return TernarySpikeTrain(spikes, init=float(x[0]), meta=meta), EncoderTrace(base_trace)


def encode_mw(signal: AnalogSignal, threshold0: float | None = None, window: int = 8):
    """Moving-window encoding: the baseline at step i is the mean of the
    previous min(i, window) samples; spikes are emitted on strict threshold
    crossings.  The mean baseline cannot be rebuilt from spikes alone, so MW
    trains do not decode."""
    x = _check_signal(signal)
    th = _resolve_threshold(signal, threshold0)
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    n = x.size
    spikes = np.zeros(n, dtype=np.int8)
    base_trace = np.empty(n)
    base_trace[0] = x[0]
    for i in range(1, n):
        base = float(np.mean(x[max(0, i - window) : i]))
        if x[i] > base + th:
            spikes[i] = 1
        elif x[i] < base - th:
            spikes[i] = -1
        base_trace[i] = base
    meta = EncoderMeta("MW", th, window=int(window), sample_rate=signal.sample_rate)
    return TernarySpikeTrain(spikes, init=float(x[0]), meta=meta), EncoderTrace(base_trace)


def encode(signal: AnalogSignal, meta: EncoderMeta):
    """Dispatch on an EncoderMeta."""
    if meta.method == "SF":
        return encode_sf(signal, meta.threshold0)
    if meta.method == "TAE":
        return encode_tae(signal, meta.threshold0, meta.a)
    if meta.method == "TBR":
        return encode_tbr(signal, meta.threshold0)
    if meta.method == "MW":
        return encode_mw(signal, meta.threshold0, meta.window)
    raise ConfigError(f"unknown encoder method {meta.method!r}")


def decode(train: TernarySpikeTrain) -> AnalogSignal:
    """Reconstruct a signal by replaying the encoder's baseline update rule.

    Output sample i is the baseline after processing spike i; sample 0 is
    init.  For SF/TAE/TBR the result equals the encoder's base_trace exactly
    (identical floating-point operations in identical order).  MW is
    rejected: its mean baseline is not a function of the spikes.
    """
    meta = train.meta
    if meta is None:
        raise DomainError("cannot decode a train without encoder metadata")
    if meta.method == "MW":
        raise DomainError(
            "MW trains are not decodable: the moving-mean baseline cannot be "
            "reconstructed from spikes alone"
        )
    v = train.values
    n = v.size
    out = np.empty(n)
    base = train.init
    if n:
        out[0] = base
    if meta.method in ("SF", "TBR"):
        th = meta.threshold0
        for i in range(1, n):
            if v[i] == 1:
                base = base + th
            elif v[i] == -1:
                base = base - th
            out[i] = base
    else:  # TAE: mirror the threshold adaptation, including on silent steps
        th0, a = meta.threshold0, meta.a
        m_min, m_max = _tae_exponent_bounds(a)
        m = 0
        for i in range(1, n):
            th = th0 * a**m
            if v[i] == 1:
                base = base + th
                m = min(m + 1, m_max)
            elif v[i] == -1:
                base = base - th
                m = min(m + 1, m_max)
            else:
                m = max(m - 1, m_min)
            out[i] = base
    return AnalogSignal(out, sample_rate=meta.sample_rate)


# ---------------------------------------------------------------------------
# Comparison harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    method: str
    threshold0: float | None
    param: float | None  # a for TAE, window for MW
    mae_mean: float | None
    mae_std: float | None
    firing_rate_mean: float
    entropy_mean: float
    n_signals: int


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    def row(self, method: str) -> ComparisonRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_csv(self) -> str:
        lines = ["method,threshold0,param,mae_mean,mae_std,firing_rate_mean,entropy_mean,n_signals"]
        for r in self.rows:
            def fmt(v):
                return "" if v is None else f"{v:.17g}"
            lines.append(
                f"{r.method},{fmt(r.threshold0)},{fmt(r.param)},{fmt(r.mae_mean)},"
                f"{fmt(r.mae_std)},{fmt(r.firing_rate_mean)},{fmt(r.entropy_mean)},{r.n_signals}"
            )
        return "\n".join(lines) + "\n"


def compare_encoders(corpus: list[AnalogSignal], configs: list[EncoderMeta]) -> ComparisonReport:
    """Encode every corpus signal under every config and tabulate
    reconstruction MAE (mean/std), mean firing rate, and mean entropy.

    MW rows report firing statistics but omit MAE (not decodable).  Rows are
    ordered by method name, then by input order for repeated methods.
    Thresholds given in the config apply to all signals; a config constructed
    with the per-signal default threshold is not representable here, so the
    harness requires explicit thresholds (EncoderMeta enforces > 0).
    """
    if configs and not corpus:
        raise DomainError("compare_encoders requires a non-empty corpus")
    indexed = sorted(enumerate(configs), key=lambda kv: (kv[1].method, kv[0]))
    rows = []
    for _, cfg in indexed:
        maes = []
        rates = []
        ents = []
        for sig in corpus:
            train, _ = encode(sig, cfg)
            rates.append(firing_rate(train))
            ents.append(empirical_entropy(train))
            if cfg.method != "MW":
                maes.append(mae(sig, decode(train)))
        rows.append(
            ComparisonRow(
                method=cfg.method,
                threshold0=cfg.threshold0,
                param=cfg.a if cfg.method == "TAE" else (float(cfg.window) if cfg.method == "MW" else None),
                mae_mean=float(np.mean(maes)) if maes else None,
                mae_std=float(np.std(maes)) if maes else None,
                firing_rate_mean=float(np.mean(rates)),
                entropy_mean=float(np.mean(ents)),
                n_signals=len(corpus),
            )
        )
    return ComparisonReport(tuple(rows))
