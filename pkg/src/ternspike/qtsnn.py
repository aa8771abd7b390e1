"""Integer-only, bit-shift ternary SNN inference.

A quantized layer holds integer weights, an integer firing threshold theta
(in membrane-scale units), and one integer exponent k that encodes the
ratio between the weight scale and the membrane scale as a power of two.
One inference step is, per neuron:

    X = sum of +-w over nonzero input spikes      (adds/subs only)
    H = (X shifted by k) + (carried membrane >> 1)
    fire +1 / -1 / 0 against +-theta; membrane <- 0 on fire, else
    H saturated to the membrane bit width.

The synaptic sum is computed by masked column sums, never by a general
multiply, and an op recorder audits that: its mul counter stays zero while
adds, shifts, and compares are tallied.  The carried membrane is zeroed
for neurons that fired on the previous step (hard reset) before the >> 1
decay, which realizes the fixed leak factor 1/2.

`reference_oracle` re-derives the same dynamics from real-valued weights
and scale factors in float arithmetic, flooring onto the membrane-scale
grid exactly where the integer path truncates.  It is the independent
check that the integer plumbing is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .quant import K_RANGE

ACC_BITS = 32
ACC_MAX = 2 ** (ACC_BITS - 1) - 1
ACC_MIN = -(2 ** (ACC_BITS - 1))


@dataclass(frozen=True)
class QTLayer:
    """Integer weights plus the quantization sidecar needed to run them."""

    w_int: np.ndarray  # (fan_out, fan_in), entries within the bits_w range
    k: int             # log2(weight scale / membrane scale)
    theta: int         # integer firing threshold, ceil(v_th / membrane scale)
    bits_w: int = 8
    bits_u: int = 8

    def __post_init__(self):
        w = np.asarray(self.w_int)
        if w.dtype.kind not in "iu":
            if not np.all(w == np.trunc(w)):
                raise ConfigError("w_int must be integer-valued")
        w = w.astype(np.int64)
        object.__setattr__(self, "w_int", w)
        if w.ndim != 2:
            raise DimensionError(f"w_int must be 2-D, got shape {w.shape}")
        limit = 2 ** (self.bits_w - 1) - 1
        if np.any(np.abs(w) > limit):
            raise ConfigError(f"weights exceed the {self.bits_w}-bit range [-{limit}, {limit}]")
        if self.theta < 1:
            raise ConfigError(f"theta must be >= 1, got {self.theta}")
        if not (-K_RANGE <= self.k <= K_RANGE):
            raise ConfigError(f"k must lie in [-{K_RANGE}, {K_RANGE}], got {self.k}")

    @property
    def fan_out(self) -> int:
        return self.w_int.shape[0]

    @property
    def fan_in(self) -> int:
        return self.w_int.shape[1]

    @property
    def u_limit(self) -> int:
        return 2 ** (self.bits_u - 1) - 1


@dataclass
class QTState:
    u_int: np.ndarray
    last_spike: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "QTState":
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int8))


@dataclass
class OpRecorder:
    """Arithmetic audit for one network instance.

    ac counts one accumulate per (nonzero weight, nonzero spike) pair; zero
    weights and zero spikes are free.  mul stays zero on the integer path;
    the no-multiplication property is asserted against it.
    """

    ac: int = 0
    shifts: int = 0
    compares: int = 0
    mul: int = 0
    per_layer_ac: list[int] = field(default_factory=list)
    per_layer_spikes: list[int] = field(default_factory=list)
    per_layer_slots: list[int] = field(default_factory=list)

    def overall_sparsity(self) -> float:
        total = sum(self.per_layer_slots)
        return sum(self.per_layer_spikes) / total if total else 0.0


def shift_scale(r, x: int):
    """r * 2**x in integer arithmetic: left shift for x > 0, arithmetic
    (floor) right shift for x < 0, identity at 0.  Results saturate to the
    signed 32-bit accumulator bounds."""
    if not (-31 <= x <= 31):
        raise DomainError(f"shift exponent must lie in [-31, 31], got {x}")
    arr = np.asarray(r, dtype=np.int64)
    if x > 0:
        out = arr << x
    elif x < 0:
        out = arr >> (-x)
    else:
        out = arr
    out = np.clip(out, ACC_MIN, ACC_MAX)
    return int(out) if np.isscalar(r) else out


def _check_ternary(x: np.ndarray):
    if not np.all(np.isin(x, (-1, 0, 1))):
        raise DomainError("input spikes must lie in {-1, 0, 1}")


def _masked_synaptic_sum(w_int: np.ndarray, in_spikes: np.ndarray, rec: OpRecorder | None):
    """X_i = sum_j w_ij * s_j for ternary s, computed with adds/subs only:
    columns with s=+1 are added, columns with s=-1 subtracted."""
    pos = in_spikes == 1
    neg = in_spikes == -1
    x = w_int[:, pos].sum(axis=1) - w_int[:, neg].sum(axis=1)
    if rec is not None:
        active = pos | neg
        rec.ac += int(np.count_nonzero(w_int[:, active]))
    return x


def qt_step(state: QTState, layer: QTLayer, in_spikes, rec: OpRecorder | None = None):
    """One integer inference step. Returns (new_state, out_spikes)."""
    s = np.asarray(in_spikes)
    if s.shape != (layer.fan_in,):
        raise DimensionError(f"expected {layer.fan_in} input spikes, got shape {s.shape}")
    if state.u_int.shape != (layer.fan_out,):
        raise DimensionError("state size does not match layer fan_out")
    _check_ternary(s)
    x = _masked_synaptic_sum(layer.w_int, s, rec)
    u_reset = np.where(state.last_spike != 0, 0, state.u_int)
    h = shift_scale(x, layer.k) + shift_scale(u_reset, -1)
    h = np.clip(h, ACC_MIN, ACC_MAX)
    out = np.where(h >= layer.theta, 1, np.where(h <= -layer.theta, -1, 0)).astype(np.int8)
    u_new = np.where(out != 0, 0, np.clip(h, -layer.u_limit, layer.u_limit))
    if rec is not None:
        rec.shifts += 2 * layer.fan_out
        rec.compares += 2 * layer.fan_out
    return QTState(u_new.astype(np.int64), out), out


@dataclass
class QTRunRecord:
    """Full trace of a recorded integer forward pass."""

    spikes: list[np.ndarray]      # per layer, (T, fan_out) int8
    membranes: list[np.ndarray]   # per layer, (T, fan_out) int64, post-step
    recorder: OpRecorder


def qt_forward(layers: list[QTLayer], inputs, record: bool = False):
    """Cascade qt_step across layers for every timestep.

    inputs has shape (T, fan_in of the first layer).  The readout is the
    per-class sum of output-layer spike values; classification is argmax
    with ties toward the lowest index.  Returns scores, or (scores, record)
    with the full spike/membrane trace and the op audit when record=True.
    """
    x = np.asarray(inputs)
    if x.ndim != 2:
        raise DimensionError(f"inputs must be (T, fan_in), got shape {x.shape}")
    t_steps = x.shape[0]
    if x.shape[1] != layers[0].fan_in:
        raise DimensionError(f"inputs fan_in {x.shape[1]} != layer fan_in {layers[0].fan_in}")
    for a, b in zip(layers, layers[1:]):
        if a.fan_out != b.fan_in:
            raise ConfigError(f"layer dimensions do not chain: {a.fan_out} -> {b.fan_in}")
    _check_ternary(x)

    rec = OpRecorder()
    rec.per_layer_ac = [0] * len(layers)
    rec.per_layer_spikes = [0] * len(layers)
    rec.per_layer_slots = [layer.fan_out * t_steps for layer in layers]
    states = [QTState.zeros(layer.fan_out) for layer in layers]
    trace_spikes = [np.zeros((t_steps, l.fan_out), dtype=np.int8) for l in layers]
    trace_u = [np.zeros((t_steps, l.fan_out), dtype=np.int64) for l in layers]
    scores = np.zeros(layers[-1].fan_out, dtype=np.int64)

    for t in range(t_steps):
        sp = x[t]
        for li, layer in enumerate(layers):
            ac_before = rec.ac
            states[li], out = qt_step(states[li], layer, sp, rec)
            rec.per_layer_ac[li] += rec.ac - ac_before
            rec.per_layer_spikes[li] += int(np.count_nonzero(out))
            trace_spikes[li][t] = out
            trace_u[li][t] = states[li].u_int
            sp = out
        scores += sp
    if record:
        return scores, QTRunRecord(trace_spikes, trace_u, rec)
    return scores


@dataclass
class OracleRecord:
    spikes: list[np.ndarray]      # per layer, (T, fan_out) int8
    membranes: list[np.ndarray]   # per layer, (T, fan_out) float64, post-step


def reference_oracle(layers: list[QTLayer], alpha_u, inputs):
    """Real-arithmetic dual-scale dynamics, the independent oracle.

    alpha_u gives the membrane scale per layer (scalar broadcasts); the
    weight scale is alpha_u * 2**k.  The membrane lives as a real value and
    every quantity the committed semantics keeps on the membrane-scale grid
    is floored onto that grid: the rescaled synaptic current and the halved
    carried membrane.  Firing compares against theta * alpha_u, and stored
    membranes clip to the membrane bit range (scaled).

    Returns (scores, OracleRecord).  With power-of-two alpha_u the float
    arithmetic is exact, so spikes and membranes can be compared to the
    integer path verbatim.
    """
    x = np.asarray(inputs)
    _check_ternary(x)
    t_steps = x.shape[0]
    alphas = np.broadcast_to(np.asarray(alpha_u, dtype=np.float64), (len(layers),))
    if np.any(alphas <= 0):
        raise ConfigError("membrane scales must be positive")
    w_real = [a * 2.0**l.k * l.w_int.astype(np.float64) for a, l in zip(alphas, layers)]
    u = [np.zeros(l.fan_out) for l in layers]
    last = [np.zeros(l.fan_out, dtype=np.int8) for l in layers]
    trace_spikes = [np.zeros((t_steps, l.fan_out), dtype=np.int8) for l in layers]
    trace_u = [np.zeros((t_steps, l.fan_out)) for l in layers]
    scores = np.zeros(layers[-1].fan_out)

    for t in range(t_steps):
        sp = x[t].astype(np.float64)
        for li, layer in enumerate(layers):
            a = alphas[li]
            current = w_real[li] @ sp                      # real synaptic drive
            current = np.floor(current / a) * a            # onto the membrane grid
            carried = np.where(last[li] != 0, 0.0, u[li])  # hard reset
            carried = np.floor(carried / a / 2.0) * a      # halve, floor on grid
            h = carried + current
            v_th = layer.theta * a
            out = np.where(h >= v_th, 1, np.where(h <= -v_th, -1, 0)).astype(np.int8)
            lim = layer.u_limit * a
            u[li] = np.where(out != 0, 0.0, np.clip(h, -lim, lim))
            last[li] = out
            trace_spikes[li][t] = out
            trace_u[li][t] = u[li]
            sp = out.astype(np.float64)
        scores += sp
    return scores, OracleRecord(trace_spikes, trace_u)
