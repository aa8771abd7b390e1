"""Full-precision ternary Leaky Integrate-and-Fire reference network.

The neuron carries a real membrane potential u.  Each step:

    u_new = tau * u_prev * (1 - |last_spike|) + input_current

followed by symmetric ternary firing: +1 at u_new >= v_th, -1 at
u_new <= -v_th, 0 otherwise.  The (1 - |last_spike|) factor is the hard
reset: a neuron that fired contributes no carried membrane on the next
step.  Membranes are not clipped here; this module is the semantic
baseline that the quantized path is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DomainError


@dataclass(frozen=True)
class TLIFParams:
    tau: float = 0.5  # leak factor, in (0, 1]; 0.5 matches the shift-based path
    v_th: float = 1.0

    def __post_init__(self):
        if not (0 < self.tau <= 1):
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if not (self.v_th > 0):
            raise ConfigError(f"v_th must be > 0, got {self.v_th}")


@dataclass
class TLIFState:
    u: np.ndarray
    last_spike: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "TLIFState":
        return cls(np.zeros(n), np.zeros(n, dtype=np.int8))


@dataclass(frozen=True)
class LayerSpec:
    """One layer: dense (fan_in -> fan_out) or conv1d with explicit
    kernel/stride, no padding, and channel counts.  For conv1d the fan_in /
    fan_out are the flattened (channels * positions) vector lengths."""

    kind: str
    fan_in: int
    fan_out: int
    in_channels: int = 1
    out_channels: int = 1
    kernel: int | None = None
    stride: int = 1

    def __post_init__(self):
        if self.kind not in ("dense", "conv1d"):
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv1d":
            if self.kernel is None or self.kernel < 1 or self.stride < 1:
                raise ConfigError("conv1d needs kernel >= 1 and stride >= 1")
            in_len, rem = divmod(self.fan_in, self.in_channels)
            if rem:
                raise ConfigError("conv1d fan_in must be divisible by in_channels")
            out_len = (in_len - self.kernel) // self.stride + 1
            if out_len < 1:
                raise ConfigError("conv1d kernel longer than input")
            if self.fan_out != self.out_channels * out_len:
                raise ConfigError(
                    f"conv1d fan_out must be out_channels*out_len = "
                    f"{self.out_channels * out_len}, got {self.fan_out}"
                )

    @property
    def weight_count(self) -> int:
        """True parameter count (conv kernels are shared across positions)."""
        if self.kind == "dense":
            return self.fan_in * self.fan_out
        return self.out_channels * self.in_channels * self.kernel

    def as_matrix(self, weights: np.ndarray) -> np.ndarray:
        """Materialize the layer as a (fan_out, fan_in) matrix.

        Dense weights pass through; conv1d kernels of shape
        (out_channels, in_channels, kernel) are unrolled into the block
        Toeplitz matrix so every downstream path runs one matvec.
        """
        w = np.asarray(weights, dtype=np.float64)
        if self.kind == "dense":
            if w.shape != (self.fan_out, self.fan_in):
                raise DimensionError(f"expected {(self.fan_out, self.fan_in)}, got {w.shape}")
            return w
        in_len = self.fan_in // self.in_channels
        out_len = self.fan_out // self.out_channels
        if w.shape != (self.out_channels, self.in_channels, self.kernel):
            raise DimensionError(
                f"expected conv kernel {(self.out_channels, self.in_channels, self.kernel)}, got {w.shape}"
            )
        mat = np.zeros((self.fan_out, self.fan_in))
        for oc in range(self.out_channels):
            for pos in range(out_len):
                row = oc * out_len + pos
                start = pos * self.stride
                for ic in range(self.in_channels):
                    cols = ic * in_len + start
                    mat[row, cols : cols + self.kernel] = w[oc, ic]
        return mat


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]
    timesteps: int
    params: tuple[TLIFParams, ...]

    def __post_init__(self):
        if self.timesteps < 1:
            raise ConfigError(f"timesteps must be >= 1, got {self.timesteps}")
        if len(self.params) != len(self.layers):
            raise ConfigError("need one TLIFParams per layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.fan_out != b.fan_in:
                raise ConfigError(f"layer dimensions do not chain: {a.fan_out} -> {b.fan_in}")


@dataclass
class RunRecord:
    """Spike bookkeeping from a recorded forward pass."""

    spike_counts: list[int] = field(default_factory=list)  # nonzero emissions per layer
    slot_counts: list[int] = field(default_factory=list)   # neurons * timesteps per layer

    def layer_sparsity(self) -> list[float]:
        return [s / n if n else 0.0 for s, n in zip(self.spike_counts, self.slot_counts)]

    def overall_sparsity(self) -> float:
        total = sum(self.slot_counts)
        return sum(self.spike_counts) / total if total else 0.0


def count_spikes(record: RunRecord) -> dict:
    """Per-layer and overall sparsity (fraction of nonzero emissions)."""
    return {"per_layer": record.layer_sparsity(), "overall": record.overall_sparsity()}


def _check_ternary(x: np.ndarray):
    if not np.all(np.isin(x, (-1, 0, 1))):
        raise DomainError("input spikes must lie in {-1, 0, 1}")


def tlif_step(state: TLIFState, params: TLIFParams, input_current) -> tuple[TLIFState, np.ndarray]:
    """One membrane update + firing decision. Returns (new_state, spikes)."""
    cur = np.asarray(input_current, dtype=np.float64)
    if cur.shape != state.u.shape:
        raise DimensionError(f"current shape {cur.shape} != state shape {state.u.shape}")
    u_new = params.tau * state.u * (1 - np.abs(state.last_spike)) + cur
    spikes = np.where(u_new >= params.v_th, 1, np.where(u_new <= -params.v_th, -1, 0)).astype(np.int8)
    return TLIFState(u_new, spikes), spikes


def forward(net: NetworkSpec, weights: list[np.ndarray], inputs: np.ndarray, record: bool = False):
    """Run a ternary input batch of shape (T, fan_in) through the network.

    The readout is the per-class sum of output-layer spike values over all
    timesteps.  Returns the score vector, or (scores, RunRecord) when
    record=True.
    """
    x = np.asarray(inputs)
    if x.ndim != 2 or x.shape[0] != net.timesteps or x.shape[1] != net.layers[0].fan_in:
        raise DimensionError(
            f"inputs must have shape (T={net.timesteps}, fan_in={net.layers[0].fan_in}), got {x.shape}"
        )
    _check_ternary(x)
    mats = [spec.as_matrix(w) for spec, w in zip(net.layers, weights)]
    states = [TLIFState.zeros(spec.fan_out) for spec in net.layers]
    rec = RunRecord([0] * len(net.layers), [spec.fan_out * net.timesteps for spec in net.layers])
    scores = np.zeros(net.layers[-1].fan_out)
    for t in range(net.timesteps):
        sp = x[t].astype(np.float64)
        for li, (mat, params) in enumerate(zip(mats, net.params)):
            current = mat @ sp
            states[li], out = tlif_step(states[li], params, current)
            rec.spike_counts[li] += int(np.count_nonzero(out))
            sp = out.astype(np.float64)
        scores += sp
    if record:
        return scores, rec
    return scores


def readout_class(scores: np.ndarray) -> int:
    """Argmax with ties broken toward the lowest class index."""
    return int(np.argmax(scores))
