"""Theoretical energy accounting and a parametric memory-footprint model.

Energy follows the standard synaptic-operation convention: a dense network
evaluated conventionally pays one multiply-accumulate (MAC) per synapse; a
spiking network pays one accumulate (AC) per synapse actually traversed by
a spike.  Direct coding keeps the first layer analog, so it pays MACs on
that layer every timestep.  Default unit costs are 4.6 pJ per MAC and
0.9 pJ per AC (45 nm CMOS figures); reports are in microjoules.

The memory model counts packed weight bits, packed membrane bits per
batch element, and a small full-precision per-layer sidecar (threshold and
shift exponent, 8 bytes each).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

PJ_TO_UJ = 1e-6


@dataclass(frozen=True)
class EnergyCosts:
    e_mac: float = 4.6  # pJ
    e_ac: float = 0.9   # pJ

    def __post_init__(self):
        if not (self.e_mac > 0 and self.e_ac > 0):
            raise ConfigError("operation energies must be positive")


@dataclass(frozen=True)
class OpCountReport:
    """Synaptic-operation tallies for one network architecture.

    fan_in_total is the total synapse count crossed once per conventional
    forward pass (sum over layers of per-neuron fan-in times neuron count);
    fan_out_total is the same total viewed from the sending side, used by
    the spike-driven closed forms.  first_layer_fanin is the synapse count
    of the first layer only (the part direct coding keeps analog).
    """

    fan_in_total: int = 0
    fan_out_total: int = 0
    first_layer_fanin: int = 0
    timesteps: int = 1
    sparsity: float = 0.0

    def __post_init__(self):
        for name in ("fan_in_total", "fan_out_total", "first_layer_fanin"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.timesteps < 0:
            raise ConfigError("timesteps must be >= 0")
        if not (0.0 <= self.sparsity <= 1.0):
            raise ConfigError(f"sparsity must lie in [0, 1], got {self.sparsity}")


def energy_ann(counts: OpCountReport, costs: EnergyCosts = EnergyCosts()) -> float:
    """Conventional network: one MAC per synapse. Returns microjoules."""
    return costs.e_mac * counts.fan_in_total * PJ_TO_UJ


def energy_dc_snn(counts: OpCountReport, costs: EnergyCosts = EnergyCosts()) -> float:
    """Direct-coding SNN: the analog first layer pays MACs every timestep;
    the remaining layers pay ACs on the spike-traversed fraction."""
    mac_term = costs.e_mac * counts.timesteps * counts.first_layer_fanin
    rest = counts.fan_out_total - counts.first_layer_fanin
    if rest < 0:
        raise DomainError("fan_out_total smaller than first_layer_fanin")
    ac_term = costs.e_ac * counts.timesteps * counts.sparsity * rest
    return (mac_term + ac_term) * PJ_TO_UJ


def energy_qtsnn(counts: OpCountReport, costs: EnergyCosts = EnergyCosts()) -> float:
    """Fully spike-driven network: ACs only, on every layer."""
    return costs.e_ac * counts.timesteps * counts.sparsity * counts.fan_out_total * PJ_TO_UJ


def energy_from_recorded_ac(ac_count: int, costs: EnergyCosts = EnergyCosts()) -> float:
    """Exact spike-driven energy from a recorded accumulate count
    (e.g. the integer path's op recorder). Returns microjoules."""
    if ac_count < 0:
        raise DomainError("ac_count must be >= 0")
    return costs.e_ac * ac_count * PJ_TO_UJ


@dataclass(frozen=True)
class MemoryReport:
    weights_bytes: float
    sidecar_bytes: float
    membrane_bytes: float

    @property
    def total_bytes(self) -> float:
        return self.weights_bytes + self.sidecar_bytes + self.membrane_bytes

    def as_rows(self) -> list[tuple[str, float]]:
        return [
            ("weights", self.weights_bytes),
            ("sidecar", self.sidecar_bytes),
            ("membranes", self.membrane_bytes),
            ("total", self.total_bytes),
        ]


SIDECAR_BYTES_PER_LAYER = 16  # full-precision threshold + shift exponent, 8 bytes each


def memory_footprint(layer_shapes, bits_w: int, bits_u: int, batch: int = 1) -> MemoryReport:
    """Itemized model memory: packed weights + per-layer sidecar + packed
    membranes replicated per batch element.

    layer_shapes is a sequence of (weight_count, neuron_count) pairs; conv
    layers should pass their true (shared) kernel parameter counts.
    """
    if batch < 1:
        raise ConfigError(f"batch must be >= 1, got {batch}")
    if bits_w < 1 or bits_u < 1:
        raise ConfigError("bit widths must be >= 1")
    shapes = list(layer_shapes)
    w_total = sum(int(w) for w, _ in shapes)
    n_total = sum(int(n) for _, n in shapes)
    if w_total < 0 or n_total < 0:
        raise ConfigError("layer shapes must be non-negative")
    return MemoryReport(
        weights_bytes=w_total * bits_w / 8,
        sidecar_bytes=len(shapes) * SIDECAR_BYTES_PER_LAYER,
        membrane_bytes=n_total * bits_u / 8 * batch,
    )


def counts_from_shapes(layer_shapes, timesteps: int, sparsity: float) -> OpCountReport:
    """Build an OpCountReport from (fan_in, fan_out)-style dense layer shapes.

    layer_shapes is a sequence of (fan_in, fan_out) pairs per layer; the
    synapse total of layer l is fan_in * fan_out.
    """
    totals = [int(fi) * int(fo) for fi, fo in layer_shapes]
    return OpCountReport(
        fan_in_total=sum(totals),
        fan_out_total=sum(totals),
        first_layer_fanin=totals[0] if totals else 0,
        timesteps=timesteps,
        sparsity=sparsity,
    )
