"""ternspike: ternary spike encoding, quantized ternary SNN inference,
and energy/memory accounting for neuromorphic signal pipelines."""

from .signals import (
    AnalogSignal,
    EncoderMeta,
    TernarySpikeTrain,
    empirical_entropy,
    firing_rate,
    gen_corpus,
    mae,
)
from .encoding import (
    ComparisonReport,
    EncoderTrace,
    compare_encoders,
    decode,
    default_threshold,
    encode,
    encode_mw,
    encode_sf,
    encode_tae,
    encode_tbr,
)
from .tlif import (
    LayerSpec,
    NetworkSpec,
    TLIFParams,
    TLIFState,
    count_spikes,
    forward,
    tlif_step,
)
from .quant import QuantConfig, calibrate, constrain_dyadic, from_int, quantize, to_int
from .qtsnn import QTLayer, QTState, qt_forward, qt_step, reference_oracle, shift_scale
from .energy import (
    EnergyCosts,
    OpCountReport,
    energy_ann,
    energy_dc_snn,
    energy_from_recorded_ac,
    energy_qtsnn,
    memory_footprint,
)
from .training import (
    TrainConfig,
    export_for_inference,
    grad_check,
    ste_quantize,
    surrogate_fire,
    train_toy,
)

__all__ = [
    "AnalogSignal",
    "EncoderMeta",
    "TernarySpikeTrain",
    "empirical_entropy",
    "firing_rate",
    "gen_corpus",
    "mae",
    "ComparisonReport",
    "EncoderTrace",
    "compare_encoders",
    "decode",
    "default_threshold",
    "encode",
    "encode_mw",
    "encode_sf",
    "encode_tae",
    "encode_tbr",
    "LayerSpec",
    "NetworkSpec",
    "TLIFParams",
    "TLIFState",
    "count_spikes",
    "forward",
    "tlif_step",
    "QuantConfig",
    "calibrate",
    "constrain_dyadic",
    "from_int",
    "quantize",
    "to_int",
    "QTLayer",
    "QTState",
    "qt_forward",
    "qt_step",
    "reference_oracle",
    "shift_scale",
    "EnergyCosts",
    "OpCountReport",
    "energy_ann",
    "energy_dc_snn",
    "energy_from_recorded_ac",
    "energy_qtsnn",
    "memory_footprint",
    "TrainConfig",
    "export_for_inference",
    "grad_check",
    "ste_quantize",
    "surrogate_fire",
    "train_toy",
]

__version__ = "0.1.0"
