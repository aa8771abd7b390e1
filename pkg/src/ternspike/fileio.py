"""File formats: spike-train files, model files, and signal ingestion.

Spike-train format (text, bit-exact round-trip):

    #ternspike v1
    {"method": "TAE", "init": 0, "threshold0": 0.05, "a": 1.1, "sample_rate": 1, "length": 4}
    0
    1
    -1
    0

Line 1 is the magic, line 2 a single-line JSON header whose optional keys
appear exactly for the method (a for TAE, window for MW), then one spike
value per line.  Reals are serialized with 17 significant digits so parsing
reproduces the exact double.  LF line endings.

Model format: one JSON document with integer weights as the authoritative
payload and full-precision training provenance (theta_f, alpha_w) carried
alongside for reference only.
"""

from __future__ import annotations

import json
import wave

import numpy as np

from .errors import FileFormatError
from .qtsnn import QTLayer
from .signals import AnalogSignal, EncoderMeta, TernarySpikeTrain

SPIKE_MAGIC = "#ternspike v1"
MODEL_VERSION = 1


def _fmt17(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Signals
# ---------------------------------------------------------------------------

def read_signal_csv(path) -> AnalogSignal:
    """One real amplitude per line; sample rate defaults to 1 Hz."""
    values = []
    with open(path, "r", encoding="ascii") as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise FileFormatError(f"{path}:{ln}: not a number: {line!r}") from None
    if not values:
        raise FileFormatError(f"{path}: no samples found")
    return AnalogSignal(np.array(values))


def write_signal_csv(path, signal: AnalogSignal):
    with open(path, "w", encoding="ascii", newline="\n") as f:
        for v in signal.samples:
            f.write(_fmt17(v) + "\n")


def read_signal_wav(path) -> AnalogSignal:
    """16-bit PCM mono WAV, normalized to [-1, 1] by dividing by 32768."""
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1:
                raise FileFormatError(f"{path}: stereo WAV is unsupported, expected mono")
            if w.getsampwidth() != 2:
                raise FileFormatError(f"{path}: only 16-bit PCM WAV is supported")
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except wave.Error as e:
        raise FileFormatError(f"{path}: not a valid WAV file ({e})") from None
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if samples.size == 0:
        raise FileFormatError(f"{path}: WAV contains no frames")
    return AnalogSignal(samples, sample_rate=float(rate))


def load_signal(path) -> AnalogSignal:
    """Dispatch on extension: .wav is PCM audio, anything else is CSV."""
    if str(path).lower().endswith(".wav"):
        return read_signal_wav(path)
    return read_signal_csv(path)


# ---------------------------------------------------------------------------
# Spike trains
# ---------------------------------------------------------------------------

def write_spike_file(path, train: TernarySpikeTrain):
    meta = train.meta
    if meta is None:
        raise ValueError("spike train has no encoder metadata to serialize")
    fields = [
        f'"method": "{meta.method}"',
        f'"init": {_fmt17(train.init)}',
        f'"threshold0": {_fmt17(meta.threshold0)}',
    ]
    if meta.method == "TAE":
        fields.append(f'"a": {_fmt17(meta.a)}')
    if meta.method == "MW":
        fields.append(f'"window": {meta.window}')
    fields.append(f'"sample_rate": {_fmt17(meta.sample_rate)}')
    fields.append(f'"length": {len(train)}')
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(SPIKE_MAGIC + "\n")
        f.write("{" + ", ".join(fields) + "}\n")
        for v in train.values:
            f.write(f"{int(v)}\n")


def read_spike_file(path) -> TernarySpikeTrain:
    with open(path, "r", encoding="ascii") as f:
        lines = f.read().split("\n")
    if not lines or lines[0] != SPIKE_MAGIC:
        raise FileFormatError(f"{path}:1: missing magic line {SPIKE_MAGIC!r}")
    if len(lines) < 2:
        raise FileFormatError(f"{path}:2: missing JSON header")
    try:
        header = json.loads(lines[1])
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path}:2: bad JSON header ({e})") from None
    try:
        meta = EncoderMeta(
            method=header["method"],
            threshold0=float(header["threshold0"]),
            a=float(header["a"]) if "a" in header else None,
            window=int(header["window"]) if "window" in header else None,
            sample_rate=float(header.get("sample_rate", 1.0)),
        )
        init = float(header["init"])
        length = int(header["length"])
    except (KeyError, ValueError, TypeError) as e:
        raise FileFormatError(f"{path}:2: invalid header field ({e})") from None
    values = []
    for ln, line in enumerate(lines[2:], start=3):
        line = line.strip()
        if not line:
            continue
        if line not in ("-1", "0", "1"):
            raise FileFormatError(f"{path}:{ln}: spike value must be -1, 0, or 1, got {line!r}")
        values.append(int(line))
    if len(values) != length:
        raise FileFormatError(f"{path}: header declares {length} spikes, found {len(values)}")
    return TernarySpikeTrain(np.array(values, dtype=np.int8), init=init, meta=meta)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

def save_model(path, layers: list[QTLayer], timesteps: int, provenance: list[dict] | None = None):
    """Write the integer model as JSON.  provenance carries the optional
    full-precision training values (theta_f, alpha_w) per layer."""
    prov = provenance or [{} for _ in layers]
    doc = {
        "version": MODEL_VERSION,
        "layers": [
            {
                "kind": "dense",
                "fan_in": layer.fan_in,
                "fan_out": layer.fan_out,
                "bits_w": layer.bits_w,
                "bits_u": layer.bits_u,
                "k": layer.k,
                "theta": layer.theta,
                "w_int": [int(v) for v in layer.w_int.ravel()],
                "theta_f": float(p.get("theta_f", layer.theta)),
                "alpha_w": float(p.get("alpha_w", 1.0)),
            }
            for layer, p in zip(layers, prov)
        ],
        "T": int(timesteps),
        "readout": "spike_sum",
    }
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(doc, f)
        f.write("\n")


def load_model(path) -> tuple[list[QTLayer], int]:
    try:
        with open(path, "r", encoding="ascii") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path}: not valid JSON ({e})") from None
    try:
        if doc["version"] != MODEL_VERSION:
            raise FileFormatError(f"{path}: unsupported model version {doc['version']}")
        layers = []
        for i, ld in enumerate(doc["layers"]):
            w = np.array(ld["w_int"], dtype=np.int64).reshape(ld["fan_out"], ld["fan_in"])
            layers.append(
                QTLayer(w, k=int(ld["k"]), theta=int(ld["theta"]),
                        bits_w=int(ld["bits_w"]), bits_u=int(ld["bits_u"]))
            )
        return layers, int(doc["T"])
    except (KeyError, ValueError, TypeError) as e:
        raise FileFormatError(f"{path}: invalid model document ({e})") from None
