"""Command-line interface.

Subcommands: encode, decode, eval-encoders, train, infer, energy, mem.
Every command is deterministic given its inputs, flags, and seed.  The
effective configuration is echoed to stderr for reproducibility.  Exit
codes: 0 success, 1 domain/validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import encoding, fileio
from .energy import EnergyCosts, OpCountReport, counts_from_shapes, energy_ann, energy_dc_snn, energy_qtsnn, memory_footprint
from .errors import ConfigError, DomainError
from .qtsnn import qt_forward
from .signals import EncoderMeta, empirical_entropy, firing_rate, gen_corpus
from .training import TrainConfig, export_for_inference, train_toy


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as validation errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _echo_config(args: argparse.Namespace):
    pairs = {k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None}
    print("config: " + " ".join(f"{k}={v}" for k, v in pairs.items()), file=sys.stderr)


def _load_and_prepare(path, normalize: bool):
    sig = fileio.load_signal(path)
    if normalize:
        peak = float(np.max(np.abs(sig.samples)))
        if peak > 0:
            sig = dataclasses.replace(sig, samples=sig.samples / peak)
        print(f"normalize: peak={peak:.17g}", file=sys.stderr)
    return sig


def _encoder_meta_from_args(args) -> EncoderMeta:
    method = args.method.upper()
    return EncoderMeta(
        method=method,
        threshold0=args.threshold,
        a=args.a if method == "TAE" else None,
        window=args.window if method == "MW" else None,
        sample_rate=1.0,
    )


def cmd_encode(args) -> int:
    sig = _load_and_prepare(args.input, args.normalize)
    method = args.method.upper()
    threshold = args.threshold if args.threshold is not None else encoding.default_threshold(sig)
    if method == "SF":
        train, _ = encoding.encode_sf(sig, threshold)
    elif method == "TAE":
        train, _ = encoding.encode_tae(sig, threshold, args.a)
    elif method == "TBR":
        train, _ = encoding.encode_tbr(sig, threshold)
    elif method == "MW":
        train, _ = encoding.encode_mw(sig, threshold, args.window)
    else:
        raise ConfigError(f"unknown method {args.method!r}")
    fileio.write_spike_file(args.output, train)
    print(f"firing_rate {firing_rate(train):.3f}")
    print(f"entropy_bits {empirical_entropy(train):.4f}")
    return 0


def cmd_decode(args) -> int:
    train = fileio.read_spike_file(args.spikes)
    fileio.write_signal_csv(args.output, encoding.decode(train))
    return 0


def cmd_eval_encoders(args) -> int:
    if args.inputs:
        corpus = [fileio.load_signal(p) for p in args.inputs]
    else:
        corpus = gen_corpus(args.kind, args.n, args.length, args.seed)
    configs = []
    for m in args.methods.split(","):
        m = m.strip().upper()
        configs.append(
            EncoderMeta(
                method=m,
                threshold0=args.threshold,
                a=args.a if m == "TAE" else None,
                window=args.window if m == "MW" else None,
            )
        )
    report = encoding.compare_encoders(corpus, configs)
    text = report.to_csv()
    if args.output:
        with open(args.output, "w", encoding="ascii", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


_TRAIN_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}


def _train_config_from(args) -> TrainConfig:
    values = {}
    if args.config:
        with open(args.config, "r", encoding="ascii") as f:
            doc = json.load(f)
        unknown = set(doc) - set(_TRAIN_FIELDS)
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        values.update(doc)
    for name in ("epochs", "batch_size", "lr", "momentum", "gamma", "seed", "timesteps"):
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if "hidden" in values:
        values["hidden"] = tuple(values["hidden"])
    return TrainConfig(**values)


def cmd_train(args) -> int:
    cfg = _train_config_from(args)
    print("train config: " + json.dumps(dataclasses.asdict(cfg)), file=sys.stderr)
    model, history = train_toy(cfg)
    layers = export_for_inference(model)
    provenance = [{"theta_f": lv.theta_f, "alpha_w": lv.alpha_w} for lv in model.layers]
    fileio.save_model(args.model, layers, cfg.timesteps, provenance)
    from .training import history_to_csv

    with open(args.metrics, "w", encoding="ascii", newline="\n") as f:
        f.write(history_to_csv(history))
    final = history[-1]
    print(f"final train_acc {final.train_acc:.4f}")
    print(f"final test_acc {final.test_acc:.4f}")
    return 0


def _assemble_model_input(train_values: np.ndarray, timesteps: int, fan_in: int) -> np.ndarray:
    """Reshape a flat spike train into (T, fan_in) model input.

    When the train provides one lane fewer than the model expects, the
    missing lane is the constant +1 bias channel appended at encode time
    during training; it is re-appended here.
    """
    length = train_values.size
    if length == timesteps * fan_in:
        return train_values.reshape(timesteps, fan_in)
    if length == timesteps * (fan_in - 1):
        chunks = train_values.reshape(timesteps, fan_in - 1)
        bias = np.ones((timesteps, 1), dtype=chunks.dtype)
        return np.concatenate([chunks, bias], axis=1)
    raise DomainError(
        f"spike train of length {length} does not fit model input "
        f"T={timesteps} x fan_in={fan_in} (with or without the bias lane)"
    )


def cmd_infer(args) -> int:
    layers, timesteps = fileio.load_model(args.model)
    if args.spikes:
        train = fileio.read_spike_file(args.spikes)
        values = train.values
    else:
        if not args.input:
            raise ConfigError("infer needs --spikes or --input")
        sig = _load_and_prepare(args.input, args.normalize)
        threshold = args.threshold if args.threshold is not None else encoding.default_threshold(sig)
        train, _ = encoding.encode_tae(sig, threshold, args.a)
        values = train.values
    x = _assemble_model_input(np.asarray(values), timesteps, layers[0].fan_in)
    scores, rec = qt_forward(layers, x, record=True)
    print(f"predicted_class {int(np.argmax(scores))}")
    print("scores " + " ".join(str(int(s)) for s in scores))
    print(f"sparsity {rec.recorder.overall_sparsity():.4f}")
    print(f"ac_ops {rec.recorder.ac}")
    return 0


def _model_layer_shapes(layers) -> list[tuple[int, int]]:
    return [(layer.fan_in, layer.fan_out) for layer in layers]


def cmd_energy(args) -> int:
    costs = EnergyCosts(e_mac=args.e_mac, e_ac=args.e_ac)
    rows = []
    if args.model:
        layers, timesteps = fileio.load_model(args.model)
        t = args.timesteps if args.timesteps is not None else timesteps
        counts = counts_from_shapes(_model_layer_shapes(layers), t, args.sparsity)
        rows.append(("ANN", counts.fan_in_total, 0, 1, energy_ann(dataclasses.replace(counts, timesteps=1))))
        rows.append(("DC+SNN", counts.first_layer_fanin, counts.fan_out_total - counts.first_layer_fanin, t, energy_dc_snn(counts, costs)))
        rows.append(("TAE+QT-SNN", 0, counts.fan_out_total, t, energy_qtsnn(counts, costs)))
    else:
        if args.ann_ops is not None:
            c = OpCountReport(fan_in_total=int(args.ann_ops))
            rows.append(("ANN", int(args.ann_ops), 0, 1, energy_ann(c, costs)))
        if args.dc_first is not None:
            if args.dc_rest is None or args.sparsity_dc is None or args.timesteps is None:
                raise ConfigError("DC row needs --dc-first, --dc-rest, --sparsity-dc, --timesteps")
            c = OpCountReport(
                fan_out_total=int(args.dc_first + args.dc_rest),
                first_layer_fanin=int(args.dc_first),
                timesteps=args.timesteps,
                sparsity=args.sparsity_dc,
            )
            rows.append(("DC+SNN", int(args.dc_first), int(args.dc_rest), args.timesteps, energy_dc_snn(c, costs)))
        if args.qt_ops is not None:
            if args.sparsity_qt is None or args.timesteps is None:
                raise ConfigError("QT row needs --qt-ops, --sparsity-qt, --timesteps")
            c = OpCountReport(
                fan_out_total=int(args.qt_ops), timesteps=args.timesteps, sparsity=args.sparsity_qt
            )
            rows.append(("TAE+QT-SNN", 0, int(args.qt_ops), args.timesteps, energy_qtsnn(c, costs)))
        if not rows:
            raise ConfigError("give --model or at least one of --ann-ops/--dc-first/--qt-ops")
    header = "method,mac_ops,ac_ops,timesteps,energy_uJ"
    lines = [header] + [f"{n},{m},{a},{t},{e:.2f}" for n, m, a, t, e in rows]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="ascii", newline="\n") as f:
            f.write(text)
    for n, m, a, t, e in rows:
        print(f"{n} {e:.2f} uJ")
    return 0


def cmd_mem(args) -> int:
    layers, _ = fileio.load_model(args.model)
    bits_w = args.bits_w if args.bits_w is not None else layers[0].bits_w
    bits_u = args.bits_u if args.bits_u is not None else layers[0].bits_u
    shapes = [(layer.fan_in * layer.fan_out, layer.fan_out) for layer in layers]
    report = memory_footprint(shapes, bits_w, bits_u, args.batch)
    for name, value in report.as_rows():
        print(f"{name}_bytes {value:.1f}")
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="ternspike", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode a WAV/CSV signal into a spike file")
    enc.add_argument("input")
    enc.add_argument("output")
    enc.add_argument("--method", default="tae", choices=["sf", "tae", "tbr", "mw", "SF", "TAE", "TBR", "MW"])
    enc.add_argument("--threshold", type=float, default=None, help="default: std of first differences")
    enc.add_argument("--a", type=float, default=1.1, help="TAE adaptation factor")
    enc.add_argument("--window", type=int, default=8, help="MW window")
    enc.add_argument("--normalize", action="store_true", help="peak-normalize before encoding")
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", help="reconstruct a CSV signal from a spike file")
    dec.add_argument("spikes")
    dec.add_argument("output")
    dec.set_defaults(func=cmd_decode)

    ev = sub.add_parser("eval-encoders", help="encoder comparison table over a corpus")
    ev.add_argument("--kind", default="plateau_peak")
    ev.add_argument("--n", type=int, default=20)
    ev.add_argument("--length", type=int, default=2000)
    ev.add_argument("--seed", type=int, default=42)
    ev.add_argument("--inputs", nargs="*", help="explicit signal files instead of a synthetic corpus")
    ev.add_argument("--methods", default="sf,tae,tbr,mw")
    ev.add_argument("--threshold", type=float, required=True)
    ev.add_argument("--a", type=float, default=1.1)
    ev.add_argument("--window", type=int, default=8)
    ev.add_argument("--output", default=None)
    ev.set_defaults(func=cmd_eval_encoders)

    tr = sub.add_parser("train", help="train the toy waveform classifier")
    tr.add_argument("--config", default=None, help="JSON file with TrainConfig fields")
    tr.add_argument("--model", required=True, help="output model path")
    tr.add_argument("--metrics", required=True, help="output metrics CSV path")
    tr.add_argument("--epochs", type=int, default=None)
    tr.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    tr.add_argument("--lr", type=float, default=None)
    tr.add_argument("--momentum", type=float, default=None)
    tr.add_argument("--gamma", type=float, default=None)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--timesteps", type=int, default=None)
    tr.set_defaults(func=cmd_train)

    inf = sub.add_parser("infer", help="classify a spike file or raw signal")
    inf.add_argument("--model", required=True)
    inf.add_argument("--spikes", default=None)
    inf.add_argument("--input", default=None, help="raw signal; TAE-encoded before inference")
    inf.add_argument("--threshold", type=float, default=None)
    inf.add_argument("--a", type=float, default=1.1)
    inf.add_argument("--normalize", action="store_true")
    inf.set_defaults(func=cmd_infer)

    en = sub.add_parser("energy", help="synaptic-operation energy report")
    en.add_argument("--model", default=None)
    en.add_argument("--sparsity", type=float, default=0.0)
    en.add_argument("--timesteps", type=int, default=None)
    en.add_argument("--ann-ops", dest="ann_ops", type=float, default=None)
    en.add_argument("--dc-first", dest="dc_first", type=float, default=None)
    en.add_argument("--dc-rest", dest="dc_rest", type=float, default=None)
    en.add_argument("--sparsity-dc", dest="sparsity_dc", type=float, default=None)
    en.add_argument("--qt-ops", dest="qt_ops", type=float, default=None)
    en.add_argument("--sparsity-qt", dest="sparsity_qt", type=float, default=None)
    en.add_argument("--e-mac", dest="e_mac", type=float, default=4.6)
    en.add_argument("--e-ac", dest="e_ac", type=float, default=0.9)
    en.add_argument("--output", default=None)
    en.set_defaults(func=cmd_energy)

    mem = sub.add_parser("mem", help="itemized model memory report")
    mem.add_argument("--model", required=True)
    mem.add_argument("--bits-w", dest="bits_w", type=int, default=None)
    mem.add_argument("--bits-u", dest="bits_u", type=int, default=None)
    mem.add_argument("--batch", type=int, default=1)
    mem.set_defaults(func=cmd_mem)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _echo_config(args)
        return args.func(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except RuntimeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
