"""End-to-end command-line behavior: formats, round trips, exit codes."""

import json

import numpy as np
import pytest

from ternspike.cli import main
from ternspike.encoding import compare_encoders, decode, encode_sf
from ternspike.fileio import read_signal_csv, read_spike_file, save_model
from ternspike.qtsnn import QTLayer
from ternspike.signals import AnalogSignal, EncoderMeta, TernarySpikeTrain, mae


def write_csv(path, values):
    path.write_text("".join(f"{v}\n" for v in values))


class TestEncode:
    def test_sf_example(self, tmp_path, capsys):
        src = tmp_path / "sig.csv"
        out = tmp_path / "out.spk"
        write_csv(src, [0, 0.3, 0.5, 0.4])
        rc = main(["encode", str(src), str(out), "--method", "sf", "--threshold", "0.2"])
        assert rc == 0
        body = out.read_text().split("\n")[2:6]
        assert body == ["0", "1", "1", "0"]
        printed = capsys.readouterr().out
        assert "firing_rate 0.500" in printed

    def test_constant_reports_zero_rate(self, tmp_path, capsys):
        src = tmp_path / "c.csv"
        out = tmp_path / "c.spk"
        write_csv(src, [0.4] * 20)
        assert main(["encode", str(src), str(out), "--method", "sf", "--threshold", "0.1"]) == 0
        assert "firing_rate 0.000" in capsys.readouterr().out
        train = read_spike_file(out)
        assert not train.values.any()

    def test_missing_file_exits_2(self, tmp_path, capsys):
        rc = main(["encode", str(tmp_path / "nope.csv"), str(tmp_path / "o.spk")])
        assert rc == 2
        assert "nope.csv" in capsys.readouterr().err

    def test_bad_threshold_exits_1(self, tmp_path):
        src = tmp_path / "sig.csv"
        write_csv(src, [0, 1, 0])
        rc = main(["encode", str(src), str(tmp_path / "o.spk"), "--threshold", "-1"])
        assert rc == 1


class TestDecodeRoundTrip:
    def test_encode_decode_matches_library_mae(self, tmp_path):
        rng = np.random.default_rng(8)
        values = np.cumsum(rng.normal(0, 0.3, 150))
        src = tmp_path / "sig.csv"
        spk = tmp_path / "sig.spk"
        rec = tmp_path / "rec.csv"
        write_csv(src, values)
        assert main(["encode", str(src), str(spk), "--method", "sf", "--threshold", "0.25"]) == 0
        assert main(["decode", str(spk), str(rec)]) == 0
        cli_mae = mae(read_signal_csv(src), read_signal_csv(rec))
        sig = AnalogSignal(read_signal_csv(src).samples)
        train, _ = encode_sf(sig, 0.25)
        lib_mae = mae(sig, decode(train))
        assert cli_mae == lib_mae


class TestEvalEncoders:
    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["eval-encoders", "--kind", "plateau_peak", "--n", "4", "--length", "400",
                "--seed", "42", "--threshold", "0.05", "--methods", "sf,tae"]
        assert main(args + ["--output", str(a)]) == 0
        assert main(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


@pytest.fixture
def tiny_model(tmp_path):
    layers = [
        QTLayer(np.array([[1, 0, -1, 2, 0, 1, 1, -2, 0]]), k=0, theta=2, bits_w=4, bits_u=4),
    ]
    path = tmp_path / "tiny.json"
    save_model(path, layers, timesteps=3)
    return path


class TestInfer:
    def test_all_zero_spikes_tie_break(self, tmp_path, capsys):
        layers = [QTLayer(np.array([[1, 1], [1, -1], [0, 1]]), k=0, theta=1)]
        mpath = tmp_path / "m.json"
        save_model(mpath, layers, timesteps=4)
        spk = tmp_path / "z.spk"
        train = TernarySpikeTrain(np.zeros(8, dtype=np.int8), init=0.0, meta=EncoderMeta("SF", 0.1))
        from ternspike.fileio import write_spike_file

        write_spike_file(spk, train)
        assert main(["infer", "--model", str(mpath), "--spikes", str(spk)]) == 0
        out = capsys.readouterr().out
        assert "predicted_class 0" in out
        assert "scores 0 0 0" in out
        assert "ac_ops 0" in out

    def test_bias_lane_reassembly(self, tmp_path, capsys, tiny_model):
        # model fan_in 9, spike length 3*8: one lane short, bias appended
        spk = tmp_path / "x.spk"
        vals = np.zeros(24, dtype=np.int8)
        vals[1::3] = 1
        train = TernarySpikeTrain(vals, init=0.0, meta=EncoderMeta("SF", 0.1))
        from ternspike.fileio import write_spike_file

        write_spike_file(spk, train)
        assert main(["infer", "--model", str(tiny_model), "--spikes", str(spk)]) == 0
        assert "predicted_class" in capsys.readouterr().out

    def test_length_mismatch_exits_1(self, tmp_path, capsys, tiny_model):
        spk = tmp_path / "bad.spk"
        train = TernarySpikeTrain(np.zeros(7, dtype=np.int8), init=0.0, meta=EncoderMeta("SF", 0.1))
        from ternspike.fileio import write_spike_file

        write_spike_file(spk, train)
        assert main(["infer", "--model", str(tiny_model), "--spikes", str(spk)]) == 1


class TestEnergyCmd:
    def test_ann_row(self, capsys):
        assert main(["energy", "--ann-ops", "15.19e6"]) == 0
        assert "ANN 69.87 uJ" in capsys.readouterr().out

    def test_table_rows(self, capsys):
        rc = main([
            "energy",
            "--ann-ops", "15.19e6",
            "--dc-first", "1.86e6", "--dc-rest", "13.33e6", "--sparsity-dc", "0.1827",
            "--qt-ops", "15.19e6", "--sparsity-qt", "0.1042",
            "--timesteps", "4",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "ANN 69.87 uJ" in out
        assert "DC+SNN 42.99 uJ" in out
        assert "TAE+QT-SNN 5.70 uJ" in out

    def test_requires_some_input(self):
        assert main(["energy"]) == 1


class TestMemCmd:
    def test_itemized_report(self, capsys, tiny_model):
        assert main(["mem", "--model", str(tiny_model), "--batch", "2"]) == 0
        out = capsys.readouterr().out
        assert "weights_bytes" in out
        assert "total_bytes" in out


class TestTrainCmd:
    def test_small_training_run(self, tmp_path, capsys):
        cfg = {"epochs": 2, "corpus_n": 90}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        model = tmp_path / "m.json"
        metrics = tmp_path / "metrics.csv"
        rc = main(["train", "--config", str(cfg_path), "--model", str(model), "--metrics", str(metrics)])
        assert rc == 0
        assert metrics.read_text().splitlines()[0] == "epoch,train_loss,train_acc,test_acc"
        doc = json.loads(model.read_text())
        assert doc["readout"] == "spike_sum"
        assert doc["version"] == 1

    def test_flag_overrides_config(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"epochs": 50, "corpus_n": 90}))
        model = tmp_path / "m.json"
        metrics = tmp_path / "metrics.csv"
        rc = main(["train", "--config", str(cfg_path), "--model", str(model),
                   "--metrics", str(metrics), "--epochs", "1"])
        assert rc == 0
        assert len(metrics.read_text().strip().splitlines()) == 3  # header + epochs 0..1

    def test_unknown_config_key_exits_1(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"optimizer": "adam"}))
        rc = main(["train", "--config", str(cfg_path), "--model", "m", "--metrics", "x"])
        assert rc == 1
