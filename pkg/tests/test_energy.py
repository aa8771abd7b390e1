import numpy as np
import pytest

from ternspike.energy import (
    EnergyCosts,
    OpCountReport,
    counts_from_shapes,
    energy_ann,
    energy_dc_snn,
    energy_from_recorded_ac,
    energy_qtsnn,
    memory_footprint,
)
from ternspike.errors import ConfigError
from ternspike.qtsnn import QTLayer, qt_forward


class TestEnergyAnn:
    def test_published_reconciliation(self):
        counts = OpCountReport(fan_in_total=int(15.19e6))
        assert energy_ann(counts) == pytest.approx(69.87, abs=0.01)

    def test_zero(self):
        assert energy_ann(OpCountReport()) == 0.0

    def test_linearity(self):
        a = OpCountReport(fan_in_total=1000)
        b = OpCountReport(fan_in_total=2000)
        assert energy_ann(b) == 2 * energy_ann(a)


class TestEnergyDcSnn:
    def test_published_reconciliation(self):
        counts = OpCountReport(
            fan_out_total=int(1.86e6 + 13.33e6),
            first_layer_fanin=int(1.86e6),
            timesteps=4,
            sparsity=0.1827,
        )
        assert energy_dc_snn(counts) == pytest.approx(42.99, abs=0.05)

    def test_zero_sparsity_leaves_mac_term(self):
        counts = OpCountReport(fan_out_total=500, first_layer_fanin=100, timesteps=2, sparsity=0.0)
        expected = 4.6 * 2 * 100 * 1e-6
        assert energy_dc_snn(counts) == pytest.approx(expected)

    def test_zero_timesteps(self):
        counts = OpCountReport(fan_out_total=500, first_layer_fanin=100, timesteps=0, sparsity=0.5)
        assert energy_dc_snn(counts) == 0.0


class TestEnergyQtsnn:
    def test_published_reconciliation(self):
        counts = OpCountReport(fan_out_total=int(15.19e6), timesteps=4, sparsity=0.1042)
        assert energy_qtsnn(counts) == pytest.approx(5.70, abs=0.01)

    def test_zero_spikes(self):
        counts = OpCountReport(fan_out_total=int(1e6), timesteps=4, sparsity=0.0)
        assert energy_qtsnn(counts) == 0.0

    def test_never_exceeds_dc_at_equal_sparsity(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            first = int(rng.integers(1, 10**6))
            rest = int(rng.integers(0, 10**7))
            counts = OpCountReport(
                fan_out_total=first + rest,
                first_layer_fanin=first,
                timesteps=int(rng.integers(1, 10)),
                sparsity=float(rng.uniform(0, 1)),
            )
            assert energy_qtsnn(counts) <= energy_dc_snn(counts) + 1e-12


class TestRecorderCrossCheck:
    def test_recorded_ac_matches_closed_form(self):
        # dense stand-in layer; random ternary spikes drawn at the target
        # sparsity should land within 2% of the closed form
        rng = np.random.default_rng(42)
        fi, fo = 3000, 400
        t_steps, sparsity, n_runs = 4, 0.1042, 10
        w = rng.integers(1, 8, size=(fo, fi)) * rng.choice([-1, 1], size=(fo, fi))
        layer = QTLayer(w, k=0, theta=10**9, bits_w=4, bits_u=8)
        total_ac = 0
        for _ in range(n_runs):
            x = np.zeros((t_steps, fi), dtype=np.int64)
            mask = rng.random(x.shape) < sparsity
            x[mask] = rng.choice([-1, 1], size=int(mask.sum()))
            _, rec = qt_forward([layer], x, record=True)
            total_ac += rec.recorder.ac
        counts = OpCountReport(fan_out_total=fi * fo, timesteps=t_steps, sparsity=sparsity)
        closed = n_runs * energy_qtsnn(counts)
        assert energy_from_recorded_ac(total_ac) == pytest.approx(closed, rel=0.02)

    def test_zero_record_zero_energy(self):
        assert energy_from_recorded_ac(0) == 0.0


class TestMemory:
    def test_halving_weight_bits(self):
        shapes = [(10_000, 100)]
        r32 = memory_footprint(shapes, 32, 32)
        r16 = memory_footprint(shapes, 16, 32)
        assert r16.weights_bytes == r32.weights_bytes / 2
        assert r16.membrane_bytes == r32.membrane_bytes

    def test_batch_scales_membranes_only(self):
        shapes = [(5000, 300), (600, 30)]
        r1 = memory_footprint(shapes, 8, 8, batch=1)
        r10 = memory_footprint(shapes, 8, 8, batch=10)
        assert r10.membrane_bytes == 10 * r1.membrane_bytes
        assert r10.weights_bytes == r1.weights_bytes
        assert r10.sidecar_bytes == r1.sidecar_bytes

    def test_quantization_reduction_magnitude(self):
        shapes = [(1_000_000, 10_000)]
        full = memory_footprint(shapes, 32, 32, batch=1)
        quant = memory_footprint(shapes, 4, 4, batch=1)
        reduction = 1 - quant.total_bytes / full.total_bytes
        assert reduction == pytest.approx(0.875, abs=0.005)

    def test_monotone_in_everything(self):
        base = memory_footprint([(1000, 50)], 4, 4, batch=2)
        assert memory_footprint([(1000, 50)], 8, 4, batch=2).total_bytes >= base.total_bytes
        assert memory_footprint([(1000, 50)], 4, 8, batch=2).total_bytes >= base.total_bytes
        assert memory_footprint([(1000, 50)], 4, 4, batch=3).total_bytes >= base.total_bytes
        assert memory_footprint([(2000, 50)], 4, 4, batch=2).total_bytes >= base.total_bytes

    def test_guards(self):
        with pytest.raises(ConfigError):
            memory_footprint([(10, 10)], 4, 4, batch=0)


class TestHelpers:
    def test_counts_from_shapes(self):
        counts = counts_from_shapes([(10, 20), (20, 5)], timesteps=4, sparsity=0.5)
        assert counts.fan_in_total == 10 * 20 + 20 * 5
        assert counts.first_layer_fanin == 200
        assert counts.fan_out_total == counts.fan_in_total

    def test_cost_guards(self):
        with pytest.raises(ConfigError):
            EnergyCosts(e_mac=0.0)

    def test_sparsity_guard(self):
        with pytest.raises(ConfigError):
            OpCountReport(sparsity=1.5)
