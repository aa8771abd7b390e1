import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ternspike.errors import ConfigError, DomainError
from ternspike.quant import (
    QuantConfig,
    calibrate,
    constrain_dyadic,
    from_int,
    quantize,
    to_int,
)


class TestQuantize:
    def test_projects_to_nearest_level(self):
        # b=3 levels: {0, +-1/3, +-2/3, +-1}
        assert quantize(0.4, 1.0, 3) == pytest.approx(1 / 3)

    def test_clipping_saturates(self):
        assert quantize(5.0, 1.0, 3) == 1.0

    def test_two_bit_is_ternary(self):
        assert quantize(-0.6, 1.0, 2) == -1.0

    def test_bit_width_guard(self):
        with pytest.raises(ConfigError):
            quantize(0.3, 1.0, 1)

    def test_tie_rounds_away_from_zero(self):
        # midpoint between 0 and 1/3 for alpha=1, b=3 is 1/6
        assert quantize(0.5 / 3, 1.0, 3) == pytest.approx(1 / 3)
        assert quantize(-0.5 / 3, 1.0, 3) == pytest.approx(-1 / 3)

    @settings(max_examples=200)
    @given(
        st.floats(-50, 50),
        st.floats(0.01, 20),
        st.integers(2, 8),
    )
    def test_idempotent(self, x, alpha, b):
        once = quantize(x, alpha, b)
        assert quantize(once, alpha, b) == pytest.approx(once, abs=1e-12)

    @settings(max_examples=200)
    @given(
        st.floats(-10, 10),
        st.floats(-10, 10),
        st.floats(0.01, 5),
        st.integers(2, 8),
    )
    def test_monotone(self, x, y, alpha, b):
        lo, hi = min(x, y), max(x, y)
        assert quantize(lo, alpha, b) <= quantize(hi, alpha, b)

    @settings(max_examples=200)
    @given(st.floats(-10, 10), st.floats(0.01, 5), st.integers(2, 8))
    def test_sign_symmetry(self, x, alpha, b):
        assert quantize(-x, alpha, b) == pytest.approx(-quantize(x, alpha, b), abs=1e-15)

    @settings(max_examples=200)
    @given(st.floats(-10, 10), st.floats(0.01, 5), st.integers(2, 8))
    def test_error_bound(self, x, alpha, b):
        m = 2 ** (b - 1) - 1
        clipped = np.clip(x, -alpha, alpha)
        assert abs(quantize(x, alpha, b) - clipped) <= alpha / (2 * m) + 1e-12


class TestIntCodes:
    def test_examples(self):
        assert to_int(1 / 3, 1.0, 3) == 1
        assert to_int(0.0, 2.7, 5) == 0
        assert to_int(-1.0, 1.0, 4) == -7

    def test_rejects_off_lattice(self):
        with pytest.raises(DomainError):
            to_int(0.4, 1.0, 3)

    def test_round_trip_all_levels(self):
        for b in (2, 3, 4, 8):
            m = 2 ** (b - 1) - 1
            codes = np.arange(-m, m + 1)
            levels = from_int(codes, 1.0, b)
            assert np.array_equal(to_int(levels, 1.0, b), codes)

    def test_round_trip_dyadic_alpha_exact(self):
        alpha = 0.25
        for b in (3, 4, 6):
            m = 2 ** (b - 1) - 1
            codes = np.arange(-m, m + 1)
            assert np.array_equal(to_int(from_int(codes, alpha, b), alpha, b), codes)

    def test_from_int_range_guard(self):
        with pytest.raises(DomainError):
            from_int(8, 1.0, 4)


class TestCalibrate:
    def test_maxabs(self):
        assert calibrate([0.5, -2, 1], 4) == 2.0

    def test_all_zero_fallback(self):
        assert calibrate(np.zeros(10), 4) == 1.0

    def test_percentile_normal(self):
        rng = np.random.Generator(np.random.PCG64(5))
        x = rng.standard_normal(100_000)
        # 99.9th percentile of |N(0,1)| is the 0.9995 normal quantile
        assert calibrate(x, 4, "percentile") == pytest.approx(3.2905, abs=0.05)

    def test_empty(self):
        with pytest.raises(DomainError):
            calibrate([], 4)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            calibrate([1.0], 4, "entropy")


class TestDyadic:
    def test_already_dyadic(self):
        assert constrain_dyadic(4.0, 1.0) == (4.0, 2)

    def test_rounds_to_nearest_power(self):
        alpha, k = constrain_dyadic(3.0, 1.0)
        assert (alpha, k) == (4.0, 2)

    def test_identity(self):
        assert constrain_dyadic(1.0, 1.0) == (1.0, 0)

    def test_clamped(self):
        _, k = constrain_dyadic(2.0**12, 1.0)
        assert k == 8

    def test_nearest_power_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            aw = float(rng.uniform(0.05, 20))
            au = float(rng.uniform(0.05, 20))
            aw2, k = constrain_dyadic(aw, au)
            if -8 < k < 8:
                assert abs(np.log2(aw2 / aw)) <= 0.5 + 1e-12


class TestConfig:
    def test_declared_k_must_match(self):
        QuantConfig(4, 4, alpha_w=2.0, alpha_u=1.0, k=1)
        with pytest.raises(ConfigError):
            QuantConfig(4, 4, alpha_w=3.0, alpha_u=1.0, k=1)

    def test_bits_guard(self):
        with pytest.raises(ConfigError):
            QuantConfig(1, 4, alpha_w=1.0, alpha_u=1.0)
