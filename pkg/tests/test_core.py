import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onebit.core import (DimensionError, SnrConfig, as_array_response, as_rho, db_to_linear,
                         linear_to_db, log_q, make_rng, q_function, sign_quantize,
                         simulate_linear, simulate_onebit, ula_response)
from oracles import log_q_mp, q_lin


class TestUla:
    def test_broadside_is_all_ones(self):
        np.testing.assert_allclose(ula_response(4, 0.0), np.ones(4))

    def test_single_element(self):
        np.testing.assert_allclose(ula_response(1, math.radians(10)), [1.0])

    def test_element_phase(self):
        b = ula_response(8, math.radians(10))
        assert np.angle(b[3]) == pytest.approx(3 * math.pi * math.sin(math.radians(10)), abs=1e-12)
        assert np.angle(b[3]) == pytest.approx(1.6366, abs=1e-4)

    def test_zero_elements_rejected(self):
        with pytest.raises(DimensionError):
            ula_response(0, 0.1)

    @given(st.integers(1, 16), st.floats(-1.5, 1.5))
    def test_unit_modulus(self, n, theta):
        assert np.allclose(np.abs(ula_response(n, theta)), 1.0)

    def test_non_unit_response_rejected(self):
        with pytest.raises(ValueError):
            as_array_response([1.0, 0.5])


@pytest.mark.parametrize("v, expected", [
    ([1 + 2j], [1 + 1j]),
    ([-0.5 - 0.1j], [-1 - 1j]),
    ([0j], [1 + 1j]),
    ([0.3 - 0.0j, -2 + 0.1j], [1 + 1j, -1 + 1j]),
])
def test_sign_quantize(v, expected):
    np.testing.assert_array_equal(sign_quantize(np.array(v)), expected)


class TestSnr:
    def test_db_roundtrip(self):
        assert db_to_linear(-10) == pytest.approx(0.1, rel=1e-15)
        assert linear_to_db(db_to_linear(3.7)) == pytest.approx(3.7, rel=1e-12)

    def test_config(self):
        cfg = SnrConfig.from_db(20)
        assert cfg.rho == pytest.approx(100.0)
        assert cfg.db == pytest.approx(20.0)
        assert as_rho(cfg) == cfg.rho

    @pytest.mark.parametrize("rho", [0.0, -1.0])
    def test_nonpositive_rho_rejected(self, rho):
        with pytest.raises(ValueError):
            SnrConfig(rho)


class TestSimulate:
    def test_onebit_high_snr_is_noiseless_sign(self, rng):
        r = simulate_onebit(1.0, np.array([1.0]), 1e12, rng)
        np.testing.assert_array_equal(r, [1 + 1j])

    def test_zero_symbol_gives_fair_coins(self, rng):
        r = simulate_onebit(np.zeros(20000), ula_response(2, 0.3), 1.0, rng)
        for part in (r.real, r.imag):
            assert abs(np.mean(part > 0) - 0.5) < 4 * 0.5 / math.sqrt(part.size)

    def test_onebit_flip_probability(self, rng):
        t = 10**6
        r = simulate_onebit(np.ones(t), np.array([1.0]), 1.0, rng)
        p = q_lin(-math.sqrt(2))
        assert p == pytest.approx(0.92135, abs=1e-5)
        sigma = math.sqrt(p * (1 - p) / t)
        assert abs(np.mean(r.real > 0) - p) < 3 * sigma

    def test_linear_noiseless_limits(self, rng):
        rho = 4.0
        y = simulate_linear(1.0, np.array([1.0, 1.0]), rho, rng)
        # noise is O(1) while the signal is 2; compare the mean instead
        ys = simulate_linear(np.ones(100000), np.array([1.0, 1.0]), rho, rng)
        assert y.shape == (2,)
        sem = math.sqrt(0.5 / ys.shape[0])
        assert np.all(np.abs(ys.mean(axis=0) - math.sqrt(rho)) < 3 * math.sqrt(2) * sem)

    def test_linear_zero_symbol_mean(self, rng):
        ys = simulate_linear(np.zeros(100000), ula_response(3, 0.4), 2.0, rng)
        assert np.all(np.abs(ys.mean(axis=0)) < 3 * math.sqrt(2 * 0.5 / 100000))

    def test_noise_variance_per_dimension(self, rng):
        ys = simulate_linear(np.zeros(200000), np.array([1.0]), 1.0, rng)
        assert ys.real.var() == pytest.approx(0.5, rel=0.02)
        assert ys.imag.var() == pytest.approx(0.5, rel=0.02)

    def test_substreams_are_reproducible(self):
        a = make_rng(7, 1, 2).standard_normal(5)
        b = make_rng(7, 1, 2).standard_normal(5)
        c = make_rng(7, 1, 3).standard_normal(5)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


class TestLogQ:
    def test_zero(self):
        assert log_q(0.0) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_deep_negative(self):
        v = log_q(-30.0)
        assert math.log1p(-1e-12) < v <= 0.0

    def test_tail_quantile(self):
        assert log_q(1.2815515655) == pytest.approx(math.log(0.1), abs=1e-8)

    @pytest.mark.parametrize("x", [-40, -12, -8.0001, -8, -3, -0.5, 0.5, 2, 7.999, 8, 8.001,
                                   15, 30, 38, 40])
    def test_matches_high_precision(self, x):
        ref = log_q_mp(x)
        assert log_q(x) == pytest.approx(ref, rel=1e-12, abs=1e-300)

    @settings(max_examples=200)
    @given(st.floats(-60, 60))
    def test_monotone_and_finite(self, x):
        a, b = log_q(x), log_q(x + 1e-3)
        assert np.isfinite(a) and a >= b and a <= 0

    def test_vectorised_matches_scalar(self):
        xs = np.linspace(-20, 20, 41)
        np.testing.assert_allclose(log_q(xs), [log_q(float(x)) for x in xs], rtol=0, atol=0)

    def test_huge_argument_finite(self):
        assert np.isfinite(log_q(1e6))
        assert log_q(-1e6) == 0.0

    def test_q_function(self):
        assert q_function(1.0) == pytest.approx(q_lin(1.0), rel=1e-13)


class TestInvariants:
    @settings(max_examples=200)
    @given(st.floats(-8, 8))
    def test_q_symmetry(self, x):
        assert math.exp(log_q(x)) + math.exp(log_q(-x)) == pytest.approx(1.0, abs=1e-10)

    @given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False), min_size=1, max_size=8),
           st.floats(1e-3, 1e3))
    def test_quantize_idempotent(self, v, scale):
        q = sign_quantize(np.array(v))
        np.testing.assert_array_equal(sign_quantize(scale * q), q)

    def test_large_array_unit_modulus(self):
        b = ula_response(10_000, 1.234)
        assert np.max(np.abs(np.abs(b) - 1)) < 1e-12

    def test_seeded_simulation_reproducible(self):
        b = ula_response(4, 0.3)
        a = simulate_onebit(np.full(50, 0.5 + 0.2j), b, 0.7, make_rng(3))
        c = simulate_onebit(np.full(50, 0.5 + 0.2j), b, 0.7, make_rng(3))
        np.testing.assert_array_equal(a, c)
