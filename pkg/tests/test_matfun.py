import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from errors import BranchError, InvalidInput
from linalg_core import jordan, op_norm
from matfun import (
    PowerSeries,
    c_coefficient,
    closed_form_coeffs,
    coefficient_scan,
    fit_g_constant,
    ft_series,
    log1mz,
    multiplier_growth,
    one,
    oscillation_scan,
    s_matrix,
    series_add,
    series_mul,
    series_sqrt,
    sqrt1mz,
    sqrt_shifted,
    toeplitz_of_series,
)

SEEDS = st.integers(min_value=0, max_value=2**32 - 1)


def _random_series(rng, N):
    c = rng.uniform(-1, 1, N) + 1j * rng.uniform(-1, 1, N)
    c[0] = 1
    return PowerSeries(c)


class TestPowerSeries:
    def test_add_pads(self):
        s = series_add(PowerSeries([1, 2]), PowerSeries([0, 1, 5]))
        assert np.array_equal(s.coeffs, [1, 3, 5])

    def test_mul_truncates(self):
        s = series_mul(PowerSeries([1, 1, 0]), PowerSeries([1, -1, 0]))
        assert np.array_equal(s.coeffs, [1, 0, -1])

    def test_rejects_empty_and_nan(self):
        with pytest.raises(InvalidInput):
            PowerSeries([])
        with pytest.raises(InvalidInput):
            PowerSeries([1, np.nan])


class TestSeriesSqrt:
    def test_sqrt_one_minus_z(self):
        q = series_sqrt(PowerSeries([1, -1, 0, 0, 0]))
        assert np.allclose(q.coeffs, [1, -1 / 2, -1 / 8, -1 / 16, -5 / 128], atol=1e-15)

    def test_perfect_square(self):
        q = series_sqrt(PowerSeries([0.25, -1, 1, 0, 0, 0]))
        assert np.allclose(q.coeffs, [0.5, -1, 0, 0, 0, 0], atol=1e-15)

    @pytest.mark.parametrize("p0", [0, -1])
    def test_branch_cut(self, p0):
        with pytest.raises(BranchError):
            series_sqrt(PowerSeries([p0, 1]))

    @seed(21)
    @settings(max_examples=25, deadline=None)
    @given(SEEDS)
    def test_square_recovers_series(self, s):
        N = 30
        p = _random_series(np.random.default_rng(s), N)
        q = series_sqrt(p).coeffs
        residual = np.abs(np.convolve(q, q)[:N] - p.coeffs).max()
        scale = max(1.0, np.convolve(np.abs(q), np.abs(q))[:N].max())
        assert residual <= 1e-12 * scale

    def test_ft_series(self):
        assert ft_series(0.3, 4)[0] == pytest.approx(np.sqrt(0.3))
        assert ft_series(0.25, 4)[1] == pytest.approx(-1.0)
        with pytest.raises(BranchError):
            ft_series(0, 4)


class TestCoefficients:
    def test_first_values(self):
        assert c_coefficient(1) == pytest.approx(0.5, rel=1e-14)
        assert c_coefficient(2) == pytest.approx(0.125, rel=1e-14)

    def test_match_series(self):
        q = sqrt1mz(21)
        for n in range(1, 21):
            assert c_coefficient(n) == pytest.approx(-q[n].real, rel=1e-12)

    def test_asymptotic(self):
        n = 10_000
        assert c_coefficient(n) * 2 * np.sqrt(np.pi) * n**1.5 == pytest.approx(1.0, abs=1e-3)

    def test_closed_form_tracks_coefficients(self):
        t = 0.15
        f = ft_series(t, 41)
        for n in range(30, 41):
            cf = closed_form_coeffs(t, n)
            ratio = cf.sign * f[n] / cf.h
            assert 0.5 <= ratio.real <= 2.0

    @pytest.mark.parametrize("t", [0.25, 0.55, 0.0])
    def test_closed_form_range(self, t):
        with pytest.raises(InvalidInput):
            closed_form_coeffs(t, 5)

    def test_fitted_constant(self):
        k = fit_g_constant(samples=16)
        assert np.isfinite(k) and k > 0


class TestToeplitzCalculus:
    def test_dense_section(self):
        assert np.array_equal(toeplitz_of_series(PowerSeries([1, -2, 0]), 3), np.eye(3) - 2 * jordan(3))

    def test_s_matrix(self):
        assert np.array_equal(s_matrix(3), np.array([[0, 0, 0], [4, 0, 0], [-4, 4, 0]]))

    def test_short_series(self):
        with pytest.raises(InvalidInput):
            toeplitz_of_series(PowerSeries([1, 2]), 3)

    def test_product_is_matrix_product(self, rng):
        p, q = _random_series(rng, 16), _random_series(rng, 16)
        lhs = toeplitz_of_series(series_mul(p, q), 16)
        rhs = toeplitz_of_series(p, 16) @ toeplitz_of_series(q, 16)
        assert np.abs(lhs - rhs).max() <= 1e-12 * op_norm(rhs)

    def test_contrast_closed_form(self):
        assert np.allclose(sqrt_shifted(1.0, 5), np.eye(5) - 2 * jordan(5), atol=1e-15)

    @pytest.mark.parametrize("N", [50, 100, 200, 400])
    def test_contrast_bounded(self, N):
        assert op_norm(sqrt_shifted(1.0, N)) <= 3.0

    def test_square_root_squares(self):
        tau, N = 1.2, 50
        Q = sqrt_shifted(tau, N)
        target = tau * np.eye(N) - s_matrix(N)
        scale = op_norm(np.abs(Q) @ np.abs(Q))
        assert np.abs(Q @ Q - target).max() <= 1e-8 * scale

    def test_zero_tau(self):
        with pytest.raises(BranchError):
            sqrt_shifted(0, 4)


class TestOscillation:
    def test_norms_blow_up(self):
        result = oscillation_scan(0.3, 1e6, [40, 60, 80, 100, 120])
        norms = [row["min_norm"] for row in result.per_N]
        assert all(b > a for a, b in zip(norms, norms[1:]))
        assert (np.log(norms[-1]) - np.log(norms[0])) / 80 >= 0.5
        assert result.N_star is not None and result.N_star <= 120
        assert all(row["norm"] <= 3.0 for row in result.contrast)
        assert result.to_dict()["N_star"] == result.N_star

    def test_threads_agree(self):
        a = oscillation_scan(0.3, 1e6, [20, 30], samples=16)
        b = oscillation_scan(0.3, 1e6, [20, 30], samples=16, threads=4)
        assert a.to_dict() == b.to_dict()

    def test_coefficient_scan(self):
        scan = coefficient_scan(0.075, 1e3, 150)
        assert scan["N_all"] is not None and scan["N_all"] <= 150
        assert len(scan["first_N"]) == 64

    @pytest.mark.parametrize("r", [0.0, 0.5, 0.6])
    def test_radius_range(self, r):
        with pytest.raises(InvalidInput):
            oscillation_scan(r, 1e6, [10])

    def test_empty_ladder(self):
        with pytest.raises(InvalidInput):
            oscillation_scan(0.3, 1e6, [])


class TestMultiplierGrowth:
    def test_bounded_symbol(self):
        growth = multiplier_growth(sqrt1mz(512), [64, 128, 256, 512])
        assert growth["monotone"]
        assert all(row["norm"] <= np.sqrt(2) + 0.01 for row in growth["rows"])

    def test_unbounded_symbol(self):
        growth = multiplier_growth(log1mz(4096), [256, 4096])
        small, big = (row["norm"] for row in growth["rows"])
        assert big / small >= 1.3

    def test_identity(self):
        growth = multiplier_growth(one(64), [8, 16, 64])
        assert all(row["norm"] == pytest.approx(1.0) for row in growth["rows"])

    def test_invalid_ladders(self):
        with pytest.raises(InvalidInput):
            multiplier_growth(one(8), [])
        with pytest.raises(InvalidInput):
            multiplier_growth(one(8), [16])
