import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from freeineq._validation import DomainError
from freeineq.measures import (
    EmpiricalMeasure,
    GridMeasure,
    cdf_quantile,
    fold_square,
    make_free_poisson,
    make_nu_lambda,
    make_power_density,
    make_semicircle,
    make_spike_measure,
    make_uniform,
    make_uniform_circle,
    mollify,
    poisson_smooth,
    pushforward_sqrt,
    read_measure_csv,
    symmetrize_sqrt,
    write_measure_csv,
)
from freeineq.transport import wasserstein_R, wasserstein_T_geodesic


def assert_valid(mu):
    assert np.all(mu.density >= 0)
    assert abs(mu.masses.sum() - 1.0) <= 1e-12


class TestSemicircle:
    def test_second_moment(self):
        mu = make_semicircle(2.0, 2000)
        np.testing.assert_allclose(mu.moment(2), 1.0, atol=1e-6)

    def test_first_moment_and_mass(self):
        mu = make_semicircle(2.0, 2000)
        assert abs(mu.moment(1)) < 1e-12
        assert_valid(mu)

    @pytest.mark.parametrize("r", [0.0, -1.0])
    def test_rejects_nonpositive_radius(self, r):
        with pytest.raises(DomainError):
            make_semicircle(r, 100)

    def test_rejects_tiny_grid(self):
        with pytest.raises(DomainError):
            make_semicircle(2.0, 4)

    def test_wider_window_keeps_zero_outside(self):
        mu = make_semicircle(1.0, 400, a=-2.0, b=2.0)
        assert mu.support() == pytest.approx((-1.0, 1.0), abs=mu.width)


class TestNuLambda:
    def test_infinite_lambda_is_uniform(self):
        mu = make_nu_lambda(np.inf, 64)
        np.testing.assert_array_equal(mu.density, np.ones(64))

    def test_lambda_two_vanishes_at_pi(self):
        mu = make_nu_lambda(2.0, 4096)
        # the cell touching pi carries a density of order h^2
        assert mu.density[0] < 1e-5 and mu.density[-1] < 1e-5

    def test_mass(self):
        assert_valid(make_nu_lambda(4.0, 256))

    def test_rejects_small_lambda(self):
        with pytest.raises(DomainError):
            make_nu_lambda(1.5, 64)

    def test_cell_values_are_exact_averages(self):
        mu = make_nu_lambda(4.0, 128, phase=0.7)
        e = mu.edges
        exact = [
            integrate.quad(lambda t: 1 + 0.5 * np.cos(t - 0.7), lo, hi)[0] / (hi - lo)
            for lo, hi in zip(e[:-1], e[1:])
        ]
        np.testing.assert_allclose(mu.density, exact, rtol=1e-12)


class TestPowerDensity:
    def test_alpha_zero_uniform(self):
        mu = make_power_density(0.0, 100)
        np.testing.assert_allclose(mu.density, 1.0)

    def test_alpha_one_mean(self):
        mu = make_power_density(1.0, 1000)
        # step density of exact cell masses: mean differs by O(h^2)
        np.testing.assert_allclose(mu.moment(1), 2.0 / 3.0, atol=1e-6)

    def test_alpha_two_mass(self):
        assert_valid(make_power_density(2.0, 100))

    def test_rejects_alpha(self):
        with pytest.raises(DomainError):
            make_power_density(-1.0, 100)


class TestQuantiles:
    def test_uniform_median(self):
        table = cdf_quantile(make_uniform(0.0, 1.0, 100))
        assert table.quantile(0.5) == pytest.approx(0.5, abs=1e-14)

    def test_semicircle_median(self):
        table = cdf_quantile(make_semicircle(2.0, 1000))
        assert table.quantile(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_circle_quarter(self):
        table = cdf_quantile(make_nu_lambda(np.inf, 64))
        assert table.quantile(0.25) == pytest.approx(-np.pi / 2, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-1.9, 1.9))
    def test_inverse_within_one_cell(self, x):
        mu = make_semicircle(2.0, 500)
        table = cdf_quantile(mu)
        assert abs(table.quantile(table.cdf(x)) - x) <= mu.width

    def test_tiny_masses_do_not_produce_nan(self):
        masses = np.ones(20)
        masses[5] = 1e-300
        mu = GridMeasure.from_masses("real", 0.0, 1.0, masses)
        q = cdf_quantile(mu).quantile(np.linspace(0, 1, 101))
        assert np.all(np.isfinite(q))


class TestSymmetrize:
    def test_quarter_circle_density_rule(self):
        quarter = GridMeasure.from_function(
            "halfline", 0.0, 2.0, 4000, lambda x: np.sqrt(np.clip(4 - x * x, 0, None)) / np.pi
        )
        sym = symmetrize_sqrt(quarter)
        s = sym.midpoints
        oracle = np.abs(s) * np.sqrt(np.clip(4 - s**4, 0, None)) / np.pi
        np.testing.assert_allclose(sym.density, oracle, atol=2e-3)

    def test_semicircle_from_free_poisson_converges(self):
        # mass moves through the step CDF, so agreement is first order in h
        dists = []
        for cells in (1000, 2000, 4000):
            sym = symmetrize_sqrt(make_free_poisson(1.0, cells))
            dists.append(wasserstein_R(sym, make_semicircle(2.0, 2 * cells)))
        assert dists[0] > dists[1] > dists[2]
        assert dists[-1] < 1e-3

    def test_bump_maps_to_two_bumps(self):
        mu = GridMeasure.from_function(
            "halfline", 0.0, 2.0, 400, lambda x: np.exp(-((x - 1.0) ** 2) / 0.001)
        )
        sym = symmetrize_sqrt(mu)
        peaks = sym.midpoints[np.argsort(sym.density)[-2:]]
        np.testing.assert_allclose(np.sort(np.abs(peaks)), [1.0, 1.0], atol=0.02)
        assert_valid(sym)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_even_moments(self, k):
        mu = GridMeasure.from_function("halfline", 0.0, 1.0, 2000, lambda x: x * (1 - x) ** 2)
        sym = symmetrize_sqrt(mu, cells=8000)
        np.testing.assert_allclose(sym.moment(2 * k), mu.moment(k), rtol=1e-6)

    @pytest.mark.parametrize("cells", [1000, 4000])
    def test_fold_square_inverts(self, cells):
        mu = make_power_density(1.0, cells)
        back = fold_square(symmetrize_sqrt(mu), cells=cells, b=1.0)
        assert np.abs(back.masses - mu.masses).sum() < 0.4 / cells

    def test_wrong_domain(self):
        with pytest.raises(DomainError):
            symmetrize_sqrt(make_uniform(0.0, 1.0, 10))


class TestPushforward:
    def test_uniform_to_linear(self):
        hat = pushforward_sqrt(make_uniform(0.0, 1.0, 1000, domain="halfline"))
        np.testing.assert_allclose(hat.density, 2.0 * hat.midpoints, atol=1e-10)

    def test_bump_near_four(self):
        mu = GridMeasure.from_function(
            "halfline", 0.0, 5.0, 1000, lambda x: np.exp(-((x - 4.0) ** 2) / 1e-4)
        )
        hat = pushforward_sqrt(mu)
        assert hat.midpoints[np.argmax(hat.density)] == pytest.approx(2.0, abs=0.01)
        assert_valid(hat)


class TestPoisson:
    def test_constant_is_fixed(self):
        mu = make_uniform_circle(128)
        np.testing.assert_allclose(poisson_smooth(mu, 0.7).density, 1.0, atol=1e-12)

    def test_first_mode_scaled(self):
        mu = make_nu_lambda(2.0, 1024)
        smooth = poisson_smooth(mu, 0.5)
        t = smooth.midpoints
        # oracle: mode k scaled by r^|k|, cell averaging scaled by sinc
        h = mu.width
        sinc = np.sin(h / 2) / (h / 2)
        np.testing.assert_allclose(smooth.density, 1 + 0.5 * sinc**2 * np.cos(t), atol=1e-8)

    def test_small_r_near_uniform(self):
        smooth = poisson_smooth(make_nu_lambda(2.0, 256), 1e-6)
        np.testing.assert_allclose(smooth.density, 1.0, atol=1e-5)

    @pytest.mark.parametrize("r", [0.0, 1.0, 1.5])
    def test_rejects_radius(self, r):
        with pytest.raises(DomainError):
            poisson_smooth(make_uniform_circle(16), r)

    def test_weak_approximation(self):
        mu = make_spike_measure(2, 8, 512)
        dists = [wasserstein_T_geodesic(poisson_smooth(mu, r), mu) for r in (0.5, 0.8, 0.95)]
        assert dists[0] > dists[1] > dists[2]


class TestMollify:
    def test_support_growth(self):
        out = mollify(make_uniform(0.0, 1.0, 200), 0.1)
        lo, hi = out.support()
        assert lo >= -0.1 - 1e-12 and hi <= 1.1 + 1e-12

    def test_mean_preserved(self):
        mu = make_power_density(2.0, 400, b=1.0)
        line = GridMeasure("real", 0.0, 1.0, mu.density)
        np.testing.assert_allclose(mollify(line, 0.05).moment(1), line.moment(1), atol=1e-10)

    def test_l1_error_decreases(self):
        pdf = lambda x: np.exp(-(x**2) / 2)  # noqa: E731
        base = GridMeasure.from_function("real", -6.0, 6.0, 2400, pdf)
        errors = []
        for eps in (0.1, 0.05, 0.025):
            out = mollify(base, eps)
            pad = (out.cells - base.cells) // 2
            diff = np.abs(out.density[pad : pad + base.cells] - base.density).sum() * base.width
            errors.append(diff + out.masses[:pad].sum() + out.masses[pad + base.cells :].sum())
        assert errors[0] > errors[1] > errors[2]


def test_spike_blocks():
    mu = make_spike_measure(2, 8, 256)
    assert set(np.unique(mu.density)) == {0.0, 8.0}
    assert_valid(mu)
    with pytest.raises(DomainError):
        make_spike_measure(3, 8, 100)


def test_empirical_sorted_and_wrapped():
    emp = EmpiricalMeasure([3.0, -4.0, 0.5], "circle")
    assert np.all(np.diff(emp.atoms) >= 0)
    assert np.all((emp.atoms >= -np.pi) & (emp.atoms < np.pi))


def test_csv_round_trip(tmp_path):
    mu = make_nu_lambda(5.0, 64, phase=0.3)
    path = tmp_path / "m.csv"
    write_measure_csv(mu, path)
    back = read_measure_csv(path)
    assert back.digest() == mu.digest()


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        read_measure_csv(path)


def test_invalid_density_rejected():
    with pytest.raises(DomainError):
        GridMeasure("real", 0.0, 1.0, -np.ones(10))
    with pytest.raises(DomainError):
        GridMeasure("real", 0.0, 1.0, 2 * np.ones(10))
