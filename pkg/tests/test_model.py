import math

import numpy as np
import pytest
from scipy import integrate

from ustatlab.model import (
    certify_regularity,
    constant_normalizer,
    indicator_threshold_kernel,
    make_distribution,
    make_kernel,
    make_normalizer,
    pareto_symmetric,
    point_mass,
    power_normalizer,
    product_kernel,
    product_measure_sample,
    rademacher,
    sum_product_kernel,
    uniform_pm1,
)

N_MC = 100_000


def _mc_mean_ok(samples, target, bound=None):
    m = float(np.mean(samples))
    s = float(np.std(samples) / math.sqrt(len(samples)))
    return abs(m - target) <= 3.0 * max(s, 1e-12)


def test_sampler_deterministic_given_seed():
    d = pareto_symmetric(1.5)
    a = d.sample(100, 123)
    b = d.sample(100, 123)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("dist", [rademacher(), uniform_pm1(), pareto_symmetric(2.5)])
def test_closed_forms_match_monte_carlo(dist):
    xs = dist.sample(N_MC, 7)
    # tail at a few thresholds
    for t in (0.2, 0.7, 1.3, 2.0):
        p_hat = float(np.mean(np.abs(xs) > t))
        se = math.sqrt(max(p_hat * (1 - p_hat), 1.0 / N_MC) / N_MC)
        assert abs(p_hat - float(dist.tail(t))) <= 4.0 * se
    # truncated second moment
    for t in (0.5, 1.0, 3.0):
        vals = np.minimum(xs * xs, t * t)
        assert _mc_mean_ok(vals, float(dist.truncated_second_moment(t)))


def test_truncated_moment_monotone_and_bounded():
    for dist in (rademacher(), uniform_pm1(), pareto_symmetric(3.0)):
        ts = np.linspace(0.0, 50.0, 400)
        vals = np.asarray(dist.truncated_second_moment(ts), dtype=float)
        assert np.all(np.diff(vals) >= -1e-12)
        if math.isfinite(dist.second_moment):
            assert np.all(vals <= dist.second_moment + 1e-12)


@pytest.mark.parametrize("p", [0.8, 1.2, 2.0, 3.0])
def test_pareto_truncated_moment_matches_tail_integral(p):
    # E(X^2 ^ c^2) = int_0^{c^2} P(X^2 > u) du, P(X^2 > u) = min(u^(-p/2), 1)
    dist = pareto_symmetric(p)
    for c in np.linspace(1.0, 100.0, 12):
        want, _ = integrate.quad(
            lambda u: min(u ** (-p / 2.0), 1.0), 0.0, c * c,
            points=[1.0], limit=200,
        )
        got = float(dist.truncated_second_moment(c))
        assert abs(got - want) < 1e-9 * max(1.0, abs(want))


def test_pareto_tail_inverse_consistency():
    dist = pareto_symmetric(1.3)
    for u in (0.9, 0.5, 0.01):
        t = float(dist.tail_inverse(u))
        assert abs(float(dist.tail(t)) - u) < 1e-12


def test_point_mass_degenerate():
    z = make_distribution("zero")
    assert np.all(z.sample(10, 1) == 0.0)
    assert z.nonzero_prob == 0.0
    assert float(z.truncated_second_moment(3.0)) == 0.0


def test_kernel_symmetry_spot_checks():
    rng = np.random.default_rng(5)
    for kern in (product_kernel(3), sum_product_kernel(3, 0.7),
                 indicator_threshold_kernel(3, 0.5)):
        args = [rng.standard_normal(64) for _ in range(3)]
        base = kern(*args)
        for perm in ((1, 0, 2), (2, 1, 0), (1, 2, 0)):
            assert np.allclose(base, kern(*[args[i] for i in perm]))


def test_kernel_arity_mismatch():
    with pytest.raises(ValueError):
        product_kernel(2)(np.ones(3))
    with pytest.raises(ValueError):
        make_kernel("nope", 2)


def test_make_normalizer_and_scaled():
    seq = make_normalizer("poly", exponent=2.0)
    assert float(seq(4)) == 16.0
    assert float(seq.scaled(2.0)(4)) == 32.0
    assert float(make_normalizer("const", value=3.0)(100)) == 3.0


class TestRegularity:
    def test_power_law_passes_with_expected_constants(self):
        # gamma_n = n^(d/p), p = 1, d = 2: dyadic terms decay at ratio 1/4
        rep = certify_regularity(power_normalizer(2.0), d=2, k_max=14)
        assert rep.all_pass
        assert abs(rep.doubling_c - 4.0) < 1e-9
        assert abs(rep.tail_ratio - 0.25) < 1e-12
        assert abs(rep.tail_c - 4.0 / 3.0) < 0.05

    def test_critical_power_fails_tail(self):
        # gamma_n = n^(d/2): dyadic terms are constant, the tail diverges
        rep = certify_regularity(power_normalizer(1.0), d=2, k_max=12)
        assert rep.monotone and rep.doubling
        assert not rep.dyadic_tail
        assert abs(rep.tail_ratio - 1.0) < 1e-12

    def test_constant_sequence(self):
        rep = certify_regularity(constant_normalizer(1.0), d=1, k_max=10)
        assert rep.monotone
        assert abs(rep.doubling_c - 1.0) < 1e-12
        assert not rep.dyadic_tail

    def test_nonpositive_gamma_hard_failure(self):
        from ustatlab.model import NormalizingSequence

        bad = NormalizingSequence(name="bad", gamma=lambda n: np.asarray(n) - 10.0)
        rep = certify_regularity(bad, d=1, k_max=5)
        assert rep.hard_failure is not None
        assert not rep.all_pass

    def test_failure_persists_at_larger_kmax(self):
        for k_max in (6, 8, 10):
            rep = certify_regularity(power_normalizer(1.0), d=2, k_max=k_max)
            assert not rep.dyadic_tail


class TestProductMeasure:
    def test_d1_reduces_to_sampler(self):
        dist = uniform_pm1()
        out = product_measure_sample(dist, 1, 99, 50)
        assert out.shape == (50, 1)
        assert np.array_equal(out[:, 0], dist.sample(50, 99))

    def test_coordinates_uncorrelated(self):
        out = product_measure_sample(uniform_pm1(), 3, 3, N_MC)
        for a in range(3):
            for b in range(a + 1, 3):
                prod = out[:, a] * out[:, b]
                se = float(np.std(prod) / math.sqrt(N_MC))
                assert abs(float(np.mean(prod))) <= 3.0 * se

    def test_rademacher_coordinate_means(self):
        out = product_measure_sample(rademacher(), 2, 11, N_MC)
        for r in range(2):
            se = 1.0 / math.sqrt(N_MC)
            assert abs(float(np.mean(out[:, r]))) <= 3.0 * se
