import math

import numpy as np
import pytest

from ustatlab.conditions import (
    DIVERGENT,
    IN,
    INCONCLUSIVE,
    OUT,
    SUMMABLE,
    UNKNOWN,
    SetMembershipOracle,
    combine_verdicts,
    exceedance_terms,
    product_condition_report,
    product_tail_terms,
    section_decomposition,
    summability_verdict,
    two_dim_terms,
)
from ustatlab.model import (
    Kernel,
    constant_normalizer,
    pareto_symmetric,
    point_mass,
    power_normalizer,
    product_kernel,
    rademacher,
    uniform_pm1,
)


class TestSummabilityVerdict:
    def test_geometric_terms_summable(self):
        assert summability_verdict([2.0**-k for k in range(1, 13)]) == SUMMABLE

    def test_constant_terms_divergent(self):
        assert summability_verdict([0.5] * 12) == DIVERGENT

    def test_harmonic_terms_inconclusive(self):
        assert summability_verdict([1.0 / k for k in range(1, 13)]) == INCONCLUSIVE

    def test_zero_terms_summable(self):
        assert summability_verdict([0.0] * 8) == SUMMABLE

    def test_growing_terms_divergent(self):
        assert summability_verdict([2.0**k / 1e6 for k in range(1, 13)]) == DIVERGENT

    def test_error_dominated_inconclusive(self):
        terms = [1e-3] * 10
        errs = [1e-1] * 10
        assert summability_verdict(terms, errs) == INCONCLUSIVE

    def test_needs_six_terms(self):
        with pytest.raises(ValueError):
            summability_verdict([1.0, 0.5])
        with pytest.raises(ValueError):
            summability_verdict([-1.0] * 8)

    def test_combine(self):
        assert combine_verdicts(SUMMABLE, DIVERGENT) == DIVERGENT
        assert combine_verdicts(SUMMABLE, INCONCLUSIVE) == INCONCLUSIVE
        assert combine_verdicts(SUMMABLE, SUMMABLE) == SUMMABLE


class TestProductTailTerms:
    def test_rademacher_all_zero(self):
        # the min-threshold c^2 = 2^k is never reached by X^2 = 1
        for l in (1, 2):
            rep = product_tail_terms(rademacher(), power_normalizer(2.0), 2, l,
                                     range(1, 13))
            assert np.all(rep.terms == 0.0)
            assert rep.verdict == SUMMABLE

    def test_full_level_threshold_is_gamma_only(self):
        # l = d: the c-exponent vanishes, so scaling c leaves terms fixed
        dist = pareto_symmetric(1.0)
        seq = power_normalizer(2.0)
        rep = product_tail_terms(dist, seq, 2, 2, range(1, 9))
        # compare with the same probability computed directly
        from ustatlab.conditions import _joint_tail_prob_quad
        from ustatlab.truncation import solve_cn

        for i, k in enumerate(range(1, 9)):
            c = solve_cn(dist, 2**k).c_n
            want = _joint_tail_prob_quad(dist, 2, float(seq(2**k)) ** 2, c)
            assert rep.terms[i] == pytest.approx(2.0 ** (2 * k) * want, rel=1e-9)

    def test_degenerate_distribution_zero_terms(self):
        rep, verdict = product_condition_report(point_mass(0.0),
                                                power_normalizer(2.0), 2,
                                                range(1, 9))
        assert verdict == SUMMABLE
        assert all(np.all(r.terms == 0.0) for r in rep)

    def test_pareto_terms_approach_half(self):
        # p = 1, gamma = n^2: the single-coordinate terms tend to (2-p)/2
        rep = product_tail_terms(pareto_symmetric(1.0), power_normalizer(2.0),
                                 2, 1, range(1, 13))
        assert rep.verdict == DIVERGENT
        assert abs(rep.terms[-1] - 0.5) < 1e-3

    def test_dual_estimators_agree(self):
        dist = pareto_symmetric(1.0)
        seq = power_normalizer(2.0)
        ks = range(1, 13)
        for l in (1, 2):
            quad = product_tail_terms(dist, seq, 2, l, ks)
            mc = product_tail_terms(dist, seq, 2, l, ks, estimator="monte-carlo",
                                    budget=10**6, rng=5)
            rel = np.abs(mc.terms - quad.terms) / np.maximum(quad.terms, 1e-300)
            assert np.max(rel) < 0.05

    def test_plain_sampling_fallback(self):
        from ustatlab.model import Distribution

        blind = Distribution(name="u-blind", sampler=uniform_pm1().sampler,
                             truncated_second_moment=uniform_pm1().truncated_second_moment)
        rep = product_tail_terms(blind, power_normalizer(2.0), 2, 1, range(1, 7),
                                 budget=40_000, rng=2)
        want = product_tail_terms(uniform_pm1(), power_normalizer(2.0), 2, 1,
                                  range(1, 7))
        assert np.allclose(rep.terms, want.terms, atol=5e-3)

    def test_partial_sums_nondecreasing(self):
        rep = product_tail_terms(pareto_symmetric(1.0), power_normalizer(2.0),
                                 2, 1, range(1, 9))
        sums = rep.partial_sums
        assert np.all(np.diff(sums) >= -1e-15)
        rows = list(rep.rows())
        assert rows[0][0].startswith("product-tails")


class TestMembershipOracle:
    def test_boundary_membership_nonstrict(self):
        # |h| = 1, gamma_n = sqrt(n): the level-2 moment condition holds
        # with equality, and the non-strict comparison keeps the point in
        oracle = SetMembershipOracle(product_kernel(2), rademacher(),
                                     power_normalizer(0.5), budget=256, rng=0)
        for k in (1, 3, 5):
            assert oracle.classify(k, 2, (1.0, -1.0)) == IN

    def test_level1_failure_propagates(self):
        oracle = SetMembershipOracle(product_kernel(2), uniform_pm1(),
                                     constant_normalizer(1.0), budget=256, rng=0)
        big = (10.0, 10.0)  # h^2 = 1e4 > 1
        assert oracle.classify(1, 1, big) == OUT
        assert oracle.classify(1, 2, big) == OUT

    def test_bounded_kernel_always_in(self):
        oracle = SetMembershipOracle(product_kernel(2), rademacher(),
                                     power_normalizer(2.0), budget=256, rng=1)
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.uniform(-1, 1, size=2)
            assert oracle.classify(4, 2, x) == IN

    def test_nesting_in_implies_lower_levels_in(self):
        oracle = SetMembershipOracle(product_kernel(2), pareto_symmetric(1.2),
                                     power_normalizer(2.0), budget=512, rng=7)
        rng = np.random.default_rng(11)
        pts = pareto_symmetric(1.2).sample(2000, rng).reshape(1000, 2)
        k = 4
        for x in pts:
            if oracle.classify(k, 2, x) == IN:
                assert oracle.classify(k, 1, x) == IN

    def test_arity3_runs(self):
        oracle = SetMembershipOracle(product_kernel(3), uniform_pm1(),
                                     power_normalizer(3.0), budget=128, rng=2)
        assert oracle.classify(3, 3, (0.5, -0.2, 0.8)) == IN


class TestExceedanceTerms:
    def test_bounded_kernel_zero_terms(self):
        for mode in ("coupled", "decoupled"):
            rep = exceedance_terms(product_kernel(2), rademacher(),
                                   power_normalizer(2.0), range(1, 9),
                                   replicates=24, mode=mode, budget=64, rng=3)
            assert np.all(rep.terms == 0.0)
            assert rep.verdict == SUMMABLE

    def test_certain_level1_failure(self):
        # gamma = const 1 and |h| ~ O(1) heavy: some pair always exceeds
        rep = exceedance_terms(product_kernel(2), pareto_symmetric(1.0),
                               constant_normalizer(0.5), range(1, 7),
                               replicates=16, budget=64, rng=4)
        assert np.all(rep.terms == 1.0)
        assert rep.verdict == DIVERGENT

    def test_d1_exact(self):
        # d = 1: the event is max h^2 > gamma^2 with h(x) = x
        ident = Kernel(name="identity", arity=1, evaluate=lambda a: np.asarray(a, float))
        rep = exceedance_terms(ident, rademacher(), power_normalizer(1.0),
                               range(1, 7), replicates=16, rng=5)
        assert np.all(rep.terms == 0.0)

    def test_divergent_heavy_tail(self):
        seq = power_normalizer(2.0 / 1.2)
        rep = exceedance_terms(product_kernel(2), pareto_symmetric(1.2), seq,
                               range(1, 11), replicates=48, budget=64, rng=6)
        assert rep.verdict == DIVERGENT

    def test_arity3_small(self):
        rep = exceedance_terms(product_kernel(3), uniform_pm1(),
                               power_normalizer(3.0), range(1, 4),
                               replicates=4, budget=64, oracle_budget=64, rng=7)
        assert np.all(rep.terms == 0.0)

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            exceedance_terms(product_kernel(2), rademacher(),
                             power_normalizer(2.0), [1], mode="nope")


def _two_wing_predicate(a, b):
    def predicate(pts):
        ax = np.abs(pts[..., 0])
        ay = np.abs(pts[..., 1])
        return ((ax < a) & (ay < b)) | ((ax < b) & (ay < a))

    return predicate


class TestSectionDecomposition:
    def test_two_wing_exact_geometry(self):
        # wing widths 0.3 / 0.01 at scale 10: the thin-wing slice |x| < b
        # has section measure 0.3 (scaled: 3 >= 1, a bad section); the
        # rest has sections of measure 0.01 (scaled 0.1 < 1); the trimmed
        # core is empty
        a, b = 0.3, 0.01
        k = math.log2(10.0)
        decomp = section_decomposition(_two_wing_predicate(a, b), uniform_pm1(),
                                       2, k, budget=2048, replicates=256, rng=0)
        assert decomp.bad_section_test((0,), [0.005]) == IN
        assert decomp.bad_section_test((0,), [0.15]) == OUT
        assert decomp.bad_section_test((1,), [-0.004]) == IN
        # core is empty: any target point is trimmed
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = rng.uniform(-1, 1, size=2)
            assert decomp.level_test(1, x) in (OUT,)
        assert decomp.core_term[0] == 0.0
        # hit probability of the bad slice: 1 - (1 - b)^10
        want = 1.0 - (1.0 - b) ** 10
        for subset, (term, err) in decomp.section_terms.items():
            assert abs(term - want) <= 4.0 * max(err, 1e-3)

    def test_empty_and_full_targets(self):
        empty = lambda pts: np.zeros(pts.shape[:-1], dtype=bool)
        dec = section_decomposition(empty, uniform_pm1(), 2, 3.0, budget=512,
                                    replicates=64, rng=2)
        assert dec.core_term[0] == 0.0
        assert all(t == 0.0 for t, _ in dec.section_terms.values())

        full = lambda pts: np.ones(pts.shape[:-1], dtype=bool)
        dec = section_decomposition(full, uniform_pm1(), 2, 3.0, budget=512,
                                    replicates=64, rng=3)
        # every section has measure 1, so every partial point is bad and
        # the trimmed core is empty
        assert dec.core_term[0] == 0.0
        assert all(t == 1.0 for t, _ in dec.section_terms.values())
        assert dec.bad_section_test((0,), [0.2]) == IN

    def test_pointwise_containment(self):
        # every target point is either in the core or has a bad section
        a, b = 0.3, 0.01
        decomp = section_decomposition(_two_wing_predicate(a, b), uniform_pm1(),
                                       2, math.log2(10.0), budget=1024,
                                       replicates=64, rng=4)
        rng = np.random.default_rng(5)
        pred = _two_wing_predicate(a, b)
        checked = 0
        for _ in range(1000):
            x = rng.uniform(-1, 1, size=2)
            if not bool(pred(x[None, :])[0]):
                continue
            checked += 1
            covered = decomp.level_test(1, x) == IN
            for subset in ((0,), (1,)):
                covered = covered or decomp.bad_section_test(subset, x[list(subset)]) == IN
            assert covered, x
        assert checked > 50

    def test_replicate_event_containment(self):
        # no replicate may realize the target event without realizing the
        # union of the core event and the bad-section events
        a, b = 0.3, 0.01
        n = 10
        decomp = section_decomposition(_two_wing_predicate(a, b), uniform_pm1(),
                                       2, math.log2(10.0), budget=1024,
                                       replicates=64, rng=6)
        pred = _two_wing_predicate(a, b)
        rng = np.random.default_rng(7)
        dist = uniform_pm1()
        for _ in range(1000):
            xs = dist.sample(n, rng)
            left = False
            for i in range(n):
                for j in range(i + 1, n):
                    if bool(pred(np.array([[xs[i], xs[j]]]))[0]):
                        left = True
                        break
                if left:
                    break
            if not left:
                continue
            right = any(
                decomp.bad_section_test((s,), [v]) == IN
                for s in (0, 1) for v in xs
            )
            if not right:
                # fall back on the core event
                right = any(
                    decomp.level_test(1, np.array([xs[i], xs[j]])) == IN
                    for i in range(n) for j in range(i + 1, n)
                )
            assert right

    def test_small_sections_hook(self):
        a, b = 0.3, 0.01
        decomp = section_decomposition(_two_wing_predicate(a, b), uniform_pm1(),
                                       2, math.log2(10.0), budget=1024,
                                       replicates=64, rng=8)
        # points of the (empty) core trivially satisfy the bound; check a
        # target point whose sections are thin
        scaled, threshold = decomp.check_small_sections(
            1, np.array([0.2, 0.005]), (0,), budget_check=2048)
        assert scaled < threshold


class TestTwoDimTerms:
    def test_bounded_pair_all_zero(self):
        r1, r2 = two_dim_terms(product_kernel(2), rademacher(),
                               power_normalizer(1.0), range(1, 9),
                               budget=4000, rng=0)
        assert np.all(r1.terms == 0.0)
        assert np.all(r2.terms == 0.0)
        assert r1.verdict == SUMMABLE and r2.verdict == SUMMABLE

    def test_second_series_boundary_uses_nonstrict(self):
        # box kernel equal to the threshold on a thin square: the pair
        # probability enters through >=, giving 2^(2k) * delta^2 = 1/4
        k = 2
        delta = 2.0 ** (-k - 1)
        box = Kernel(
            name="box", arity=2,
            evaluate=lambda x, y: ((np.abs(x) < delta) & (np.abs(y) < delta)).astype(float),
        )
        r1, r2 = two_dim_terms(box, uniform_pm1(), constant_normalizer(1.0),
                               [k], budget=200_000, inner_budget=4096, rng=1)
        assert abs(r2.terms[0] - 0.25) < 0.05
        assert r2.terms[0] > 0.1  # strict comparison would give 0

    def test_second_series_capped_by_4k(self):
        r1, r2 = two_dim_terms(product_kernel(2), pareto_symmetric(1.0),
                               power_normalizer(2.0), range(1, 7),
                               budget=20_000, rng=2)
        assert np.all(r2.terms <= 4.0 ** np.arange(1, 7) + 1e-9)

    def test_heavy_tail_divergent_matches_product_tails(self):
        for p in (0.8, 1.2):
            seq = power_normalizer(2.0 / p)
            dist = pareto_symmetric(p)
            r1, r2 = two_dim_terms(product_kernel(2), dist, seq, range(1, 11),
                                   budget=50_000, rng=3)
            verdict_dim2 = combine_verdicts(r1.verdict, r2.verdict)
            _, verdict_prod = product_condition_report(dist, seq, 2, range(1, 11))
            assert verdict_dim2 == verdict_prod == DIVERGENT

    def test_rejects_wrong_arity(self):
        with pytest.raises(ValueError):
            two_dim_terms(product_kernel(3), rademacher(), power_normalizer(1.0),
                          [1, 2])
