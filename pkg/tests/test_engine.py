import math

import numpy as np
import pytest
from scipy import stats

from ustatlab.engine import (
    MODES,
    RegularityError,
    decoupled_block_embed,
    extend,
    new_path_state,
    run_path,
)
from ustatlab.indexing import enumerate_cube, enumerate_increasing
from ustatlab.model import (
    Kernel,
    pareto_symmetric,
    power_normalizer,
    product_kernel,
    rademacher,
    uniform_pm1,
)
from ustatlab.conditions import product_condition_report


def scalar_kernel(kern, point):
    return float(kern(*[np.array([v]) for v in point])[0])


def brute_total(kern, mode, arrays):
    """Direct summation oracle over the full index family."""
    d = kern.arity
    n = len(arrays[0])
    if mode in ("B", "MAX"):
        vals = [scalar_kernel(kern, [arrays[0][j - 1] for j in idx]) ** 2
                for idx in enumerate_increasing(n, d)]
        return max(vals, default=0.0) if mode == "MAX" else sum(vals)
    if mode == "Bpr":
        return sum(
            scalar_kernel(kern, [arrays[r][j - 1] for r, j in enumerate(idx)]) ** 2
            for idx in enumerate_cube(n, d)
        )
    raise AssertionError(mode)


def brute_signed(kern, mode, arrays, eps):
    d = kern.arity
    n = len(arrays[0])
    if mode == "A":
        return sum(
            np.prod([eps[0][j - 1] for j in idx])
            * scalar_kernel(kern, [arrays[0][j - 1] for j in idx])
            for idx in enumerate_increasing(n, d)
        )
    return sum(
        np.prod([eps[r][j - 1] for r, j in enumerate(idx)])
        * scalar_kernel(kern, [arrays[r][j - 1] for r, j in enumerate(idx)])
        for idx in enumerate_cube(n, d)
    )


def test_extend_hand_example():
    # two samples, then one more with all signs +1: gain X1*X3 + X2*X3 = 0
    st = new_path_state(product_kernel(2), "A")
    extend(st, [1.0, -1.0], new_eps=[1.0, 1.0])
    before = st.signed_total
    extend(st, [1.0], new_eps=[1.0])
    assert before == -1.0
    assert st.signed_total - before == 0.0


def test_mode_b_accumulator_nondecreasing():
    rng = np.random.default_rng(0)
    st = new_path_state(product_kernel(2), "B")
    prev = 0.0
    for _ in range(20):
        extend(st, rng.standard_normal(1))
        cur = st.raw_value()
        assert cur >= prev - 1e-15
        prev = cur


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("mode", ["B", "MAX", "Bpr"])
def test_incremental_matches_bruteforce_squares(d, mode, subtests=None):
    kern = product_kernel(d)
    for seed in range(6):
        rng = np.random.default_rng(seed)
        n = 16 if d < 3 else 12
        st = new_path_state(kern, mode)
        arrays = rng.standard_normal((n, d if mode == "Bpr" else 1))
        extend(st, arrays if mode == "Bpr" else arrays[:, 0])
        want = brute_total(kern, mode, [arrays[:, r] for r in range(arrays.shape[1])])
        got = st.raw_value()
        assert got == pytest.approx(want, rel=1e-9)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("mode", ["A", "Apr"])
def test_incremental_matches_bruteforce_signed(d, mode):
    kern = product_kernel(d)
    cols = d if mode == "Apr" else 1
    for seed in range(6):
        rng = np.random.default_rng(100 + seed)
        n = 12
        xs = rng.standard_normal((n, cols))
        eps = rng.integers(0, 2, size=(n, cols)) * 2.0 - 1.0
        st = new_path_state(kern, mode)
        extend(st, xs if cols > 1 else xs[:, 0], new_eps=eps if cols > 1 else eps[:, 0])
        want = brute_signed(kern, mode, [xs[:, r] for r in range(cols)],
                            [eps[:, r] for r in range(cols)])
        assert st.signed_total == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_nonsymmetric_kernel_bruteforce_d2():
    # generic kernel exercised through the same incremental path
    kern = Kernel(name="gauss", arity=2,
                  evaluate=lambda a, b: np.exp(-((a - b) ** 2)) + 0.3 * a * b)
    rng = np.random.default_rng(3)
    xs = rng.standard_normal(16)
    st = new_path_state(kern, "B")
    extend(st, xs)
    want = brute_total(kern, "B", [xs])
    assert st.raw_value() == pytest.approx(want, rel=1e-9)


def test_extend_shape_errors():
    st = new_path_state(product_kernel(2), "Bpr")
    with pytest.raises(ValueError):
        extend(st, np.ones((3, 3)))  # wrong column count
    st2 = new_path_state(product_kernel(2), "A")
    with pytest.raises(ValueError):
        extend(st2, [1.0], new_eps=[1.0, 1.0])


class TestRunPath:
    def test_bounded_squares_closed_form(self):
        # |h| = 1: mode B value is C(n,2)/n^4 exactly
        diag = run_path(product_kernel(2), rademacher(), power_normalizer(2.0),
                        "B", 8, 0)
        want = [math.comb(2**k, 2) / float(2**k) ** 4 for k in range(1, 9)]
        assert np.allclose(diag.values, want, rtol=1e-12)
        assert diag.ns == [2**k for k in range(1, 9)]
        assert all(a < b for a, b in zip(diag.ns, diag.ns[1:]))

    def test_zero_kernel_all_zero(self):
        zero = Kernel(name="zero", arity=2,
                      evaluate=lambda a, b: np.zeros(np.broadcast(a, b).shape))
        diag = run_path(zero, rademacher(), power_normalizer(2.0), "A", 6, 1)
        assert diag.values == [0.0] * 6

    def test_seed_reproducibility(self):
        a = run_path(product_kernel(2), uniform_pm1(), power_normalizer(2.0), "Apr", 6, 42)
        b = run_path(product_kernel(2), uniform_pm1(), power_normalizer(2.0), "Apr", 6, 42)
        assert a.values == b.values

    def test_doubled_normalizer_scales_exactly(self):
        seq = power_normalizer(2.0)
        for mode, power in [("A", 1), ("B", 2), ("MAX", 2)]:
            base = run_path(product_kernel(2), uniform_pm1(), seq, mode, 6, 7)
            double = run_path(product_kernel(2), uniform_pm1(), seq.scaled(2.0),
                              mode, 6, 7)
            scale = 2.0**power
            assert all(b == d * scale for b, d in zip(base.values, double.values))

    def test_sign_symmetry_of_signed_modes(self):
        # A global sign flip negates the coupled sum only for odd arity
        # (each term carries d sign factors); the decoupled sum is
        # symmetric for every arity (flip one array's signs).  Even-arity
        # coupled sums are genuinely skewed and excluded here.
        cases = [("A", 3), ("Apr", 2)]
        for mode, d in cases:
            finals = [run_path(product_kernel(d), uniform_pm1(),
                               power_normalizer(float(d)), mode, 5,
                               900 + s).values[-1] for s in range(200)]
            pos = sum(1 for v in finals if v > 0)
            assert abs(pos - 100) <= 3 * math.sqrt(200 * 0.25), (mode, d, pos)

    def test_regularity_gate(self):
        with pytest.raises(RegularityError):
            run_path(product_kernel(2), rademacher(), power_normalizer(1.0), "B", 6, 0)
        diag = run_path(product_kernel(2), rademacher(), power_normalizer(1.0),
                        "B", 6, 0, check_regularity=False)
        assert len(diag.values) == 6

    def test_rows_format(self):
        diag = run_path(product_kernel(2), rademacher(), power_normalizer(2.0),
                        "B", 3, 5)
        rows = list(diag.rows())
        assert rows[0][:2] == (5, "B")
        assert [r[2] for r in rows] == [1, 2, 3]


class TestHeavyTailClassification:
    """Path behavior must agree with the product-tail criterion verdict."""

    def test_summable_normalizer_paths_decay(self):
        seq = power_normalizer(2.5)
        _, verdict = product_condition_report(pareto_symmetric(1.0), seq, 2,
                                              range(1, 13))
        assert verdict == "summable"
        vals = np.array([
            run_path(product_kernel(2), pareto_symmetric(1.0), seq, "B", 10,
                     1000 + s).values
            for s in range(100)
        ])
        med = np.median(vals, axis=0)
        assert med[-1] < 0.1 * med[0]
        ks = np.arange(1, 11)
        slope = np.polyfit(ks, np.log(med), 1)[0]
        assert slope < -0.3

    def test_divergent_normalizer_paths_stay_up(self):
        seq = power_normalizer(2.0)
        _, verdict = product_condition_report(pareto_symmetric(1.0), seq, 2,
                                              range(1, 13))
        assert verdict == "divergent"
        vals = np.array([
            run_path(product_kernel(2), pareto_symmetric(1.0), seq, "B", 10,
                     5000 + s).values
            for s in range(60)
        ])
        med = np.median(vals, axis=0)
        assert np.all(med > 0.5)


class TestBlockEmbedding:
    def test_map_example(self):
        emb = decoupled_block_embed(3, 2, l=1)
        assert emb.width == 4
        assert emb.map((1, 2)) == (1, 6)
        assert emb.map((4, 4)) == (4, 8)

    def test_images_strictly_increasing(self):
        emb = decoupled_block_embed(5, 3)
        for idx in [(1, 1, 1), (4, 2, 4), (emb.width,) * 3]:
            img = emb.map(idx)
            assert all(a < b for a, b in zip(img, img[1:]))
            assert img[-1] <= 2**5

    def test_rejects_bad_levels(self):
        with pytest.raises(ValueError):
            decoupled_block_embed(1, 2, l=1)
        with pytest.raises(ValueError):
            decoupled_block_embed(5, 3, l=1)
        with pytest.raises(ValueError):
            decoupled_block_embed(4, 2).map((1, 2, 3))

    def test_blocked_sum_matches_decoupled_in_distribution(self):
        # coupled sum of squares on blocked samples vs decoupled cube sum:
        # two-sample KS on 2000 replicates each
        rng = np.random.default_rng(2024)
        emb = decoupled_block_embed(6, 2)
        w = emb.width
        dist = uniform_pm1()
        reps = 2000
        blocked = np.empty(reps)
        fresh = np.empty(reps)
        for r in range(reps):
            xs = dist.sample(64, rng)
            blocked[r] = float(np.sum(np.square(np.outer(xs[:w], xs[w:2 * w]))))
            y1 = dist.sample(w, rng)
            y2 = dist.sample(w, rng)
            fresh[r] = float(np.sum(np.square(np.outer(y1, y2))))
        ks = stats.ks_2samp(blocked, fresh)
        assert ks.statistic < 0.05
