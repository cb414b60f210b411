"""Empirical verifiers for the quantitative moment and hit-probability bounds.

Covered bounds, in increasing dimension:

* the one-dimensional maximum inequality: for independent xi_i,
  ``(1/2) min(sum P(|xi_i| > t), 1) <= P(max |xi_i| > t)
  <= min(sum P(|xi_i| > t), 1)``;
* the decoupled second-moment bound and its hit-probability corollary
  for [0,1]-valued summand families with controlled conditional sums:
  ``E(S^2) <= m^2 + (2^d - 1) m`` and
  ``P(S >= m/2) >= 2^(-d-2) min(m, 1)`` with ``m = E S``;
* the undecoupled version (same constants) where the conditional-sum
  hypothesis runs over overlap families;
* the section bound: a set all of whose proper sections are small has
  hit probability at least ``2^(-d-2) min(n^d mu(A), 1)`` (decoupled),
  with an extra ``d^-d`` in coupled increasing mode;
* the exact two-wing unit-square example separating the d = 1 picture
  from d = 2.

Distributional hypotheses ("... <= 1 a.s.") are checked on finite
grids of outer draws: a violation refutes soundly, a pass is only
probabilistic confirmation, and reports say which.  Conclusion margins
carry Monte-Carlo error bars; a violation is declared only beyond
3 sigma.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .indexing import enumerate_cube, enumerate_increasing, overlap_family
from .model import Distribution, as_generator, uniform_pm1

__all__ = [
    "MaxBoundCheck",
    "max_inequality_check",
    "max_inequality_exact_iid",
    "LemmaInstance",
    "VerificationResult",
    "rectangle_instance",
    "verify_moment_bounds",
    "BoxSet",
    "SectionBoundResult",
    "verify_section_bound",
    "IntroExample",
    "intro_example_exact",
]

def hit_constant(d: int) -> float:
    """The dimension-dependent constant 2^(-d-2) of the hit-probability bounds."""
    return 2.0 ** (-d - 2)


# --------------------------------------------------------------------------
# d = 1 maximum inequality
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MaxBoundCheck:
    """Exact evaluation of the two-sided d=1 maximum bound.

    The inequalities hold in exact arithmetic; ``holds`` allows one part
    in 1e-12 of rounding slack so that mathematically tight cases (the
    n = 1 upper bound is an equality) are not reported as violations of
    float noise.
    """

    p_max: float
    tail_sum: float
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        slack = 1e-12
        return self.lower - slack <= self.p_max <= self.upper + slack

    @property
    def margins(self) -> tuple[float, float]:
        return self.p_max - self.lower, self.upper - self.p_max


def max_inequality_check(tail_probs) -> MaxBoundCheck:
    """Check the d=1 bound given the exact per-variable tail probabilities.

    ``P(max |xi_i| > t) = 1 - prod(1 - q_i)`` for independent variables,
    so everything is closed form; nothing is sampled.
    """
    q = np.asarray(tail_probs, dtype=float)
    if np.any((q < 0) | (q > 1)):
        raise ValueError("tail probabilities must lie in [0, 1]")
    s = float(np.sum(q))
    p = 1.0 - float(np.prod(1.0 - q))
    return MaxBoundCheck(
        p_max=p, tail_sum=s,
        lower=0.5 * min(s, 1.0), upper=min(s, 1.0),
    )


def max_inequality_exact_iid(q: float, n: int) -> MaxBoundCheck:
    """Same check for n iid variables with common tail probability q."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"need q in [0, 1], got {q}")
    s = n * q
    p = 1.0 - (1.0 - q) ** n
    return MaxBoundCheck(p_max=p, tail_sum=s,
                         lower=0.5 * min(s, 1.0), upper=min(s, 1.0))


# --------------------------------------------------------------------------
# moment bound instances
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaInstance:
    """A [0,1]-valued summand family for the second-moment bounds.

    ``f`` evaluates the summand on points: it takes an array of shape
    (..., d) and returns values in [0, 1].  The same function is applied
    at every multi-index.  ``mode`` selects decoupled (d independent
    arrays, cube index set) or coupled (one array, increasing tuples).

    ``total`` may supply a vectorized shortcut mapping sample arrays of
    shape (replicates, n) per coordinate to the full sums; without it
    totals iterate over all tuples (fine for small n and d).
    ``exact_mean`` optionally carries the exact ``m = E S``.
    """

    d: int
    n: int
    f: Callable[[np.ndarray], np.ndarray]
    dist: Distribution
    mode: str = "decoupled"  # or "coupled"
    total: Optional[Callable] = None
    exact_mean: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        if self.mode not in ("decoupled", "coupled"):
            raise ValueError(f"mode must be decoupled or coupled, got {self.mode!r}")
        if self.d < 1 or self.n < 1:
            raise ValueError("need d >= 1 and n >= 1")


@dataclass
class VerificationResult:
    """Margins of the two conclusions plus hypothesis check outcomes.

    ``moment_margin``: ``(m^2 + (2^d - 1) m) - E(S^2)`` (should be >= 0).
    ``pz_margin``: ``P(S >= m/2) - 2^(-d-2) min(m, 1)`` (should be >= 0).
    Both carry standard errors; ``violated`` flags margins below
    -3 sigma.  ``hypothesis_ok`` is False when a hypothesis failed, in
    which case the conclusions are reported but not asserted.
    """

    instance: LemmaInstance
    mean_est: float
    second_moment_est: float
    hit_prob_est: float
    moment_margin: float
    moment_sigma: float
    pz_margin: float
    pz_sigma: float
    hypothesis_ok: bool
    hypothesis_worst: dict = field(default_factory=dict)

    @property
    def moment_violated(self) -> bool:
        return self.moment_margin < -3.0 * self.moment_sigma

    @property
    def pz_violated(self) -> bool:
        return self.pz_margin < -3.0 * self.pz_sigma

    @property
    def clean(self) -> bool:
        return self.hypothesis_ok and not self.moment_violated and not self.pz_violated


def _totals_bruteforce(instance: LemmaInstance, arrays: np.ndarray) -> np.ndarray:
    """Sum f over all tuples; arrays has shape (R, n, #arrays)."""
    d, n = instance.d, instance.n
    reps = arrays.shape[0]
    totals = np.zeros(reps)
    if instance.mode == "decoupled":
        for idx in enumerate_cube(n, d):
            pts = np.stack([arrays[:, j - 1, r] for r, j in enumerate(idx)], axis=-1)
            totals += instance.f(pts)
    else:
        for idx in enumerate_increasing(n, d):
            pts = np.stack([arrays[:, j - 1, 0] for j in idx], axis=-1)
            totals += instance.f(pts)
    return totals


def _sample_totals(instance: LemmaInstance, replicates: int, rng) -> np.ndarray:
    n_arrays = instance.d if instance.mode == "decoupled" else 1
    arrays = instance.dist.sample(replicates * instance.n * n_arrays, rng).reshape(
        replicates, instance.n, n_arrays
    )
    if instance.total is not None:
        return np.asarray(instance.total(arrays), dtype=float)
    return _totals_bruteforce(instance, arrays)


def _check_hypotheses(instance: LemmaInstance, rng, outer_grid: int = 256,
                      inner: int = 128) -> tuple[bool, dict]:
    """Grid check of boundedness and of the conditional-sum hypotheses.

    Sound refutation, probabilistic confirmation: worst margins over
    ``outer_grid`` frozen draws are recorded per coordinate subset.
    """
    d, n = instance.d, instance.n
    worst: dict = {}
    pts = instance.dist.sample(outer_grid * d, rng).reshape(outer_grid, d)
    vals = np.asarray(instance.f(pts), dtype=float)
    worst["bounded"] = float(np.max(vals)) if vals.size else 0.0
    ok = bool(np.all((vals >= -1e-12) & (vals <= 1.0 + 1e-12)))

    if d == 1:
        return ok, worst

    if instance.mode == "decoupled":
        # E over coords in I of the sum over the I-entries of the index
        for size in range(1, d):
            for subset in itertools.combinations(range(d), size):
                margin = _decoupled_conditional_sum(
                    instance, subset, rng, outer_grid, inner
                )
                worst[f"cond-sum{subset}"] = margin
                ok = ok and margin <= 1.0 + 3.0 / math.sqrt(inner)
    else:
        for size in range(1, d):
            for subset in itertools.combinations(range(1, d + 1), size):
                margin = _coupled_conditional_sum(
                    instance, subset, rng, min(outer_grid, 64), inner
                )
                worst[f"cond-sum{subset}"] = margin
                ok = ok and margin <= 1.0 + 3.0 / math.sqrt(inner)
    return ok, worst


def _decoupled_conditional_sum(instance, subset, rng, outer_grid, inner):
    """Worst outer-draw estimate of E_I[sum over I-entries of f]."""
    d, n = instance.d, instance.n
    free = [r for r in range(d) if r not in subset]
    worst = 0.0
    for _ in range(outer_grid):
        frozen = instance.dist.sample(len(free), rng)
        est = 0.0
        for _ in range(inner):
            draw = instance.dist.sample(len(subset) * n, rng).reshape(n, len(subset))
            # sum over all assignments of the subset-entries to 1..n
            pts = np.empty((n ** len(subset), d))
            combos = np.array(
                list(itertools.product(range(n), repeat=len(subset))), dtype=int
            )
            for ci, r in enumerate(subset):
                pts[:, r] = draw[combos[:, ci], ci]
            for ci, r in enumerate(free):
                pts[:, r] = frozen[ci]
            est += float(np.sum(instance.f(pts)))
        worst = max(worst, est / inner)
    return worst


def _coupled_conditional_sum(instance, subset, rng, outer_grid, inner):
    """Worst estimate of E'_I[sum over the overlap family of f].

    The reference tuple is (1, ..., d); the overlap family collects the
    tuples sharing exactly the values at the slots in ``subset``.  Those
    shared sample values are frozen per outer draw, every other sample
    value is integrated out.
    """
    d, n = instance.d, instance.n
    base = tuple(range(1, d + 1))
    shared = set(subset)  # slot k of the reference tuple holds value k
    family = list(overlap_family(base, subset, n, mode="increasing"))
    worst = 0.0
    for _ in range(outer_grid):
        frozen = {pos: float(instance.dist.sample(1, rng)[0]) for pos in shared}
        est = 0.0
        for _ in range(inner):
            fresh = instance.dist.sample(n, rng)
            total = 0.0
            for j in family:
                pt = np.array([frozen.get(v, fresh[v - 1]) for v in j])
                total += float(instance.f(pt[None, :])[0])
            est += total
        worst = max(worst, est / inner)
    return worst


def verify_moment_bounds(
    instance: LemmaInstance,
    replicates: int = 10_000,
    rng=None,
    check_hypotheses: bool = True,
) -> VerificationResult:
    """Estimate the two conclusions of the second-moment bound and report margins.

    Decoupled instances verify ``E(S^2) <= m^2 + (2^d - 1) m`` and
    ``P(S >= m/2) >= 2^(-d-2) min(m, 1)``; coupled instances verify the
    undecoupled versions (identical constants).  When the instance
    carries ``exact_mean`` the thresholds use it; otherwise the sample
    mean stands in (noted by a wider reported sigma).
    """
    gen = as_generator(rng)
    if check_hypotheses:
        hyp_ok, worst = _check_hypotheses(instance, gen)
    else:
        hyp_ok, worst = True, {}

    totals = _sample_totals(instance, replicates, gen)
    m_est = float(np.mean(totals))
    m = instance.exact_mean if instance.exact_mean is not None else m_est
    sq = totals * totals
    second = float(np.mean(sq))
    second_sigma = float(np.std(sq) / math.sqrt(replicates))
    bound = m * m + (2.0**instance.d - 1.0) * m
    if instance.exact_mean is None:
        # account for threshold noise through the mean estimate
        m_sigma = float(np.std(totals) / math.sqrt(replicates))
        second_sigma += (2.0 * m + 2.0**instance.d - 1.0) * m_sigma

    hit = totals >= 0.5 * m
    p_hit = float(np.mean(hit))
    p_sigma = math.sqrt(max(p_hit * (1.0 - p_hit), 1.0 / replicates) / replicates)
    pz_bound = hit_constant(instance.d) * min(m, 1.0)

    return VerificationResult(
        instance=instance,
        mean_est=m_est,
        second_moment_est=second,
        hit_prob_est=p_hit,
        moment_margin=bound - second,
        moment_sigma=second_sigma,
        pz_margin=p_hit - pz_bound,
        pz_sigma=p_sigma,
        hypothesis_ok=hyp_ok,
        hypothesis_worst=worst,
    )


def rectangle_instance(
    d: int,
    n: int,
    mode: str = "decoupled",
    rng=None,
    low_frac: float = 0.2,
) -> LemmaInstance:
    """Random product-rectangle indicator instance satisfying the hypotheses.

    The summand is the indicator of a product rectangle whose marginal
    measures p_r are drawn with ``n * p_r <= 1``, which makes every
    conditional-sum hypothesis hold by construction.  Coupled mode uses
    one common rectangle (the kernel must be symmetric there).

    Closed forms: in decoupled mode the full sum equals a product of
    binomial counts, in coupled mode a binomial coefficient of one
    count, which `total` exploits to vectorize sampling.
    """
    gen = as_generator(rng)
    dist = uniform_pm1()
    widths = gen.uniform(low_frac / n, 1.0 / n, size=d)
    if mode == "coupled":
        widths[:] = widths[0]
    # rectangles live inside [-1, 1]; uniform_pm1 has density 1/2 there,
    # so a measure-p marginal needs width 2p
    starts = np.array([gen.uniform(-1.0, 1.0 - 2.0 * w) for w in widths])
    ends = starts + 2.0 * widths

    def f(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        inside = np.ones(pts.shape[:-1], dtype=bool)
        for r in range(d):
            inside &= (pts[..., r] >= starts[r]) & (pts[..., r] < ends[r])
        return inside.astype(float)

    if mode == "decoupled":
        exact_mean = float(np.prod(n * widths))

        def total(arrays: np.ndarray) -> np.ndarray:
            prod = np.ones(arrays.shape[0])
            for r in range(d):
                col = arrays[:, :, r]
                counts = np.sum((col >= starts[r]) & (col < ends[r]), axis=1)
                prod = prod * counts
            return prod

    else:
        p = float(widths[0])
        exact_mean = float(math.comb(n, d) * p**d)

        def total(arrays: np.ndarray) -> np.ndarray:
            col = arrays[:, :, 0]
            counts = np.sum((col >= starts[0]) & (col < ends[0]), axis=1)
            return np.array([math.comb(int(b), d) for b in counts], dtype=float)

    label = f"rect(d={d}, n={n}, {mode}, m={exact_mean:.4g})"
    return LemmaInstance(d=d, n=n, f=f, dist=dist, mode=mode, total=total,
                         exact_mean=exact_mean, label=label)


# --------------------------------------------------------------------------
# section bound
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxSet:
    """Product box ``[lo_r, hi_r)^d`` with exact measure and sections."""

    lows: tuple
    highs: tuple

    @classmethod
    def cube(cls, side: float, d: int) -> "BoxSet":
        return cls(lows=(0.0,) * d, highs=(side,) * d)

    @property
    def d(self) -> int:
        return len(self.lows)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        inside = np.ones(pts.shape[:-1], dtype=bool)
        for r in range(self.d):
            inside &= (pts[..., r] >= self.lows[r]) & (pts[..., r] < self.highs[r])
        return inside

    def measure(self, dist: Distribution) -> float:
        """Exact measure under iid coordinates, via the tail function."""
        mu = 1.0
        for lo, hi in zip(self.lows, self.highs):
            mu *= _interval_measure(dist, lo, hi)
        return mu

    def section_measure(self, dist: Distribution, subset) -> float:
        """Measure of the section through any point of the box."""
        mu = 1.0
        for r in range(self.d):
            if r not in subset:
                mu *= _interval_measure(dist, self.lows[r], self.highs[r])
        return mu


def _interval_measure(dist: Distribution, lo: float, hi: float) -> float:
    """P(lo <= X < hi) from the |X| tail; assumes a symmetric law."""
    if dist.tail is None:
        raise ValueError("need a closed-form tail for exact box measures")
    if not dist.symmetric:
        raise ValueError("exact box measures assume a symmetric law")

    def cdf(t: float) -> float:
        # symmetric: P(X > t) = tail(t)/2 for t >= 0
        if t >= 0:
            return 1.0 - float(dist.tail(t)) / 2.0
        return float(dist.tail(-t)) / 2.0

    return max(cdf(hi) - cdf(lo), 0.0)


@dataclass
class SectionBoundResult:
    """Hit-probability estimates vs. the section lower bounds."""

    n: int
    d: int
    mu: float
    hypothesis_ok: bool
    hypothesis_worst: float
    decoupled_hit: Optional[float] = None
    decoupled_se: Optional[float] = None
    decoupled_bound: Optional[float] = None
    coupled_hit: Optional[float] = None
    coupled_se: Optional[float] = None
    coupled_bound: Optional[float] = None

    def margins(self) -> dict:
        out = {}
        if self.decoupled_hit is not None:
            out["decoupled"] = self.decoupled_hit - self.decoupled_bound
        if self.coupled_hit is not None:
            out["coupled"] = self.coupled_hit - self.coupled_bound
        return out


def verify_section_bound(
    target,
    dist: Distribution,
    n: int,
    d: int,
    mode: str = "both",
    replicates: int = 4000,
    budget: int = 2048,
    rng=None,
) -> SectionBoundResult:
    """Check the hit-probability lower bounds for a small-section set.

    ``target`` is a :class:`BoxSet` (exact measures) or a predicate on
    (m, d) arrays (measures estimated by Monte Carlo).  The hypothesis
    (every proper section of measure at most ``n^-(d-l)``) is verified
    first; when it fails the bounds are still reported but flagged as
    not asserted, which is the expected behavior.

    Decoupled mode needs no minimum n; coupled increasing mode requires
    n >= d.
    """
    gen = as_generator(rng)
    is_box = isinstance(target, BoxSet)
    contains = target.contains if is_box else target

    if is_box and dist.tail is not None:
        mu = target.measure(dist)
    else:
        pts = dist.sample(budget * d, gen).reshape(budget, d)
        mu = float(np.mean(contains(pts)))

    hyp_worst = 0.0
    hyp_ok = True
    for size in range(1, d):
        for subset in itertools.combinations(range(d), size):
            if is_box and dist.tail is not None:
                sect = target.section_measure(dist, subset)
            else:
                sect = _worst_section_estimate(contains, dist, d, subset, gen, budget)
            scaled = n ** (d - size) * sect
            hyp_worst = max(hyp_worst, scaled)
            hyp_ok = hyp_ok and scaled <= 1.0 + 1e-9
    bound = hit_constant(d) * min(n**d * mu, 1.0)

    result = SectionBoundResult(n=n, d=d, mu=mu, hypothesis_ok=hyp_ok,
                                hypothesis_worst=hyp_worst)
    if mode in ("both", "decoupled"):
        if is_box:
            # product sets separate: a cube tuple hits iff every
            # coordinate array meets its marginal slice
            arrays = dist.sample(replicates * n * d, gen).reshape(replicates, n, d)
            ok = np.ones(replicates, dtype=bool)
            for r in range(d):
                col = arrays[:, :, r]
                in_slice = (col >= target.lows[r]) & (col < target.highs[r])
                ok &= np.any(in_slice, axis=1)
            hits = int(np.sum(ok))
        else:
            hits = 0
            for _ in range(replicates):
                arrays = dist.sample(n * d, gen).reshape(n, d)
                if _any_cube_hit(contains, arrays):
                    hits += 1
        p = hits / replicates
        result.decoupled_hit = p
        result.decoupled_se = math.sqrt(max(p * (1 - p), 1.0 / replicates) / replicates)
        result.decoupled_bound = bound
    if mode in ("both", "coupled"):
        if n < d:
            raise ValueError(f"coupled mode needs n >= d, got n={n}, d={d}")
        equal_box = is_box and len(set(zip(target.lows, target.highs))) == 1
        if equal_box:
            # common interval: an increasing tuple hits iff at least d
            # samples fall inside it
            samples = dist.sample(replicates * n, gen).reshape(replicates, n)
            inside = (samples >= target.lows[0]) & (samples < target.highs[0])
            hits = int(np.sum(np.sum(inside, axis=1) >= d))
        else:
            hits = 0
            for _ in range(replicates):
                xs = dist.sample(n, gen)
                if _any_increasing_hit(contains, xs, d):
                    hits += 1
        p = hits / replicates
        result.coupled_hit = p
        result.coupled_se = math.sqrt(max(p * (1 - p), 1.0 / replicates) / replicates)
        result.coupled_bound = bound * float(d) ** (-d)
    return result


def _worst_section_estimate(contains, dist, d, subset, rng, budget):
    worst = 0.0
    for _ in range(32):
        frozen = dist.sample(len(subset), rng)
        free = [r for r in range(d) if r not in subset]
        draws = dist.sample(budget * len(free), rng).reshape(budget, len(free))
        pts = np.empty((budget, d))
        pts[:, list(subset)] = frozen
        pts[:, free] = draws
        worst = max(worst, float(np.mean(contains(pts))))
    return worst


def _any_cube_hit(contains, arrays: np.ndarray) -> bool:
    """Does some cube tuple of the decoupled arrays land in the set?

    For product sets, coordinate memberships separate: a hit exists iff
    every coordinate array meets its own marginal slice.  This holds for
    BoxSet targets; generic predicates fall back to tuple enumeration.
    """
    n, d = arrays.shape
    # generic path; BoxSet callers go through the separable shortcut below
    for idx in enumerate_cube(n, d):
        pt = arrays[[j - 1 for j in idx], range(d)]
        if bool(contains(pt[None, :])[0]):
            return True
    return False


def _any_increasing_hit(contains, xs: np.ndarray, d: int) -> bool:
    n = xs.size
    for idx in enumerate_increasing(n, d):
        pt = xs[[j - 1 for j in idx]]
        if bool(contains(pt[None, :])[0]):
            return True
    return False


# --------------------------------------------------------------------------
# exact two-wing example on the unit square
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IntroExample:
    """Exact quantities for the two-wing set {x<a, y<b or x<b, y<a}.

    ``p_hit`` is the exact probability that some pair (X_i, Y_j) of n+n
    iid uniforms lands in the set; ``product_bound`` is
    ``min(na,1) * min(nb,1)`` (the d=1-style two-factor estimate), and
    ``sum_bound`` is ``n^2 * mu(A)`` (the union-bound numerator).
    """

    a: float
    b: float
    n: int
    p_hit: float
    product_bound: float
    mu: float
    sum_bound: float

    @property
    def capped_sum_bound(self) -> float:
        return min(self.sum_bound, 1.0)


def intro_example_exact(a: float, b: float, n: int) -> IntroExample:
    """Exact hit probability of the two-wing set via min statistics.

    The hit event is the union of two wing events: writing
    ``F(t) = 1 - (1-t)^n`` for the chance that some coordinate minimum
    falls below t, the wings have probability F(a)F(b) each and their
    intersection is F(min(a,b))^2, so
    ``P = 2 F(a) F(b) - F(min(a,b))^2``.
    For a = b the union degenerates to the square [0,a)^2 and
    P = F(a)^2.
    """
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError("need 0 <= a, b <= 1")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")

    def F(t: float) -> float:
        return 1.0 - (1.0 - t) ** n

    lo = min(a, b)
    p = 2.0 * F(a) * F(b) - F(lo) ** 2
    mu = 2.0 * a * b - lo * lo
    return IntroExample(
        a=a, b=b, n=n, p_hit=p,
        product_bound=min(n * a, 1.0) * min(n * b, 1.0),
        mu=mu, sum_bound=n * n * mu,
    )
