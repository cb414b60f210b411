"""Evaluators for the necessary-and-sufficient summability conditions.

Four families of per-level terms are computed, one for each criterion
the library checks:

* product-kernel tail terms (``product_tail_terms``): for the product
  kernel, ``2^(kl) * P(prod_{r<=l} X_r^2 > gamma^2 / c^(2(d-l)),
  min_{r<=l} X_r^2 > c^2)`` with the truncation constant c at size 2^k;
* membership exceedance terms (``exceedance_terms``): the probability
  that some sample tuple leaves the nested admissible sets ``A_{k,l}``
  built from truncated conditional second moments;
* section decomposition (``section_decomposition``): the bad-section
  sets ``B`` and trimmed cores ``C`` that split an exceedance event
  into lower-dimensional hit events plus a small-measure core;
* two-dimensional section terms (``two_dim_terms``): the pair of series
  built from the scaled section moment of an arity-2 kernel.

All estimates carry error bars, and threshold comparisons classify
points into in / out / unknown rather than forcing a side: nested
estimators compose, and silently biased indicators would corrupt the
final verdicts.  Verdicts over a finite level range are proxies for
summability; reports always record the range and the estimator used.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import integrate

from .indexing import enumerate_increasing, enumerate_cube
from .model import Distribution, Kernel, NormalizingSequence, as_generator
from .truncation import solve_cn, section_moment

__all__ = [
    "IN",
    "OUT",
    "UNKNOWN",
    "SUMMABLE",
    "DIVERGENT",
    "INCONCLUSIVE",
    "ConditionReport",
    "summability_verdict",
    "combine_verdicts",
    "product_tail_terms",
    "product_condition_report",
    "SetMembershipOracle",
    "exceedance_terms",
    "SectionDecomposition",
    "section_decomposition",
    "two_dim_terms",
]

IN, OUT, UNKNOWN = "in", "out", "unknown"
SUMMABLE, DIVERGENT, INCONCLUSIVE = "summable", "divergent", "inconclusive"

#: default decision thresholds for the finite-range summability proxy
SLOPE_THRESHOLD = 0.2
DIVERGENCE_FLOOR = 0.1
_TINY_TERM = 1e-12


# --------------------------------------------------------------------------
# reports and verdicts
# --------------------------------------------------------------------------

@dataclass
class ConditionReport:
    """Per-level terms of one summability condition, with a verdict."""

    condition: str
    ks: list
    terms: np.ndarray
    errs: np.ndarray
    verdict: str
    notes: dict = field(default_factory=dict)

    @property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.terms)

    def rows(self):
        """(condition, k, term, err, partial_sum) rows for CSV emission."""
        sums = self.partial_sums
        for i, k in enumerate(self.ks):
            yield (self.condition, k, float(self.terms[i]), float(self.errs[i]),
                   float(sums[i]))

    def summary(self) -> str:
        rng = f"k = {self.ks[0]}..{self.ks[-1]}"
        return (f"{self.condition}: verdict {self.verdict} on {rng}, "
                f"total {float(self.partial_sums[-1]):.6g}")


def summability_verdict(
    terms,
    errs=None,
    slope_threshold: float = SLOPE_THRESHOLD,
    floor: float = DIVERGENCE_FLOOR,
    min_terms: int = 6,
) -> str:
    """Classify a nonnegative term sequence as summable/divergent/inconclusive.

    The rule is a finite-range proxy, never a proof: terms that vanish
    are summable; terms bounded below by ``floor`` on the second half of
    the range are divergent; otherwise a least-squares fit of log-terms
    against the level on the last half decides by slope (decaying faster
    than ``exp(-slope_threshold * k)`` is summable, growing faster is
    divergent, anything else is inconclusive).  Estimates whose error
    bars dominate the terms are inconclusive outright.
    """
    terms = np.asarray(terms, dtype=float)
    if terms.size < min_terms:
        raise ValueError(f"need at least {min_terms} terms, got {terms.size}")
    if np.any(terms < -1e-12):
        raise ValueError("terms must be nonnegative")
    if errs is not None:
        errs = np.asarray(errs, dtype=float)
        live = terms > _TINY_TERM
        if np.any(live) and np.median(errs[live]) > 2.0 * np.median(terms[live]):
            return INCONCLUSIVE
    if np.all(terms <= _TINY_TERM):
        return SUMMABLE
    half = terms[terms.size // 2:]
    ks = np.arange(terms.size)[terms.size // 2:]
    if np.all(half >= floor):
        return DIVERGENT
    if np.all(half <= _TINY_TERM):
        return SUMMABLE
    # exact zeros below the fit floor read as extreme decay, not gaps
    slope = np.polyfit(ks, np.log(np.maximum(half, 1e-300)), 1)[0]
    if slope < -slope_threshold:
        return SUMMABLE
    if slope > slope_threshold:
        return DIVERGENT
    return INCONCLUSIVE


def combine_verdicts(*verdicts: str) -> str:
    """All-series verdict: divergence dominates, then inconclusiveness."""
    if DIVERGENT in verdicts:
        return DIVERGENT
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return SUMMABLE


def _make_report(condition, ks, terms, errs, notes=None, **verdict_kw) -> ConditionReport:
    terms = np.asarray(terms, dtype=float)
    errs = np.asarray(errs, dtype=float)
    try:
        verdict = summability_verdict(terms, errs, **verdict_kw)
    except ValueError:  # too few levels to classify
        verdict = INCONCLUSIVE
    return ConditionReport(
        condition=condition, ks=list(ks), terms=terms, errs=errs,
        verdict=verdict, notes=notes or {},
    )


# --------------------------------------------------------------------------
# product-kernel tail terms
# --------------------------------------------------------------------------

def _joint_tail_prob_quad(dist: Distribution, l: int, T: float, c: float) -> float:
    """P(prod_{r<=l} X_r^2 > T, min_r X_r^2 > c^2) by nested quadrature.

    Uses the magnitude quantile to integrate over the conditional law of
    each |X_r| above c; exact up to quadrature error for closed-form
    tails.
    """
    if not math.isfinite(T):
        return 0.0
    tail = dist.tail
    if l == 1:
        thr = math.sqrt(max(T, c * c))
        return float(tail(thr))
    qtl = dist.tail_inverse
    g_c = float(tail(c))
    if g_c <= 0.0:
        return 0.0

    def inner(u):
        t = float(qtl(u))
        if not math.isfinite(t) or t <= 0:
            return 1.0  # infinite magnitude: remaining condition holds a.s.
        return _joint_tail_prob_quad(dist, l - 1, T / (t * t), c)

    val, _ = integrate.quad(inner, 0.0, g_c, limit=200)
    return float(val)


def _joint_tail_prob_mc(dist, l, T, c, budget, rng):
    """Monte-Carlo estimate of the joint tail probability, with stderr.

    When the tail and its quantile are available the draw is conditioned
    on all magnitudes exceeding c (importance sampling by restriction),
    which keeps small probabilities sharp; otherwise plain sampling.
    """
    if not math.isfinite(T):
        return 0.0, 0.0, None
    if dist.tail is not None and dist.tail_inverse is not None:
        g_c = float(dist.tail(c))
        if g_c <= 0.0:
            return 0.0, 0.0, None
        us = np.maximum(rng.random((budget, l)) * g_c, 1e-300)
        ts = np.asarray(dist.tail_inverse(us), dtype=float)
        hits = np.prod(ts * ts, axis=1) > T
        p = float(np.mean(hits))
        se = math.sqrt(max(p * (1 - p), 1.0 / budget) / budget)
        weight = g_c**l
        return weight * p, weight * se, None
    xs = dist.sample(budget * l, rng).reshape(budget, l)
    sq = xs * xs
    hits = (np.min(sq, axis=1) > c * c) & (np.prod(sq, axis=1) > T)
    p = float(np.mean(hits))
    se = math.sqrt(max(p * (1 - p), 1.0 / budget) / budget)
    note = "rare-event estimate; consider importance sampling" if p < 10.0 / budget else None
    return p, se, note


def product_tail_terms(
    dist: Distribution,
    seq: NormalizingSequence,
    d: int,
    l: int,
    ks: Iterable[int],
    estimator: str = "auto",
    budget: int = 10**6,
    rng=None,
) -> ConditionReport:
    """Terms ``2^(kl) * P(prod X_r^2 > gamma^2/c^(2(d-l)), min X_r^2 > c^2)``.

    The probability is over l iid coordinates; c is the truncation
    constant at sample size 2^k (c = 0 degenerates the thresholds to
    ``min > 0`` and, for l < d, an infinite product threshold).

    Parameters
    ----------
    estimator : {"auto", "quadrature", "monte-carlo"}
        "auto" uses quadrature when closed-form tails are available.
    """
    if not 1 <= l <= d:
        raise ValueError(f"need 1 <= l <= d, got l={l}, d={d}")
    ks = list(ks)
    gen = as_generator(rng)
    closed = dist.tail is not None and dist.tail_inverse is not None
    if estimator == "auto":
        estimator = "quadrature" if closed else "monte-carlo"
    if estimator == "quadrature" and not closed:
        raise ValueError("quadrature estimator needs closed-form tails")

    terms, errs = [], []
    notes = {}
    for k in ks:
        n = 2**k
        gamma2 = float(seq(n)) ** 2
        c = solve_cn(dist, n).c_n
        if c == 0.0:
            T = gamma2 if l == d else math.inf
        else:
            T = gamma2 / c ** (2 * (d - l))
        scale = 2.0 ** (k * l)
        if estimator == "quadrature":
            p = _joint_tail_prob_quad(dist, l, T, c)
            terms.append(scale * p)
            errs.append(0.0)
        else:
            p, se, note = _joint_tail_prob_mc(dist, l, T, c, budget, gen)
            terms.append(scale * p)
            errs.append(scale * se)
            if note:
                notes[f"k={k}"] = note
    return _make_report(f"product-tails[l={l}/{d}]", ks, terms, errs, notes=notes)


def product_condition_report(
    dist: Distribution,
    seq: NormalizingSequence,
    d: int,
    ks: Iterable[int],
    estimator: str = "auto",
    budget: int = 10**6,
    rng=None,
) -> tuple[list[ConditionReport], str]:
    """All levels l = 1..d of the product tail condition, plus the verdict.

    The condition requires every level's series to be summable, so the
    combined verdict is the worst per-level verdict.
    """
    ks = list(ks)
    gen = as_generator(rng)
    reports = [
        product_tail_terms(dist, seq, d, l, ks, estimator=estimator,
                           budget=budget, rng=gen)
        for l in range(1, d + 1)
    ]
    return reports, combine_verdicts(*(r.verdict for r in reports))


# --------------------------------------------------------------------------
# nested membership oracle
# --------------------------------------------------------------------------

class SetMembershipOracle:
    """Three-way membership tests for the nested admissible sets.

    Level 1 admits a point x in E^d when ``h^2(x) <= gamma_{2^k}^2``
    (exact).  Level l+1 additionally requires, for every coordinate
    subset I of cardinality l, that the scaled conditional moment
    ``2^(kl) * E_I[h^2 * 1_{level l}](x)`` stay below ``gamma_{2^k}^2``,
    where E_I resamples the coordinates in I from fresh independent
    copies.  Conditional expectations are nested Monte-Carlo averages;
    a query answers ``unknown`` when the threshold lies inside the
    estimate's uncertainty band, and unknowns propagate instead of
    being forced to a side.

    Budgets shrink geometrically with depth: a level-l query spends
    roughly ``budget`` evaluations in total.
    """

    def __init__(
        self,
        kernel: Kernel,
        dist: Distribution,
        seq: NormalizingSequence,
        budget: int = 2048,
        band_sigmas: float = 2.0,
        rng=None,
    ):
        self.kernel = kernel
        self.dist = dist
        self.seq = seq
        self.budget = int(budget)
        self.band_sigmas = float(band_sigmas)
        self.rng = as_generator(rng)

    def _gamma2(self, k: int) -> float:
        return float(self.seq(2**k)) ** 2

    def _panel_size(self, depth: int) -> int:
        # depth >= 1 nested layers share the budget multiplicatively
        return max(8, int(round(self.budget ** (1.0 / depth))))

    def classify(self, k: int, l: int, x) -> str:
        """Membership of x in the level-l admissible set at scale 2^k."""
        d = self.kernel.arity
        if not 1 <= l <= d:
            raise ValueError(f"need 1 <= l <= {d}, got {l}")
        x = np.asarray(x, dtype=float).reshape(d)
        gamma2 = self._gamma2(k)
        h = float(self.kernel(*[np.array([v]) for v in x])[0])
        if h * h > gamma2:
            return OUT
        if l == 1:
            return IN
        verdict = self.classify(k, l - 1, x)
        if verdict != IN:
            return verdict
        saw_unknown = False
        for subset in itertools.combinations(range(d), l - 1):
            res = self._subset_condition(k, l - 1, x, subset)
            if res == OUT:
                return OUT
            if res == UNKNOWN:
                saw_unknown = True
        return UNKNOWN if saw_unknown else IN

    def _subset_condition(self, k: int, l: int, x: np.ndarray, subset) -> str:
        """Check 2^(kl) * E_subset[h^2 * 1_{level l}](x) <= gamma_{2^k}^2."""
        d = self.kernel.arity
        gamma2 = self._gamma2(k)
        depth = max(1, l)  # remaining nesting below this expectation
        m = self._panel_size(depth)
        draws = self.dist.sample(m * len(subset), self.rng).reshape(m, len(subset))
        lows = np.empty(m)
        highs = np.empty(m)
        for j in range(m):
            y = x.copy()
            y[list(subset)] = draws[j]
            h = float(self.kernel(*[np.array([v]) for v in y])[0])
            hsq = h * h
            if l == 1:
                member = IN if hsq <= gamma2 else OUT
            else:
                member = self.classify(k, l, y)
            lows[j] = hsq if member == IN else 0.0
            highs[j] = hsq if member != OUT else 0.0
        scale = 2.0 ** (k * l)
        est_lo = scale * float(np.mean(lows))
        est_hi = scale * float(np.mean(highs))
        band = self.band_sigmas * scale * float(np.std(highs) / math.sqrt(m))
        if est_hi + band <= gamma2:
            return IN
        if est_lo - band > gamma2:
            return OUT
        return UNKNOWN


# --------------------------------------------------------------------------
# exceedance terms (does any tuple leave the admissible set?)
# --------------------------------------------------------------------------

def _pair_max_sq(kernel: Kernel, xs: np.ndarray, ys: Optional[np.ndarray]) -> float:
    """Max of h^2 over increasing pairs (ys None) or over the cube."""
    if kernel.name == "product":
        if ys is None:
            a = np.sort(np.abs(xs))
            return float((a[-1] * a[-2]) ** 2) if xs.size >= 2 else 0.0
        return float((np.max(np.abs(xs)) * np.max(np.abs(ys))) ** 2)
    best = 0.0
    chunk = 512
    if ys is None:
        n = xs.size
        for i0 in range(0, n, chunk):
            block = xs[i0:i0 + chunk]
            v = kernel(block[:, None], xs[None, :])
            # mask to strictly increasing pairs: global row index < col index
            rows = np.arange(i0, i0 + block.size)[:, None]
            cols = np.arange(n)[None, :]
            sq = np.where(rows < cols, v * v, 0.0)
            best = max(best, float(np.max(sq)) if sq.size else 0.0)
        return best
    for i0 in range(0, xs.size, chunk):
        block = xs[i0:i0 + chunk]
        v = kernel(block[:, None], ys[None, :])
        best = max(best, float(np.max(v * v)))
    return best


def _screen_values(kernel, dist, gamma2, scale_k, values, inner_budget, band_sigmas, rng):
    """Three-way screening of the per-value conditional-moment condition.

    For arity 2 the level-2 conditions are per-value: for each sample
    value v, check ``2^k * E_W[h^2(v, W) 1{h^2 <= gamma^2}] <= gamma^2``
    on a shared inner panel.  Returns (definitely_bad, unknown) masks.
    """
    panel = dist.sample(inner_budget, rng)
    vals = kernel(values[:, None], panel[None, :])
    sq = vals * vals
    capped = np.where(sq <= gamma2, sq, 0.0)
    est = scale_k * np.mean(capped, axis=1)
    band = band_sigmas * scale_k * np.std(capped, axis=1) / math.sqrt(inner_budget)
    bad = est - band > gamma2
    unknown = (~bad) & (est + band > gamma2)
    return bad, unknown


def exceedance_terms(
    kernel: Kernel,
    dist: Distribution,
    seq: NormalizingSequence,
    ks: Iterable[int],
    replicates: int = 64,
    mode: str = "coupled",
    budget: int = 256,
    rng=None,
    band_sigmas: float = 2.0,
    oracle_budget: int = 512,
) -> ConditionReport:
    """Per-level estimates of P(some tuple leaves the admissible set).

    ``mode="coupled"`` runs increasing tuples over one sample array,
    ``mode="decoupled"`` the full cube over independent arrays.  Each
    replicate simulates a fresh array of 2^k samples; cheap screens run
    first (the exact level-1 test over tuples, then the per-value
    conditional-moment screen), and only arities above 2 fall back to
    the generic nested oracle on the surviving tuples.  Replicates whose
    outcome hinges on an unknown classification widen the error bar; a
    level dominated by unknowns is flagged.
    """
    if mode not in ("coupled", "decoupled"):
        raise ValueError(f"mode must be 'coupled' or 'decoupled', got {mode!r}")
    d = kernel.arity
    ks = list(ks)
    gen = as_generator(rng)
    terms, errs = [], []
    notes = {}
    for k in ks:
        n = 2**k
        gamma2 = float(seq(n)) ** 2
        scale_k = 2.0**k
        bad_count = 0
        unknown_count = 0
        for _ in range(replicates):
            if mode == "coupled":
                xs = dist.sample(n, gen)
                arrays = [xs]
            else:
                arrays = [dist.sample(n, gen) for _ in range(d)]
            outcome = _replicate_outcome(
                kernel, dist, seq, k, gamma2, scale_k, arrays, mode,
                budget, band_sigmas, oracle_budget, gen,
            )
            if outcome == OUT:
                bad_count += 1
            elif outcome == UNKNOWN:
                unknown_count += 1
        p = bad_count / replicates
        se = math.sqrt(max(p * (1 - p), 1.0 / replicates) / replicates)
        # an unknown replicate could have gone either way
        err = se + unknown_count / replicates
        terms.append(p)
        errs.append(err)
        if unknown_count > replicates / 2:
            notes[f"k={k}"] = f"{unknown_count}/{replicates} replicates unknown"
    name = f"exceedance[{mode}, d={d}]"
    report = _make_report(name, ks, terms, errs, notes=notes)
    if notes and report.verdict != DIVERGENT:
        report.verdict = INCONCLUSIVE
    return report


def _replicate_outcome(kernel, dist, seq, k, gamma2, scale_k, arrays, mode,
                       budget, band_sigmas, oracle_budget, gen):
    """One replicate: does some tuple leave the level-d set?  IN/OUT/UNKNOWN.

    Returns OUT when a bad tuple certainly exists (the exceedance event
    happened), IN when certainly none does.
    """
    d = kernel.arity
    if d == 1:
        sq = kernel(arrays[0]) ** 2
        return OUT if np.any(sq > gamma2) else IN
    if d == 2:
        xs = arrays[0]
        ys = arrays[1] if mode == "decoupled" else None
        if _pair_max_sq(kernel, xs, ys) > gamma2:
            return OUT
        values = xs if ys is None else np.concatenate([xs, ys])
        bad, unknown = _screen_values(
            kernel, dist, gamma2, scale_k, values, budget, band_sigmas, gen
        )
        if np.any(bad):
            return OUT
        return UNKNOWN if np.any(unknown) else IN
    # generic arity: level-1 prefilter, then the nested oracle per tuple
    n = arrays[0].size
    tuples = (
        enumerate_increasing(n, d) if mode == "coupled" else enumerate_cube(n, d)
    )
    oracle = SetMembershipOracle(kernel, dist, seq, budget=oracle_budget, rng=gen,
                                 band_sigmas=band_sigmas)
    saw_unknown = False
    count = 0
    for idx in tuples:
        count += 1
        if count > 200_000:
            raise ValueError(
                f"{count}+ tuples at arity {d}, n={n}; reduce k for arity > 2"
            )
        if mode == "coupled":
            point = [arrays[0][j - 1] for j in idx]
        else:
            point = [arrays[r][j - 1] for r, j in enumerate(idx)]
        sq = float(kernel(*[np.array([v]) for v in point])[0]) ** 2
        if sq > gamma2:
            return OUT
        res = oracle.classify(k, d, point)
        if res == OUT:
            return OUT
        if res == UNKNOWN:
            saw_unknown = True
    return UNKNOWN if saw_unknown else IN


# --------------------------------------------------------------------------
# section decomposition
# --------------------------------------------------------------------------

@dataclass
class SectionDecomposition:
    """Bad-section sets and trimmed cores built from a target set.

    ``level_test(l, x)`` classifies x against the trimmed core at level
    l (level d is the target set itself); ``bad_section_test(I, x_I)``
    classifies a partial point against the bad-section set of the
    coordinate subset I.  ``section_terms`` maps each subset to the
    estimated probability that some increasing tuple of samples lands in
    its bad-section set (with stderr); ``core_term`` is the scaled core
    measure ``2^(kd) * mu_d(core)`` (with stderr).
    """

    d: int
    k: float
    scale: float
    level_test: Callable[[int, Sequence[float]], str]
    bad_section_test: Callable[[frozenset, Sequence[float]], str]
    section_terms: dict
    core_term: tuple
    core_measure: tuple
    #: (l, x, subset, budget, rng) -> (scaled section measure, threshold 1.0);
    #: re-estimates a section of the level-l core on held-out draws, where the
    #: trimming construction promises a value < 1 for any |subset| >= l
    check_small_sections: Callable = None


def section_decomposition(
    predicate: Callable[[np.ndarray], np.ndarray],
    dist: Distribution,
    d: int,
    k: float,
    budget: int = 4096,
    replicates: int = 256,
    rng=None,
    band_sigmas: float = 2.0,
) -> SectionDecomposition:
    """Decompose an exceedance target set into bad sections plus a core.

    ``predicate`` takes an (m, d) array of points and returns a boolean
    membership array for the target set.  The construction runs by
    induction downward from level d: the level-(l+1) core's sections
    through a frozen subset of cardinality l are measured by Monte
    Carlo; partial points whose scaled section measure reaches 1 form
    the bad-section set of that subset, and the level-l core removes
    every point with some bad section.  ``k`` may be fractional: all
    thresholds and sample counts use ``scale = 2^k``.
    """
    gen = as_generator(rng)
    scale = 2.0**k
    pred = predicate

    def level_test(l: int, x, budget_here: Optional[int] = None) -> str:
        """Classify x in the level-l trimmed core (level d = target set)."""
        if not 1 <= l <= d:
            raise ValueError(f"need 1 <= l <= {d}, got {l}")
        x = np.asarray(x, dtype=float).reshape(d)
        if not bool(pred(x[None, :])[0]):
            return OUT
        if l == d:
            return IN
        res = level_test(l + 1, x, budget_here)
        if res != IN:
            return res
        saw_unknown = False
        for subset in itertools.combinations(range(d), l):
            r = bad_section_test(frozenset(subset), x[list(subset)], budget_here)
            if r == IN:  # the section through x is bad: x leaves the core
                return OUT
            if r == UNKNOWN:
                saw_unknown = True
        return UNKNOWN if saw_unknown else IN

    def bad_section_test(subset: frozenset, x_part, budget_here: Optional[int] = None) -> str:
        """Classify x_part in the bad-section set of the given subset."""
        subset = frozenset(subset)
        l = len(subset)
        if not 0 < l < d:
            raise ValueError(f"subset cardinality must be in 1..{d - 1}")
        m = budget_here or budget
        x_part = np.asarray(x_part, dtype=float).reshape(l)
        free = [r for r in range(d) if r not in subset]
        draws = dist.sample(m * len(free), gen).reshape(m, len(free))
        lo = 0
        hi = 0
        for j in range(m):
            y = np.empty(d)
            y[list(subset)] = x_part
            y[free] = draws[j]
            r = level_test(l + 1, y, max(64, m // 4))
            if r == IN:
                lo += 1
                hi += 1
            elif r == UNKNOWN:
                hi += 1
        p_lo, p_hi = lo / m, hi / m
        band = band_sigmas * math.sqrt(max(p_hi * (1 - p_hi), 1.0 / m) / m)
        threshold = scale ** -(d - l)
        if p_lo - band >= threshold:
            return IN
        if p_hi + band < threshold:
            return OUT
        return UNKNOWN


    # --- series quantities -------------------------------------------------
    n = int(round(scale))
    section_terms = {}
    for l in range(1, d):
        for subset in itertools.combinations(range(d), l):
            fs = frozenset(subset)
            hits = 0
            unknowns = 0
            for _ in range(replicates):
                xs = dist.sample(n, gen)
                outcome = IN
                found = False
                for idx in enumerate_increasing(n, l):
                    part = np.array([xs[j - 1] for j in idx])
                    r = bad_section_test(fs, part, max(64, budget // 8))
                    if r == IN:
                        found = True
                        break
                    if r == UNKNOWN:
                        outcome = UNKNOWN
                if found:
                    hits += 1
                elif outcome == UNKNOWN:
                    unknowns += 1
            p = hits / replicates
            se = math.sqrt(max(p * (1 - p), 1.0 / replicates) / replicates)
            section_terms[fs] = (p, se + unknowns / replicates)

    pts = dist.sample(budget * d, gen).reshape(budget, d)
    lo = 0
    hi = 0
    for j in range(budget):
        r = level_test(1, pts[j], max(64, budget // 8))
        if r == IN:
            lo += 1
            hi += 1
        elif r == UNKNOWN:
            hi += 1
    mu_lo, mu_hi = lo / budget, hi / budget
    mu_mid = 0.5 * (mu_lo + mu_hi)
    mu_se = math.sqrt(max(mu_hi * (1 - mu_lo), 1.0 / budget) / budget)
    mu_err = mu_se + 0.5 * (mu_hi - mu_lo)
    core_term = (scale**d * mu_mid, scale**d * mu_err)

    def check_small_sections(l, x, subset, budget_check=2048, rng_check=None):
        subset = frozenset(subset)
        m_card = len(subset)
        if m_card < l or m_card >= d:
            raise ValueError("need l <= |subset| < d")
        g2 = as_generator(rng_check) if rng_check is not None else gen
        x = np.asarray(x, dtype=float).reshape(d)
        free = [r for r in range(d) if r not in subset]
        draws = dist.sample(budget_check * len(free), g2).reshape(budget_check, len(free))
        cnt = 0
        for j in range(budget_check):
            y = x.copy()
            y[free] = draws[j]
            if level_test(l, y, max(64, budget_check // 8)) == IN:
                cnt += 1
        measure = cnt / budget_check
        return scale ** (d - m_card) * measure, 1.0

    return SectionDecomposition(
        d=d, k=k, scale=scale,
        level_test=lambda l, x: level_test(l, x),
        bad_section_test=lambda subset, x: bad_section_test(frozenset(subset), x),
        section_terms=section_terms,
        core_term=core_term,
        core_measure=(mu_mid, mu_err),
        check_small_sections=check_small_sections,
    )


# --------------------------------------------------------------------------
# two-dimensional section terms
# --------------------------------------------------------------------------

def two_dim_terms(
    kernel: Kernel,
    dist: Distribution,
    seq: NormalizingSequence,
    ks: Iterable[int],
    budget: int = 10**5,
    inner_budget: int = 2048,
    rng=None,
    band_sigmas: float = 2.0,
) -> tuple[ConditionReport, ConditionReport]:
    """The pair of arity-2 series built from the scaled section moment.

    For each level k, with ``f`` the scaled section moment at 2^k and
    ``g2 = gamma_{2^k}^2``:

    * first series:  ``2^k  * P(f(X) >= g2)``;
    * second series: ``2^(2k) * P(h^2(X, Y) >= g2, f(X) < g2, f(Y) < g2)``
      (non-strict on h^2, strict on f).

    Probabilities are Monte Carlo over a panel of (X, Y) pairs with the
    per-point section moments cached; points whose section-moment
    uncertainty band straddles the threshold widen the reported error
    bars, and the straddle fraction is noted.
    """
    if kernel.arity != 2:
        raise ValueError(f"needs an arity-2 kernel, got {kernel.arity}")
    ks = list(ks)
    gen = as_generator(rng)
    t1, e1, t2, e2 = [], [], [], []
    notes1, notes2 = {}, {}
    for k in ks:
        gamma2 = float(seq(2**k)) ** 2
        xs = dist.sample(budget, gen)
        ys = dist.sample(budget, gen)
        fx, fx_err = section_moment(kernel, dist, seq, k, xs,
                                    budget=inner_budget, rng=gen)
        fy, fy_err = section_moment(kernel, dist, seq, k, ys,
                                    budget=inner_budget, rng=gen)
        fx_hi = fx + band_sigmas * fx_err
        fx_lo = fx - band_sigmas * fx_err
        fy_hi = fy + band_sigmas * fy_err
        fy_lo = fy - band_sigmas * fy_err

        ind1 = fx >= gamma2
        straddle1 = (fx_hi >= gamma2) != (fx_lo >= gamma2)
        p1 = float(np.mean(ind1))
        se1 = math.sqrt(max(p1 * (1 - p1), 1.0 / budget) / budget)
        t1.append(2.0**k * p1)
        e1.append(2.0**k * (se1 + 0.5 * float(np.mean(straddle1))))
        if np.any(straddle1):
            notes1[f"k={k}"] = f"{int(np.sum(straddle1))} section moments straddle the threshold"

        hsq = np.asarray(kernel(xs, ys), dtype=float) ** 2
        ind2 = (hsq >= gamma2) & (fx < gamma2) & (fy < gamma2)
        straddle2 = (hsq >= gamma2) & (
            ((fx_lo < gamma2) != (fx_hi < gamma2))
            | ((fy_lo < gamma2) != (fy_hi < gamma2))
        )
        p2 = float(np.mean(ind2))
        se2 = math.sqrt(max(p2 * (1 - p2), 1.0 / budget) / budget)
        t2.append(4.0**k * p2)
        e2.append(4.0**k * (se2 + 0.5 * float(np.mean(straddle2))))
        if np.any(straddle2):
            notes2[f"k={k}"] = f"{int(np.sum(straddle2))} pairs straddle the threshold"

    r1 = _make_report("two-dim[threshold-mass]", ks, t1, e1, notes=notes1)
    r2 = _make_report("two-dim[joint-exceedance]", ks, t2, e2, notes=notes2)
    return r1, r2
