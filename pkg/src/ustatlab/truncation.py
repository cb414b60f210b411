"""Truncation constants and truncated conditional second moments.

The central object is the calibration constant ``c_n``: the smallest
c > 0 with ``n * E(X^2/c^2 ^ 1) <= 1``.  The map
``c -> n * E(X^2/c^2 ^ 1)`` is nonincreasing, so bisection applies; we
use the identity ``E(X^2/c^2 ^ 1) = E(X^2 ^ c^2) / c^2`` to reuse the
distribution's truncated second moment.  When no closed form is
available a fixed Monte-Carlo panel is shared across all candidate c
(common random numbers), which keeps the empirical map monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Distribution, Kernel, NormalizingSequence, as_generator

__all__ = [
    "TruncationSolution",
    "solve_cn",
    "truncated_tail_bound_check",
    "section_moment",
]

_BISECT_ITERS = 80
_TINY = 1e-12


@dataclass(frozen=True)
class TruncationSolution:
    """Solution of the truncation equation for one sample size.

    ``residual`` is ``|n * E(X^2/c^2 ^ 1) - 1|`` at the returned c (0 by
    convention in the degenerate case), ``stderr`` the Monte-Carlo
    standard error of the defining map when sampled (0 for exact
    methods).
    """

    n: int
    c_n: float
    residual: float
    method: str  # closed-form | bisection-exact | bisection-monte-carlo | degenerate
    stderr: float = 0.0


def _exact_map(dist: Distribution, n: int):
    tsm = dist.truncated_second_moment

    def g(c: float) -> float:
        return n * float(tsm(c)) / (c * c)

    return g


def _panel_map(dist: Distribution, n: int, panel_sq: np.ndarray):
    def g(c: float) -> float:
        return n * float(np.mean(np.minimum(panel_sq / (c * c), 1.0)))

    return g


def solve_cn(
    dist: Distribution,
    n: int,
    mc_budget: int = 200_000,
    rng=None,
) -> TruncationSolution:
    """Smallest c > 0 with ``n * E(X^2/c^2 ^ 1) <= 1``.

    Uses the closed-form truncated second moment when the distribution
    carries one, otherwise a shared Monte-Carlo panel of ``mc_budget``
    squared samples.  ``X == 0`` (or more generally
    ``n * P(X != 0) <= 1``) makes the infimum 0, reported with method
    ``degenerate``; downstream consumers treat divisions by c = 0 as
    infinite thresholds.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")

    exact = dist.truncated_second_moment is not None
    if exact:
        g = _exact_map(dist, n)
        method = "bisection-exact"
        stderr = 0.0
    else:
        panel = dist.sample(mc_budget, as_generator(rng))
        panel_sq = panel * panel
        g = _panel_map(dist, n, panel_sq)
        method = "bisection-monte-carlo"

    # As c -> 0+ the map tends to n * P(X != 0); if that already satisfies
    # the constraint the infimum over c > 0 is 0 and is not attained.
    if g(_TINY) <= 1.0:
        return TruncationSolution(n=n, c_n=0.0, residual=0.0, method="degenerate")

    # bracket: start at sqrt(n * E(X^2 ^ cap)) -- there g <= 1 already for
    # exact closed forms -- and grow geometrically until the map drops below 1
    lo = _TINY
    if exact:
        hi = max(1.0, math.sqrt(n * max(float(dist.truncated_second_moment(1e12)), 1e-12)))
    else:
        hi = max(1.0, math.sqrt(n * max(float(np.mean(panel_sq)), 1e-12)))
    grow = 0
    while g(hi) > 1.0:
        hi *= 4.0
        grow += 1
        if grow > 200:
            raise RuntimeError(f"could not bracket the truncation constant for n={n}")

    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if g(mid) > 1.0:
            lo = mid
        else:
            hi = mid

    c = hi  # the feasible endpoint
    residual = abs(g(c) - 1.0)
    if not exact:
        vals = np.minimum(panel_sq / (c * c), 1.0)
        stderr = n * float(np.std(vals) / math.sqrt(len(vals)))
    return TruncationSolution(n=n, c_n=float(c), residual=float(residual),
                              method=method, stderr=stderr)


def truncated_tail_bound_check(
    dist: Distribution,
    k: int,
    mc_budget: int = 200_000,
    rng=None,
) -> bool:
    """Whether ``P(X^2 > c_{2^k}^2) <= 2^-k`` holds.

    Evaluated exactly when the distribution has a closed-form tail,
    otherwise by Monte Carlo with a 3-sigma acceptance slack.  The bound
    is the small-sections estimate behind the dyadic truncation: by
    Chebyshev, ``P(X^2 > c^2) <= E(X^2 ^ c^2)/c^2``, which the
    definition of c_n caps at 1/n.
    """
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    n = 2**k
    sol = solve_cn(dist, n, mc_budget=mc_budget, rng=rng)
    c = sol.c_n
    bound = 2.0 ** (-k)
    if c == 0.0:
        # degenerate: the event is X != 0
        p = dist.nonzero_prob
        return p <= bound
    if dist.tail is not None:
        return float(dist.tail(c)) <= bound
    sample = dist.sample(mc_budget, as_generator(rng))
    hits = sample * sample > c * c
    p_hat = float(np.mean(hits))
    sigma = math.sqrt(max(p_hat * (1 - p_hat), 1.0 / mc_budget) / mc_budget)
    return p_hat - 3.0 * sigma <= bound


def section_moment(
    kernel: Kernel,
    dist: Distribution,
    seq: NormalizingSequence,
    k: int,
    x,
    budget: int = 4096,
    rng=None,
):
    """Scaled truncated second moment of the kernel section at ``x``.

    For an arity-2 kernel this is ``2^k * E_Y(h^2(x, Y) ^ gamma_{2^k}^2)``
    with Y distributed as ``dist``.  For the product kernel with a
    closed-form truncated second moment the value is exact (standard
    error 0); otherwise Monte Carlo over ``budget`` draws of Y.

    Parameters
    ----------
    x : float or ndarray
        Frozen first argument(s); vectorized over arrays.

    Returns
    -------
    (value, stderr) : ndarray pairs matching the shape of ``x``.
    """
    if kernel.arity != 2:
        raise ValueError(f"section moment needs an arity-2 kernel, got {kernel.arity}")
    x = np.asarray(x, dtype=float)
    gamma2 = float(seq(2**k)) ** 2
    scale = 2.0**k

    if kernel.name == "product" and dist.truncated_second_moment is not None:
        # E((xY)^2 ^ g^2) = x^2 * E(Y^2 ^ (g/|x|)^2); x == 0 contributes 0
        ax = np.abs(x)
        safe = np.where(ax > 0, ax, 1.0)
        cap = np.sqrt(gamma2) / safe
        val = scale * ax**2 * np.asarray(dist.truncated_second_moment(cap), float)
        val = np.where(ax > 0, val, 0.0)
        return val, np.zeros_like(val)

    gen = as_generator(rng)
    ys = dist.sample(budget, gen)
    flat = x.reshape(-1)
    vals = np.empty(flat.shape)
    errs = np.empty(flat.shape)
    for idx, xv in enumerate(flat):
        h = kernel(np.full(budget, xv), ys)
        capped = np.minimum(h * h, gamma2)
        vals[idx] = scale * float(np.mean(capped))
        errs[idx] = scale * float(np.std(capped) / math.sqrt(budget))
    return vals.reshape(x.shape), errs.reshape(x.shape)
