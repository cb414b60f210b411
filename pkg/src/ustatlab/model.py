"""Distributions, kernels and normalizing sequences.

A :class:`Distribution` couples a seeded sampler with optional closed
forms for the truncated second moment ``t -> E(X^2 ^ t^2)`` and the
tail ``t -> P(|X| > t)``; evaluators prefer the closed forms and fall
back to Monte Carlo.  A :class:`Kernel` is a symmetric real function of
d real arguments with a vectorized evaluator.  A
:class:`NormalizingSequence` is a positive map ``n -> gamma_n`` whose
regularity (monotone, doubling, dyadic tail domination) can be
certified on a finite range.

Built-ins cover the regimes the verification suite needs: bounded
(Rademacher, uniform on [-1, 1]), heavy tails (symmetric Pareto-type
with tail ``t^-p``), and degenerate (point mass).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "Distribution",
    "Kernel",
    "NormalizingSequence",
    "RegularityReport",
    "rademacher",
    "uniform_pm1",
    "pareto_symmetric",
    "point_mass",
    "make_distribution",
    "product_kernel",
    "sum_product_kernel",
    "indicator_threshold_kernel",
    "make_kernel",
    "power_normalizer",
    "constant_normalizer",
    "make_normalizer",
    "certify_regularity",
    "product_measure_sample",
    "as_generator",
]


def as_generator(rng) -> np.random.Generator:
    """Normalize ints / SeedSequences / Generators / None to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# --------------------------------------------------------------------------
# distributions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    """A real-valued sample distribution with optional closed forms.

    Attributes
    ----------
    name : str
        Registry name, also used to key closed-form shortcuts.
    sampler : callable
        ``sampler(rng, size) -> ndarray`` drawing iid values.
    truncated_second_moment : callable or None
        Vectorized ``t -> E(X^2 ^ t^2)`` for t >= 0.
    tail : callable or None
        Vectorized ``t -> P(|X| > t)`` for t >= 0.
    symmetric : bool
        Whether the law is symmetric about 0.
    second_moment : float
        ``E X^2`` (may be ``inf``).
    nonzero_prob : float
        ``P(X != 0)``, used by degenerate-case handling.
    """

    name: str
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    truncated_second_moment: Optional[Callable] = None
    tail: Optional[Callable] = None
    symmetric: bool = True
    second_moment: float = np.inf
    nonzero_prob: float = 1.0
    tail_inverse: Optional[Callable] = None  # u -> t with P(|X| > t) = u

    def sample(self, size: int, rng=None) -> np.ndarray:
        """Draw ``size`` iid values; deterministic given the seed."""
        return self.sampler(as_generator(rng), size)

    def __repr__(self) -> str:  # keep reports compact
        return f"Distribution({self.name!r})"


def rademacher() -> Distribution:
    """Symmetric +-1 variables."""
    return Distribution(
        name="rademacher",
        sampler=lambda rng, size: rng.integers(0, 2, size=size) * 2.0 - 1.0,
        truncated_second_moment=lambda t: np.minimum(np.asarray(t, float) ** 2, 1.0),
        tail=lambda t: np.where(np.asarray(t, float) < 1.0, 1.0, 0.0),
        second_moment=1.0,
        tail_inverse=lambda u: np.ones_like(np.asarray(u, float)),
    )


def uniform_pm1() -> Distribution:
    """Uniform on [-1, 1]."""

    def tsm(t):
        t = np.asarray(t, float)
        return np.where(t < 1.0, t**2 - (2.0 / 3.0) * t**3, 1.0 / 3.0)

    def tail(t):
        t = np.asarray(t, float)
        return np.clip(1.0 - t, 0.0, 1.0)

    return Distribution(
        name="uniform",
        sampler=lambda rng, size: rng.uniform(-1.0, 1.0, size=size),
        truncated_second_moment=tsm,
        tail=tail,
        second_moment=1.0 / 3.0,
        tail_inverse=lambda u: 1.0 - np.asarray(u, float),
    )


def pareto_symmetric(p: float) -> Distribution:
    """Symmetric heavy-tailed law with exact tail ``P(|X| > t) = t^-p``, t >= 1.

    ``|X|`` is sampled by inversion (``U^(-1/p)``), the sign is an
    independent fair coin.  ``E X^2`` is finite iff p > 2.
    """
    if p <= 0:
        raise ValueError(f"tail exponent must be positive, got {p}")

    def sampler(rng, size):
        mag = rng.random(size) ** (-1.0 / p)
        sign = rng.integers(0, 2, size=size) * 2.0 - 1.0
        return mag * sign

    def tsm(t):
        t = np.asarray(t, float)
        small = np.minimum(t, 1.0) ** 2
        if p == 2.0:
            big = 2.0 * np.log(np.maximum(t, 1.0)) + 1.0
        else:
            big = (2.0 * np.maximum(t, 1.0) ** (2.0 - p) - p) / (2.0 - p)
        return np.where(t < 1.0, small, big)

    def tail(t):
        t = np.asarray(t, float)
        return np.where(t < 1.0, 1.0, np.maximum(t, 1.0) ** (-p))

    return Distribution(
        name=f"pareto(p={p:g})",
        sampler=sampler,
        truncated_second_moment=tsm,
        tail=tail,
        second_moment=p / (p - 2.0) if p > 2 else np.inf,
        tail_inverse=lambda u: np.maximum(np.asarray(u, float), 1e-300) ** (-1.0 / p),
    )


def point_mass(value: float = 0.0) -> Distribution:
    """Point mass at ``value`` (``value = 0`` is the degenerate regime)."""
    v = float(value)
    return Distribution(
        name=f"point({v:g})",
        sampler=lambda rng, size: np.full(size, v),
        truncated_second_moment=lambda t: np.minimum(np.asarray(t, float) ** 2, v * v),
        tail=lambda t: np.where(np.asarray(t, float) < abs(v), 1.0, 0.0),
        symmetric=(v == 0.0),
        second_moment=v * v,
        nonzero_prob=0.0 if v == 0.0 else 1.0,
        tail_inverse=lambda u: np.full_like(np.asarray(u, float), abs(v)),
    )


_DIST_BUILTINS = {
    "rademacher": lambda **kw: rademacher(),
    "uniform": lambda **kw: uniform_pm1(),
    "pareto": lambda **kw: pareto_symmetric(float(kw["p"])),
    "zero": lambda **kw: point_mass(0.0),
    "point": lambda **kw: point_mass(float(kw.get("value", 0.0))),
}


def make_distribution(name: str, **params) -> Distribution:
    """Instantiate a built-in distribution by registry name."""
    try:
        factory = _DIST_BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown distribution {name!r}; built-ins: {sorted(_DIST_BUILTINS)}"
        ) from None
    return factory(**params)


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """A symmetric kernel of ``arity`` real arguments.

    ``evaluate`` takes ``arity`` broadcastable arrays and returns an
    array of values.  ``name`` keys closed-form shortcuts elsewhere in
    the library (e.g. truncated conditional moments for the product
    kernel).
    """

    name: str
    arity: int
    evaluate: Callable[..., np.ndarray]
    symmetric: bool = True
    params: tuple = ()

    def __call__(self, *args) -> np.ndarray:
        if len(args) != self.arity:
            raise ValueError(
                f"kernel {self.name!r} takes {self.arity} arguments, got {len(args)}"
            )
        return self.evaluate(*args)

    def __repr__(self) -> str:
        return f"Kernel({self.name!r}, arity={self.arity})"


def product_kernel(d: int) -> Kernel:
    """h(x) = x_1 * ... * x_d."""

    def ev(*args):
        out = np.asarray(args[0], float)
        for a in args[1:]:
            out = out * np.asarray(a, float)
        return out

    return Kernel(name="product", arity=d, evaluate=ev)


def sum_product_kernel(d: int, weight: float = 1.0) -> Kernel:
    """h(x) = sum_r x_r + weight * prod_r x_r (symmetric in its arguments)."""

    def ev(*args):
        s = np.asarray(args[0], float).copy()
        p = np.asarray(args[0], float).copy()
        for a in args[1:]:
            a = np.asarray(a, float)
            s = s + a
            p = p * a
        return s + weight * p

    return Kernel(name="sum_product", arity=d, evaluate=ev, params=(weight,))


def indicator_threshold_kernel(d: int, threshold: float = 1.0) -> Kernel:
    """h(x) = 1 when |x_1 * ... * x_d| >= threshold, else 0.  Bounded by 1."""

    def ev(*args):
        p = np.asarray(args[0], float)
        for a in args[1:]:
            p = p * np.asarray(a, float)
        return (np.abs(p) >= threshold).astype(float)

    return Kernel(name="indicator_threshold", arity=d, evaluate=ev, params=(threshold,))


_KERNEL_BUILTINS = {
    "product": lambda d, **kw: product_kernel(d),
    "sum_product": lambda d, **kw: sum_product_kernel(d, float(kw.get("weight", 1.0))),
    "indicator_threshold": lambda d, **kw: indicator_threshold_kernel(
        d, float(kw.get("threshold", 1.0))
    ),
}


def make_kernel(name: str, arity: int, **params) -> Kernel:
    """Instantiate a built-in kernel by registry name."""
    try:
        factory = _KERNEL_BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel {name!r}; built-ins: {sorted(_KERNEL_BUILTINS)}"
        ) from None
    return factory(arity, **params)


# --------------------------------------------------------------------------
# normalizing sequences
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizingSequence:
    """Positive normalization ``n -> gamma_n`` with claimed constants.

    ``doubling_constant`` and ``tail_constant`` are the constants the
    caller claims for the doubling bound ``gamma_{2n} <= C gamma_n`` and
    for the dyadic tail bound; :func:`certify_regularity` reports the
    smallest admissible constants actually found on the tested range.
    """

    name: str
    gamma: Callable[[np.ndarray], np.ndarray]
    doubling_constant: float = np.inf
    tail_constant: float = np.inf

    def __call__(self, n) -> np.ndarray:
        return np.asarray(self.gamma(np.asarray(n, dtype=float)), dtype=float)

    def scaled(self, factor: float) -> "NormalizingSequence":
        """The sequence ``factor * gamma_n`` (same regularity constants)."""
        base = self.gamma
        return NormalizingSequence(
            name=f"{factor:g}*{self.name}",
            gamma=lambda n: factor * np.asarray(base(n), float),
            doubling_constant=self.doubling_constant,
            tail_constant=self.tail_constant,
        )

    def __repr__(self) -> str:
        return f"NormalizingSequence({self.name!r})"


def power_normalizer(exponent: float) -> NormalizingSequence:
    """gamma_n = n^exponent."""
    return NormalizingSequence(
        name=f"poly:{exponent:g}",
        gamma=lambda n: np.asarray(n, float) ** exponent,
        doubling_constant=2.0**exponent,
        tail_constant=np.inf,
    )


def constant_normalizer(value: float = 1.0) -> NormalizingSequence:
    """gamma_n = value for all n."""
    return NormalizingSequence(
        name=f"const:{value:g}",
        gamma=lambda n: np.full_like(np.asarray(n, float), float(value)),
        doubling_constant=1.0,
        tail_constant=np.inf,
    )


def make_normalizer(name: str, **params) -> NormalizingSequence:
    if name == "poly":
        return power_normalizer(float(params["exponent"]))
    if name == "const":
        return constant_normalizer(float(params.get("value", 1.0)))
    raise ValueError(f"unknown normalizer {name!r}; built-ins: ['poly', 'const']")


@dataclass
class RegularityReport:
    """Outcome of the three regularity checks on a finite range.

    ``monotone`` / ``doubling`` / ``dyadic_tail`` are pass flags;
    ``doubling_c`` and ``tail_c`` are the smallest constants found;
    ``tail_ratio`` is the geometric-extrapolation ratio of the last two
    dyadic terms (a ratio >= 1 makes the tail condition fail).  The
    checks quantify over all n in the paper-free sense only on
    ``n <= 2^k_max``; the report records that range.
    """

    k_max: int
    d: int
    monotone: bool
    doubling: bool
    dyadic_tail: bool
    doubling_c: float
    tail_c: float
    tail_ratio: float
    hard_failure: Optional[str] = None

    @property
    def all_pass(self) -> bool:
        return (
            self.hard_failure is None
            and self.monotone
            and self.doubling
            and self.dyadic_tail
        )

    def summary(self) -> str:
        lines = [
            f"regularity check on n <= 2^{self.k_max} (d={self.d})",
            f"  monotone:    {'pass' if self.monotone else 'FAIL'}",
            f"  doubling:    {'pass' if self.doubling else 'FAIL'} (C = {self.doubling_c:.6g})",
            f"  dyadic tail: {'pass' if self.dyadic_tail else 'FAIL'} "
            f"(C = {self.tail_c:.6g}, ratio = {self.tail_ratio:.6g})",
        ]
        if self.hard_failure:
            lines.append(f"  hard failure: {self.hard_failure}")
        return "\n".join(lines)


def certify_regularity(seq: NormalizingSequence, d: int, k_max: int) -> RegularityReport:
    """Check the three regularity conditions on ``n <= 2^k_max``.

    The conditions are: gamma nondecreasing; ``gamma_{2n} <= C gamma_n``;
    and dyadic tail domination
    ``sum_{k >= l} 2^(dk)/gamma_{2^k}^2 <= C * 2^(dl)/gamma_{2^l}^2``
    for every l.  The tail sums are truncated at ``k_max`` and closed
    with a geometric extrapolation bound from the last observed ratio;
    a last ratio >= 1 is reported as a failing (divergent) tail.

    Nonpositive gamma values are a hard failure.
    """
    if k_max < 2:
        raise ValueError(f"need k_max >= 2, got {k_max}")
    n_hi = 2**k_max
    # monotone + positivity on a dense grid up to n_hi (dense up to 4096,
    # then dyadic refinement to keep the check cheap for large k_max)
    dense = np.arange(1, min(n_hi, 4096) + 1, dtype=float)
    coarse = np.unique(
        np.concatenate([dense, np.logspace(0, k_max, num=64 * k_max, base=2.0)])
    )
    coarse = coarse[coarse <= n_hi]
    g = seq(coarse)
    if np.any(~np.isfinite(g)) or np.any(g <= 0):
        return RegularityReport(
            k_max=k_max, d=d, monotone=False, doubling=False, dyadic_tail=False,
            doubling_c=np.inf, tail_c=np.inf, tail_ratio=np.inf,
            hard_failure="gamma takes nonpositive or non-finite values",
        )
    monotone = bool(np.all(np.diff(g) >= -1e-12 * np.abs(g[:-1])))

    half = coarse[coarse <= n_hi / 2]
    ratios = seq(2.0 * half) / seq(half)
    doubling_c = float(np.max(ratios))
    doubling = bool(np.isfinite(doubling_c))

    ks = np.arange(1, k_max + 1)
    terms = 2.0 ** (d * ks) / seq(2.0**ks) ** 2
    tail_ratio = float(terms[-1] / terms[-2]) if terms[-2] > 0 else np.inf
    if tail_ratio < 1.0:
        extrapolated = terms[-1] * tail_ratio / (1.0 - tail_ratio)
        suffix = np.cumsum(terms[::-1])[::-1] + extrapolated
        tail_c = float(np.max(suffix / terms))
        dyadic_tail = np.isfinite(tail_c)
    else:
        suffix = np.cumsum(terms[::-1])[::-1]
        tail_c = np.inf
        dyadic_tail = False

    return RegularityReport(
        k_max=k_max, d=d, monotone=monotone, doubling=doubling,
        dyadic_tail=dyadic_tail, doubling_c=doubling_c, tail_c=tail_c,
        tail_ratio=tail_ratio,
    )


def product_measure_sample(
    dist: Distribution, d: int, seed, count: int
) -> np.ndarray:
    """Draw ``count`` iid points of the d-fold product measure.

    Returns an array of shape ``(count, d)`` whose columns are
    independent and distributed as ``dist``.
    """
    if d < 1:
        raise ValueError(f"arity must be >= 1, got {d}")
    rng = as_generator(seed)
    return dist.sample(count * d, rng).reshape(count, d)
