"""Path simulation for the four normalized statistics and running maxima.

Modes
-----
``A``    signed sum over increasing tuples, one Rademacher sign per
         sample index (sign of a tuple = product of its entry signs),
         normalized by gamma_n.
``Apr``  decoupled variant: d independent sample arrays and d
         independent sign arrays, summed over the full cube.
``B``    sum of squared kernel values over increasing tuples,
         normalized by gamma_n^2.
``Bpr``  decoupled sum of squares over the cube.
``MAX``  max of the squared kernel over increasing tuples, normalized
         by gamma_n^2 (squared form, so it lives on the same scale
         as ``B``).

Paths grow one sample at a time; each step only touches the tuples
containing the new index, which costs O(n^(d-1)) kernel evaluations in
increasing mode.  Checkpoints are recorded at n = 2, 4, ..., 2^k_max
only: all summability conditions the library evaluates are stated along
dyadic sizes, so nothing finer is needed.

Sums of squares accumulate in a shifted representation (mantissa plus a
power-of-two exponent) so heavy-tailed summands cannot silently
overflow the running total.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .indexing import dyadic_blocks
from .model import Distribution, Kernel, NormalizingSequence, as_generator, certify_regularity

__all__ = [
    "MODES",
    "PathState",
    "PathDiagnostics",
    "RegularityError",
    "new_path_state",
    "extend",
    "run_path",
    "BlockEmbedding",
    "decoupled_block_embed",
]

MODES = ("A", "Apr", "B", "Bpr", "MAX")
_DECOUPLED = {"Apr", "Bpr"}
_SIGNED = {"A", "Apr"}


class RegularityError(ValueError):
    """Raised when a path run is requested with an uncertified normalizer."""


class _ShiftedSum:
    """Nonnegative accumulator stored as mantissa * 2**shift.

    Plain float addition overflows near 1.8e308; renormalizing the
    mantissa whenever it crosses 2**512 keeps extreme heavy-tail sums
    finite.  Terms smaller than the mantissa's resolution are absorbed
    exactly as ordinary float addition would absorb them.
    """

    __slots__ = ("mantissa", "shift")

    def __init__(self) -> None:
        self.mantissa = 0.0
        self.shift = 0

    def add(self, x: float) -> bool:
        """Add a nonnegative term; returns False when x is not finite."""
        if x == 0.0:
            return True
        if not math.isfinite(x):
            return False
        self.mantissa += math.ldexp(x, -self.shift) if self.shift else x
        if self.mantissa > 5.0e153:  # ~2**510
            self.mantissa = math.ldexp(self.mantissa, -512)
            self.shift += 512
        return True

    def log2(self) -> float:
        if self.mantissa == 0.0:
            return -math.inf
        return math.log2(self.mantissa) + self.shift

    def normalized(self, gamma: float, power: int) -> float:
        """value / gamma**power computed through exponents."""
        if self.mantissa == 0.0:
            return 0.0
        return 2.0 ** (self.log2() - power * math.log2(gamma))


@dataclass
class PathState:
    """Mutable state of one growing path.

    ``xs`` holds one sample array in coupled modes and d arrays in
    decoupled modes; ``eps`` mirrors that for the sign arrays of the
    signed modes.  ``signed_total`` carries modes A/Apr, ``square_total``
    carries B/Bpr, ``max_sq`` carries MAX.
    """

    kernel: Kernel
    mode: str
    n: int = 0
    xs: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    signed_total: float = 0.0
    square_total: _ShiftedSum = field(default_factory=_ShiftedSum)
    max_sq: float = 0.0
    overflow: bool = False

    @property
    def arity(self) -> int:
        return self.kernel.arity

    def raw_value(self) -> float:
        if self.mode in _SIGNED:
            return self.signed_total
        if self.mode == "MAX":
            return self.max_sq
        return 2.0 ** self.square_total.log2() if self.square_total.mantissa else 0.0

    def normalized_value(self, gamma: float) -> float:
        if self.mode in _SIGNED:
            return self.signed_total / gamma
        if self.mode == "MAX":
            return self.max_sq / (gamma * gamma)
        return self.square_total.normalized(gamma, 2)


@dataclass
class PathDiagnostics:
    """Dyadic checkpoints of one path: values are gamma-normalized."""

    seed: object
    mode: str
    ks: list[int]
    ns: list[int]
    values: list[float]
    overflow: bool = False

    def rows(self):
        """(seed, mode, k, n, value) rows for CSV emission."""
        for k, n, v in zip(self.ks, self.ns, self.values):
            yield (self.seed, self.mode, k, n, v)


def new_path_state(kernel: Kernel, mode: str) -> PathState:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    d = kernel.arity
    arrays = d if mode in _DECOUPLED else 1
    state = PathState(kernel=kernel, mode=mode)
    state.xs = [[] for _ in range(arrays)]
    state.eps = [[] for _ in range(arrays)] if mode in _SIGNED else []
    return state


def _as_columns(new_x, arrays: int) -> np.ndarray:
    cols = np.atleast_2d(np.asarray(new_x, dtype=float))
    if arrays == 1:
        cols = cols.reshape(-1, 1)
    if cols.shape[1] != arrays:
        raise ValueError(f"expected {arrays} sample columns, got {cols.shape[1]}")
    return cols


def _signed_contribution(state: PathState, row: np.ndarray, erow) -> float:
    """Sum of signed kernel values over the tuples created by this step."""
    d = state.arity
    t = state.n + 1
    kern = state.kernel
    if state.mode == "A":
        xs = np.asarray(state.xs[0][: t - 1])
        eps = np.asarray(state.eps[0][: t - 1])
        xt, et = row[0], erow[0]
        if d == 1:
            return float(et * kern(np.array([xt]))[0])
        if t < d:
            return 0.0
        if d == 2:
            vals = kern(xs, np.full(t - 1, xt))
            return float(et * np.sum(eps * vals))
        if d == 3:
            ii, jj = np.triu_indices(t - 1, k=1)
            vals = kern(xs[ii], xs[jj], np.full(ii.shape, xt))
            return float(et * np.sum(eps[ii] * eps[jj] * vals))
        total = 0.0
        for head in itertools.combinations(range(t - 1), d - 1):
            args = [np.array([xs[j]]) for j in head] + [np.array([xt])]
            sign = et * float(np.prod(eps[list(head)]))
            total += sign * float(kern(*args)[0])
        return total
    # Apr: cube tuples with at least one coordinate equal to t
    total = 0.0
    prev = [np.asarray(col[: t - 1]) for col in state.xs]
    eprev = [np.asarray(col[: t - 1]) for col in state.eps]
    for subset in _nonempty_subsets(d):
        args, signs = [], []
        free_axes = [r for r in range(d) if r not in subset]
        for r in range(d):
            if r in subset:
                args.append(row[r])
                signs.append(erow[r])
            else:
                axis = free_axes.index(r)
                shape = [1] * len(free_axes)
                shape[axis] = t - 1
                args.append(prev[r].reshape(shape))
                signs.append(eprev[r].reshape(shape))
        vals = kern(*args)
        sign = signs[0]
        for s in signs[1:]:
            sign = sign * s
        total += float(np.sum(sign * vals))
    return total


def _nonempty_subsets(d: int):
    slots = range(d)
    for size in range(1, d + 1):
        yield from (set(c) for c in itertools.combinations(slots, size))


def _square_contributions(state: PathState, row: np.ndarray) -> np.ndarray:
    """Squared kernel values over the tuples created by this step."""
    d = state.arity
    t = state.n + 1
    kern = state.kernel
    if state.mode in ("B", "MAX"):
        xs = np.asarray(state.xs[0][: t - 1])
        xt = row[0]
        if d == 1:
            v = kern(np.array([xt]))
            return v * v
        if t < d:
            return np.zeros(0)
        if d == 2:
            v = kern(xs, np.full(t - 1, xt))
            return v * v
        if d == 3:
            ii, jj = np.triu_indices(t - 1, k=1)
            v = kern(xs[ii], xs[jj], np.full(ii.shape, xt))
            return v * v
        out = []
        for head in itertools.combinations(range(t - 1), d - 1):
            args = [np.array([xs[j]]) for j in head] + [np.array([xt])]
            out.append(float(kern(*args)[0]) ** 2)
        return np.asarray(out)
    # Bpr
    prev = [np.asarray(col[: t - 1]) for col in state.xs]
    pieces = []
    for subset in _nonempty_subsets(d):
        args = []
        free_axes = [r for r in range(d) if r not in subset]
        for r in range(d):
            if r in subset:
                args.append(row[r])
            else:
                axis = free_axes.index(r)
                shape = [1] * len(free_axes)
                shape[axis] = t - 1
                args.append(prev[r].reshape(shape))
        v = np.asarray(kern(*args), dtype=float).ravel()
        pieces.append(v * v)
    return np.concatenate(pieces) if pieces else np.zeros(0)


def extend(state: PathState, new_x, new_eps=None, rng=None) -> PathState:
    """Grow the path by the given samples, updating the accumulator.

    ``new_x`` is an array of new sample values (shape ``(m,)`` in coupled
    modes, ``(m, d)`` in decoupled modes).  Signed modes draw fresh
    Rademacher signs from ``rng`` unless ``new_eps`` supplies them
    explicitly (same shape as ``new_x``).  Only tuples containing a new
    index are visited.
    """
    arrays = len(state.xs)
    cols = _as_columns(new_x, arrays)
    m = cols.shape[0]
    if m < 1:
        raise ValueError("need at least one new sample")
    if state.mode in _SIGNED:
        if new_eps is None:
            gen = as_generator(rng)
            ecols = gen.integers(0, 2, size=(m, arrays)) * 2.0 - 1.0
        else:
            ecols = _as_columns(new_eps, arrays)
            if ecols.shape != cols.shape:
                raise ValueError("sign array shape must match sample shape")
    for step in range(m):
        row = cols[step]
        if state.mode in _SIGNED:
            erow = ecols[step]
            delta = _signed_contribution(state, row, erow)
            state.signed_total += delta
            if not math.isfinite(state.signed_total):
                state.overflow = True
            for r in range(arrays):
                state.eps[r].append(float(erow[r]))
        elif state.mode == "MAX":
            sq = _square_contributions(state, row)
            if sq.size:
                state.max_sq = max(state.max_sq, float(np.max(sq)))
        else:
            sq = _square_contributions(state, row)
            chunk = float(np.sum(sq))
            if not state.square_total.add(chunk):
                state.overflow = True
        for r in range(arrays):
            state.xs[r].append(float(row[r]))
        state.n += 1
    return state


def run_path(
    kernel: Kernel,
    dist: Distribution,
    seq: NormalizingSequence,
    mode: str,
    k_max: int,
    seed,
    check_regularity: bool = True,
) -> PathDiagnostics:
    """Simulate one path and record normalized values at n = 2^1..2^k_max.

    The normalizer is certified on the requested range first; pass
    ``check_regularity=False`` to simulate under an irregular sequence
    (useful when divergence itself is the object of study).
    """
    if k_max < 1:
        raise ValueError(f"need k_max >= 1, got {k_max}")
    if check_regularity:
        report = certify_regularity(seq, kernel.arity, max(2, min(k_max, 16)))
        if not report.all_pass:
            raise RegularityError(
                "normalizer failed regularity certification; "
                "pass check_regularity=False to override\n" + report.summary()
            )
    rng = as_generator(seed)
    state = new_path_state(kernel, mode)
    arrays = len(state.xs)
    ks, ns, values = [], [], []
    n = 0
    for k in range(1, k_max + 1):
        target = 2**k
        fresh = dist.sample((target - n) * arrays, rng).reshape(target - n, arrays)
        extend(state, fresh if arrays > 1 else fresh[:, 0], rng=rng)
        n = target
        gamma = float(seq(n))
        ks.append(k)
        ns.append(n)
        values.append(state.normalized_value(gamma))
    return PathDiagnostics(
        seed=seed, mode=mode, ks=ks, ns=ns, values=values, overflow=state.overflow
    )


# --------------------------------------------------------------------------
# block embedding
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockEmbedding:
    """Embedding of the cube over 1..2^(k-l) into increasing tuples over 1..2^k.

    Coordinate r of a cube index is shifted into the r-th dyadic block,
    making every image strictly increasing; evaluating a coupled sum of
    squares on blocked samples has the same law as the decoupled sum on
    fresh arrays.
    """

    k: int
    l: int
    d: int
    width: int
    blocks: list

    def map(self, cube_index: Sequence[int]) -> tuple[int, ...]:
        if len(cube_index) != self.d:
            raise ValueError(f"expected a {self.d}-tuple, got {cube_index!r}")
        if any(not (1 <= j <= self.width) for j in cube_index):
            raise ValueError(f"entries of {cube_index!r} must lie in 1..{self.width}")
        return tuple((m) * self.width + j for m, j in zip(range(self.d), cube_index))


def decoupled_block_embed(k: int, d: int, l: Optional[int] = None) -> BlockEmbedding:
    """Build the block embedding for level k with block exponent l.

    ``l`` defaults to the smallest value with 2^l >= d.  Requires k > l.
    """
    if l is None:
        l = max(1, math.ceil(math.log2(d))) if d > 1 else 1
    if 2**l < d:
        raise ValueError(f"need 2^l >= d, got 2^{l} < {d}")
    if k <= l:
        raise ValueError(f"need k > l, got k={k}, l={l}")
    return BlockEmbedding(k=k, l=l, d=d, width=2 ** (k - l), blocks=dyadic_blocks(k, l, d))
