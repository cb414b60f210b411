"""Enumeration of the multi-index families used by the statistics.

Two index universes appear throughout the library: the strictly
increasing d-tuples ``1 <= i_1 < ... < i_d <= n`` (``increasing`` mode,
the natural index set of a U-statistic) and the full cube
``1 <= i_r <= n`` (``cube`` mode, used by decoupled statistics).  On top
of those we need the "new" tuples created when the sample grows by one,
the overlap families that classify how two tuples share sample points,
and the disjoint dyadic blocks used to embed a cube into the increasing
family.

Multi-indices are plain tuples of ints; all generators yield in
lexicographic order so that runs are reproducible.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Iterator, Sequence

__all__ = [
    "enumerate_increasing",
    "enumerate_cube",
    "new_indices",
    "overlap_family",
    "dyadic_blocks",
    "complement",
    "increasing_count",
    "cube_count",
]


def increasing_count(n: int, d: int) -> int:
    """Number of strictly increasing d-tuples with entries <= n."""
    return math.comb(n, d)


def cube_count(n: int, d: int) -> int:
    """Number of d-tuples with entries in 1..n."""
    return n**d


def _check_arity(d: int) -> None:
    if d < 1:
        raise ValueError(f"arity must be >= 1, got {d}")


def enumerate_increasing(n: int, d: int) -> Iterator[tuple[int, ...]]:
    """Yield all strictly increasing d-tuples over 1..n, lexicographically.

    Parameters
    ----------
    n : int
        Upper bound for the entries (n >= 0).
    d : int
        Tuple length (d >= 1).

    Yields
    ------
    tuple of int
        Exactly ``comb(n, d)`` tuples; the stream is empty when n < d.
    """
    _check_arity(d)
    if n < 0:
        raise ValueError(f"count must be >= 0, got {n}")
    return itertools.combinations(range(1, n + 1), d)


def enumerate_cube(n: int, d: int) -> Iterator[tuple[int, ...]]:
    """Yield all d-tuples with entries in 1..n, lexicographically.

    The stream has ``n**d`` elements; materialize with care.
    """
    _check_arity(d)
    if n < 0:
        raise ValueError(f"count must be >= 0, got {n}")
    return itertools.product(range(1, n + 1), repeat=d)


def new_indices(n: int, d: int) -> Iterator[tuple[int, ...]]:
    """Yield the increasing d-tuples over 1..n whose largest entry is n.

    These are exactly the tuples added when the sample size grows from
    n-1 to n, so incremental accumulators only visit
    ``comb(n-1, d-1)`` tuples per step.
    """
    _check_arity(d)
    if n < d:
        raise ValueError(f"need n >= d, got n={n}, d={d}")
    for head in itertools.combinations(range(1, n), d - 1):
        yield head + (n,)


def complement(members: Iterable[int], d: int) -> frozenset[int]:
    """Complement of a coordinate subset inside {1, ..., d}."""
    members = frozenset(members)
    if not members <= frozenset(range(1, d + 1)):
        raise ValueError(f"subset {sorted(members)} not contained in 1..{d}")
    return frozenset(range(1, d + 1)) - members


def overlap_family(
    i: Sequence[int],
    subset: Iterable[int],
    n: int,
    mode: str = "increasing",
) -> Iterator[tuple[int, ...]]:
    """Yield the tuples whose overlap pattern with ``i`` is exactly ``subset``.

    In ``increasing`` mode a tuple j belongs to the family when the set
    of slots k of ``i`` whose value occurs somewhere in j equals
    ``subset``; equivalently, j shares with i exactly the values
    ``{i_k : k in subset}``.  In ``decoupled`` mode the matching is
    coordinate-wise: ``j_k == i_k`` for k in the subset and
    ``j_k != i_k`` elsewhere, with j ranging over the cube.

    Parameters
    ----------
    i : sequence of int
        Reference multi-index (strictly increasing in ``increasing`` mode).
    subset : iterable of int
        Slot positions (1-based) of ``i`` that must be shared.
    n : int
        Index range bound.
    mode : {"increasing", "decoupled"}
    """
    i = tuple(i)
    d = len(i)
    _check_arity(d)
    subset = frozenset(subset)
    if not subset <= frozenset(range(1, d + 1)):
        raise ValueError(f"subset {sorted(subset)} not contained in 1..{d}")

    if mode == "increasing":
        if any(a >= b for a, b in zip(i, i[1:])):
            raise ValueError(f"index {i} is not strictly increasing")
        shared = frozenset(i[k - 1] for k in subset)
        others = frozenset(i) - shared
        free = [v for v in range(1, n + 1) if v not in frozenset(i)]
        out = []
        for extra in itertools.combinations(free, d - len(subset)):
            out.append(tuple(sorted(shared | set(extra))))
        # drop candidates that accidentally pick up a forbidden value
        # (cannot happen: free excludes all of i), keep lexicographic order
        assert all(not (set(t) & others) for t in out)
        yield from sorted(out)
    elif mode == "decoupled":
        slot_choices = []
        for k in range(1, d + 1):
            if k in subset:
                slot_choices.append((i[k - 1],))
            else:
                slot_choices.append(tuple(v for v in range(1, n + 1) if v != i[k - 1]))
        yield from itertools.product(*slot_choices)
    else:
        raise ValueError(f"unknown mode {mode!r}")


def dyadic_blocks(k: int, l: int, d: int) -> list[tuple[int, int]]:
    """Disjoint index ranges ((m-1)*2^(k-l), m*2^(k-l)] for m = 1..d.

    The ranges tile the front of (0, 2^k] with d blocks of width
    2^(k-l); this requires 2^l >= d (otherwise the blocks would not
    fit) and k >= l.

    Returns
    -------
    list of (lo, hi)
        Half-open-from-the-left ranges, ``lo`` exclusive, ``hi`` inclusive.
    """
    _check_arity(d)
    if 2**l < d:
        raise ValueError(f"need 2^l >= d, got 2^{l} = {2**l} < {d}")
    if k < l:
        raise ValueError(f"need k >= l, got k={k}, l={l}")
    width = 2 ** (k - l)
    return [((m - 1) * width, m * width) for m in range(1, d + 1)]
