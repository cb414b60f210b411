import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ustatlab.indexing import (
    complement,
    cube_count,
    dyadic_blocks,
    enumerate_cube,
    enumerate_increasing,
    increasing_count,
    new_indices,
    overlap_family,
)


def test_enumerate_increasing_small():
    assert list(enumerate_increasing(3, 2)) == [(1, 2), (1, 3), (2, 3)]
    assert list(enumerate_increasing(2, 3)) == []


def test_enumerate_increasing_count_oracle():
    assert sum(1 for _ in enumerate_increasing(20, 4)) == math.comb(20, 4) == 4845


def test_enumerate_cube_small():
    assert list(enumerate_cube(2, 2)) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    assert list(enumerate_cube(1, 3)) == [(1, 1, 1)]
    assert sum(1 for _ in enumerate_cube(10, 3)) == 1000


@given(n=st.integers(0, 64), d=st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_counts_match_formulas(n, d):
    if cube_count(n, d) > 100_000:
        n = min(n, 12)
    assert sum(1 for _ in enumerate_increasing(n, d)) == increasing_count(n, d)
    if cube_count(n, d) <= 100_000:
        assert sum(1 for _ in enumerate_cube(n, d)) == cube_count(n, d)


def test_enumeration_is_lexicographic_and_valid():
    for n, d in [(6, 2), (7, 3)]:
        seq = list(enumerate_increasing(n, d))
        assert seq == sorted(seq)
        assert all(len(t) == d and all(1 <= v <= n for v in t) for t in seq)
        assert all(a < b for t in seq for a, b in zip(t, t[1:]))
        cub = list(enumerate_cube(n, d)) if n**d < 10_000 else []
        assert cub == sorted(cub)


def test_new_indices_examples():
    assert list(new_indices(3, 2)) == [(1, 3), (2, 3)]
    assert list(new_indices(4, 2)) == [(1, 4), (2, 4), (3, 4)]
    assert sum(1 for _ in new_indices(10, 3)) == math.comb(9, 2) == 36


@given(n=st.integers(1, 24), d=st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_incremental_union(n, d):
    if n < d:
        return
    old = set(enumerate_increasing(n - 1, d)) if n - 1 >= 0 else set()
    fresh = set(new_indices(n, d))
    assert old.isdisjoint(fresh)
    assert old | fresh == set(enumerate_increasing(n, d))


def test_overlap_family_examples():
    assert list(overlap_family((1, 2), {1}, 3)) == [(1, 3)]
    # full subset: only the index itself in increasing mode
    assert list(overlap_family((2, 5), {1, 2}, 6)) == [(2, 5)]
    # below-arity range: nothing to share with
    assert list(overlap_family((1, 2, 3), {1}, 3)) == []


def test_overlap_family_bruteforce_oracle():
    # brute-force: classify every j in I_n by its shared-value slot pattern
    for n, d in [(6, 2), (8, 3), (7, 3)]:
        i = tuple(range(2, 2 + d))
        for subset_size in range(1, d + 1):
            for subset in itertools.combinations(range(1, d + 1), subset_size):
                got = set(overlap_family(i, subset, n))
                want = set()
                shared = {i[k - 1] for k in subset}
                for j in enumerate_increasing(n, d):
                    if set(j) & set(i) == shared:
                        want.add(j)
                assert got == want


def test_overlap_family_partitions_index_set():
    # the families over all nonempty slot subsets, plus the disjoint
    # tuples, partition everything except i itself
    for n, d in [(8, 2), (7, 3)]:
        i = tuple(range(1, d + 1))
        seen: dict = {}
        total = 0
        for size in range(1, d + 1):
            for subset in itertools.combinations(range(1, d + 1), size):
                fam = list(overlap_family(i, subset, n))
                for j in fam:
                    assert j not in seen, f"{j} in two families"
                    seen[j] = subset
                total += len(fam)
        disjoint = [j for j in enumerate_increasing(n, d) if not set(j) & set(i)]
        assert total + len(disjoint) == increasing_count(n, d)
        assert seen.pop(i) == tuple(range(1, d + 1))


def test_overlap_family_decoupled_mode():
    got = set(overlap_family((1, 2), {1}, 3, mode="decoupled"))
    want = {(1, j) for j in (1, 3)}
    assert got == want
    # full subset: exactly the index itself
    assert list(overlap_family((2, 3), {1, 2}, 4, mode="decoupled")) == [(2, 3)]


def test_dyadic_blocks_examples():
    assert dyadic_blocks(3, 1, 2) == [(0, 4), (4, 8)]
    assert dyadic_blocks(4, 2, 4) == [(0, 4), (4, 8), (8, 12), (12, 16)]
    with pytest.raises(ValueError):
        dyadic_blocks(2, 0, 2)
    with pytest.raises(ValueError):
        dyadic_blocks(1, 2, 2)


@given(k=st.integers(0, 12), l=st.integers(0, 6), d=st.integers(1, 8))
@settings(max_examples=80, deadline=None)
def test_dyadic_blocks_disjoint_within_range(k, l, d):
    if 2**l < d or k < l:
        return
    blocks = dyadic_blocks(k, l, d)
    assert len(blocks) == d
    for (lo1, hi1), (lo2, hi2) in zip(blocks, blocks[1:]):
        assert hi1 == lo2  # contiguous, hence disjoint
    assert blocks[0][0] == 0
    assert blocks[-1][1] <= 2**k


def test_complement():
    assert complement({1, 3}, 4) == frozenset({2, 4})
    with pytest.raises(ValueError):
        complement({5}, 3)
