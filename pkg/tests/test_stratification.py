"""Strata boundaries, histogram counting, allocation rules, two-pass sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxsample import (
    ArraySource,
    EmptyStream,
    InvalidK,
    InvalidM,
    InvalidStrategy,
    InvalidThreshold,
    OutOfRange,
    allocate,
    assign_stratum,
    derive_seed,
    exponential_boundaries,
    histogram_pass,
    interval_family,
    linear_boundaries,
    mixed_boundaries,
    parse_strategy,
    reservoir_sample,
    simple_stratification,
    stratified_sample,
    sup_interval_error,
)


# boundary construction


def test_linear_boundaries_examples():
    assert linear_boundaries(4).boundaries == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert linear_boundaries(2).boundaries == (0.0, 0.5, 1.0)
    assert linear_boundaries(1).boundaries == (0.0, 1.0)


def test_exponential_boundaries_examples():
    assert exponential_boundaries(4).boundaries == (0.0, 0.125, 0.25, 0.5, 1.0)
    assert exponential_boundaries(3).boundaries == (0.0, 0.25, 0.5, 1.0)
    assert exponential_boundaries(1).boundaries == (0.0, 1.0)


def test_mixed_boundaries_examples():
    assert mixed_boundaries(2, 2, 0.5).boundaries == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert mixed_boundaries(1, 1, 0.5).boundaries == (0.0, 0.5, 1.0)
    assert mixed_boundaries(3, 1, 0.5).boundaries == (0.0, 0.125, 0.25, 0.5, 1.0)


def test_mixed_stratum_count_is_sum_of_parts():
    assert mixed_boundaries(3, 2, 0.4).k == 5


def test_simple_stratification_is_single_stratum():
    strat = simple_stratification()
    assert strat.boundaries == (0.0, 1.0)
    assert strat.k == 1


def test_invalid_counts_and_thresholds():
    with pytest.raises(InvalidK):
        linear_boundaries(0)
    with pytest.raises(InvalidK):
        exponential_boundaries(-1)
    with pytest.raises(InvalidK):
        mixed_boundaries(0, 2, 0.5)
    with pytest.raises(InvalidThreshold):
        mixed_boundaries(2, 2, 0.0)
    with pytest.raises(InvalidThreshold):
        mixed_boundaries(2, 2, 1.0)


@given(k=st.integers(min_value=1, max_value=24))
def test_boundaries_strictly_increasing_all_strategies(k):
    for strat in (linear_boundaries(k), exponential_boundaries(k)):
        b = strat.boundaries
        assert b[0] == 0.0 and b[-1] == 1.0
        assert all(x < y for x, y in zip(b, b[1:]))
        assert strat.k == k


@given(
    k_exp=st.integers(min_value=1, max_value=10),
    k_lin=st.integers(min_value=1, max_value=10),
    t=st.floats(min_value=0.01, max_value=0.99),
)
def test_mixed_boundaries_strictly_increasing(k_exp, k_lin, t):
    strat = mixed_boundaries(k_exp, k_lin, t)
    b = strat.boundaries
    assert b[0] == 0.0 and b[-1] == 1.0
    assert all(x < y for x, y in zip(b, b[1:]))
    assert strat.k == k_exp + k_lin


def test_parse_strategy_round_trips():
    assert parse_strategy("simple").boundaries == (0.0, 1.0)
    assert parse_strategy("linear:4").boundaries == linear_boundaries(4).boundaries
    assert parse_strategy("exp:3").boundaries == exponential_boundaries(3).boundaries
    assert parse_strategy("mixed:2,2,0.5").boundaries == mixed_boundaries(2, 2, 0.5).boundaries


def test_parse_strategy_rejects_garbage():
    for text in ("", "linear", "linear:", "linear:x", "exp:0", "mixed:2,2", "mixed:2,2,2", "cubic:3"):
        with pytest.raises((InvalidStrategy, InvalidK, InvalidThreshold)):
            parse_strategy(text)


# stratum assignment


def test_assign_stratum_examples():
    assert assign_stratum(0.0, linear_boundaries(4)) == 0
    assert assign_stratum(1.0, linear_boundaries(4)) == 3
    assert assign_stratum(0.25, exponential_boundaries(4)) == 2


def test_assign_stratum_half_open_intervals():
    # a boundary value belongs to the interval on its right
    assert assign_stratum(0.25, linear_boundaries(4)) == 1
    assert assign_stratum(0.5, linear_boundaries(4)) == 2


def test_assign_stratum_out_of_range():
    strat = linear_boundaries(2)
    with pytest.raises(OutOfRange):
        assign_stratum(-0.01, strat)
    with pytest.raises(OutOfRange):
        assign_stratum(1.01, strat)


@given(v=st.floats(min_value=0.0, max_value=1.0), k=st.integers(min_value=1, max_value=12))
def test_assign_stratum_matches_boundary_scan(v, k):
    strat = exponential_boundaries(k)
    idx = assign_stratum(v, strat)
    b = strat.boundaries
    assert b[idx] <= v
    assert v < b[idx + 1] or (idx == strat.k - 1 and v <= 1.0)


# histogram pass


def test_histogram_direct_counting():
    counts = histogram_pass(ArraySource([0.0, 0.0, 0.3, 0.9]), linear_boundaries(2))
    np.testing.assert_array_equal(counts, [3, 1])


def test_histogram_all_zero_stream():
    counts = histogram_pass(ArraySource(np.zeros(50)), exponential_boundaries(4))
    np.testing.assert_array_equal(counts, [50, 0, 0, 0])


def test_histogram_uniform_grid_is_balanced():
    grid = np.arange(1000) / 1000.0
    counts = histogram_pass(ArraySource(grid), linear_boundaries(4))
    assert counts.sum() == 1000
    assert np.all(np.abs(counts - 250) <= 1)


def test_histogram_empty_stream():
    with pytest.raises(EmptyStream):
        histogram_pass(ArraySource([]), linear_boundaries(2))


def test_histogram_chunking_invariance(rng):
    values = rng.random(4097)
    strat = exponential_boundaries(5)
    a = histogram_pass(ArraySource(values), strat, chunk_len=64)
    b = histogram_pass(ArraySource(values), strat, chunk_len=4097)
    np.testing.assert_array_equal(a, b)


# allocation


def test_allocate_exact_proportions():
    alloc = allocate(np.array([900, 100]), m=10)
    np.testing.assert_array_equal(alloc.sizes, [9, 1])
    assert alloc.warnings == ()


def test_allocate_starved_stratum_gets_warning():
    alloc = allocate(np.array([999, 1]), m=100)
    np.testing.assert_array_equal(alloc.sizes, [100, 0])
    assert alloc.warnings == (1,)


def test_allocate_remainder_ties_go_to_lower_index():
    alloc = allocate(np.array([1, 1, 1]), m=2)
    np.testing.assert_array_equal(alloc.sizes, [1, 1, 0])
    assert alloc.warnings == (2,)


def test_allocate_min_one_steals_from_largest():
    alloc = allocate(np.array([999, 1]), m=100, min_one=True)
    np.testing.assert_array_equal(alloc.sizes, [99, 1])
    assert alloc.warnings == ()


def test_allocate_clamps_to_population():
    alloc = allocate(np.array([2, 998]), m=100)
    assert alloc.sizes[0] <= 2
    assert alloc.sizes.sum() == 100


def test_allocate_invalid_m():
    with pytest.raises(InvalidM):
        allocate(np.array([10, 10]), m=0)


@settings(max_examples=200)
@given(
    counts=st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=12),
    m=st.integers(min_value=1, max_value=500),
)
def test_allocate_invariants(counts, m):
    counts = np.array(counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        with pytest.raises(EmptyStream):
            allocate(counts, m=m)
        return
    alloc = allocate(counts, m=m)
    assert np.all(alloc.sizes <= counts)
    assert np.all(alloc.sizes >= 0)
    if np.all(counts >= m):
        assert alloc.sizes.sum() == m
    assert alloc.sizes.sum() <= m
    for j in alloc.warnings:
        assert alloc.sizes[j] == 0 and counts[j] > 0
    assert alloc.total == m


@settings(max_examples=100)
@given(
    counts=st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=12),
    m=st.integers(min_value=1, max_value=500),
)
def test_allocate_min_one_reaches_every_populated_stratum(counts, m):
    counts = np.array(counts, dtype=np.int64)
    populated = int((counts > 0).sum())
    if populated == 0 or m < populated:
        return
    alloc = allocate(counts, m=m, min_one=True)
    assert np.all(alloc.sizes[counts > 0] >= 1)
    if np.all(counts >= m):
        assert alloc.sizes.sum() == m


# stratified sampling (two passes)


def test_stratified_membership_and_split(rng):
    values = np.concatenate([rng.uniform(0.0, 0.5, 500), rng.uniform(0.5, 1.0, 500)])
    strat = linear_boundaries(2)
    sample = stratified_sample(ArraySource(values), strat, m=10, seed=4)
    assert sample.size == 10
    assert len(sample.per_stratum) == 2
    for j, values_j in sample.per_stratum:
        assert len(values_j) == 5
        for v in values_j:
            assert assign_stratum(float(v), strat) == j


def test_stratified_empty_stratum_is_silent(rng):
    values = rng.uniform(0.0, 0.24, 400)
    sample = stratified_sample(ArraySource(values), linear_boundaries(4), m=20, seed=9)
    assert sample.size == 20
    sampled_strata = {j for j, sub in sample.per_stratum if len(sub)}
    assert sampled_strata == {0}


def test_simple_strategy_equals_plain_reservoir(rng):
    """K=1 stratified sampling is bit-for-bit Algorithm L under the derived seed."""
    values = rng.random(3000)
    master = 123
    stratified = stratified_sample(ArraySource(values), simple_stratification(), m=64, seed=master)
    plain = reservoir_sample(values, m=64, seed=derive_seed(master, 0))
    np.testing.assert_array_equal(stratified.values, plain.values)


def test_stratified_chunking_invariance(rng):
    values = rng.random(2048)
    strat = exponential_boundaries(4)
    a = stratified_sample(ArraySource(values), strat, m=100, seed=5, chunk_len=37)
    b = stratified_sample(ArraySource(values), strat, m=100, seed=5, chunk_len=2048)
    np.testing.assert_array_equal(a.values, b.values)


def test_stratified_records_allocation(rng):
    values = rng.random(1000)
    sample = stratified_sample(ArraySource(values), linear_boundaries(4), m=40, seed=2)
    assert sample.allocation is not None
    assert sample.allocation.sizes.sum() == 40
    assert sample.seed == 2
    assert sample.strategy == "linear:4"


def test_stratified_beats_simple_on_skewed_population(rng):
    """On a population with >= 90% of its mass in one stratum, the stratified
    sup-interval error is no worse than simple sampling in median over seeds."""
    values = np.concatenate([rng.uniform(0.0, 0.05, 9000), rng.uniform(0.05, 1.0, 1000)])
    rng.shuffle(values)
    source = ArraySource(values)
    strat = exponential_boundaries(4)
    fam = interval_family(16)
    errs_strat, errs_simple = [], []
    for seed in range(50):
        s1 = stratified_sample(source, strat, m=100, seed=seed)
        s2 = stratified_sample(source, simple_stratification(), m=100, seed=seed)
        errs_strat.append(sup_interval_error(values, s1.values, fam))
        errs_simple.append(sup_interval_error(values, s2.values, fam))
    assert np.median(errs_strat) <= np.median(errs_simple)
