"""Value-range stratification and two-pass stratified sampling.

The normalized value range [0, 1] is split into K strata by one of three
boundary strategies (linear, exponential, mixed) or left whole ("simple").
Pass 1 counts how many voxels fall into each stratum, sample sizes are
allocated proportionally, and pass 2 streams the volume once more, routing
every value into its stratum's reservoir sampler. Useful when the value
distribution is heavily biased (e.g. mostly-empty scans) and a plain uniform
sample would starve the rare strata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .errors import (
    EmptyStream,
    InvalidK,
    InvalidM,
    InvalidStrategy,
    InvalidThreshold,
    OutOfRange,
)
from .sampler import ReservoirSampler, Sample, derive_seed
from .volume_io import ArraySource


@dataclass(frozen=True)
class Stratification:
    """Ordered boundary tuple (0 = b_0 < b_1 < ... < b_K = 1) plus its recipe.

    ``strategy`` is the canonical spec string (``linear:K``, ``exp:K``,
    ``mixed:Ke,Kl,t`` or ``simple``) so a stratification round-trips through
    sample headers and CLI arguments.
    """

    boundaries: tuple[float, ...]
    strategy: str

    def __post_init__(self):
        b = self.boundaries
        if len(b) < 2 or b[0] != 0.0 or b[-1] != 1.0:
            raise InvalidStrategy(f"boundaries must run from 0 to 1, got {b}")
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise InvalidStrategy(f"boundaries must be strictly increasing, got {b}")

    @property
    def k(self) -> int:
        return len(self.boundaries) - 1


def linear_boundaries(k: int) -> Stratification:
    """K evenly spaced strata: B = (0, 1/K, 2/K, ..., 1)."""
    if k < 1:
        raise InvalidK(f"stratum count must be >= 1, got {k}")
    return Stratification(tuple(i / k for i in range(k + 1)), f"linear:{k}")


def exponential_boundaries(k: int) -> Stratification:
    """K strata that halve toward zero: B = (0, 2^(1-K), ..., 1/2, 1).

    Gives fine resolution near zero, where heavily skewed volumes put most
    of their mass.
    """
    if k < 1:
        raise InvalidK(f"stratum count must be >= 1, got {k}")
    return Stratification((0.0,) + tuple(2.0 ** (i + 1 - k) for i in range(k)), f"exp:{k}")


def mixed_boundaries(k_exp: int, k_lin: int, t: float) -> Stratification:
    """Exponential strata squeezed into [0, t], linear strata over [t, 1].

    Total stratum count is k_exp + k_lin; the shared boundary t appears once.
    """
    if k_exp < 1 or k_lin < 1:
        raise InvalidK(f"both stratum counts must be >= 1, got {k_exp}, {k_lin}")
    if not (0.0 < t < 1.0):
        raise InvalidThreshold(f"threshold must lie strictly inside (0, 1), got {t}")
    low = [t * b for b in exponential_boundaries(k_exp).boundaries]
    high = [t + (1.0 - t) * (i / k_lin) for i in range(1, k_lin + 1)]
    high[-1] = 1.0
    return Stratification(tuple(low + high), f"mixed:{k_exp},{k_lin},{t!r}")


def simple_stratification() -> Stratification:
    """The degenerate single stratum: plain reservoir sampling, no routing."""
    return Stratification((0.0, 1.0), "simple")


def parse_strategy(spec: str) -> Stratification:
    """Build a Stratification from its CLI string form.

    Accepted forms: ``simple``, ``linear:K``, ``exp:K``, ``mixed:Ke,Kl,t``.
    """
    s = spec.strip()
    if s == "simple":
        return simple_stratification()
    kind, sep, rest = s.partition(":")
    if not sep:
        raise InvalidStrategy(f"unrecognized strategy {spec!r}")
    try:
        if kind == "linear":
            return linear_boundaries(int(rest))
        if kind == "exp":
            return exponential_boundaries(int(rest))
        if kind == "mixed":
            parts = rest.split(",")
            if len(parts) != 3:
                raise InvalidStrategy(f"mixed takes Ke,Kl,t, got {spec!r}")
            return mixed_boundaries(int(parts[0]), int(parts[1]), float(parts[2]))
    except ValueError:
        raise InvalidStrategy(f"malformed strategy parameters in {spec!r}") from None
    raise InvalidStrategy(f"unrecognized strategy {spec!r}")


@dataclass(frozen=True)
class StratumAllocation:
    """Per-stratum population counts and the integer sample sizes drawn from them."""

    counts: np.ndarray
    frequencies: np.ndarray
    sizes: np.ndarray
    total: int
    warnings: tuple[int, ...]  # strata left with zero samples despite population


def assign_stratum(v: float, strat: Stratification) -> int:
    """Index k of the interval [b_k, b_{k+1}) containing v; v == 1 maps to K-1."""
    if not (0.0 <= v <= 1.0):
        raise OutOfRange(f"value {v!r} outside the normalized range [0, 1]")
    idx = int(np.searchsorted(np.asarray(strat.boundaries), v, side="right")) - 1
    return min(idx, strat.k - 1)


def _assign_ids(values: np.ndarray, boundaries: np.ndarray, k: int) -> np.ndarray:
    lo = values.min()
    hi = values.max()
    if lo < 0.0 or hi > 1.0:
        bad = lo if lo < 0.0 else hi
        raise OutOfRange(f"value {bad!r} outside the normalized range [0, 1]")
    ids = np.searchsorted(boundaries, values, side="right") - 1
    return np.minimum(ids, k - 1)


def _value_chunks(source, chunk_len: Optional[int]) -> Iterator[np.ndarray]:
    if not hasattr(source, "chunks"):
        source = ArraySource(np.asarray(source, dtype=np.float64))
    kwargs = {} if chunk_len is None else {"chunk_len": chunk_len}
    for chunk in source.chunks(**kwargs):
        yield np.asarray(chunk.values, dtype=np.float64)


def histogram_pass(source, strat: Stratification, chunk_len: Optional[int] = None) -> np.ndarray:
    """Count stream values per stratum in one linear pass.

    ``source`` may be a volume handle, an ArraySource, or any value sequence.
    Chunks may in principle be counted concurrently and merged additively;
    this implementation streams them in order.
    """
    boundaries = np.asarray(strat.boundaries)
    counts = np.zeros(strat.k, dtype=np.int64)
    seen = 0
    for values in _value_chunks(source, chunk_len):
        if values.size == 0:
            continue
        ids = _assign_ids(values, boundaries, strat.k)
        counts += np.bincount(ids, minlength=strat.k)
        seen += values.size
    if seen == 0:
        raise EmptyStream("cannot histogram an empty stream")
    return counts


def allocate(counts, m: int, min_one: bool = False) -> StratumAllocation:
    """Split a total sample size M across strata proportionally to counts.

    Raw shares M * N_k / N are integerized by largest-remainder rounding
    (floor everything, then hand the leftover units to the largest fractional
    parts, ties to the lower index), clamped to the stratum population. With
    ``min_one``, nonempty strata that ended up with zero get one unit stolen
    from the currently largest allocation. Strata still at zero despite a
    nonzero population are listed in ``warnings``.
    """
    if m < 1:
        raise InvalidM(f"sample size must be >= 1, got {m}")
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total < 1:
        raise EmptyStream("cannot allocate sample sizes for an empty population")
    k = len(counts)
    # Exact integer largest-remainder: base floor(M N_k / N), remainders as
    # the modular numerators, so no float rounding can disturb ties.
    base = [m * int(nk) // total for nk in counts]
    numer = [m * int(nk) % total for nk in counts]
    sizes = np.array(base, dtype=np.int64)
    leftover = m - int(sizes.sum())
    order = sorted(range(k), key=lambda j: (-numer[j], j))
    for j in order[:leftover]:
        sizes[j] += 1
    np.minimum(sizes, counts, out=sizes)
    if min_one:
        for j in range(k):
            if sizes[j] > 0 or counts[j] == 0:
                continue
            donor = int(np.argmax(sizes))
            if sizes[donor] < 2:
                continue  # stealing would just move the zero elsewhere
            sizes[donor] -= 1
            sizes[j] = 1
    warnings = tuple(int(j) for j in range(k) if sizes[j] == 0 and counts[j] > 0)
    return StratumAllocation(counts, counts / total, sizes, m, warnings)


def stratified_sample(source, strat: Stratification, m: int, seed: int,
                      min_one: bool = False, chunk_len: Optional[int] = None) -> Sample:
    """Draw a stratified sample in two linear passes over ``source``.

    Pass 1 histograms values per stratum, allocation sizes the per-stratum
    reservoirs, and pass 2 routes every value to its stratum's sampler. Each
    stratum sampler runs under a sub-seed derived from (seed, stratum index),
    so results are reproducible and independent of chunking. A single-stratum
    strategy collapses to one plain reservoir pass under sub-seed 0; plain
    and stratified sampling therefore agree bit for bit in that case.
    """
    if strat.k == 1:
        sampler = ReservoirSampler(m, derive_seed(seed, 0))
        for values in _value_chunks(source, chunk_len):
            sampler.extend(values)
        sample = sampler.result(strategy=strat.strategy)
        sample.seed = seed
        sample.per_stratum = [(0, sample.values)]
        return sample

    counts = histogram_pass(source, strat, chunk_len)
    alloc = allocate(counts, m, min_one=min_one)
    samplers = {
        j: ReservoirSampler(int(nj), derive_seed(seed, j))
        for j, nj in enumerate(alloc.sizes)
        if nj > 0
    }
    boundaries = np.asarray(strat.boundaries)
    for values in _value_chunks(source, chunk_len):
        if values.size == 0:
            continue
        ids = _assign_ids(values, boundaries, strat.k)
        for j, sub_sampler in samplers.items():
            sub_sampler.extend(values[ids == j])
    per_stratum = []
    parts = []
    for j in range(strat.k):
        values_j = samplers[j].result().values if j in samplers else np.empty(0, dtype=np.float64)
        per_stratum.append((j, values_j))
        parts.append(values_j)
    return Sample(np.concatenate(parts), seed, strat.strategy, per_stratum, alloc)
