"""Desk-scale verification lab: synthetic phantoms, the sup-interval sampling
error, and the scaling/fidelity/speedup experiments built on them.

The sampling approximation error of a sample S from population X over an
event family is sup_E | |S∩E|/M - |X∩E|/N |. Here the family is realized as
all grid-aligned value intervals, which makes the supremum an exact O(G^2)
scan over two histograms and keeps the predicted O(1/sqrt(M)) decay
observable without computing the family's combinatorial dimension.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .clustering import predict_array
from .errors import EmptyInput, InsufficientSample, InvalidFractions, InvalidK
from .metrics import build_contingency, fowlkes_mallows, nmi_mean
from .sampler import Sample
from .segmentation import DEFAULT_SEED, _FITTERS, PipelineConfig
from .stratification import (
    Stratification,
    _assign_ids,
    _value_chunks,
    parse_strategy,
    stratified_sample,
)
from .volume_io import VolumeHandle, open_volume, write_sidecar

_QUANT = {"u8": (np.uint8, 255.0), "u16": (np.uint16, 65535.0)}


@dataclass(frozen=True)
class Phantom:
    """A generated volume with known per-voxel ground truth."""

    dims: tuple[int, int, int]
    materials: tuple[tuple[float, float, float], ...]  # (mean, sd, fraction)
    seed: int
    labels: np.ndarray  # ground-truth material index per voxel, linear order
    handle: VolumeHandle


def generate_phantom(dims: tuple[int, int, int],
                     materials: Sequence[tuple[float, float, float]],
                     seed: int, out_path: Union[str, Path],
                     element_type: str = "u16") -> Phantom:
    """Write a synthetic volume of Gaussian materials and return its handle.

    Voxels are assigned to materials in contiguous blocks sized by the volume
    fractions; values are drawn from Gaussian(mean, sd), clamped to [0, 1]
    and quantized to the requested element type. Deterministic per seed.
    """
    materials = tuple((float(m), float(s), float(f)) for m, s, f in materials)
    fractions = [f for _, _, f in materials]
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidFractions(f"fractions must be nonnegative and sum to 1, got {fractions}")
    for mean, sd, _ in materials:
        if not (0.0 <= mean <= 1.0):
            raise ValueError(f"material mean {mean} outside [0, 1]")
        if sd < 0:
            raise ValueError(f"material sd {sd} must be nonnegative")
    if len(materials) > 255:
        raise ValueError("at most 255 materials fit ground-truth u8 labels")

    n = dims[0] * dims[1] * dims[2]
    cum = np.cumsum(fractions)
    edges = [0] + [int(round(c * n)) for c in cum]
    edges[-1] = n
    counts = np.diff(edges)
    labels = np.repeat(np.arange(len(materials), dtype=np.uint8), counts)

    rng = np.random.Generator(np.random.PCG64(seed))
    parts = [
        rng.normal(mean, sd, size=count) if sd > 0 else np.full(count, mean)
        for (mean, sd, _), count in zip(materials, counts)
    ]
    values = np.clip(np.concatenate(parts), 0.0, 1.0)

    out_path = Path(out_path)
    if element_type == "f32":
        values.astype("<f4").tofile(out_path)
        write_sidecar(Path(str(out_path) + ".meta"), dims, "f32", "little", 0.0, 1.0)
    elif element_type in _QUANT:
        dtype, top = _QUANT[element_type]
        np.round(values * top).astype(dtype).tofile(out_path)
        write_sidecar(Path(str(out_path) + ".meta"), dims, element_type, "little")
    else:
        raise ValueError(f"unsupported element_type {element_type!r}")
    return Phantom(tuple(dims), materials, seed, labels, open_volume(out_path))


@dataclass(frozen=True)
class IntervalFamily:
    """All value intervals aligned to a grid of G+1 points spanning [0, 1]."""

    grid: tuple[float, ...]

    @property
    def cells(self) -> int:
        return len(self.grid) - 1


def interval_family(g: int) -> IntervalFamily:
    """Uniform grid family with g cells, hence g(g+1)/2 distinct intervals."""
    if g < 1:
        raise InvalidK(f"grid must have at least 1 cell, got {g}")
    return IntervalFamily(tuple(i / g for i in range(g + 1)))


def _grid_counts(source, fam: IntervalFamily) -> np.ndarray:
    grid = np.asarray(fam.grid)
    counts = np.zeros(fam.cells, dtype=np.int64)
    for values in _value_chunks(source, None):
        if values.size == 0:
            continue
        ids = _assign_ids(values, grid, fam.cells)
        counts += np.bincount(ids, minlength=fam.cells)
    return counts


def _sup_from_counts(pop_counts: np.ndarray, smp_counts: np.ndarray) -> float:
    n = int(pop_counts.sum())
    m = int(smp_counts.sum())
    if n == 0:
        raise EmptyInput("population is empty")
    if m == 0:
        raise EmptyInput("sample is empty")
    cum_p = np.concatenate([[0], np.cumsum(pop_counts)])
    cum_s = np.concatenate([[0], np.cumsum(smp_counts)])
    # Interval [g_i, g_j) mass difference equals the cumulative-count gap, so
    # the sup over all intervals is the max over index pairs.
    diff = (cum_s[None, :] - cum_s[:, None]) / m - (cum_p[None, :] - cum_p[:, None]) / n
    return float(np.abs(diff).max())


def sup_interval_error(population, sample, fam: IntervalFamily) -> float:
    """Largest relative-frequency gap between sample and population over all
    grid-aligned intervals. Exact given the grid histograms."""
    smp_values = sample.values if isinstance(sample, Sample) else sample
    return _sup_from_counts(_grid_counts(population, fam), _grid_counts(smp_values, fam))


@dataclass(frozen=True)
class BoundExperimentConfig:
    """How to measure error decay: which sizes, how many seeds, which grid.

    ``delta`` is the nominal confidence parameter carried through to reports;
    it does not influence the measurements.
    """

    sizes: tuple[int, ...]
    seeds_per_size: int = 50
    grid_size: int = 16
    delta: float = 0.05
    base_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if len(self.sizes) < 1 or any(s < 1 for s in self.sizes):
            raise ValueError(f"sizes must be positive, got {self.sizes}")
        if any(a >= b for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError(f"sizes must be ascending, got {self.sizes}")
        if self.seeds_per_size < 30:
            raise ValueError(f"need >= 30 seeds per size, got {self.seeds_per_size}")
        if self.grid_size < 1:
            raise ValueError(f"grid_size must be >= 1, got {self.grid_size}")


@dataclass(frozen=True)
class ScalingRow:
    size: int
    median_error: float
    q1: float
    q3: float


def _experiment_seed(base: int, size: int, index: int) -> int:
    ss = np.random.SeedSequence((base, size, index))
    return int(ss.generate_state(1, np.uint64)[0])


def error_scaling_experiment(source, strat: Stratification,
                             cfg: BoundExperimentConfig) -> list[ScalingRow]:
    """Median sup-interval error per sample size, over many seeds.

    Rows come back sorted by size; medians and quartiles rather than means
    because small-M worst cases are heavy tailed. Seeds and sizes are
    independent, so runs could be dispatched concurrently; this
    implementation keeps them sequential and deterministic.
    """
    fam = interval_family(cfg.grid_size)
    pop_counts = _grid_counts(source, fam)
    rows = []
    for m in cfg.sizes:
        errors = np.empty(cfg.seeds_per_size)
        for i in range(cfg.seeds_per_size):
            seed = _experiment_seed(cfg.base_seed, m, i)
            sample = stratified_sample(source, strat, m, seed)
            errors[i] = _sup_from_counts(pop_counts, _grid_counts(sample.values, fam))
        rows.append(ScalingRow(
            m,
            float(np.median(errors)),
            float(np.percentile(errors, 25)),
            float(np.percentile(errors, 75)),
        ))
    return rows


def scaling_table(rows: Sequence[ScalingRow]) -> str:
    """Tab-separated scaling table, one row per sample size."""
    out = ["size\tmedian_error\tq1\tq3"]
    out.extend(f"{r.size}\t{r.median_error!r}\t{r.q1!r}\t{r.q3!r}" for r in rows)
    return "\n".join(out)


@dataclass(frozen=True)
class FidelityResult:
    fm: float
    nmi: float
    speedup: float
    sample_seconds: float
    sampled_fit_seconds: float
    full_fit_seconds: float


def _load_all(handle, chunk_len: Optional[int]) -> np.ndarray:
    return np.concatenate(list(_value_chunks(handle, chunk_len)))


def fidelity_experiment(handle, cfg: PipelineConfig) -> FidelityResult:
    """Compare a sample-trained model against one trained on every voxel.

    Both models use the same fit configuration and both segment the full
    volume; the returned scores compare the two label fields and the speedup
    is (full fit time) / (sample time + sampled fit time). Requires a volume
    small enough to fit in memory for the baseline.
    """
    strat = parse_strategy(cfg.strategy)
    m = cfg.resolve_size(handle.voxel_count)
    if m < cfg.fit.k:
        raise InsufficientSample(
            f"resolved sample size {m} is smaller than {cfg.fit.k} clusters"
        )
    fitter = _FITTERS[cfg.model]

    t0 = time.perf_counter()
    sample = stratified_sample(handle, strat, m, cfg.seed,
                               min_one=cfg.min_one, chunk_len=cfg.chunk_len)
    t_sample = time.perf_counter() - t0

    t0 = time.perf_counter()
    sampled_model = fitter(sample, cfg.fit)
    t_sampled_fit = time.perf_counter() - t0

    values = _load_all(handle, cfg.chunk_len)
    t0 = time.perf_counter()
    full_model = fitter(values, cfg.fit)
    t_full_fit = time.perf_counter() - t0

    labels_full = predict_array(full_model, values)
    labels_sampled = predict_array(sampled_model, values)
    table = build_contingency(labels_full, labels_sampled)
    return FidelityResult(
        fm=fowlkes_mallows(table),
        nmi=nmi_mean(table),
        speedup=t_full_fit / (t_sample + t_sampled_fit),
        sample_seconds=t_sample,
        sampled_fit_seconds=t_sampled_fit,
        full_fit_seconds=t_full_fit,
    )
