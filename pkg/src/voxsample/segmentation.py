"""End-to-end volume segmentation: sample, fit, classify every voxel.

The pipeline touches the volume in at most three linear passes (stratum
histogram, sampling, classification) and never holds more than a chunk
buffer, the sample, and the fitted model in memory, so the volume size is
bounded only by disk.
"""

from __future__ import annotations

import math
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .clustering import (
    ClusterModel,
    FitConfig,
    gmm_fit,
    kmeans_fit,
    minibatch_kmeans_fit,
    predict_array,
)
from .errors import InsufficientSample
from .stratification import parse_strategy, stratified_sample
from .volume_io import DEFAULT_CHUNK_LEN, write_label_volume

DEFAULT_SEED = 1729

_FITTERS = {
    "kmeans": kmeans_fit,
    "minibatch": minibatch_kmeans_fit,
    "gmm": gmm_fit,
}


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a segmentation run needs besides the volume itself.

    Exactly one of ``size`` (absolute sample size) and ``percent`` (fraction
    of the voxel count, in (0, 100]) must be set.
    """

    fit: FitConfig
    strategy: str = "simple"
    size: Optional[int] = None
    percent: Optional[float] = None
    model: str = "gmm"
    seed: int = DEFAULT_SEED
    min_one: bool = False
    chunk_len: int = DEFAULT_CHUNK_LEN
    threads: int = 1

    def __post_init__(self):
        if (self.size is None) == (self.percent is None):
            raise ValueError("exactly one of size and percent must be set")
        if self.size is not None and self.size < 1:
            raise ValueError(f"sample size must be >= 1, got {self.size}")
        if self.percent is not None and not (0.0 < self.percent <= 100.0):
            raise ValueError(f"percent must lie in (0, 100], got {self.percent}")
        if self.model not in _FITTERS:
            raise ValueError(f"model must be one of {sorted(_FITTERS)}, got {self.model!r}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")

    def resolve_size(self, voxel_count: int) -> int:
        """Absolute sample size for a volume of ``voxel_count`` voxels.

        Percentages round up, so any positive percentage yields at least one
        sample point.
        """
        if self.size is not None:
            return self.size
        return math.ceil(voxel_count * self.percent / 100.0)


@dataclass
class SegmentationReport:
    """Timings, label census and warnings from one pipeline run."""

    sample_seconds: float
    fit_seconds: float
    classify_seconds: float
    label_histogram: np.ndarray
    model: ClusterModel
    sample_size: int
    voxel_count: int
    seed: int
    warnings: tuple[str, ...] = field(default_factory=tuple)


def classify_pass(source, model: ClusterModel, chunk_len: int = DEFAULT_CHUNK_LEN,
                  threads: int = 1) -> Iterator[np.ndarray]:
    """Yield per-voxel cluster indices for the whole volume in linear order.

    Pure per-voxel function of the normalized value, so chunks may be
    classified in parallel; results are reassembled in stream order either
    way. ``threads`` == 1 runs fully sequentially.
    """
    chunks = source.chunks(chunk_len)
    if threads <= 1:
        for chunk in chunks:
            yield predict_array(model, chunk.values)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        window: deque = deque()
        for chunk in chunks:
            window.append(pool.submit(predict_array, model, chunk.values))
            # Bound the in-flight window so memory stays chunk-sized.
            if len(window) > threads + 2:
                yield window.popleft().result()
        while window:
            yield window.popleft().result()


def run_pipeline(handle, cfg: PipelineConfig, out_path) -> SegmentationReport:
    """Sample the volume, fit the chosen model, classify and write labels.

    The simple strategy costs two volume passes (sample, classify); any real
    stratification adds the histogram pass for three in total.
    """
    strat = parse_strategy(cfg.strategy)
    m = cfg.resolve_size(handle.voxel_count)
    if m < cfg.fit.k:
        raise InsufficientSample(
            f"resolved sample size {m} is smaller than {cfg.fit.k} clusters"
        )

    t0 = time.perf_counter()
    sample = stratified_sample(handle, strat, m, cfg.seed,
                               min_one=cfg.min_one, chunk_len=cfg.chunk_len)
    t_sample = time.perf_counter() - t0

    fitter = _FITTERS[cfg.model]
    t0 = time.perf_counter()
    model = fitter(sample, cfg.fit)
    t_fit = time.perf_counter() - t0

    warnings_list = []
    if sample.allocation is not None:
        for j in sample.allocation.warnings:
            warnings_list.append(
                f"stratum {j} has population {int(sample.allocation.counts[j])} "
                "but zero allocated samples"
            )

    histogram = np.zeros(cfg.fit.k, dtype=np.int64)

    def _label_chunks():
        for labels in classify_pass(handle, model, cfg.chunk_len, cfg.threads):
            histogram_part = np.bincount(labels, minlength=cfg.fit.k)
            histogram[: len(histogram_part)] += histogram_part
            yield labels

    t0 = time.perf_counter()
    write_label_volume(handle.dims, _label_chunks(), out_path)
    t_classify = time.perf_counter() - t0

    return SegmentationReport(
        sample_seconds=t_sample,
        fit_seconds=t_fit,
        classify_seconds=t_classify,
        label_histogram=histogram,
        model=model,
        sample_size=sample.size,
        voxel_count=handle.voxel_count,
        seed=cfg.seed,
        warnings=tuple(warnings_list),
    )


def report_text(report: SegmentationReport) -> str:
    """Human-readable one-paragraph summary of a pipeline run."""
    census = ", ".join(
        f"{j}: {int(c)}" for j, c in enumerate(report.label_histogram.tolist())
    )
    lines = [
        f"sampled {report.sample_size} of {report.voxel_count} voxels "
        f"in {report.sample_seconds:.3f} s",
        f"fit in {report.fit_seconds:.3f} s, classified in {report.classify_seconds:.3f} s",
        f"label counts: {census}",
    ]
    return "\n".join(lines)


def report_kv(report: SegmentationReport) -> str:
    """Machine-readable key-value block (one ``key: value`` pair per line)."""
    lines = [
        f"seed: {report.seed}",
        f"voxel_count: {report.voxel_count}",
        f"sample_size: {report.sample_size}",
        f"sample_seconds: {report.sample_seconds!r}",
        f"fit_seconds: {report.fit_seconds!r}",
        f"classify_seconds: {report.classify_seconds!r}",
        "label_histogram: " + " ".join(str(int(c)) for c in report.label_histogram.tolist()),
    ]
    return "\n".join(lines)
