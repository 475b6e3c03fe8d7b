"""Single-pass fixed-size uniform sampling of a value stream.

Implements reservoir sampling with geometric skips (Algorithm L): after the
reservoir is filled, a running weight W determines how many upcoming elements
can be skipped outright, so only O(M log(N/M)) elements are ever inspected
past the fill phase. Works on streams of unknown length and never holds more
than the reservoir in memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import islice
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .errors import EmptyStream, InvalidM, MalformedSidecar, MissingFile, SizeMismatch
from .volume_io import ValueChunk, parse_sidecar

_ITER_BATCH = 1 << 13

_SAMPLE_KEYS = {"size", "seed", "strategy"}


def derive_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit sub-seed for stream index ``index`` under one master seed.

    Used to give every per-stratum sampler its own independent generator while
    keeping the whole run reproducible from a single integer.
    """
    ss = np.random.SeedSequence((master_seed, index))
    return int(ss.generate_state(1, np.uint64)[0])


def skip_gap(w: float, u: float) -> int:
    """Number of stream positions to advance before the next candidate.

    Computes floor(log(u) / log(1 - w)) + 1 for w, u in (0, 1); always >= 1.
    The floor form follows Li's original algorithm (ceil and floor+1 agree
    except on measure-zero draws).
    """
    # log1p keeps log(1 - w) accurate when w is very small.
    return math.floor(math.log(u) / math.log1p(-w)) + 1


def update_weight(w: float, u: float, m: int) -> float:
    """Shrink the running weight: w * u**(1/m).

    Accepts w in (0, 1]; w == 1 is the initialization path, where the result
    is the starting weight exp(log(u)/m).
    """
    return w * u ** (1.0 / m)


@dataclass(frozen=True)
class ReservoirState:
    """Snapshot of a sampler: reservoir so far, weight, next candidate index."""

    reservoir: np.ndarray
    weight: float
    next_index: int
    filled: int


@dataclass
class Sample:
    """A drawn sample: values, the seed that produced it, how it was drawn.

    ``per_stratum`` lists (stratum index, sub-sample) pairs when the sample
    came from a stratified run; ``allocation`` carries the per-stratum sizing
    record so callers can surface its warnings.
    """

    values: np.ndarray
    seed: int
    strategy: str = "simple"
    per_stratum: Optional[list] = None
    allocation: Optional[object] = None

    @property
    def size(self) -> int:
        return int(len(self.values))


class ReservoirSampler:
    """Incremental Algorithm L fed chunk by chunk.

    Feed the stream in order via ``extend`` and call ``result`` at the end.
    Skip-gap bookkeeping lives in absolute stream positions, so the returned
    sample is bit-identical no matter how the stream is chunked. Single
    consumer; not thread safe.
    """

    def __init__(self, m: int, seed: int):
        if m < 1:
            raise InvalidM(f"reservoir size must be >= 1, got {m}")
        self.m = m
        self.seed = seed
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self._reservoir = np.empty(m, dtype=np.float64)
        self._filled = 0
        self._weight = 1.0
        self._next = -1
        self._seen = 0

    @property
    def seen(self) -> int:
        return self._seen

    @property
    def state(self) -> ReservoirState:
        return ReservoirState(
            self._reservoir[: self._filled].copy(), self._weight, self._next, self._filled
        )

    def _u(self) -> float:
        # Uniform strictly inside (0, 1) so every log() below is finite.
        while True:
            u = float(self._rng.random())
            if 0.0 < u < 1.0:
                return u

    def extend(self, chunk) -> None:
        """Consume the next run of the stream.

        Reads ``chunk`` only through ``len`` and integer ``[]`` and touches
        only the elements the algorithm actually considers: the fill phase
        inspects at most M elements in total, and afterwards exactly one
        element per reservoir replacement.
        """
        n = len(chunk)
        if n == 0:
            return
        start = self._seen
        if self._filled < self.m:
            take = min(n, self.m - self._filled)
            for j in range(take):
                self._reservoir[self._filled] = chunk[j]
                self._filled += 1
            if self._filled == self.m:
                self._weight = update_weight(1.0, self._u(), self.m)
                self._next = (start + take - 1) + skip_gap(self._weight, self._u())
        if self._filled == self.m:
            end = start + n
            while self._next < end:
                r = int(self._rng.integers(0, self.m))
                self._reservoir[r] = chunk[self._next - start]
                self._weight = update_weight(self._weight, self._u(), self.m)
                self._next += skip_gap(self._weight, self._u())
        self._seen += n

    def result(self, strategy: str = "simple") -> Sample:
        if self._seen == 0:
            raise EmptyStream("cannot sample from an empty stream")
        return Sample(self._reservoir[: self._filled].copy(), self.seed, strategy)


def _as_chunks(stream) -> Iterator:
    """Present any supported stream shape as an iterator of indexable chunks.

    Accepts volume-like objects (anything with ``chunks()``), a single
    sequence (kept intact so counting proxies see every element access), an
    iterable of ValueChunk or ndarray chunks, or a plain iterable of scalars.
    """
    if hasattr(stream, "chunks"):
        for chunk in stream.chunks():
            yield chunk.values
        return
    if isinstance(stream, ValueChunk):
        yield stream.values
        return
    if hasattr(stream, "__len__") and hasattr(stream, "__getitem__"):
        yield stream
        return
    it = iter(stream)
    try:
        first = next(it)
    except StopIteration:
        return
    if isinstance(first, ValueChunk):
        yield first.values
        for chunk in it:
            yield chunk.values
        return
    if isinstance(first, np.ndarray) and first.ndim >= 1:
        yield first
        for chunk in it:
            yield chunk
        return
    batch = [first]
    while batch:
        yield batch
        batch = list(islice(it, _ITER_BATCH))


def reservoir_sample(stream, m: int, seed: int) -> Sample:
    """Draw a uniform sample of up to ``m`` values from ``stream`` in one pass.

    Every length-m subset of an N >= m stream is equally probable; a shorter
    stream is returned whole. Deterministic given (seed, stream order).
    Raises EmptyStream when the stream has no elements.
    """
    sampler = ReservoirSampler(m, seed)
    for chunk in _as_chunks(stream):
        sampler.extend(chunk)
    return sampler.result()


def write_sample(sample: Sample, path) -> None:
    """Export sample values as little-endian float64 plus a text header.

    The header lands next to the data as ``<path>.meta`` with size, seed and
    strategy lines; clustering tools and external bindings read this pair.
    """
    path = Path(path)
    np.ascontiguousarray(sample.values, dtype="<f8").tofile(path)
    header = f"size: {sample.size}\nseed: {sample.seed}\nstrategy: {sample.strategy}\n"
    Path(str(path) + ".meta").write_text(header, encoding="utf-8")


def read_sample(path) -> Sample:
    """Load a sample written by ``write_sample``; accepts data or .meta path."""
    p = Path(path)
    if p.suffix == ".meta":
        data_path, meta_path = p.with_suffix(""), p
    else:
        data_path, meta_path = p, Path(str(p) + ".meta")
    entries = parse_sidecar(meta_path, known_keys=_SAMPLE_KEYS)
    for required in ("size", "seed", "strategy"):
        if required not in entries:
            raise MalformedSidecar(f"{meta_path}: missing required key {required!r}")
    try:
        size = int(entries["size"])
        seed = int(entries["seed"])
    except ValueError:
        raise MalformedSidecar(f"{meta_path}: size and seed must be integers") from None
    if not data_path.is_file():
        raise MissingFile(f"sample data not found: {data_path}")
    values = np.fromfile(data_path, dtype="<f8")
    if len(values) != size:
        raise SizeMismatch(f"{data_path}: header says {size} values, file has {len(values)}")
    return Sample(values.astype(np.float64), seed=seed, strategy=entries["strategy"])
