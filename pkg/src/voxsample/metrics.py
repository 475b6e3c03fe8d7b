"""Partition-comparison scores between two voxel labelings.

Both metrics are computed from an exact joint contingency table built in one
streaming pass, so two label volumes can be compared without materializing
either. Pair counts use exact integer arithmetic; entropies use natural logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch, TooFewItems
from .sampler import _as_chunks


@dataclass(frozen=True)
class ContingencyTable:
    """Joint label counts: matrix[u, v] = items labeled u in A and v in B."""

    matrix: np.ndarray
    row_labels: np.ndarray
    col_labels: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.matrix.sum())


def _int_chunks(stream):
    for chunk in _as_chunks(stream):
        arr = np.asarray(chunk)
        if arr.size:
            yield arr.ravel()


def _tally(counts: dict, a: np.ndarray, b: np.ndarray) -> None:
    a = a.astype(np.int64, copy=False)
    b = b.astype(np.int64, copy=False)
    if int(a.min()) < 0 or int(b.min()) < 0:
        raise ValueError("labels must be nonnegative integers")
    # Encode pairs into one integer per item so one np.unique does the joint count.
    m = int(b.max()) + 1
    codes = a * m + b
    uniq, cnt = np.unique(codes, return_counts=True)
    for code, c in zip(uniq.tolist(), cnt.tolist()):
        key = (code // m, code % m)
        counts[key] = counts.get(key, 0) + c


def build_contingency(labels_a, labels_b) -> ContingencyTable:
    """Exact joint counts of two equal-length label streams.

    Accepts arrays, plain iterables, or iterators of array chunks; the two
    sides may be chunked differently. Only the table is ever held in memory.
    """
    counts: dict[tuple[int, int], int] = {}
    total = 0
    it_a, it_b = _int_chunks(labels_a), _int_chunks(labels_b)
    buf_a = buf_b = None
    while True:
        if buf_a is None or buf_a.size == 0:
            buf_a = next(it_a, None)
        if buf_b is None or buf_b.size == 0:
            buf_b = next(it_b, None)
        if buf_a is None or buf_b is None:
            break
        take = min(buf_a.size, buf_b.size)
        _tally(counts, buf_a[:take], buf_b[:take])
        total += take
        buf_a, buf_b = buf_a[take:], buf_b[take:]
    leftover_a = (buf_a is not None and buf_a.size > 0) or next(it_a, None) is not None
    leftover_b = (buf_b is not None and buf_b.size > 0) or next(it_b, None) is not None
    if leftover_a or leftover_b:
        raise LengthMismatch("label streams have different lengths")
    if total == 0:
        raise EmptyInput("label streams are empty")
    rows = sorted({u for u, _ in counts})
    cols = sorted({v for _, v in counts})
    row_index = {u: i for i, u in enumerate(rows)}
    col_index = {v: i for i, v in enumerate(cols)}
    matrix = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for (u, v), c in counts.items():
        matrix[row_index[u], col_index[v]] = c
    return ContingencyTable(matrix, np.asarray(rows, dtype=np.int64),
                            np.asarray(cols, dtype=np.int64))


def _pair_count(x: int) -> int:
    return x * (x - 1) // 2


def fowlkes_mallows(t: ContingencyTable) -> float:
    """Fowlkes-Mallows index: TP / sqrt((TP+FP)(TP+FN)) over item pairs.

    Pair counts are exact integers, so identical labelings score exactly 1.
    Zero same-cluster pairs on either side scores 0 by convention.
    """
    if t.n < 2:
        raise TooFewItems(f"need at least 2 items to count pairs, got {t.n}")
    tp = sum(_pair_count(int(c)) for c in t.matrix.ravel().tolist())
    pa = sum(_pair_count(int(c)) for c in t.row_sums.tolist())
    pb = sum(_pair_count(int(c)) for c in t.col_sums.tolist())
    if pa == 0 or pb == 0:
        return 0.0
    if pa == pb:
        return tp / pa
    return min(tp / math.sqrt(pa * pb), 1.0)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi_mean(t: ContingencyTable) -> float:
    """Mutual information normalized by the mean of the two label entropies.

    I(A;B) is computed as H(A) + H(B) - H(A,B); for identical labelings the
    three entropies are the same float sum, so the score is exactly 1. Two
    constant labelings score 1; exactly one constant side scores 0.
    """
    n = t.n
    h_a = _entropy(t.row_sums, n)
    h_b = _entropy(t.col_sums, n)
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    if h_a == 0.0 or h_b == 0.0:
        return 0.0
    h_joint = _entropy(t.matrix.ravel(), n)
    mutual = h_a + h_b - h_joint
    return min(max(mutual / ((h_a + h_b) / 2.0), 0.0), 1.0)
