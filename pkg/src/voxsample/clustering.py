"""Univariate clustering on a drawn sample: K-Means, mini-batch K-Means, GMM.

All three fitters run on the one-dimensional value sample, keep components in
ascending order after fitting, and break every distance or likelihood tie
toward the smallest component index. The models double as voxel classifiers
through ``predict`` / ``predict_array``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateSampleWarning, MalformedModel, MissingFile, TooFewPoints
from .sampler import Sample, derive_seed

VARIANCE_FLOOR = 1e-10

_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class FitConfig:
    """Shared fitting knobs; ``batch_size`` only matters for the mini-batch fit."""

    k: int
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-6
    restarts: int = 10
    batch_size: Optional[int] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"cluster count must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")


@dataclass(frozen=True)
class KMeansModel:
    """Fitted centers (ascending) with the inertia they achieve.

    ``history`` records the per-iteration objective of the winning run:
    assignment inertia for the full-batch fit, max center movement for the
    mini-batch fit.
    """

    centers: np.ndarray
    inertia: float
    iterations: int
    seed: int = 0
    history: tuple = ()


@dataclass(frozen=True)
class GmmModel:
    """Fitted mixture, components sorted by mean ascending."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood: float
    iterations: int
    seed: int = 0
    history: tuple = ()


def _sample_values(sample) -> np.ndarray:
    values = sample.values if isinstance(sample, Sample) else sample
    arr = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample values must be finite")
    return arr


def _kmeanspp(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed centers on actual sample points, each drawn with probability
    proportional to its squared distance from the centers chosen so far."""
    n = len(values)
    centers = np.empty(k, dtype=np.float64)
    centers[0] = values[int(rng.integers(n))]
    d2 = (values - centers[0]) ** 2
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            centers[j] = values[int(rng.integers(n))]
            continue
        target = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), target, side="right"))
        centers[j] = values[min(idx, n - 1)]
        np.minimum(d2, (values - centers[j]) ** 2, out=d2)
    return centers


def _lloyd(values: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    """One Lloyd run. Returns centers, their assignment inertia, and the
    per-iteration inertia history (non-increasing)."""
    k = len(centers)
    centers = centers.copy()
    inertia = np.inf
    history: list[float] = []
    for _ in range(max_iter):
        d2 = (values[:, None] - centers[None, :]) ** 2
        labels = np.argmin(d2, axis=1)
        point_best = d2[np.arange(len(values)), labels]
        new_inertia = float(point_best.sum())
        history.append(new_inertia)
        if np.isfinite(inertia) and inertia - new_inertia <= tol * inertia:
            inertia = new_inertia
            break
        inertia = new_inertia
        for j in range(k):
            mask = labels == j
            if mask.any():
                centers[j] = float(values[mask].mean())
            else:
                # Revive an empty cluster at the worst-served point; damp that
                # point's distance so a second empty cluster picks elsewhere.
                far = int(np.argmax(point_best))
                centers[j] = values[far]
                np.minimum(point_best, (values - centers[j]) ** 2, out=point_best)
    return centers, inertia, history


def kmeans_fit(sample, cfg: FitConfig) -> KMeansModel:
    """Lloyd's K-Means with kmeans++ seeding, best of ``cfg.restarts`` runs.

    Stops a run when the relative inertia improvement drops below ``cfg.tol``.
    Deterministic given ``cfg.seed``. An all-identical sample with k > 1 is
    degenerate: the fit warns and returns k copies of the value.
    """
    values = _sample_values(sample)
    n = len(values)
    if n < cfg.k:
        raise TooFewPoints(f"need at least {cfg.k} points for {cfg.k} clusters, got {n}")
    if cfg.k > 1 and np.all(values == values[0]):
        warnings.warn(
            "all sample values identical; returning coincident cluster centers",
            DegenerateSampleWarning,
        )
        centers = np.full(cfg.k, values[0], dtype=np.float64)
        return KMeansModel(centers, 0.0, 0, cfg.seed, (0.0,))
    best = None
    for r in range(cfg.restarts):
        rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, r)))
        centers0 = _kmeanspp(values, cfg.k, rng)
        centers, inertia, history = _lloyd(values, centers0, cfg.max_iter, cfg.tol)
        if best is None or inertia < best[1]:
            best = (centers, inertia, history)
    centers, inertia, history = best
    return KMeansModel(np.sort(centers), inertia, len(history), cfg.seed, tuple(history))


def _full_inertia(values: np.ndarray, centers: np.ndarray) -> float:
    d2 = (values[:, None] - centers[None, :]) ** 2
    return float(d2.min(axis=1).sum())


def minibatch_kmeans_fit(sample, cfg: FitConfig) -> KMeansModel:
    """Mini-batch K-Means: per-iteration random batch, per-center 1/count rate.

    Each batch is drawn with replacement; points assigned to a center fold
    into its count-weighted running mean. Stops when the largest center
    movement in an iteration falls below ``cfg.tol`` or on ``max_iter``. Best
    of ``cfg.restarts`` runs by full-sample inertia.
    """
    values = _sample_values(sample)
    n = len(values)
    if n < cfg.k:
        raise TooFewPoints(f"need at least {cfg.k} points for {cfg.k} clusters, got {n}")
    batch_size = cfg.batch_size if cfg.batch_size is not None else min(1024, n)
    if batch_size < cfg.k:
        raise TooFewPoints(f"batch size {batch_size} smaller than cluster count {cfg.k}")
    best = None
    for r in range(cfg.restarts):
        rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, r)))
        centers = _kmeanspp(values, cfg.k, rng)
        counts = np.zeros(cfg.k, dtype=np.int64)
        history: list[float] = []
        for _ in range(cfg.max_iter):
            batch = values[rng.integers(0, n, size=batch_size)]
            d2 = (batch[:, None] - centers[None, :]) ** 2
            labels = np.argmin(d2, axis=1)
            previous = centers.copy()
            batch_counts = np.bincount(labels, minlength=cfg.k)
            batch_sums = np.bincount(labels, weights=batch, minlength=cfg.k)
            hit = batch_counts > 0
            # Running mean over every point ever assigned to the center:
            # equivalent to applying the per-point 1/count updates in order.
            merged = counts[hit] + batch_counts[hit]
            centers[hit] = (counts[hit] * centers[hit] + batch_sums[hit]) / merged
            counts[hit] = merged
            movement = float(np.max(np.abs(centers - previous)))
            history.append(movement)
            if movement < cfg.tol:
                break
        inertia = _full_inertia(values, centers)
        if best is None or inertia < best[1]:
            best = (centers, inertia, history)
    centers, inertia, history = best
    return KMeansModel(np.sort(centers), inertia, len(history), cfg.seed, tuple(history))


def _gmm_log_scores(values: np.ndarray, weights, means, variances) -> np.ndarray:
    """(n, k) matrix of log(pi_j) + log N(v_i | mu_j, var_j)."""
    v = np.atleast_1d(np.asarray(values, dtype=np.float64))
    with np.errstate(divide="ignore"):
        log_w = np.log(np.asarray(weights, dtype=np.float64))
    var = np.asarray(variances, dtype=np.float64)
    d = v[:, None] - np.asarray(means, dtype=np.float64)[None, :]
    return log_w - 0.5 * np.log(2.0 * np.pi * var) - d * d / (2.0 * var)


def _em(values: np.ndarray, means0: np.ndarray, cfg: FitConfig, seed: int) -> GmmModel:
    n = len(values)
    k = cfg.k
    means = means0.astype(np.float64).copy()
    variances = np.full(k, max(float(np.var(values)), VARIANCE_FLOOR))
    weights = np.full(k, 1.0 / k)
    ll = -np.inf
    history: list[float] = []
    for _ in range(cfg.max_iter):
        scores = _gmm_log_scores(values, weights, means, variances)
        log_norm = logsumexp(scores, axis=1)
        new_ll = float(log_norm.sum())
        history.append(new_ll)
        if np.isfinite(ll) and abs(new_ll - ll) <= cfg.tol * max(abs(ll), _TINY):
            ll = new_ll
            break
        ll = new_ll
        resp = np.exp(scores - log_norm[:, None])
        nj = np.maximum(resp.sum(axis=0), _TINY)
        weights = nj / n
        means = (resp * values[:, None]).sum(axis=0) / nj
        d = values[:, None] - means[None, :]
        variances = np.maximum((resp * d * d).sum(axis=0) / nj, VARIANCE_FLOOR)
    return GmmModel(weights, means, variances, ll, len(history), seed, tuple(history))


def gmm_fit(sample, cfg: FitConfig) -> GmmModel:
    """Univariate Gaussian mixture via EM, best of ``cfg.restarts`` runs.

    Each restart initializes means from a single K-Means run under a derived
    seed, with uniform weights and the pooled sample variance. All likelihood
    math is carried in log space; variances are floored at VARIANCE_FLOOR so
    degenerate components never collapse.
    """
    values = _sample_values(sample)
    n = len(values)
    if n < cfg.k:
        raise TooFewPoints(f"need at least {cfg.k} points for {cfg.k} clusters, got {n}")
    best = None
    for r in range(cfg.restarts):
        sub_seed = derive_seed(cfg.seed, r)
        km_cfg = FitConfig(cfg.k, seed=sub_seed, max_iter=cfg.max_iter, tol=cfg.tol, restarts=1)
        means0 = kmeans_fit(values, km_cfg).centers
        model = _em(values, means0, cfg, sub_seed)
        if best is None or model.log_likelihood > best.log_likelihood:
            best = model
    order = np.argsort(best.means, kind="stable")
    return GmmModel(
        best.weights[order], best.means[order], best.variances[order],
        best.log_likelihood, best.iterations, cfg.seed, best.history,
    )


ClusterModel = Union[KMeansModel, GmmModel]


def predict_array(model: ClusterModel, values) -> np.ndarray:
    """Cluster index for each value; ties go to the smallest index.

    K-Means assigns to the nearest center; a GMM assigns to the component
    with the highest weighted log density.
    """
    v = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if isinstance(model, KMeansModel):
        d = np.abs(v[:, None] - model.centers[None, :])
        return np.argmin(d, axis=1)
    return np.argmax(_gmm_log_scores(v, model.weights, model.means, model.variances), axis=1)


def predict(model: ClusterModel, v: float) -> int:
    """Cluster index for one value; see ``predict_array``."""
    return int(predict_array(model, np.asarray([v], dtype=np.float64))[0])


def write_model(model: ClusterModel, path) -> None:
    """Serialize a fitted model as text: header lines, one component per line.

    Floats are written with shortest-round-trip formatting, so reading the
    file back reproduces the model bit for bit.
    """
    if isinstance(model, KMeansModel):
        kind, k, objective = "kmeans", len(model.centers), model.inertia
        rows = [f"{c!r}" for c in model.centers.tolist()]
    else:
        kind, k, objective = "gmm", len(model.means), model.log_likelihood
        rows = [
            f"{w!r} {m!r} {s!r}"
            for w, m, s in zip(model.weights.tolist(), model.means.tolist(),
                               model.variances.tolist())
        ]
    lines = [
        f"kind: {kind}",
        f"k: {k}",
        f"seed: {model.seed}",
        f"iterations: {model.iterations}",
        f"objective: {objective!r}",
    ] + rows
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_model(path) -> ClusterModel:
    """Load a model written by ``write_model``."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"model file not found: {path}")
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    header: dict[str, str] = {}
    rows: list[str] = []
    for line in lines:
        if ":" in line and not rows:
            key, _, value = line.partition(":")
            header[key.strip()] = value.strip()
        else:
            rows.append(line)
    for required in ("kind", "k", "seed", "iterations", "objective"):
        if required not in header:
            raise MalformedModel(f"{path}: missing header key {required!r}")
    try:
        k = int(header["k"])
        seed = int(header["seed"])
        iterations = int(header["iterations"])
        objective = float(header["objective"])
    except ValueError:
        raise MalformedModel(f"{path}: non-numeric header fields") from None
    if len(rows) != k:
        raise MalformedModel(f"{path}: header says {k} components, found {len(rows)} rows")
    kind = header["kind"]
    try:
        if kind == "kmeans":
            centers = np.array([float(r) for r in rows], dtype=np.float64)
            return KMeansModel(centers, objective, iterations, seed)
        if kind == "gmm":
            parts = np.array([[float(x) for x in r.split()] for r in rows], dtype=np.float64)
            if parts.shape != (k, 3):
                raise MalformedModel(f"{path}: gmm rows must be 'weight mean variance'")
            return GmmModel(parts[:, 0], parts[:, 1], parts[:, 2], objective, iterations, seed)
    except ValueError:
        raise MalformedModel(f"{path}: non-numeric component row") from None
    raise MalformedModel(f"{path}: unknown model kind {kind!r}")
