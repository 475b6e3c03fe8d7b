"""Clustering fits checked against an exhaustive 1-D partition oracle.

Optimal 1-D K-Means clusters are contiguous runs of the sorted sample, so the
global optimum is found by enumerating all contiguous partitions. The oracle
below is deliberately brute force and is the reference the fits are judged by.
"""

import warnings
from itertools import combinations

import numpy as np
import pytest
from scipy.special import logsumexp

from voxsample import (
    DegenerateSampleWarning,
    FitConfig,
    GmmModel,
    KMeansModel,
    MalformedModel,
    MissingFile,
    TooFewPoints,
    gmm_fit,
    kmeans_fit,
    minibatch_kmeans_fit,
    predict,
    predict_array,
    read_model,
    write_model,
)
from voxsample.clustering import VARIANCE_FLOOR, _gmm_log_scores


def optimal_partition_inertia(values, k):
    """Exhaustive minimum inertia over all contiguous k-partitions (oracle)."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    n = len(values)
    best = np.inf
    for cuts in combinations(range(1, n), k - 1):
        edges = (0,) + cuts + (n,)
        total = 0.0
        for a, b in zip(edges, edges[1:]):
            seg = values[a:b]
            total += float(((seg - seg.mean()) ** 2).sum())
        best = min(best, total)
    return best


# Lloyd K-Means


def test_kmeans_perfectly_separated():
    model = kmeans_fit(np.array([0, 0, 0, 1, 1, 1.0]), FitConfig(k=2, seed=1))
    np.testing.assert_array_equal(model.centers, [0.0, 1.0])
    assert model.inertia == 0.0


def test_kmeans_single_cluster_is_mean(rng):
    vals = rng.random(100)
    model = kmeans_fit(vals, FitConfig(k=1, seed=1))
    assert model.centers[0] == pytest.approx(vals.mean(), abs=1e-12)


def test_kmeans_matches_brute_force_oracle(rng):
    for trial in range(20):
        n = int(rng.integers(4, 13))
        k = int(rng.integers(2, 4))
        vals = rng.random(n)
        model = kmeans_fit(vals, FitConfig(k=k, seed=int(rng.integers(1 << 30)), restarts=10))
        opt = optimal_partition_inertia(vals, k)
        assert model.inertia <= opt + 1e-9
        assert model.inertia >= opt - 1e-9  # never better than the true optimum


def test_kmeans_inertia_history_non_increasing(rng):
    vals = rng.random(300)
    model = kmeans_fit(vals, FitConfig(k=4, seed=7, restarts=1))
    hist = np.array(model.history)
    assert np.all(np.diff(hist) <= 1e-12)


def test_kmeans_centers_sorted_and_finite(rng):
    for seed in range(10):
        vals = rng.random(int(rng.integers(5, 40)))
        model = kmeans_fit(vals, FitConfig(k=3, seed=seed))
        assert np.all(np.diff(model.centers) >= 0)
        assert np.all(np.isfinite(model.centers))
        assert model.inertia >= 0


def test_kmeans_determinism(rng):
    vals = rng.random(200)
    a = kmeans_fit(vals, FitConfig(k=3, seed=11))
    b = kmeans_fit(vals, FitConfig(k=3, seed=11))
    np.testing.assert_array_equal(a.centers, b.centers)
    assert a.inertia == b.inertia


def test_kmeans_degenerate_sample_warns():
    with pytest.warns(DegenerateSampleWarning):
        model = kmeans_fit(np.full(10, 0.4), FitConfig(k=3, seed=1))
    np.testing.assert_array_equal(model.centers, [0.4, 0.4, 0.4])
    assert model.inertia == 0.0


def test_kmeans_too_few_points():
    with pytest.raises(TooFewPoints):
        kmeans_fit(np.array([0.1, 0.2]), FitConfig(k=3, seed=1))


def test_kmeans_affine_label_invariance(rng):
    vals = np.concatenate([rng.normal(0.2, 0.02, 60), rng.normal(0.7, 0.02, 60)])
    vals = np.clip(vals, 0, 1)
    mapped = 0.5 * vals + 0.2  # strictly increasing affine map into [0,1]
    a = kmeans_fit(vals, FitConfig(k=2, seed=3))
    b = kmeans_fit(mapped, FitConfig(k=2, seed=3))
    np.testing.assert_array_equal(predict_array(a, vals), predict_array(b, mapped))


# mini-batch K-Means


def test_minibatch_full_batch_degenerates_to_lloyd_updates():
    model = minibatch_kmeans_fit(np.array([0, 0, 1, 1.0]), FitConfig(k=2, seed=3, batch_size=4))
    np.testing.assert_array_equal(model.centers, [0.0, 1.0])


def test_minibatch_recovers_separated_centers():
    vals = np.array([0, 0, 0, 1, 1, 1.0])
    good = 0
    for seed in range(50):
        model = minibatch_kmeans_fit(vals, FitConfig(k=2, seed=seed, batch_size=3, max_iter=200, restarts=1))
        if abs(model.centers[0]) <= 0.05 and abs(model.centers[1] - 1.0) <= 0.05:
            good += 1
    assert good >= 45


def test_minibatch_single_cluster_approaches_mean(rng):
    vals = rng.random(400)
    model = minibatch_kmeans_fit(vals, FitConfig(k=1, seed=5, batch_size=64, max_iter=500, restarts=1))
    assert model.centers[0] == pytest.approx(vals.mean(), abs=0.02)


def test_minibatch_batch_smaller_than_k():
    with pytest.raises(TooFewPoints):
        minibatch_kmeans_fit(np.array([0.1, 0.5, 0.9]), FitConfig(k=3, seed=1, batch_size=2))


def test_minibatch_determinism(rng):
    vals = rng.random(300)
    cfg = FitConfig(k=3, seed=9, batch_size=32)
    a = minibatch_kmeans_fit(vals, cfg)
    b = minibatch_kmeans_fit(vals, cfg)
    np.testing.assert_array_equal(a.centers, b.centers)


# Gaussian mixture


def test_gmm_single_component_closed_form(rng):
    vals = rng.random(200)
    model = gmm_fit(vals, FitConfig(k=1, seed=1))
    assert model.weights[0] == pytest.approx(1.0, abs=1e-15)
    assert model.means[0] == pytest.approx(vals.mean(), abs=1e-12)
    assert model.variances[0] == pytest.approx(vals.var(), abs=1e-12)


def test_gmm_recovers_two_gaussians():
    gen = np.random.default_rng(1001)
    vals = np.clip(np.concatenate([gen.normal(0.2, 0.03, 1000), gen.normal(0.8, 0.03, 1000)]), 0, 1)
    model = gmm_fit(vals, FitConfig(k=2, seed=4, restarts=3))
    assert model.means[0] == pytest.approx(0.2, abs=0.01)
    assert model.means[1] == pytest.approx(0.8, abs=0.01)
    assert model.weights[0] == pytest.approx(0.5, abs=0.05)
    assert model.weights[1] == pytest.approx(0.5, abs=0.05)


def test_gmm_variance_floor_engages():
    model = gmm_fit(np.zeros(4), FitConfig(k=1, seed=1))
    assert model.variances[0] == VARIANCE_FLOOR


def test_gmm_weights_sum_to_one(rng):
    vals = rng.random(500)
    model = gmm_fit(vals, FitConfig(k=3, seed=2))
    assert abs(model.weights.sum() - 1.0) <= 1e-12


def test_gmm_log_likelihood_history_non_decreasing(rng):
    vals = rng.random(400)
    model = gmm_fit(vals, FitConfig(k=3, seed=6, restarts=1))
    hist = np.array(model.history)
    assert np.all(np.diff(hist) >= -1e-9)


def test_gmm_responsibilities_sum_to_one(rng):
    vals = rng.random(300)
    model = gmm_fit(vals, FitConfig(k=3, seed=8))
    scores = _gmm_log_scores(vals, model.weights, model.means, model.variances)
    resp = np.exp(scores - logsumexp(scores, axis=1, keepdims=True))
    assert np.max(np.abs(resp.sum(axis=1) - 1.0)) <= 1e-12


def test_gmm_components_sorted_by_mean(rng):
    for seed in range(6):
        vals = rng.random(150)
        model = gmm_fit(vals, FitConfig(k=3, seed=seed))
        assert np.all(np.diff(model.means) >= 0)


def test_gmm_too_few_points():
    with pytest.raises(TooFewPoints):
        gmm_fit(np.array([0.5]), FitConfig(k=2, seed=1))


# prediction


def test_predict_kmeans_tie_goes_to_smallest_index():
    model = KMeansModel(centers=np.array([0.0, 2.0]), inertia=0.0, iterations=0)
    assert predict(model, 1.0) == 0


def test_predict_kmeans_nearest_center():
    model = KMeansModel(centers=np.array([0.1, 0.9]), inertia=0.0, iterations=0)
    assert predict(model, 0.2) == 0
    assert predict(model, 0.7) == 1


def test_predict_gmm_symmetric_tie():
    model = GmmModel(
        weights=np.array([0.5, 0.5]),
        means=np.array([0.2, 0.8]),
        variances=np.array([0.01, 0.01]),
        log_likelihood=0.0,
        iterations=0,
    )
    assert predict(model, 0.5) == 0


def test_component_order_only_relabels_predictions(rng):
    vals = rng.random(50)
    sorted_model = KMeansModel(centers=np.array([0.2, 0.8]), inertia=0.0, iterations=0)
    flipped = KMeansModel(centers=np.array([0.8, 0.2]), inertia=0.0, iterations=0)
    a = predict_array(sorted_model, vals)
    b = predict_array(flipped, vals)
    np.testing.assert_array_equal(b, 1 - a)


def test_predict_array_matches_scalar_predict(rng):
    vals = rng.random(64)
    km = kmeans_fit(vals, FitConfig(k=3, seed=2))
    gm = gmm_fit(vals, FitConfig(k=2, seed=2))
    for model in (km, gm):
        batch = predict_array(model, vals)
        scalar = np.array([predict(model, float(v)) for v in vals])
        np.testing.assert_array_equal(batch, scalar)


# serialization


def test_kmeans_model_round_trip(tmp_path, rng):
    model = kmeans_fit(rng.random(100), FitConfig(k=3, seed=5))
    path = tmp_path / "model.txt"
    write_model(model, path)
    back = read_model(path)
    assert isinstance(back, KMeansModel)
    np.testing.assert_array_equal(back.centers, model.centers)
    assert back.inertia == model.inertia
    assert back.seed == model.seed


def test_gmm_model_round_trip(tmp_path, rng):
    model = gmm_fit(rng.random(100), FitConfig(k=2, seed=5))
    path = tmp_path / "model.txt"
    write_model(model, path)
    back = read_model(path)
    assert isinstance(back, GmmModel)
    np.testing.assert_array_equal(back.weights, model.weights)
    np.testing.assert_array_equal(back.means, model.means)
    np.testing.assert_array_equal(back.variances, model.variances)
    assert back.log_likelihood == model.log_likelihood


def test_read_model_rejects_malformed(tmp_path):
    path = tmp_path / "model.txt"
    path.write_text("kind: hierarchy\nk: 2\n")
    with pytest.raises(MalformedModel):
        read_model(path)
    path.write_text("kind: kmeans\nk: 2\nseed: 0\niterations: 1\nobjective: 0.0\ncenter 0.1\n")
    with pytest.raises(MalformedModel):
        read_model(path)  # header promises 2 centers, file has 1
    with pytest.raises(MissingFile):
        read_model(tmp_path / "absent.txt")
