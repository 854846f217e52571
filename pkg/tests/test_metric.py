from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import constant_classifier, linear_softmax_classifier
from deepview.classifiers import FeedForwardClassifier
from deepview.errors import MetricError, ValidationError
from deepview.metric import (DiscriminativeMetricConfig, DistanceMatrix, base_distance,
                             build_distance_matrix, discriminative_distance, js_distance,
                             load_matrix_cache, save_matrix_cache)


def js_oracle(p, q) -> float:
    """Direct scalar evaluation of the KL sums with base-2 logs."""
    m = [(a + b) / 2 for a, b in zip(p, q)]
    kl_pm = sum(a * math.log2(a / mm) for a, mm in zip(p, m) if a > 0)
    kl_qm = sum(b * math.log2(b / mm) for b, mm in zip(q, m) if b > 0)
    return math.sqrt((kl_pm + kl_qm) / 2)


def random_distributions(rng, count, dim):
    raw = rng.uniform(0.0, 1.0, size=(count, dim))
    return raw / raw.sum(axis=1, keepdims=True)


class TestJsDistance:
    def test_identity(self):
        assert js_distance([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_disjoint_support_is_one(self):
        assert js_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-12)

    def test_reference_value(self):
        val = js_distance([0.5, 0.5], [0.25, 0.75])
        assert val == pytest.approx(js_oracle([0.5, 0.5], [0.25, 0.75]), abs=1e-12)
        assert val == pytest.approx(0.2209, abs=5e-5)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            js_distance([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(100)
        for _ in range(200):
            dim = int(rng.integers(2, 11))
            p, q, r = random_distributions(rng, 3, dim)
            d_pq = js_distance(p, q)
            d_qp = js_distance(q, p)
            assert d_pq == pytest.approx(d_qp, abs=1e-15)
            assert 0.0 <= d_pq <= 1.0
            assert js_distance(p, p) == 0.0
            assert d_pq <= js_distance(p, r) + js_distance(r, q) + 1e-12


class TestBaseDistance:
    def test_cosine_self_is_zero(self):
        assert base_distance([1.0, 2.0], [1.0, 2.0], "cosine") == pytest.approx(0.0, abs=1e-15)

    def test_euclidean_345(self):
        assert base_distance([0.0, 0.0], [3.0, 4.0], "euclidean") == 5.0

    def test_cosine_reference_value(self):
        val = base_distance([1.0, 0.0], [1.0, 1.0], "cosine")
        assert val == pytest.approx(1.0 - 1.0 / math.sqrt(2.0), abs=1e-12)

    def test_cosine_zero_vector(self):
        with pytest.raises(MetricError, match="zero vector"):
            base_distance([0.0, 0.0], [1.0, 0.0], "cosine")


def arc_oracle(x, y, f, lam, n, kind) -> float:
    """Independent summation: evaluate f at the n+1 points, mix terms directly."""
    total = 0.0
    points = [np.asarray([(1 - i / n) * a + (i / n) * b for a, b in zip(x, y)])
              for i in range(n + 1)]
    probs = [f.predict_batch(p[None, :])[0] for p in points]
    for i in range(1, n + 1):
        js = js_oracle(probs[i - 1], probs[i])
        if kind == "euclidean":
            ds = float(np.linalg.norm(points[i - 1] - points[i]))
        else:
            a, b = points[i - 1], points[i]
            ds = 1.0 - float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
        total += (1 - lam) * js + lam * ds
    return total


class TestDiscriminativeDistance:
    def test_lambda1_euclidean_telescopes(self):
        f = constant_classifier(dim=2)
        cfg = DiscriminativeMetricConfig(lam=1.0, n_segments=7, base_metric="euclidean")
        val = discriminative_distance([0.0, 0.0], [3.0, 4.0], f, cfg)
        assert val == pytest.approx(5.0, abs=1e-9)

    def test_lambda0_constant_classifier_is_exactly_zero(self):
        f = constant_classifier(dim=3)
        cfg = DiscriminativeMetricConfig(lam=0.0, n_segments=5, base_metric="euclidean")
        assert discriminative_distance([1.0, 2.0, 3.0], [-4.0, 0.0, 2.0], f, cfg) == 0.0

    def test_matches_direct_summation_oracle(self):
        centers = np.array([[2.0, 0.0], [-2.0, 0.0]])
        f = linear_softmax_classifier(centers, scale=0.7)
        cfg = DiscriminativeMetricConfig(lam=0.5, n_segments=4, base_metric="euclidean")
        x = np.array([1.5, 0.3])
        y = np.array([-2.2, 1.0])
        val = discriminative_distance(x, y, f, cfg)
        assert val == pytest.approx(arc_oracle(x, y, f, 0.5, 4, "euclidean"), abs=1e-12)

    def test_symmetry(self):
        centers = np.random.default_rng(0).normal(size=(3, 5))
        f = linear_softmax_classifier(centers)
        cfg = DiscriminativeMetricConfig(lam=0.4, n_segments=5, base_metric="cosine")
        rng = np.random.default_rng(1)
        for _ in range(20):
            x, y = rng.normal(size=(2, 5)) + 3.0
            assert discriminative_distance(x, y, f, cfg) == pytest.approx(
                discriminative_distance(y, x, f, cfg), abs=1e-9)

    def test_zero_for_equal_points(self):
        f = linear_softmax_classifier(np.random.default_rng(2).normal(size=(2, 4)))
        cfg = DiscriminativeMetricConfig(lam=0.5, n_segments=3, base_metric="euclidean")
        x = np.array([1.0, -1.0, 2.0, 0.5])
        assert discriminative_distance(x, x, f, cfg) == 0.0

    def test_interior_zero_vector_under_cosine_reports_segment(self):
        f = constant_classifier(dim=2)
        cfg = DiscriminativeMetricConfig(lam=1.0, n_segments=2, base_metric="cosine")
        with pytest.raises(MetricError, match="interpolation point 1"):
            discriminative_distance([1.0, 0.0], [-1.0, 0.0], f, cfg)


class SpyClassifier(FeedForwardClassifier):
    """Counts predict_batch calls to verify skip-when-inert behaviour."""

    def __init__(self, inner: FeedForwardClassifier):
        super().__init__(inner.info.input_dim,
                         [(w, b, a) for w, b, a in inner.layers],
                         list(inner.info.class_names))
        self.calls = 0

    def predict_batch(self, inputs):
        self.calls += 1
        return super().predict_batch(inputs)


class TestBuildMatrix:
    def test_two_points(self):
        f = constant_classifier(dim=3)
        cfg = DiscriminativeMetricConfig(lam=1.0, n_segments=5, base_metric="euclidean")
        x = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 2.0]])
        dm = build_distance_matrix(x, f, cfg)
        assert dm.values[0, 0] == dm.values[1, 1] == 0.0
        expected = discriminative_distance(x[0], x[1], f, cfg)
        assert dm.values[0, 1] == pytest.approx(expected, abs=1e-12)
        assert dm.values[1, 0] == dm.values[0, 1]

    def test_lambda1_euclidean_equals_pairwise(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(12, 4))
        f = constant_classifier(dim=4)
        cfg = DiscriminativeMetricConfig(lam=1.0, n_segments=3, base_metric="euclidean")
        dm = build_distance_matrix(x, f, cfg)
        direct = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
        np.testing.assert_allclose(dm.values, direct, atol=1e-9)

    def test_matches_unbatched_double_loop_oracle(self):
        rng = np.random.default_rng(77)
        x = rng.normal(size=(20, 6)) + 2.0
        centers = rng.normal(size=(3, 6))
        f = linear_softmax_classifier(centers, scale=0.5)
        cfg = DiscriminativeMetricConfig(lam=0.6, n_segments=5, base_metric="cosine")
        dm = build_distance_matrix(x, f, cfg, batch_size=16)
        for i in range(20):
            for j in range(i + 1, 20):
                expected = arc_oracle(x[i], x[j], f, 0.6, 5, "cosine")
                assert dm.values[i, j] == pytest.approx(expected, abs=1e-9), (i, j)

    def test_invariant_to_batch_size_and_threads(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(20, 5))
        f = linear_softmax_classifier(rng.normal(size=(2, 5)), scale=0.4)
        cfg = DiscriminativeMetricConfig(lam=0.6, n_segments=5, base_metric="euclidean")
        reference = build_distance_matrix(x, f, cfg, batch_size=1, threads=1)
        for batch_size in (7, 64):
            for threads in (1, 4):
                dm = build_distance_matrix(x, f, cfg, batch_size=batch_size, threads=threads)
                assert (dm.values == reference.values).all(), (batch_size, threads)

    def test_lambda1_skips_classifier_without_normalization(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(6, 4))
        spy = SpyClassifier(constant_classifier(dim=4))
        cfg = DiscriminativeMetricConfig(lam=1.0, n_segments=3, base_metric="euclidean")
        build_distance_matrix(x, spy, cfg)
        assert spy.calls == 0

    def test_lambda1_evaluates_classifier_with_normalization(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(6, 4))
        spy = SpyClassifier(constant_classifier(dim=4))
        cfg = DiscriminativeMetricConfig(lam=1.0, n_segments=3, base_metric="euclidean",
                                         normalize_components=True)
        build_distance_matrix(x, spy, cfg)
        assert spy.calls > 0

    def test_lambda_extremes_have_single_component(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(10, 4)) + 2.0
        f = linear_softmax_classifier(rng.normal(size=(2, 4)), scale=0.8)
        js_only = build_distance_matrix(
            x, f, DiscriminativeMetricConfig(lam=0.0, n_segments=4, base_metric="euclidean"))
        ds_only = build_distance_matrix(
            x, f, DiscriminativeMetricConfig(lam=1.0, n_segments=4, base_metric="euclidean"))
        mixed = build_distance_matrix(
            x, f, DiscriminativeMetricConfig(lam=0.25, n_segments=4, base_metric="euclidean"))
        np.testing.assert_allclose(
            mixed.values, 0.75 * js_only.values + 0.25 * ds_only.values, atol=1e-12)

    def test_normalize_components_unit_means(self):
        rng = np.random.default_rng(31)
        x = rng.normal(size=(10, 4)) + 3.0
        f = linear_softmax_classifier(rng.normal(size=(2, 4)), scale=0.8)
        cfg = DiscriminativeMetricConfig(lam=0.0, n_segments=4, base_metric="euclidean",
                                         normalize_components=True)
        dm = build_distance_matrix(x, f, cfg)
        iu = np.triu_indices(10, k=1)
        assert dm.values[iu].mean() == pytest.approx(1.0, rel=1e-9)

    def test_lambda_out_of_range(self):
        with pytest.raises(ValidationError, match="lambda"):
            DiscriminativeMetricConfig(lam=1.5)

    def test_n_below_two(self):
        f = constant_classifier(dim=2)
        with pytest.raises(ValidationError):
            build_distance_matrix(np.zeros((1, 2)), f, DiscriminativeMetricConfig())


class TestMatrixValidation:
    def test_asymmetry_rejected(self):
        vals = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValidationError, match="symmetric"):
            DistanceMatrix(values=vals, lam=0.5)

    def test_nonzero_diagonal_rejected(self):
        vals = np.array([[0.1, 1.0], [1.0, 0.0]])
        with pytest.raises(ValidationError, match="diagonal"):
            DistanceMatrix(values=vals, lam=0.5)


def test_matrix_cache_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    x = rng.normal(size=(8, 3))
    f = constant_classifier(dim=3)
    cfg = DiscriminativeMetricConfig(lam=1.0, n_segments=2, base_metric="euclidean")
    dm = build_distance_matrix(x, f, cfg)
    save_matrix_cache(dm, tmp_path, "bhash", f.identity(), cfg)
    loaded = load_matrix_cache(tmp_path, "bhash", f.identity(), cfg)
    assert loaded is not None
    np.testing.assert_allclose(loaded.values, dm.values, rtol=1e-6)
    assert load_matrix_cache(tmp_path, "other", f.identity(), cfg) is None
