from __future__ import annotations

import math

import httpx
import numpy as np
import pytest

from conftest import constant_classifier, make_blob_bundle
from deepview.classifiers import (ClassifierInfo, FeedForwardClassifier, KnnClassifier,
                                  ProbDist, RemoteClassifier, fit_knn, load_builtin,
                                  predict_batch)
from deepview.errors import TransportError, ValidationError
from deepview.wire import create_model_app


def mlp_fixture() -> FeedForwardClassifier:
    rng = np.random.default_rng(42)
    w1 = rng.normal(size=(4, 3))
    b1 = rng.normal(size=4)
    w2 = rng.normal(size=(2, 4))
    b2 = rng.normal(size=2)
    return FeedForwardClassifier(3, [(w1, b1, "relu"), (w2, b2, "softmax")], ["neg", "pos"])


def forward_oracle(clf: FeedForwardClassifier, x: np.ndarray) -> np.ndarray:
    """Straight-line re-implementation: explicit loops, no shared code paths."""
    h = [float(v) for v in x]
    for w, b, act in clf.layers:
        out = []
        for o in range(w.shape[0]):
            acc = float(b[o])
            for i in range(w.shape[1]):
                acc += float(w[o, i]) * h[i]
            out.append(acc)
        if act == "relu":
            out = [max(v, 0.0) for v in out]
        elif act == "softmax":
            m = max(out)
            exps = [math.exp(v - m) for v in out]
            s = sum(exps)
            out = [v / s for v in exps]
        h = out
    return np.asarray(h)


class TestProbDist:
    def test_renormalizes(self):
        p = ProbDist(np.array([2.0, 2.0]))
        np.testing.assert_allclose(p.probs, [0.5, 0.5])

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            ProbDist(np.array([1.5, -0.5]))

    def test_rejects_zero_sum(self):
        with pytest.raises(ValidationError):
            ProbDist(np.array([0.0, 0.0]))


class TestFeedForward:
    def test_uniform_logits(self):
        clf = constant_classifier(dim=3, n_classes=2)
        probs = clf.predict_batch(np.random.default_rng(0).normal(size=(5, 3)))
        np.testing.assert_allclose(probs, 0.5)

    def test_matches_hand_rolled_oracle(self):
        clf = mlp_fixture()
        rng = np.random.default_rng(7)
        x = rng.normal(size=(10, 3))
        probs = clf.predict_batch(x)
        for i in range(10):
            np.testing.assert_allclose(probs[i], forward_oracle(clf, x[i]), rtol=1e-12)

    def test_batch_row_equivalence_exact(self):
        clf = mlp_fixture()
        x = np.random.default_rng(3).normal(size=(17, 3))
        full = clf.predict_batch(x)
        for i in range(17):
            single = clf.predict_batch(x[i:i + 1])[0]
            assert (full[i] == single).all()

    def test_rows_sum_to_one(self):
        clf = mlp_fixture()
        x = np.random.default_rng(5).normal(size=(50, 3))
        probs = clf.predict_batch(x)
        assert (probs >= 0).all()
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-5)

    def test_dimension_mismatch(self):
        clf = mlp_fixture()
        with pytest.raises(ValidationError, match="width"):
            clf.predict_batch(np.zeros((2, 5)))

    def test_nonfinite_input(self):
        clf = mlp_fixture()
        with pytest.raises(ValidationError, match="finite"):
            clf.predict_batch(np.array([[np.nan, 0.0, 0.0]]))

    def test_shape_error_reports_layer(self):
        with pytest.raises(ValidationError, match="layer 1"):
            FeedForwardClassifier(3, [
                (np.zeros((4, 3)), np.zeros(4), "relu"),
                (np.zeros((2, 5)), np.zeros(2), "softmax"),
            ], ["a", "b"])

    def test_softmax_only_terminal(self):
        with pytest.raises(ValidationError, match="softmax"):
            FeedForwardClassifier(3, [
                (np.zeros((4, 3)), np.zeros(4), "softmax"),
                (np.zeros((2, 4)), np.zeros(2), "softmax"),
            ], ["a", "b"])

    def test_save_load_round_trip(self, tmp_path):
        clf = mlp_fixture()
        path = tmp_path / "weights.json"
        clf.save(path)
        reloaded = load_builtin(path)
        assert reloaded.info == clf.info
        x = np.random.default_rng(9).normal(size=(100, 3))
        np.testing.assert_array_equal(clf.predict_batch(x), reloaded.predict_batch(x))
        assert clf.identity() == reloaded.identity()

    def test_load_reports_missing_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"input_dim": 3, "layers": []}')
        with pytest.raises(ValidationError, match="class_names"):
            load_builtin(path)

    def test_info_from_one_layer_file(self, tmp_path):
        clf = FeedForwardClassifier(
            3, [(np.zeros((2, 3)), np.zeros(2), "softmax")], ["a", "b"])
        path = tmp_path / "w.json"
        clf.save(path)
        info = load_builtin(path).info
        assert info == ClassifierInfo(3, 2, ("a", "b"))


class TestKnn:
    def test_k1_reference_query_one_hot(self):
        refs = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 0.0]])
        clf = KnnClassifier(refs, np.array([0, 1, 2]), k=1, class_names=["a", "b", "c"])
        probs = clf.predict_batch(refs[1:2])
        np.testing.assert_array_equal(probs[0], [0.0, 1.0, 0.0])

    def test_k_equals_m_uniform(self):
        refs = np.random.default_rng(0).normal(size=(10, 3))
        labels = np.array([0, 1] * 5)
        clf = KnnClassifier(refs, labels, k=10, class_names=["a", "b"])
        probs = clf.predict_batch(np.zeros((1, 3)))
        np.testing.assert_allclose(probs[0], [0.5, 0.5])

    def test_vote_fractions_match_sort_oracle(self):
        rng = np.random.default_rng(8)
        centers = rng.normal(size=(3, 6)) * 10
        refs = np.vstack([c + rng.normal(size=(10, 6)) for c in centers])
        labels = np.repeat(np.arange(3), 10)
        clf = KnnClassifier(refs, labels, k=5, class_names=["a", "b", "c"])
        queries = np.vstack([centers, rng.normal(size=(5, 6)) * 5])
        probs = clf.predict_batch(queries)
        for qi, q in enumerate(queries):
            dists = [(float(np.sum((refs[m] - q) ** 2)), m) for m in range(refs.shape[0])]
            dists.sort()
            votes = [0, 0, 0]
            for _, m in dists[:5]:
                votes[labels[m]] += 1
            np.testing.assert_allclose(probs[qi], np.array(votes) / 5.0)

    def test_components_are_multiples_of_inv_k(self):
        rng = np.random.default_rng(1)
        refs = rng.normal(size=(20, 4))
        labels = rng.integers(0, 3, size=20)
        clf = KnnClassifier(refs, labels, k=5, class_names=["a", "b", "c"])
        probs = clf.predict_batch(rng.normal(size=(10, 4)))
        np.testing.assert_allclose(probs * 5, np.round(probs * 5), atol=1e-12)

    def test_distance_tie_breaks_to_lower_index(self):
        refs = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        clf = KnnClassifier(refs, np.array([0, 1, 1]), k=1, class_names=["a", "b"])
        # query equidistant from rows 0 and 1 -> row 0 wins
        probs = clf.predict_batch(np.array([[0.0, 0.0]]))
        np.testing.assert_array_equal(probs[0], [1.0, 0.0])

    def test_label_tie_resolves_to_nearest(self):
        refs = np.array([[0.0], [1.0], [2.0], [3.0]])
        labels = np.array([0, 1, 1, 0])
        clf = KnnClassifier(refs, labels, k=4, class_names=["a", "b"])
        # votes tie 2-2; nearest to query 0.1 is row 0 with label 0
        assert clf.predict_labels(np.array([[0.1]]))[0] == 0

    def test_permutation_invariance_distinct_distances(self):
        rng = np.random.default_rng(4)
        refs = rng.normal(size=(15, 3))
        labels = rng.integers(0, 2, size=15)
        clf = KnnClassifier(refs, labels, k=5, class_names=["a", "b"])
        perm = rng.permutation(15)
        clf_p = KnnClassifier(refs[perm], labels[perm], k=5, class_names=["a", "b"])
        q = rng.normal(size=(8, 3))
        np.testing.assert_allclose(clf.predict_batch(q), clf_p.predict_batch(q))

    def test_fit_knn_true_label(self, two_blob_bundle):
        clf = fit_knn(two_blob_bundle, "true_label", k=5)
        assert clf.info.n_classes == 2
        probs = clf.predict_batch(two_blob_bundle.embeddings)
        assert (probs.argmax(axis=1) == [r.label for r in two_blob_bundle.records]).all()

    def test_fit_knn_dataset_tag(self):
        centers = np.zeros((2, 4))
        centers[0, 0] = 8.0
        centers[1, 1] = 8.0
        bundle = make_blob_bundle(centers, 10, tags=["wine", "ale"])
        clf = fit_knn(bundle, "dataset_tag", k=3)
        assert clf.info.class_names == ("ale", "wine")

    def test_fit_knn_missing_labels(self, two_blob_bundle):
        for rec in two_blob_bundle.records:
            rec.label = None
        with pytest.raises(ValidationError, match="row 0"):
            fit_knn(two_blob_bundle, "true_label", k=5)

    def test_k_exceeds_m(self):
        refs = np.zeros((3, 2))
        with pytest.raises(ValidationError):
            KnnClassifier(refs, np.array([0, 1, 0]), k=4, class_names=["a", "b"])


class TestRemote:
    def make_remote(self, clf) -> RemoteClassifier:
        from fastapi.testclient import TestClient

        client = TestClient(create_model_app(clf))
        return RemoteClassifier(str(client.base_url), client=client)

    def test_info_and_predict(self):
        local = mlp_fixture()
        remote = self.make_remote(local)
        assert remote.info == local.info
        x = np.random.default_rng(2).normal(size=(6, 3))
        np.testing.assert_allclose(remote.predict_batch(x), local.predict_batch(x),
                                   rtol=0, atol=0)

    def test_wrong_width_is_validation_error(self):
        remote = self.make_remote(mlp_fixture())
        with pytest.raises(ValidationError):
            remote.predict_batch(np.zeros((1, 7)))

    def test_unreachable_endpoint(self):
        def reject(request):
            raise httpx.ConnectError("down")

        client = httpx.Client(transport=httpx.MockTransport(reject))
        with pytest.raises(TransportError, match="after 2 attempts"):
            RemoteClassifier("http://nowhere", retries=1, client=client)

    def test_non_2xx_is_transport_error_without_retry(self):
        calls = []

        def handler(request):
            calls.append(request.url.path)
            return httpx.Response(500, json={"error": "boom"})

        client = httpx.Client(transport=httpx.MockTransport(handler))
        with pytest.raises(TransportError, match="HTTP 500"):
            RemoteClassifier("http://broken", retries=3, client=client)
        assert len(calls) == 1


def test_module_level_predict_batch(two_blob_bundle):
    clf = constant_classifier(dim=16)
    probs = predict_batch(clf, two_blob_bundle.embeddings)
    assert probs.shape == (two_blob_bundle.size, 2)
