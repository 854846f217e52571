from __future__ import annotations

import sys

import numpy as np
import pytest

from deepview.bundle import DatasetBundle, Record
from deepview.classifiers import FeedForwardClassifier


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        verdict = "PASS" if report.passed else "FAIL"
        print(f"[ACCEPTANCE] {name}: {verdict}", file=sys.stderr)


def make_blob_bundle(centers: np.ndarray, n_per_class: int, spread: float = 1.0,
                     seed: int = 0, tags: list[str] | None = None) -> DatasetBundle:
    """Gaussian blobs around the given centers, labeled by blob."""
    rng = np.random.default_rng(seed)
    rows = []
    records = []
    for c, center in enumerate(centers):
        pts = center + spread * rng.normal(size=(n_per_class, centers.shape[1]))
        rows.append(pts)
        for i in range(n_per_class):
            records.append(Record(
                id=f"c{c}-{i}",
                text=f"sample {i} of class {c}",
                label=c,
                dataset_tag=tags[c] if tags else None,
            ))
    return DatasetBundle(embeddings=np.vstack(rows).astype(np.float32), records=records)


def linear_softmax_classifier(centers: np.ndarray, scale: float = 1.0,
                              class_names: list[str] | None = None) -> FeedForwardClassifier:
    """Nearest-center classifier as a single linear + softmax layer.

    logits_c = scale * (2 x . mu_c - ||mu_c||^2), the monotone part of
    -||x - mu_c||^2, so argmax matches the nearest center.
    """
    weights = 2.0 * scale * centers
    bias = -scale * np.einsum("ij,ij->i", centers, centers)
    names = class_names or [f"class{c}" for c in range(centers.shape[0])]
    return FeedForwardClassifier(
        centers.shape[1], [(weights, bias, "softmax")], names)


def constant_classifier(dim: int, n_classes: int = 2) -> FeedForwardClassifier:
    """Uniform output everywhere: zero weights, zero bias, softmax."""
    return FeedForwardClassifier(
        dim,
        [(np.zeros((n_classes, dim)), np.zeros(n_classes), "softmax")],
        [f"class{c}" for c in range(n_classes)],
    )


@pytest.fixture
def two_blob_bundle() -> DatasetBundle:
    centers = np.zeros((2, 16))
    centers[0, 0] = 6.0
    centers[1, 0] = -6.0
    return make_blob_bundle(centers, n_per_class=30, spread=0.8, seed=11)
