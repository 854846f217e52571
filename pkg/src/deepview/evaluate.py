"""Quantitative evaluation of projections and embedding spaces.

Two families live here: fidelity of a single projection to the model's
decision function (leave-one-out neighbor error on predicted labels, and
agreement between point predictions and the rendered background), and
neighborhood-overlap curves comparing any two representations of the same
items (shared-neighbor fraction per k, its above-chance excess, and the
aggregate statistics derived from those curves).
"""

from __future__ import annotations

import csv
import itertools
import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ValidationError


@dataclass
class NeighborhoodCurves:
    """Shared-neighbor statistics between two representations.

    q_nn[k-1] is the mean fraction of shared k-nearest neighbors; lcmc
    subtracts the chance baseline k/(N-1).  k_max is the k where lcmc
    peaks (smallest on ties), q_local the mean of q_nn up to k_max, and
    auc the mean of q_nn over all k.
    """

    ks: np.ndarray
    q_nn: np.ndarray
    lcmc: np.ndarray
    k_max: int
    q_local: float
    auc: float

    def summary(self) -> dict:
        return {"q_local": self.q_local, "k_max": self.k_max, "auc": self.auc}


@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValidationError(f"confusion matrix must be square, got {c.shape}")
        if len(self.class_names) != c.shape[0]:
            raise ValidationError("one class name per row required")
        self.counts = c


def _neighbor_order(points: np.ndarray) -> np.ndarray:
    """All other points per row, nearest first; distance ties to lower index."""
    d2 = cdist(points, points, "sqeuclidean")
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, : points.shape[0] - 1]


def q_knn_error(coords: np.ndarray, predicted_labels: np.ndarray, k: int = 5) -> float:
    """Leave-one-out kNN error of the predicted labels in the 2D layout.

    Majority vote over the k nearest other points (Euclidean); distance
    ties break to the lower index, vote ties to the nearest neighbor whose
    label is among the tied classes.
    """
    coords = np.asarray(coords, dtype=np.float64)
    labels = np.asarray(predicted_labels, dtype=np.int64)
    n = coords.shape[0]
    if n <= k:
        raise ValidationError(f"need more than k={k} points, got {n}")
    if labels.shape != (n,):
        raise ValidationError("one label per point required")
    n_classes = int(labels.max()) + 1
    order = _neighbor_order(coords)
    wrong = 0
    for i in range(n):
        nbr_labels = labels[order[i, :k]]
        votes = np.bincount(nbr_labels, minlength=n_classes)
        top = votes.max()
        tied = np.nonzero(votes == top)[0]
        if len(tied) == 1:
            vote = int(tied[0])
        else:
            tied_set = set(int(t) for t in tied)
            vote = next(int(l) for l in nbr_labels if int(l) in tied_set)
        if vote != labels[i]:
            wrong += 1
    return wrong / n


def neighborhood_curves(repr_a: np.ndarray, repr_b: np.ndarray) -> NeighborhoodCurves:
    """Shared-neighbor curves between two representations of the same items.

    For every k in [1, N-1], counts how many of each point's k nearest
    neighbors (Euclidean within each representation) coincide, averaged
    over points and normalized by k.
    """
    a = np.atleast_2d(np.asarray(repr_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(repr_b, dtype=np.float64))
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"row-count mismatch: {a.shape[0]} vs {b.shape[0]}")
    n = a.shape[0]
    if n < 3:
        raise ValidationError(f"need at least 3 rows, got {n}")

    order_a = _neighbor_order(a)
    order_b = _neighbor_order(b)
    # rank_b[i, j] = position of point j in i's neighbor order under b
    rank_b = np.empty((n, n), dtype=np.int64)
    rows = np.arange(n)[:, None]
    rank_b[rows, order_b] = np.arange(n - 1)[None, :]

    # neighbor j enters the k-shared count once k exceeds both of its ranks
    shared_counts = np.zeros(n - 1, dtype=np.int64)
    for i in range(n):
        ranks_in_b = rank_b[i, order_a[i]]
        first_k = np.maximum(np.arange(n - 1), ranks_in_b)
        shared_counts += np.bincount(first_k, minlength=n - 1)
    common = np.cumsum(shared_counts).astype(np.float64)

    ks = np.arange(1, n, dtype=np.int64)
    q_nn = common / (n * ks)
    lcmc = q_nn - ks / (n - 1.0)
    k_max = int(ks[np.argmax(lcmc)])
    q_local = float(q_nn[:k_max].mean())
    auc = float(q_nn.mean())
    return NeighborhoodCurves(ks=ks, q_nn=q_nn, lcmc=lcmc, k_max=k_max,
                              q_local=q_local, auc=auc)


def compare_models(named_matrices: list[tuple[str, np.ndarray]]
                   ) -> tuple[dict[tuple[str, str], NeighborhoodCurves], list[dict]]:
    """Pairwise neighborhood curves over several representations.

    All matrices must share N and row order (same underlying items).
    Returns curves per unordered pair plus summary rows
    {pair, q_local, k_max, auc}.
    """
    if len(named_matrices) < 2:
        raise ValidationError("need at least two representations to compare")
    sizes = {name: np.asarray(m).shape[0] for name, m in named_matrices}
    if len(set(sizes.values())) != 1:
        raise ValidationError(f"row misalignment across inputs: {sizes}")
    curves: dict[tuple[str, str], NeighborhoodCurves] = {}
    summary: list[dict] = []
    for (name_a, mat_a), (name_b, mat_b) in itertools.combinations(named_matrices, 2):
        result = neighborhood_curves(mat_a, mat_b)
        curves[(name_a, name_b)] = result
        summary.append({"pair": f"{name_a} vs {name_b}", **result.summary()})
    return curves, summary


def confusion_matrix(true_labels, predicted_labels, n_classes: int) -> ConfusionMatrix:
    """C x C counts, rows = true class, columns = predicted class."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValidationError(f"label length mismatch: {t.shape} vs {p.shape}")
    for name, arr in (("true", t), ("predicted", p)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValidationError(f"{name} label out of range [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts=counts, class_names=tuple(str(c) for c in range(n_classes)))


def knn_loo_predictions(points: np.ndarray, labels: np.ndarray, k: int = 5) -> np.ndarray:
    """Leave-one-out neighbor-vote predictions over a labeled point set.

    Same vote rules as q_knn_error; used for confusion analyses where the
    classifier under inspection is a kNN over the data itself.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = points.shape[0]
    if n <= k:
        raise ValidationError(f"need more than k={k} points, got {n}")
    n_classes = int(labels.max()) + 1
    order = _neighbor_order(points)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        nbr_labels = labels[order[i, :k]]
        votes = np.bincount(nbr_labels, minlength=n_classes)
        top = votes.max()
        tied = np.nonzero(votes == top)[0]
        if len(tied) == 1:
            out[i] = tied[0]
        else:
            tied_set = set(int(t) for t in tied)
            out[i] = next(int(l) for l in nbr_labels if int(l) in tied_set)
    return out


def write_curves_csv(curves: NeighborhoodCurves, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "q_nn", "lcmc"])
        for k, q, l in zip(curves.ks, curves.q_nn, curves.lcmc):
            writer.writerow([int(k), repr(float(q)), repr(float(l))])


def write_summary_json(rows: list[dict], path: str | os.PathLike,
                       provenance: dict | None = None) -> None:
    payload = {"pairs": rows}
    if provenance is not None:
        payload["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
