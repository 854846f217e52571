"""Probabilistic classifiers over embedding vectors.

Three interchangeable implementations sit behind the same small surface:

* FeedForwardClassifier -- dense linear stack loaded from a JSON weights
  file (identity/relu activations, softmax only as the terminal layer).
* KnnClassifier -- neighbor-vote fractions over a reference set.
* RemoteClassifier -- client for the HTTP prediction protocol
  (``GET /v1/info``, ``POST /v1/predict``).

Every implementation is immutable after construction and callable from
multiple threads.  ``predict_batch`` computes each row independently, so a
row's output is bitwise identical no matter how the batch is split.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass

import httpx
import numpy as np

from .bundle import DatasetBundle
from .errors import TransportError, ValidationError

_ACTIVATIONS = ("identity", "relu", "softmax")
PROB_SUM_TOL = 1e-5


@dataclass(frozen=True)
class ClassifierInfo:
    input_dim: int
    n_classes: int
    class_names: tuple[str, ...]

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValidationError(f"need at least 2 classes, got {self.n_classes}")
        if len(self.class_names) != self.n_classes:
            raise ValidationError(
                f"{len(self.class_names)} class names for {self.n_classes} classes"
            )


@dataclass(frozen=True)
class ProbDist:
    """A probability vector over classes; renormalized on construction."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("probability vector must be 1-D and non-empty")
        if (p < 0).any():
            raise ValidationError("probability components must be >= 0")
        total = p.sum()
        if total <= 0:
            raise ValidationError("probability components must not all be zero")
        object.__setattr__(self, "probs", p / total)

    def __len__(self) -> int:
        return self.probs.size


def _validate_prob_rows(rows: np.ndarray) -> np.ndarray:
    if (rows < 0).any():
        raise ValidationError("classifier produced a negative probability")
    sums = rows.sum(axis=1)
    if (sums <= 0).any():
        raise ValidationError("classifier produced an all-zero probability row")
    return rows / sums[:, None]


def _check_inputs(inputs: np.ndarray, input_dim: int) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"inputs must be a 2-D matrix, got shape {x.shape}")
    if x.shape[1] != input_dim:
        raise ValidationError(f"inputs have width {x.shape[1]}, classifier expects {input_dim}")
    if not np.isfinite(x).all():
        raise ValidationError("inputs contain non-finite values")
    return x


class Classifier:
    """Shared behaviour for all classifier implementations."""

    info: ClassifierInfo

    def predict_batch(self, inputs) -> np.ndarray:
        """Return a B x C matrix of probability rows for a B x D input matrix."""
        x = _check_inputs(inputs, self.info.input_dim)
        out = np.empty((x.shape[0], self.info.n_classes), dtype=np.float64)
        for i in range(x.shape[0]):
            out[i] = self._predict_row(x[i])
        return _validate_prob_rows(out)

    def _predict_row(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_labels(self, inputs) -> np.ndarray:
        """Argmax class per row; probability ties resolve to the lower class index."""
        return np.argmax(self.predict_batch(inputs), axis=1)

    def identity(self) -> str:
        """Stable hash of the classifier's parameters, for provenance records."""
        raise NotImplementedError


def predict_batch(model: Classifier, inputs) -> np.ndarray:
    """Module-level convenience mirroring ``model.predict_batch``."""
    return model.predict_batch(inputs)


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


class FeedForwardClassifier(Classifier):
    """Dense linear stack: z = W x + b per layer, identity/relu/softmax."""

    def __init__(self, input_dim: int, layers: list[tuple[np.ndarray, np.ndarray, str]],
                 class_names: list[str]):
        if not layers:
            raise ValidationError("network needs at least one layer")
        width = input_dim
        checked = []
        for idx, (weights, bias, activation) in enumerate(layers):
            w = np.asarray(weights, dtype=np.float64)
            b = np.asarray(bias, dtype=np.float64)
            if w.ndim != 2:
                raise ValidationError(f"layer {idx}: weights must be 2-D (out x in)")
            if w.shape[1] != width:
                raise ValidationError(
                    f"layer {idx}: input width {w.shape[1]} does not match "
                    f"previous layer output {width}"
                )
            if b.shape != (w.shape[0],):
                raise ValidationError(f"layer {idx}: bias length {b.shape} vs {w.shape[0]} outputs")
            if activation not in _ACTIVATIONS:
                raise ValidationError(f"layer {idx}: unknown activation {activation!r}")
            if activation == "softmax" and idx != len(layers) - 1:
                raise ValidationError(f"layer {idx}: softmax is only allowed on the final layer")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValidationError(f"layer {idx}: non-finite parameter")
            width = w.shape[0]
            checked.append((w, b, activation))
        self.layers = checked
        self.info = ClassifierInfo(input_dim, width, tuple(class_names))

    def _predict_row(self, x: np.ndarray) -> np.ndarray:
        h = x
        for w, b, activation in self.layers:
            h = w @ h + b
            if activation == "relu":
                h = np.maximum(h, 0.0)
            elif activation == "softmax":
                h = _softmax(h)
        return h

    def to_spec(self) -> dict:
        return {
            "input_dim": self.info.input_dim,
            "layers": [
                {"weights": w.tolist(), "bias": b.tolist(), "activation": act}
                for w, b, act in self.layers
            ],
            "class_names": list(self.info.class_names),
        }

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_spec(), fh)
            fh.write("\n")

    @classmethod
    def from_spec(cls, spec: dict) -> "FeedForwardClassifier":
        for key in ("input_dim", "layers", "class_names"):
            if key not in spec:
                raise ValidationError(f"weights file is missing key '{key}'")
        layers = []
        for idx, layer in enumerate(spec["layers"]):
            for key in ("weights", "bias", "activation"):
                if key not in layer:
                    raise ValidationError(f"layer {idx} is missing key '{key}'")
            layers.append((layer["weights"], layer["bias"], layer["activation"]))
        return cls(int(spec["input_dim"]), layers, list(spec["class_names"]))

    def identity(self) -> str:
        blob = json.dumps(self.to_spec(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_builtin(weights_path: str | os.PathLike) -> FeedForwardClassifier:
    """Load a feed-forward network from its JSON weights file."""
    with open(weights_path, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"weights file {weights_path} is not valid JSON: {exc}") from exc
    return FeedForwardClassifier.from_spec(spec)


class KnnClassifier(Classifier):
    """Neighbor-vote classifier over a fixed reference set.

    Output components are multiples of 1/k.  Distance ties break toward the
    lower reference row index; argmax ties in predict_labels resolve to the
    nearest neighbor whose label is among the tied classes.
    """

    def __init__(self, reference_points: np.ndarray, reference_labels: np.ndarray,
                 k: int, class_names: list[str]):
        refs = np.asarray(reference_points, dtype=np.float64)
        labels = np.asarray(reference_labels, dtype=np.int64)
        if refs.ndim != 2:
            raise ValidationError("reference points must form a 2-D matrix")
        if labels.shape != (refs.shape[0],):
            raise ValidationError("one label per reference point required")
        if k < 1 or k > refs.shape[0]:
            raise ValidationError(f"k={k} must be in [1, {refs.shape[0]}]")
        n_classes = len(class_names)
        if labels.min(initial=0) < 0 or labels.max(initial=0) >= n_classes:
            raise ValidationError(f"reference labels must lie in [0, {n_classes})")
        self.reference_points = refs
        self.reference_labels = labels
        self.k = int(k)
        self.info = ClassifierInfo(refs.shape[1], n_classes, tuple(class_names))

    def _neighbors_row(self, x: np.ndarray) -> np.ndarray:
        diff = self.reference_points - x
        d2 = np.einsum("ij,ij->i", diff, diff)
        order = np.argsort(d2, kind="stable")  # ties -> lower row index
        return order[: self.k]

    def _predict_row(self, x: np.ndarray) -> np.ndarray:
        nbrs = self._neighbors_row(x)
        votes = np.bincount(self.reference_labels[nbrs], minlength=self.info.n_classes)
        return votes / self.k

    def predict_labels(self, inputs) -> np.ndarray:
        x = _check_inputs(inputs, self.info.input_dim)
        out = np.empty(x.shape[0], dtype=np.int64)
        for i in range(x.shape[0]):
            nbrs = self._neighbors_row(x[i])
            nbr_labels = self.reference_labels[nbrs]
            votes = np.bincount(nbr_labels, minlength=self.info.n_classes)
            top = votes.max()
            tied = np.nonzero(votes == top)[0]
            if len(tied) == 1:
                out[i] = tied[0]
            else:
                tied_set = set(int(t) for t in tied)
                out[i] = next(int(l) for l in nbr_labels if int(l) in tied_set)
        return out

    def identity(self) -> str:
        h = hashlib.sha256()
        h.update(self.reference_points.astype("<f8").tobytes())
        h.update(self.reference_labels.astype("<i8").tobytes())
        h.update(str(self.k).encode())
        h.update(",".join(self.info.class_names).encode())
        return h.hexdigest()


def fit_knn(bundle: DatasetBundle, label_source: str = "true_label", k: int = 5) -> KnnClassifier:
    """Build a neighbor-vote classifier over the bundle's own embeddings.

    ``label_source`` selects which record field supplies the classes:
    ``true_label`` uses the integer labels directly; ``dataset_tag`` maps
    the distinct tags to class indices in sorted order.
    """
    if label_source not in ("true_label", "dataset_tag"):
        raise ValidationError(f"unknown label source {label_source!r}")
    if label_source == "true_label":
        raw = [rec.label for rec in bundle.records]
        if any(v is None for v in raw):
            row = next(i for i, v in enumerate(raw) if v is None)
            raise ValidationError(f"record at row {row} has no label")
        labels = np.asarray(raw, dtype=np.int64)
        class_names = [str(c) for c in range(int(labels.max()) + 1)]
    else:
        tags = [rec.dataset_tag for rec in bundle.records]
        if any(t is None for t in tags):
            row = next(i for i, t in enumerate(tags) if t is None)
            raise ValidationError(f"record at row {row} has no dataset tag")
        class_names = sorted(set(tags))
        index = {tag: i for i, tag in enumerate(class_names)}
        labels = np.asarray([index[t] for t in tags], dtype=np.int64)
    if len(class_names) < 2:
        raise ValidationError("need at least 2 distinct classes to fit a kNN classifier")
    if k > bundle.size:
        raise ValidationError(f"k={k} exceeds the {bundle.size} reference points")
    return KnnClassifier(bundle.embeddings.astype(np.float64), labels, k, class_names)


class RemoteClassifier(Classifier):
    """Client for the JSON-over-HTTP prediction protocol.

    Transient transport failures are retried up to ``retries`` times, then
    surfaced as TransportError carrying the endpoint and batch index --
    a half-built distance matrix is worthless, so builds fail fast.
    """

    def __init__(self, base_url: str, retries: int = 3, timeout: float = 30.0,
                 client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self._client = client or httpx.Client(timeout=timeout)
        info = self._request("GET", "/v1/info", None, batch_index=None)
        try:
            self.info = ClassifierInfo(
                int(info["input_dim"]), int(info["n_classes"]), tuple(info["class_names"])
            )
        except (KeyError, TypeError) as exc:
            raise TransportError(f"malformed /v1/info response: {exc}", self.base_url) from exc

    def _request(self, method: str, path: str, payload, batch_index: int | None):
        url = self.base_url + path
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.request(method, url, json=payload)
                if resp.status_code // 100 != 2:
                    raise TransportError(
                        f"{method} {path} returned HTTP {resp.status_code}",
                        self.base_url, batch_index,
                    )
                return resp.json()
            except TransportError:
                raise  # non-2xx is not retriable
            except Exception as exc:  # connection errors, bad JSON
                last = exc
                if attempt < self.retries:
                    time.sleep(0.05 * (attempt + 1))
        raise TransportError(f"{method} {path} failed after {self.retries + 1} attempts: {last}",
                             self.base_url, batch_index)

    def predict_batch(self, inputs) -> np.ndarray:
        x = _check_inputs(inputs, self.info.input_dim)
        if x.shape[0] == 0:
            return np.empty((0, self.info.n_classes), dtype=np.float64)
        body = {"inputs": x.tolist()}
        data = self._request("POST", "/v1/predict", body, batch_index=0)
        try:
            rows = np.asarray(data["probabilities"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise TransportError(f"malformed /v1/predict response: {exc}", self.base_url, 0) from exc
        if rows.shape != (x.shape[0], self.info.n_classes):
            raise TransportError(
                f"/v1/predict returned shape {rows.shape}, expected {(x.shape[0], self.info.n_classes)}",
                self.base_url, 0,
            )
        return _validate_prob_rows(rows)

    def identity(self) -> str:
        h = hashlib.sha256()
        h.update(self.base_url.encode())
        h.update(json.dumps(
            [self.info.input_dim, self.info.n_classes, list(self.info.class_names)]
        ).encode())
        return h.hexdigest()
