"""Jensen-Shannon metric and the discriminative arc distance.

The distance between two points x, y mixes two ingredients along the
straight line p_i = (1 - i/n) x + (i/n) y, i = 0..n:

    d(x, y) = sum_{i=1..n} (1 - lam) * d_JS(f(p_{i-1}), f(p_i))
                          + lam * d_base(p_{i-1}, p_i)

where f is the classifier, d_JS the Jensen-Shannon metric with base-2
logarithms (so it lives in [0, 1], comparable to cosine distance in
[0, 2]), and d_base an unsupervised metric (cosine by default).  lam = 1
is purely unsupervised, lam = 0 purely discriminative.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bundle import DatasetBundle
from .classifiers import Classifier
from .errors import MetricError, ValidationError

BASE_METRICS = ("cosine", "euclidean")


@dataclass(frozen=True)
class DiscriminativeMetricConfig:
    """Knobs of the arc distance.  Log base is fixed at 2.

    ``normalize_components`` divides each component sum (JS, base metric)
    by its mean over all pairs before mixing; off by default so the
    formula above is applied literally.
    """

    lam: float = 0.8
    n_segments: int = 5
    base_metric: str = "cosine"
    normalize_components: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"lambda out of range [0, 1]: {self.lam}")
        if self.n_segments < 1:
            raise ValidationError(f"n_segments must be >= 1, got {self.n_segments}")
        if self.base_metric not in BASE_METRICS:
            raise ValidationError(f"unknown base metric {self.base_metric!r}")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "n_segments": self.n_segments,
            "base_metric": self.base_metric,
            "normalize_components": self.normalize_components,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DiscriminativeMetricConfig":
        return cls(
            lam=float(obj.get("lambda", 0.8)),
            n_segments=int(obj.get("n_segments", 5)),
            base_metric=str(obj.get("base_metric", "cosine")),
            normalize_components=bool(obj.get("normalize_components", False)),
        )


@dataclass
class DistanceMatrix:
    """Symmetric pairwise arc distances plus the provenance that built them."""

    values: np.ndarray
    lam: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"distance matrix must be square, got {v.shape}")
        if not np.isfinite(v).all():
            raise ValidationError("distance matrix contains non-finite entries")
        if (v < 0).any():
            raise ValidationError("distance matrix contains negative entries")
        if np.abs(np.diag(v)).max(initial=0.0) != 0.0:
            raise ValidationError("distance matrix diagonal must be zero")
        if np.abs(v - v.T).max(initial=0.0) > 1e-9:
            raise ValidationError("distance matrix is not symmetric within 1e-9")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]


def js_divergence_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Base-2 Jensen-Shannon divergence per row; 0*log(0/.) treated as 0."""
    m = 0.5 * (p + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        term_p = np.where(p > 0, p * (np.log2(np.where(p > 0, p, 1.0)) -
                                      np.log2(np.where(m > 0, m, 1.0))), 0.0)
        term_q = np.where(q > 0, q * (np.log2(np.where(q > 0, q, 1.0)) -
                                      np.log2(np.where(m > 0, m, 1.0))), 0.0)
    div = 0.5 * (term_p.sum(axis=-1) + term_q.sum(axis=-1))
    return np.clip(div, 0.0, 1.0)


def js_distance_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Jensen-Shannon metric per row: sqrt of the divergence; values in [0, 1]."""
    return np.sqrt(js_divergence_rows(p, q))


def js_distance(p, q) -> float:
    """Jensen-Shannon metric between two probability vectors."""
    p = np.asarray(getattr(p, "probs", p), dtype=np.float64)
    q = np.asarray(getattr(q, "probs", q), dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError(f"distribution length mismatch: {p.shape} vs {q.shape}")
    return float(js_distance_rows(p, q))


def base_distance(x, y, kind: str = "cosine") -> float:
    """Unsupervised segment metric: euclidean norm or cosine distance in [0, 2]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if kind == "euclidean":
        return float(np.linalg.norm(x - y))
    if kind == "cosine":
        nx = np.linalg.norm(x)
        ny = np.linalg.norm(y)
        if nx == 0.0 or ny == 0.0:
            raise MetricError("cosine distance is undefined for a zero vector")
        return float(np.clip(1.0 - (x @ y) / (nx * ny), 0.0, 2.0))
    raise ValidationError(f"unknown base metric {kind!r}")


def segment_points(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """The n+1 equidistant points from x to y, endpoints included."""
    t = np.arange(n + 1, dtype=np.float64) / n
    return (1.0 - t)[:, None] * x[None, :] + t[:, None] * y[None, :]


def _cosine_segments(points: np.ndarray, pair_label: str) -> np.ndarray:
    """Consecutive cosine distances along ``points`` (S+1, D) -> (S,)."""
    norms = np.sqrt(np.einsum("...i,...i->...", points, points))
    if (norms == 0.0).any():
        seg = int(np.nonzero(norms == 0.0)[-1][0])
        raise MetricError(
            f"cosine distance undefined: interpolation point {seg} of pair {pair_label} "
            "is the zero vector"
        )
    dots = np.einsum("...i,...i->...", points[..., :-1, :], points[..., 1:, :])
    return np.clip(1.0 - dots / (norms[..., :-1] * norms[..., 1:]), 0.0, 2.0)


def _euclidean_segments(points: np.ndarray) -> np.ndarray:
    diffs = points[..., 1:, :] - points[..., :-1, :]
    return np.sqrt(np.einsum("...i,...i->...", diffs, diffs))


def discriminative_distance(x, y, f: Classifier, cfg: DiscriminativeMetricConfig) -> float:
    """Arc distance between two data-space vectors for classifier f.

    Symmetric in (x, y) and zero when x == y.  Components whose mixing
    weight is zero are skipped unless ``normalize_components`` is on.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError(f"vector shape mismatch: {x.shape} vs {y.shape}")
    points = segment_points(x, y, cfg.n_segments)
    js_sum = 0.0
    ds_sum = 0.0
    if cfg.lam < 1.0 or cfg.normalize_components:
        probs = f.predict_batch(points)
        js_sum = float(js_distance_rows(probs[:-1], probs[1:]).sum())
    if cfg.lam > 0.0 or cfg.normalize_components:
        if cfg.base_metric == "cosine":
            ds_sum = float(_cosine_segments(points, "(x, y)").sum())
        else:
            ds_sum = float(_euclidean_segments(points).sum())
    return (1.0 - cfg.lam) * js_sum + cfg.lam * ds_sum


def _pairs_upper(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu = np.triu_indices(n, k=1)
    return iu[0].astype(np.int64), iu[1].astype(np.int64)


def _predict_chunked(f: Classifier, rows: np.ndarray, batch_size: int) -> np.ndarray:
    out = np.empty((rows.shape[0], f.info.n_classes), dtype=np.float64)
    for start in range(0, rows.shape[0], batch_size):
        stop = min(start + batch_size, rows.shape[0])
        out[start:stop] = f.predict_batch(rows[start:stop])
    return out


def build_distance_matrix(
    bundle: DatasetBundle | np.ndarray,
    f: Classifier,
    cfg: DiscriminativeMetricConfig,
    batch_size: int = 64,
    threads: int = 1,
) -> DistanceMatrix:
    """All-pairs arc distances for a bundle (or raw N x D matrix).

    Endpoint predictions f(x_i) are computed once and reused across every
    pair; interior interpolation points go to the classifier in batches of
    at most ``batch_size``.  Each pair's value is computed independently of
    how pairs are chunked or scheduled, so the result is identical for any
    batch size or thread count.
    """
    x = bundle.embeddings if isinstance(bundle, DatasetBundle) else np.asarray(bundle)
    x = x.astype(np.float64)
    n = x.shape[0]
    if n < 2:
        raise ValidationError(f"need at least 2 points, got {n}")
    if batch_size < 1:
        raise ValidationError(f"batch_size must be >= 1, got {batch_size}")
    rows_i, rows_j = _pairs_upper(n)
    n_pairs = rows_i.size
    n_seg = cfg.n_segments

    need_js = cfg.lam < 1.0 or cfg.normalize_components
    need_ds = cfg.lam > 0.0 or cfg.normalize_components

    endpoint_probs = _predict_chunked(f, x, batch_size) if need_js else None

    js_sums = np.zeros(n_pairs, dtype=np.float64)
    ds_sums = np.zeros(n_pairs, dtype=np.float64)

    def fill(start: int, stop: int) -> None:
        xi = x[rows_i[start:stop]]
        xj = x[rows_j[start:stop]]
        m = stop - start
        t = np.arange(n_seg + 1, dtype=np.float64) / n_seg
        # (m, n_seg+1, D) interpolation points, endpoints included
        points = (1.0 - t)[None, :, None] * xi[:, None, :] + t[None, :, None] * xj[:, None, :]
        if need_js:
            interior = points[:, 1:-1, :].reshape(m * (n_seg - 1), -1) if n_seg > 1 else None
            probs = np.empty((m, n_seg + 1, f.info.n_classes), dtype=np.float64)
            probs[:, 0, :] = endpoint_probs[rows_i[start:stop]]
            probs[:, -1, :] = endpoint_probs[rows_j[start:stop]]
            if interior is not None:
                interior_probs = _predict_chunked(f, interior, batch_size)
                probs[:, 1:-1, :] = interior_probs.reshape(m, n_seg - 1, -1)
            js_sums[start:stop] = js_distance_rows(probs[:, :-1, :], probs[:, 1:, :]).sum(axis=1)
        if need_ds:
            if cfg.base_metric == "cosine":
                norms = np.sqrt(np.einsum("msd,msd->ms", points, points))
                zeros = np.argwhere(norms == 0.0)
                if zeros.size:
                    row, seg = zeros[0]
                    raise MetricError(
                        f"cosine distance undefined: interpolation point {seg} of pair "
                        f"({rows_i[start + row]}, {rows_j[start + row]}) is the zero vector"
                    )
                dots = np.einsum("msd,msd->ms", points[:, :-1, :], points[:, 1:, :])
                cosd = np.clip(1.0 - dots / (norms[:, :-1] * norms[:, 1:]), 0.0, 2.0)
                ds_sums[start:stop] = cosd.sum(axis=1)
            else:
                ds_sums[start:stop] = _euclidean_segments(points).sum(axis=1)

    chunk = 512
    spans = [(s, min(s + chunk, n_pairs)) for s in range(0, n_pairs, chunk)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda span: fill(*span), spans))
    else:
        for span in spans:
            fill(*span)

    if cfg.normalize_components:
        js_mean = js_sums.mean()
        ds_mean = ds_sums.mean()
        if js_mean > 0:
            js_sums = js_sums / js_mean
        if ds_mean > 0:
            ds_sums = ds_sums / ds_mean

    flat = (1.0 - cfg.lam) * js_sums + cfg.lam * ds_sums
    values = np.zeros((n, n), dtype=np.float64)
    values[rows_i, rows_j] = flat
    values[rows_j, rows_i] = flat
    provenance = {"config": cfg.to_dict(), "classifier": f.identity()}
    return DistanceMatrix(values=values, lam=cfg.lam, provenance=provenance)


def matrix_cache_key(bundle_hash: str, classifier_hash: str, cfg: DiscriminativeMetricConfig) -> str:
    blob = json.dumps([bundle_hash, classifier_hash, cfg.to_dict()], sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def save_matrix_cache(dm: DistanceMatrix, cache_dir: str | os.PathLike,
                      bundle_hash: str, classifier_hash: str,
                      cfg: DiscriminativeMetricConfig) -> str:
    """Store the upper triangle as little-endian f32 next to a manifest tag."""
    os.makedirs(cache_dir, exist_ok=True)
    key = matrix_cache_key(bundle_hash, classifier_hash, cfg)
    data_name = f"{key}.f32"
    iu = np.triu_indices(dm.n, k=1)
    with open(os.path.join(cache_dir, data_name), "wb") as fh:
        fh.write(dm.values[iu].astype("<f4").tobytes())
    manifest = {
        "n": dm.n,
        "lambda": dm.lam,
        "config": cfg.to_dict(),
        "bundle_hash": bundle_hash,
        "classifier_hash": classifier_hash,
        "data": data_name,
    }
    manifest_path = os.path.join(cache_dir, f"{key}.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def load_matrix_cache(cache_dir: str | os.PathLike, bundle_hash: str,
                      classifier_hash: str, cfg: DiscriminativeMetricConfig) -> DistanceMatrix | None:
    """Return the cached matrix for this key, or None when absent.

    Cached values are f32, so entries round-trip at single precision.
    """
    key = matrix_cache_key(bundle_hash, classifier_hash, cfg)
    manifest_path = os.path.join(cache_dir, f"{key}.json")
    if not os.path.exists(manifest_path):
        return None
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    n = int(manifest["n"])
    with open(os.path.join(cache_dir, manifest["data"]), "rb") as fh:
        tri = np.frombuffer(fh.read(), dtype="<f4").astype(np.float64)
    iu = np.triu_indices(n, k=1)
    if tri.size != iu[0].size:
        raise ValidationError(f"cache file for key {key} has wrong length")
    values = np.zeros((n, n), dtype=np.float64)
    values[iu] = tri
    values[(iu[1], iu[0])] = tri
    return DistanceMatrix(values=values, lam=float(manifest["lambda"]),
                          provenance={"config": manifest["config"],
                                      "classifier": classifier_hash, "cache": key})
