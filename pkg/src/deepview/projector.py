"""From-scratch UMAP over a precomputed distance matrix.

The matrix is already fully materialized, so the k-nearest-neighbor graph
is exact (full sort per row).  Membership strengths use the standard
smooth-kNN calibration (binary search for a per-point bandwidth hitting a
log2(k) mass target) and the probabilistic t-conorm for symmetrization.
Layout is single-threaded negative-sampling SGD on the fuzzy cross
entropy; with a fixed seed the whole pipeline is a pure function of
(distance matrix, config).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
from scipy.optimize import curve_fit

from .errors import ValidationError
from .metric import DistanceMatrix

log = logging.getLogger(__name__)

SMOOTH_K_TOLERANCE = 1e-5
SMOOTH_K_MAX_ITER = 64
SPECTRAL_TOL = 1e-6
SPECTRAL_MAX_ITER = 1000
INIT_RANGE = 10.0


@dataclass(frozen=True)
class UmapConfig:
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_epochs: int = 500
    negative_samples: int = 5
    learning_rate: float = 1.0
    seed: int = 0
    init: str = "spectral"

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ValidationError(f"n_neighbors must be >= 2, got {self.n_neighbors}")
        if self.n_epochs < 1:
            raise ValidationError(f"n_epochs must be >= 1, got {self.n_epochs}")
        if self.negative_samples < 0:
            raise ValidationError("negative_samples must be >= 0")
        if self.init not in ("spectral", "random"):
            raise ValidationError(f"unknown init {self.init!r}")

    def to_dict(self) -> dict:
        return {
            "n_neighbors": self.n_neighbors,
            "min_dist": self.min_dist,
            "n_epochs": self.n_epochs,
            "negative_samples": self.negative_samples,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
            "init": self.init,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "UmapConfig":
        defaults = cls()
        return cls(
            n_neighbors=int(obj.get("n_neighbors", defaults.n_neighbors)),
            min_dist=float(obj.get("min_dist", defaults.min_dist)),
            n_epochs=int(obj.get("n_epochs", defaults.n_epochs)),
            negative_samples=int(obj.get("negative_samples", defaults.negative_samples)),
            learning_rate=float(obj.get("learning_rate", defaults.learning_rate)),
            seed=int(obj.get("seed", defaults.seed)),
            init=str(obj.get("init", defaults.init)),
        )


@dataclass
class FuzzyGraph:
    """Symmetrized fuzzy neighborhood graph in COO form (both edge directions)."""

    n_vertices: int
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray

    def edges(self):
        for i, j, w in zip(self.heads, self.tails, self.weights):
            yield int(i), int(j), float(w)


@dataclass
class Projection:
    coords: np.ndarray
    config: UmapConfig
    source_lambda: float = float("nan")

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if not np.isfinite(c).all():
            raise ValidationError("projection contains non-finite coordinates")
        self.coords = c


def knn_from_matrix(dm: DistanceMatrix | np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact k smallest off-diagonal entries per row; ties break to lower index."""
    values = dm.values if isinstance(dm, DistanceMatrix) else np.asarray(dm, dtype=np.float64)
    n = values.shape[0]
    if k >= n:
        raise ValidationError(f"k={k} must be smaller than N={n}")
    work = values.copy()
    np.fill_diagonal(work, np.inf)
    indices = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        order = np.argsort(work[i], kind="stable")[:k]
        indices[i] = order
        dists[i] = work[i, order]
    return indices, dists


def smooth_knn_calibration(dists: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (sigma, rho) so that sum_j exp(-max(0, d_ij - rho_i)/sigma_i)
    hits log2(k) within 1e-5 (binary search, at most 64 iterations)."""
    n = dists.shape[0]
    target = np.log2(k)
    rho = dists[:, 0].copy()
    sigma = np.empty(n, dtype=np.float64)
    for i in range(n):
        lo, hi, mid = 0.0, np.inf, 1.0
        shifted = np.maximum(dists[i] - rho[i], 0.0)
        for _ in range(SMOOTH_K_MAX_ITER):
            psum = float(np.exp(-shifted / mid).sum())
            if abs(psum - target) < SMOOTH_K_TOLERANCE:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        sigma[i] = mid
    return sigma, rho


def build_fuzzy_graph(neighbors: tuple[np.ndarray, np.ndarray], k: int) -> FuzzyGraph:
    """Membership strengths + probabilistic t-conorm symmetrization."""
    indices, dists = neighbors
    n = indices.shape[0]
    sigma, rho = smooth_knn_calibration(dists, k)
    memberships = np.exp(-np.maximum(dists - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(n, dtype=np.int64), indices.shape[1])
    cols = indices.reshape(-1)
    w = scipy.sparse.coo_matrix((memberships.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()
    transpose = w.T.tocsr()
    sym = (w + transpose - w.multiply(transpose)).tocoo()
    keep = sym.data > 0.0
    return FuzzyGraph(
        n_vertices=n,
        heads=sym.row[keep].astype(np.int64),
        tails=sym.col[keep].astype(np.int64),
        weights=sym.data[keep].astype(np.float64),
        rho=rho,
        sigma=sigma,
    )


def find_ab_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Least-squares fit of 1/(1 + a x^(2b)) to the offset exponential target."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.zeros(xv.shape)
    yv[xv < min_dist] = 1.0
    yv[xv >= min_dist] = np.exp(-(xv[xv >= min_dist] - min_dist) / spread)
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


def _dense_adjacency(graph: FuzzyGraph) -> np.ndarray:
    adj = np.zeros((graph.n_vertices, graph.n_vertices), dtype=np.float64)
    adj[graph.heads, graph.tails] = graph.weights
    return adj


def _component_fallback(graph: FuzzyGraph, labels: np.ndarray, n_components: int,
                        rng: np.random.Generator) -> np.ndarray:
    coords = np.empty((graph.n_vertices, 2), dtype=np.float64)
    angles = 2.0 * np.pi * np.arange(n_components) / n_components
    centers = INIT_RANGE * 0.8 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    noise = rng.uniform(-1.0, 1.0, size=(graph.n_vertices, 2))
    for comp in range(n_components):
        mask = labels == comp
        coords[mask] = centers[comp] + noise[mask]
    return coords


def _power_iteration_eigvecs(m: np.ndarray, count: int, rng: np.random.Generator
                             ) -> np.ndarray | None:
    """Leading ``count`` eigenvectors of the PSD matrix ``m`` via seeded power
    iteration with deflation; None when any fails to converge."""
    n = m.shape[0]
    vecs = np.zeros((count, n), dtype=np.float64)
    vals = np.zeros(count, dtype=np.float64)
    for comp in range(count):
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        converged = False
        for _ in range(SPECTRAL_MAX_ITER):
            w = m @ v
            for prev in range(comp):
                w -= vals[prev] * (vecs[prev] @ v) * vecs[prev]
            for prev in range(comp):  # re-orthogonalize against converged vectors
                w -= (vecs[prev] @ w) * vecs[prev]
            norm = np.linalg.norm(w)
            if norm == 0.0:
                break
            w /= norm
            if w @ v < 0:
                w = -w
            if np.abs(w - v).max() < SPECTRAL_TOL:
                v = w
                converged = True
                break
            v = w
        if not converged:
            return None
        vals[comp] = v @ (m @ v)
        vecs[comp] = v
    return vecs


def _scale_axes(coords: np.ndarray) -> np.ndarray:
    out = np.empty_like(coords)
    for axis in range(coords.shape[1]):
        col = coords[:, axis]
        span = col.max() - col.min()
        if span == 0.0:
            out[:, axis] = 0.0
        else:
            out[:, axis] = -INIT_RANGE + 2.0 * INIT_RANGE * (col - col.min()) / span
    return out


def spectral_init(graph: FuzzyGraph, seed: int = 0) -> np.ndarray:
    """First two non-trivial eigenvectors of the symmetric normalized
    Laplacian, scaled to [-10, 10] per axis.

    Disconnected graphs fall back to seeded random placement per component
    around spread-out centroids; non-convergence falls back to seeded
    random coordinates (a notice is logged either way).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    adj = _dense_adjacency(graph)
    sparse_adj = scipy.sparse.csr_matrix(adj)
    n_components, labels = scipy.sparse.csgraph.connected_components(sparse_adj, directed=False)
    if n_components > 1:
        log.info("graph has %d components; using per-component random init", n_components)
        return _component_fallback(graph, labels, n_components, rng)

    degree = adj.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(degree, 1e-12))
    lap_sym = np.eye(graph.n_vertices) - inv_sqrt[:, None] * adj * inv_sqrt[None, :]
    # eigenvalues of lap_sym lie in [0, 2]; shift so power iteration finds
    # the smallest ones as the leading eigenpairs of a PSD matrix
    shifted = 2.0 * np.eye(graph.n_vertices) - lap_sym
    vecs = _power_iteration_eigvecs(shifted, 3, rng)
    if vecs is None:
        log.info("power iteration did not converge; using random init")
        return rng.uniform(-INIT_RANGE, INIT_RANGE, size=(graph.n_vertices, 2))
    return _scale_axes(np.stack([vecs[1], vecs[2]], axis=1))


@numba.njit(cache=True)
def _tau_rand_int(state):
    state[0] = (((state[0] & 4294967294) << 12) & 0xFFFFFFFF) ^ (
        ((((state[0] << 13) & 0xFFFFFFFF) ^ state[0]) >> 19)
    )
    state[1] = (((state[1] & 4294967288) << 4) & 0xFFFFFFFF) ^ (
        ((((state[1] << 2) & 0xFFFFFFFF) ^ state[1]) >> 25)
    )
    state[2] = (((state[2] & 4294967280) << 17) & 0xFFFFFFFF) ^ (
        ((((state[2] << 3) & 0xFFFFFFFF) ^ state[2]) >> 11)
    )
    return state[0] ^ state[1] ^ state[2]


@numba.njit(cache=True)
def _clip(val):
    if val > 4.0:
        return 4.0
    if val < -4.0:
        return -4.0
    return val


@numba.njit(cache=True)
def _sgd_epochs(embedding, head, tail, n_epochs, epochs_per_sample, a, b,
                rng_state, initial_alpha, negative_sample_rate):
    dim = embedding.shape[1]
    n_vertices = embedding.shape[0]
    do_negatives = negative_sample_rate > 0.0
    if do_negatives:
        epochs_per_negative_sample = epochs_per_sample / negative_sample_rate
    else:
        epochs_per_negative_sample = epochs_per_sample.copy()
    epoch_of_next_negative_sample = epochs_per_negative_sample.copy()
    epoch_of_next_sample = epochs_per_sample.copy()

    for n in range(n_epochs):
        alpha = initial_alpha * (1.0 - n / n_epochs)
        for i in range(epochs_per_sample.shape[0]):
            if epoch_of_next_sample[i] > n:
                continue
            j = head[i]
            k = tail[i]

            dist_squared = 0.0
            for d in range(dim):
                diff = embedding[j, d] - embedding[k, d]
                dist_squared += diff * diff
            if dist_squared > 0.0:
                grad_coeff = -2.0 * a * b * dist_squared ** (b - 1.0)
                grad_coeff /= a * dist_squared ** b + 1.0
            else:
                grad_coeff = 0.0
            for d in range(dim):
                grad_d = _clip(grad_coeff * (embedding[j, d] - embedding[k, d]))
                embedding[j, d] += grad_d * alpha
                embedding[k, d] -= grad_d * alpha

            epoch_of_next_sample[i] += epochs_per_sample[i]

            if not do_negatives:
                continue
            n_neg = int((n - epoch_of_next_negative_sample[i]) / epochs_per_negative_sample[i])
            for _ in range(n_neg):
                k2 = _tau_rand_int(rng_state) % n_vertices
                if k2 == j:
                    continue
                dist_squared = 0.0
                for d in range(dim):
                    diff = embedding[j, d] - embedding[k2, d]
                    dist_squared += diff * diff
                if dist_squared > 0.0:
                    grad_coeff = 2.0 * b
                    grad_coeff /= (0.001 + dist_squared) * (a * dist_squared ** b + 1.0)
                else:
                    grad_coeff = 0.0
                for d in range(dim):
                    if grad_coeff > 0.0:
                        grad_d = _clip(grad_coeff * (embedding[j, d] - embedding[k2, d]))
                    else:
                        grad_d = 4.0
                    embedding[j, d] += grad_d * alpha
            epoch_of_next_negative_sample[i] += n_neg * epochs_per_negative_sample[i]


def optimize_layout(graph: FuzzyGraph, cfg: UmapConfig,
                    source_lambda: float = float("nan")) -> Projection:
    """Negative-sampling SGD on the fuzzy cross entropy; deterministic in
    (graph, cfg).  Gradient components are clipped to [-4, 4]."""
    if graph.weights.size == 0:
        raise ValidationError("fuzzy graph has no edges")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    if cfg.init == "spectral":
        coords = spectral_init(graph, seed=cfg.seed)
    else:
        coords = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(graph.n_vertices, 2))
    coords = np.ascontiguousarray(coords, dtype=np.float64)

    a, b = find_ab_params(cfg.min_dist)
    epochs_per_sample = graph.weights.max() / graph.weights
    rng_state = np.random.Generator(np.random.PCG64(cfg.seed)).integers(
        1, 2**31 - 1, size=3).astype(np.int64)
    _sgd_epochs(coords, graph.heads, graph.tails, cfg.n_epochs,
                epochs_per_sample.astype(np.float64), a, b, rng_state,
                float(cfg.learning_rate), float(cfg.negative_samples))
    return Projection(coords=coords, config=cfg, source_lambda=source_lambda)


def project(dm: DistanceMatrix, cfg: UmapConfig) -> Projection:
    """Full projector pipeline: exact kNN graph, fuzzy graph, layout."""
    k = min(cfg.n_neighbors, dm.n - 1)
    neighbors = knn_from_matrix(dm, k)
    graph = build_fuzzy_graph(neighbors, k)
    return optimize_layout(graph, cfg, source_lambda=dm.lam)
