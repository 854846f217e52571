"""RBF inverse projection (2D -> D) and decision-grid sampling.

The inverse map is a Gaussian radial basis function network fitted by
ridge regression on centered targets:

    y_hat(p) = intercept + sum_k w_k * exp(-gamma * ||p - c_k||^2)

with the kernel width from the median heuristic, gamma = 1 / (2 m^2) for
m the median pairwise distance among centers.  A regular grid through the
fitted map plus a classifier yields the rendered decision surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .classifiers import Classifier
from .errors import ValidationError

MAX_CENTERS = 1000


@dataclass
class RbfInverseMap:
    centers: np.ndarray
    gamma: float
    weights: np.ndarray
    intercept: np.ndarray
    ridge: float = 1e-3

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        for name in ("centers", "weights", "intercept"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all():
                raise ValidationError(f"non-finite values in inverse map {name}")
            setattr(self, name, arr)
        if self.weights.shape[0] != self.centers.shape[0]:
            raise ValidationError("one weight row per center required")


@dataclass
class DecisionGrid:
    """Class labels and certainty on a regular grid; row-major, row 0 at y0."""

    x0: float
    y0: float
    dx: float
    dy: float
    width: int
    height: int
    labels: np.ndarray
    certainty: np.ndarray

    def __post_init__(self):
        n_cells = self.width * self.height
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.certainty = np.asarray(self.certainty, dtype=np.float64)
        if self.labels.shape != (n_cells,) or self.certainty.shape != (n_cells,):
            raise ValidationError("grid arrays must have width*height entries")
        if (self.certainty < 0).any() or (self.certainty > 1).any():
            raise ValidationError("certainty must lie in [0, 1]")

    def cell_index(self, x: float, y: float) -> int:
        """Containing cell by floor indexing; outer boundary clamps inward."""
        ix = min(max(int(np.floor((x - self.x0) / self.dx)), 0), self.width - 1)
        iy = min(max(int(np.floor((y - self.y0) / self.dy)), 0), self.height - 1)
        return iy * self.width + ix

    def to_dict(self) -> dict:
        return {
            "x0": self.x0, "y0": self.y0, "dx": self.dx, "dy": self.dy,
            "width": self.width, "height": self.height,
            "labels": self.labels.tolist(),
            "certainty": self.certainty.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DecisionGrid":
        return cls(
            x0=float(obj["x0"]), y0=float(obj["y0"]),
            dx=float(obj["dx"]), dy=float(obj["dy"]),
            width=int(obj["width"]), height=int(obj["height"]),
            labels=np.asarray(obj["labels"], dtype=np.int64),
            certainty=np.asarray(obj["certainty"], dtype=np.float64),
        )


def fit_inverse(coords: np.ndarray, embeddings: np.ndarray, ridge: float = 1e-3,
                seed: int = 0) -> RbfInverseMap:
    """Fit the RBF network mapping 2D coords back to their embeddings.

    Centers are all N points when N <= 1000, otherwise a seeded subset of
    1000.  Weights solve the normal equations (Phi^T Phi + ridge I) W =
    Phi^T Yc per output dimension; ridge = 0 uses a least-squares solve so
    exact interpolation survives the kernel matrix's conditioning.
    """
    coords = np.asarray(coords, dtype=np.float64)
    y = np.asarray(embeddings, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValidationError(f"coords must be N x 2, got {coords.shape}")
    n = coords.shape[0]
    if n < 3:
        raise ValidationError(f"need at least 3 points to fit, got {n}")
    if y.shape[0] != n:
        raise ValidationError("one embedding row per coordinate required")
    if not np.isfinite(coords).all():
        raise ValidationError("coords contain non-finite values")
    if ridge < 0:
        raise ValidationError("ridge must be >= 0")

    if n > MAX_CENTERS:
        rng = np.random.Generator(np.random.PCG64(seed))
        pool = np.arange(n, dtype=np.int64)
        for i in range(MAX_CENTERS):
            j = i + int(rng.integers(0, n - i))
            pool[i], pool[j] = pool[j], pool[i]
        centers = coords[np.sort(pool[:MAX_CENTERS])]
    else:
        centers = coords

    m = float(np.median(pdist(centers)))
    if m == 0.0:
        raise ValidationError("degenerate geometry: median pairwise distance is zero")
    gamma = 1.0 / (2.0 * m * m)

    phi = np.exp(-gamma * cdist(coords, centers, "sqeuclidean"))
    intercept = y.mean(axis=0)
    yc = y - intercept
    if ridge == 0.0:
        weights, *_ = np.linalg.lstsq(phi, yc, rcond=None)
    else:
        gram = phi.T @ phi + ridge * np.eye(centers.shape[0])
        weights = np.linalg.solve(gram, phi.T @ yc)
    return RbfInverseMap(centers=centers, gamma=gamma, weights=weights,
                         intercept=intercept, ridge=ridge)


def apply_inverse(inv: RbfInverseMap, points_2d: np.ndarray) -> np.ndarray:
    """Evaluate the fitted map at G 2D points, returning a G x D matrix."""
    pts = np.asarray(points_2d, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError(f"points must be G x 2, got {pts.shape}")
    phi = np.exp(-inv.gamma * cdist(pts, inv.centers, "sqeuclidean"))
    return inv.intercept[None, :] + phi @ inv.weights


def inverse_jacobian(inv: RbfInverseMap, point_2d) -> np.ndarray:
    """Analytic D x 2 Jacobian of the map at one 2D point."""
    p = np.asarray(point_2d, dtype=np.float64).reshape(2)
    diffs = p[None, :] - inv.centers
    phi = np.exp(-inv.gamma * np.einsum("ki,ki->k", diffs, diffs))
    # d/dp exp(-g r^2) = -2 g (p - c) exp(-g r^2)
    return (inv.weights * phi[:, None]).T @ (-2.0 * inv.gamma * diffs)


def grid_cell_centers(x0: float, y0: float, dx: float, dy: float,
                      width: int, height: int) -> np.ndarray:
    xs = x0 + (np.arange(width) + 0.5) * dx
    ys = y0 + (np.arange(height) + 0.5) * dy
    gx, gy = np.meshgrid(xs, ys)  # row-major, row 0 at y0
    return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)


def sample_decision_grid(inv: RbfInverseMap, coords: np.ndarray, f: Classifier,
                         resolution: tuple[int, int] = (100, 100),
                         margin: float = 0.05, batch_size: int = 256) -> DecisionGrid:
    """Classify a regular grid pushed through the inverse map.

    The grid covers the coords' bounding box expanded by margin * extent on
    each side.  Cell label is the argmax probability (ties to the lower
    class index); certainty rescales the max probability so chance level
    maps to 0 and full confidence to 1.
    """
    width, height = int(resolution[0]), int(resolution[1])
    if width < 2 or height < 2:
        raise ValidationError(f"grid resolution must be at least 2x2, got {resolution}")
    if margin < 0:
        raise ValidationError("margin must be >= 0")
    coords = np.asarray(coords, dtype=np.float64)
    x_min, y_min = coords.min(axis=0)
    x_max, y_max = coords.max(axis=0)
    extent_x = x_max - x_min or 1.0
    extent_y = y_max - y_min or 1.0
    x0 = x_min - margin * extent_x
    y0 = y_min - margin * extent_y
    dx = extent_x * (1.0 + 2.0 * margin) / width
    dy = extent_y * (1.0 + 2.0 * margin) / height

    cells = grid_cell_centers(x0, y0, dx, dy, width, height)
    lifted = apply_inverse(inv, cells)
    n_cells = cells.shape[0]
    n_classes = f.info.n_classes
    probs = np.empty((n_cells, n_classes), dtype=np.float64)
    for start in range(0, n_cells, batch_size):
        stop = min(start + batch_size, n_cells)
        probs[start:stop] = f.predict_batch(lifted[start:stop])
    labels = np.argmax(probs, axis=1)
    p_max = probs[np.arange(n_cells), labels]
    chance = 1.0 / n_classes
    certainty = np.clip((p_max - chance) / (1.0 - chance), 0.0, 1.0)
    return DecisionGrid(x0=x0, y0=y0, dx=dx, dy=dy, width=width, height=height,
                        labels=labels, certainty=certainty)
