"""End-to-end runs: distance matrix, projection, inverse map, decision
grid, and headline quality numbers, assembled into a serializable payload.

A run is a serial composition of stages; each stage error is re-raised
with the stage name attached.  One seed threads through every stochastic
stage, so a payload is a pure function of (bundle, classifier, config)
and serializes to byte-identical JSON on repeat runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .bundle import DatasetBundle
from .classifiers import Classifier
from .errors import PipelineError, ValidationError
from .evaluate import q_knn_error
from .inverse import DecisionGrid, fit_inverse, sample_decision_grid
from .metric import DiscriminativeMetricConfig, build_distance_matrix
from .projector import Projection, UmapConfig, project

Q_KNN_K = 5


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a full run.  ``seed`` overrides the projector seed so
    a single value drives all stochastic stages."""

    metric: DiscriminativeMetricConfig = field(default_factory=DiscriminativeMetricConfig)
    umap: UmapConfig = field(default_factory=UmapConfig)
    grid_resolution: tuple[int, int] = (100, 100)
    margin: float = 0.05
    inverse_ridge: float = 1e-3
    seed: int = 0
    batch_size: int = 64
    threads: int = 1

    def to_dict(self) -> dict:
        return {
            "metric": self.metric.to_dict(),
            "umap": self.umap.to_dict(),
            "grid_resolution": list(self.grid_resolution),
            "margin": self.margin,
            "inverse_ridge": self.inverse_ridge,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        defaults = cls()
        grid = obj.get("grid_resolution", list(defaults.grid_resolution))
        if not (isinstance(grid, (list, tuple)) and len(grid) == 2):
            raise ValidationError(f"grid_resolution must be [width, height], got {grid!r}")
        return cls(
            metric=DiscriminativeMetricConfig.from_dict(obj.get("metric", {})),
            umap=UmapConfig.from_dict(obj.get("umap", {})),
            grid_resolution=(int(grid[0]), int(grid[1])),
            margin=float(obj.get("margin", defaults.margin)),
            inverse_ridge=float(obj.get("inverse_ridge", defaults.inverse_ridge)),
            seed=int(obj.get("seed", defaults.seed)),
            batch_size=int(obj.get("batch_size", defaults.batch_size)),
            threads=int(obj.get("threads", defaults.threads)),
        )


@dataclass
class VisPayload:
    """Serializable scene: points, decision grid, metrics, provenance."""

    points: list[dict]
    grid: DecisionGrid
    class_names: tuple[str, ...]
    metrics: dict
    provenance: dict
    projection: Projection | None = None

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "grid": self.grid.to_dict(),
            "class_names": list(self.class_names),
            "metrics": self.metrics,
            "provenance": self.provenance,
        }

    def to_json_bytes(self) -> bytes:
        return payload_json_bytes(self.to_dict())


def payload_json_bytes(payload_dict: dict) -> bytes:
    """Canonical payload serialization: sorted keys, no whitespace."""
    return (json.dumps(payload_dict, sort_keys=True, separators=(",", ":")) + "\n").encode()


def q_data_error(points: list[dict], grid: DecisionGrid) -> float:
    """Fraction of points whose prediction disagrees with their cell label."""
    if not points:
        return 0.0
    wrong = sum(
        1 for p in points
        if int(grid.labels[grid.cell_index(p["x"], p["y"])]) != p["predicted"]
    )
    return wrong / len(points)


def _stage(name: str):
    class _StageContext:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, exc) from exc
            return False

    return _StageContext()


def run_deepview(bundle: DatasetBundle, f: Classifier, cfg: RunConfig) -> VisPayload:
    """Execute the full four-step run and assemble the payload.

    Point predictions always come from the classifier on the original
    embeddings; the inverse map only feeds the background grid.
    """
    if bundle.dim != f.info.input_dim:
        raise ValidationError(
            f"bundle dimension {bundle.dim} does not match classifier input {f.info.input_dim}"
        )
    umap_cfg = replace(cfg.umap, seed=cfg.seed)

    with _stage("metric"):
        dm = build_distance_matrix(bundle, f, cfg.metric,
                                   batch_size=cfg.batch_size, threads=cfg.threads)
    with _stage("projector"):
        projection = project(dm, umap_cfg)
    with _stage("inverse"):
        inv = fit_inverse(projection.coords, bundle.embeddings.astype(np.float64),
                          ridge=cfg.inverse_ridge, seed=cfg.seed)
    with _stage("grid"):
        grid = sample_decision_grid(inv, projection.coords, f,
                                    resolution=cfg.grid_resolution, margin=cfg.margin)
    with _stage("metrics"):
        probs = f.predict_batch(bundle.embeddings)
        predicted = f.predict_labels(bundle.embeddings)
        points = []
        for i, rec in enumerate(bundle.records):
            x = float(projection.coords[i, 0])
            y = float(projection.coords[i, 1])
            pred = int(predicted[i])
            entry = {
                "id": rec.id,
                "x": x,
                "y": y,
                "predicted": pred,
                "prob_max": float(probs[i].max()),
                "mismatch": int(grid.labels[grid.cell_index(x, y)]) != pred,
            }
            if rec.label is not None:
                entry["true_label"] = int(rec.label)
            points.append(entry)
        metrics = {
            "q_knn_error": q_knn_error(projection.coords, predicted, k=Q_KNN_K),
            "q_data_error": q_data_error(points, grid),
        }

    provenance = {
        "run_config": cfg.to_dict(),
        "classifier_hash": f.identity(),
        "bundle_hash": bundle.content_hash(),
    }
    return VisPayload(points=points, grid=grid, class_names=f.info.class_names,
                      metrics=metrics, provenance=provenance, projection=projection)


def sweep_lambda(bundle: DatasetBundle, f: Classifier, cfg: RunConfig,
                 lambdas: list[float]) -> list[dict]:
    """One full run per lambda with the shared seed; rows in given order."""
    if not lambdas:
        raise ValidationError("lambda list must not be empty")
    rows = []
    for lam in lambdas:
        run_cfg = replace(cfg, metric=replace(cfg.metric, lam=float(lam)))
        try:
            payload = run_deepview(bundle, f, run_cfg)
        except Exception as exc:
            raise PipelineError(f"lambda={lam}", exc) from exc
        rows.append({
            "lambda": float(lam),
            "q_knn_error": payload.metrics["q_knn_error"],
            "q_data_error": payload.metrics["q_data_error"],
        })
    return rows
