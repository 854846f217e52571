"""Regenerate the frontend test fixtures from the core toolkit.

Produces a small two-blob payload plus the backend's region-query
ordering for a box spanning all points, so UI tests assert against real
backend artifacts.  Run from the repository root:

    python3 frontend/scripts/generate-fixtures.py
"""

from __future__ import annotations

import json
import os

import numpy as np

from deepview.bundle import DatasetBundle, Record
from deepview.classifiers import FeedForwardClassifier
from deepview.metric import DiscriminativeMetricConfig
from deepview.pipeline import RunConfig, run_deepview
from deepview.projector import UmapConfig
from deepview.service import order_region_points

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")


def two_blob_payload() -> dict:
    rng = np.random.default_rng(12)
    centers = np.zeros((2, 8))
    centers[0, 0] = 6.0
    centers[1, 0] = -6.0
    rows, records = [], []
    for c in range(2):
        pts = centers[c] + 0.8 * rng.normal(size=(8, 8))
        rows.append(pts)
        for i in range(8):
            records.append(Record(
                id=f"c{c}-{i}",
                text=f"sample sentence {i} of class {c}",
                label=c,
            ))
    bundle = DatasetBundle(embeddings=np.vstack(rows).astype(np.float32), records=records)

    weights = 2.0 * 0.5 * centers
    bias = -0.5 * np.einsum("ij,ij->i", centers, centers)
    clf = FeedForwardClassifier(8, [(weights, bias, "softmax")], ["neg", "pos"])

    cfg = RunConfig(
        metric=DiscriminativeMetricConfig(lam=0.6, n_segments=3, base_metric="euclidean"),
        umap=UmapConfig(n_neighbors=5, n_epochs=120, seed=4),
        grid_resolution=(12, 12),
        seed=4,
    )
    payload = run_deepview(bundle, clf, cfg)
    return json.loads(payload.to_json_bytes()), records


def main() -> None:
    os.makedirs(OUT_DIR, exist_ok=True)
    payload, records = two_blob_payload()
    with open(os.path.join(OUT_DIR, "payload.json"), "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)

    xs = [p["x"] for p in payload["points"]]
    ys = [p["y"] for p in payload["points"]]
    box = {"x_min": min(xs), "x_max": max(xs), "y_min": min(ys), "y_max": max(ys)}
    ordering = order_region_points(payload, box["x_min"], box["x_max"],
                                   box["y_min"], box["y_max"])
    with open(os.path.join(OUT_DIR, "region_order.json"), "w") as fh:
        json.dump({"box": box, "points": ordering}, fh, indent=1, sort_keys=True)

    with open(os.path.join(OUT_DIR, "records.json"), "w") as fh:
        json.dump({rec.id: rec.to_dict() for rec in records}, fh, indent=1, sort_keys=True)
    print(f"fixtures written to {os.path.abspath(OUT_DIR)}")


if __name__ == "__main__":
    main()
