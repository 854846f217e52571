"""Reference server for the prediction wire protocol.

Wraps any in-process classifier behind ``GET /v1/info`` and
``POST /v1/predict`` so it can stand in for a remote model during tests
and demos.  The protocol: info returns ``{"input_dim", "n_classes",
"class_names"}``; predict takes ``{"inputs": [[f32, ...], ...]}`` and
returns ``{"probabilities": [[f32, ...], ...]}`` with row correspondence.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .classifiers import Classifier
from .errors import ValidationError


class PredictRequest(BaseModel):
    inputs: list[list[float]]


def check_protocol_conformance(client, cases: list[dict] | None = None) -> dict:
    """Run the golden protocol checks against any httpx-compatible client.

    ``cases`` follows the golden-suite JSON: a list of {"name", "n_rows",
    "width_delta", "expect_error"} entries; defaults cover a single row, a
    batch, row correspondence, and a wrong-width rejection.  Raises
    AssertionError with the failing case name; returns the /v1/info body.
    """
    if cases is None:
        cases = [
            {"name": "single_row", "n_rows": 1},
            {"name": "batch", "n_rows": 5},
            {"name": "row_correspondence", "n_rows": 3, "check_rows": True},
            {"name": "wrong_width", "n_rows": 2, "width_delta": 3, "expect_error": True},
        ]
    resp = client.get("/v1/info")
    assert resp.status_code == 200, f"/v1/info returned {resp.status_code}"
    info = resp.json()
    for key in ("input_dim", "n_classes", "class_names"):
        assert key in info, f"/v1/info missing {key}"
    dim = int(info["input_dim"])
    n_classes = int(info["n_classes"])
    assert n_classes >= 2, "need at least 2 classes"
    assert len(info["class_names"]) == n_classes, "class_names length mismatch"

    rng = np.random.default_rng(0)
    for case in cases:
        name = case["name"]
        width = dim + int(case.get("width_delta", 0))
        inputs = rng.normal(size=(int(case["n_rows"]), width)).tolist()
        resp = client.post("/v1/predict", json={"inputs": inputs})
        if case.get("expect_error"):
            assert resp.status_code // 100 != 2, f"{name}: expected an error status"
            continue
        assert resp.status_code == 200, f"{name}: HTTP {resp.status_code}"
        rows = resp.json()["probabilities"]
        assert len(rows) == len(inputs), f"{name}: row count mismatch"
        for row in rows:
            assert len(row) == n_classes, f"{name}: row width mismatch"
            assert all(v >= 0 for v in row), f"{name}: negative probability"
            assert abs(sum(row) - 1.0) <= 1e-5, f"{name}: row does not sum to 1"
        if case.get("check_rows"):
            flipped = client.post("/v1/predict", json={"inputs": inputs[::-1]})
            assert flipped.json()["probabilities"] == rows[::-1], \
                f"{name}: rows do not correspond to inputs"
    return info


def create_model_app(classifier: Classifier) -> FastAPI:
    app = FastAPI(title="deepview model server")

    @app.get("/v1/info")
    def info():
        return {
            "input_dim": classifier.info.input_dim,
            "n_classes": classifier.info.n_classes,
            "class_names": list(classifier.info.class_names),
        }

    @app.post("/v1/predict")
    def predict(req: PredictRequest):
        try:
            rows = np.asarray(req.inputs, dtype=np.float64)
            if rows.size == 0:
                return {"probabilities": []}
            probs = classifier.predict_batch(rows)
        except (ValidationError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return {"probabilities": probs.tolist()}

    return app
