"""Prediction wire protocol endpoint for a split transformer classifier.

Implements GET /v1/info and POST /v1/predict exactly as consumers of
remote classifiers expect: info advertises the encoder's hidden size as
input_dim, predict maps embedding vectors through the classification head
with row correspondence, 400 on dimension mismatch.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .model import SplitClassifier


class PredictRequest(BaseModel):
    inputs: list[list[float]]


def create_app(classifier: SplitClassifier) -> FastAPI:
    app = FastAPI(title="deepview model sidecar")
    # request-serial model execution; concurrent callers queue here
    inference_lock = threading.Lock()

    @app.get("/v1/info")
    def info():
        return {
            "input_dim": classifier.input_dim,
            "n_classes": classifier.n_classes,
            "class_names": classifier.class_names,
        }

    @app.post("/v1/predict")
    def predict(req: PredictRequest):
        if not req.inputs:
            return {"probabilities": []}
        try:
            with inference_lock:
                probs = classifier.predict_vectors(req.inputs)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return {"probabilities": probs.tolist()}

    return app


def serve_predictions(config) -> None:
    """Blocking server entry point for a SidecarConfig."""
    import uvicorn

    classifier = SplitClassifier(config.model, batch_size=config.batch_size)
    uvicorn.run(create_app(classifier), host=config.host, port=config.port)
