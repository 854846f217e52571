"""HTTP service: projects, asynchronous runs, point lookup, region triage.

Projects pair a dataset bundle with a classifier; each run executes the
full pipeline on a background worker (one active run per project) and its
payload is persisted to disk as the exact JSON bytes the CLI would write,
so both paths serve byte-identical artifacts.  State lives in a plain
data directory -- JSON plus blobs, no database.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import traceback
from dataclasses import dataclass, field

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .bundle import DatasetBundle, load_bundle
from .classifiers import Classifier
from .errors import PipelineError, TransportError, ValidationError
from .inverse import DecisionGrid
from .pipeline import RunConfig, run_deepview

_CLASSIFIER_FACTORY = None  # set lazily to avoid a circular import with cli


def _build_classifier(spec: str, bundle: DatasetBundle) -> Classifier:
    global _CLASSIFIER_FACTORY
    if _CLASSIFIER_FACTORY is None:
        from .cli import parse_classifier_spec

        _CLASSIFIER_FACTORY = parse_classifier_spec
    return _CLASSIFIER_FACTORY(spec, bundle)


class ProjectRequest(BaseModel):
    bundle_manifest: str
    classifier_spec: str


class RegionQuery(BaseModel):
    x_min: float
    x_max: float
    y_min: float
    y_max: float


@dataclass
class ProjectState:
    project_id: str
    bundle: DatasetBundle
    classifier: Classifier
    classifier_spec: str
    bundle_manifest: str
    runs: dict[str, dict] = field(default_factory=dict)  # run_id -> status record
    lock: threading.Lock = field(default_factory=threading.Lock)
    active_run: str | None = None


def run_id_for(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class ServiceState:
    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        self.projects: dict[str, ProjectState] = {}
        self.counter = 0
        self.lock = threading.Lock()
        os.makedirs(data_dir, exist_ok=True)

    def new_project_id(self) -> str:
        with self.lock:
            self.counter += 1
            return f"p{self.counter:04d}"

    def project_dir(self, project_id: str) -> str:
        return os.path.join(self.data_dir, project_id)

    def payload_path(self, project_id: str, run_id: str) -> str:
        return os.path.join(self.project_dir(project_id), "runs", f"{run_id}.json")


def create_app(data_dir: str, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="deepview service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    state = ServiceState(data_dir)
    app.state.service = state

    @app.post("/api/projects", status_code=201)
    def create_project(req: ProjectRequest):
        try:
            bundle = load_bundle(req.bundle_manifest)
        except (ValidationError, OSError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        try:
            classifier = _build_classifier(req.classifier_spec, bundle)
        except TransportError as exc:
            return JSONResponse(status_code=502, content={"error": str(exc)})
        except (ValidationError, OSError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        project_id = state.new_project_id()
        project = ProjectState(
            project_id=project_id, bundle=bundle, classifier=classifier,
            classifier_spec=req.classifier_spec, bundle_manifest=req.bundle_manifest,
        )
        state.projects[project_id] = project
        os.makedirs(os.path.join(state.project_dir(project_id), "runs"), exist_ok=True)
        with open(os.path.join(state.project_dir(project_id), "project.json"), "w",
                  encoding="utf-8") as fh:
            json.dump({"project_id": project_id, "bundle_manifest": req.bundle_manifest,
                       "classifier_spec": req.classifier_spec}, fh, indent=2, sort_keys=True)
        return {"project_id": project_id}

    def _get_project(project_id: str) -> ProjectState | None:
        return state.projects.get(project_id)

    def _execute_run(project: ProjectState, run_id: str, cfg: RunConfig) -> None:
        record = project.runs[run_id]
        try:
            payload = run_deepview(project.bundle, project.classifier, cfg)
            path = state.payload_path(project.project_id, run_id)
            with open(path, "wb") as fh:
                fh.write(payload.to_json_bytes())
            record["status"] = "done"
        except PipelineError as exc:
            record["status"] = "failed"
            record["message"] = f"stage '{exc.stage}': {exc.__cause__}"
        except Exception as exc:  # pragma: no cover - defensive
            record["status"] = "failed"
            record["message"] = f"{exc}\n{traceback.format_exc()}"
        finally:
            with project.lock:
                project.active_run = None

    @app.post("/api/projects/{project_id}/runs", status_code=201)
    def start_run(project_id: str, body: dict):
        project = _get_project(project_id)
        if project is None:
            return JSONResponse(status_code=404, content={"error": f"unknown project {project_id}"})
        try:
            cfg = RunConfig.from_dict(body)
        except (ValidationError, ValueError, TypeError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        run_id = run_id_for(cfg)
        with project.lock:
            if project.active_run is not None:
                return JSONResponse(status_code=409,
                                    content={"error": f"run {project.active_run} is active"})
            existing = project.runs.get(run_id)
            if existing is not None and existing["status"] == "done":
                return {"run_id": run_id}
            project.runs[run_id] = {"status": "running", "config": cfg.to_dict()}
            project.active_run = run_id
        worker = threading.Thread(target=_execute_run, args=(project, run_id, cfg), daemon=True)
        worker.start()
        return {"run_id": run_id}

    @app.get("/api/projects/{project_id}/runs/{run_id}")
    def get_run(project_id: str, run_id: str):
        project = _get_project(project_id)
        if project is None:
            return JSONResponse(status_code=404, content={"error": f"unknown project {project_id}"})
        record = project.runs.get(run_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": f"unknown run {run_id}"})
        if record["status"] == "running":
            return {"status": "running"}
        if record["status"] == "failed":
            return JSONResponse(status_code=500,
                                content={"status": "failed", "error": record.get("message", "")})
        with open(state.payload_path(project_id, run_id), "rb") as fh:
            return Response(content=fh.read(), media_type="application/json")

    @app.get("/api/projects/{project_id}/points/{point_id}")
    def get_point(project_id: str, point_id: str):
        project = _get_project(project_id)
        if project is None:
            return JSONResponse(status_code=404, content={"error": f"unknown project {project_id}"})
        record = project.bundle.record_by_id(point_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": f"unknown point {point_id}"})
        return record.to_dict()

    @app.post("/api/projects/{project_id}/runs/{run_id}/region-query")
    def region_query(project_id: str, run_id: str, box: RegionQuery):
        project = _get_project(project_id)
        if project is None:
            return JSONResponse(status_code=404, content={"error": f"unknown project {project_id}"})
        record = project.runs.get(run_id)
        if record is None or record["status"] != "done":
            return JSONResponse(status_code=404, content={"error": f"no completed run {run_id}"})
        if box.x_min > box.x_max or box.y_min > box.y_max:
            return JSONResponse(status_code=400, content={"error": "inverted box"})
        with open(state.payload_path(project_id, run_id), "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return {"points": order_region_points(payload, box.x_min, box.x_max,
                                              box.y_min, box.y_max)}

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def order_region_points(payload: dict, x_min: float, x_max: float,
                        y_min: float, y_max: float) -> list[dict]:
    """Points inside the box, most-uncertain cell first, id breaking ties."""
    grid = DecisionGrid.from_dict(payload["grid"])
    inside = [
        p for p in payload["points"]
        if x_min <= p["x"] <= x_max and y_min <= p["y"] <= y_max
    ]
    entries = [
        {
            "id": p["id"],
            "x": p["x"],
            "y": p["y"],
            "mismatch": bool(p["mismatch"]),
            "cell_certainty": float(grid.certainty[grid.cell_index(p["x"], p["y"])]),
        }
        for p in inside
    ]
    entries.sort(key=lambda e: (e["cell_certainty"], e["id"]))
    return entries
