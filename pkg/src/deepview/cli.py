"""Command-line front door.

Subcommands: project, sweep, eval, compare, confusion, render, serve.
Exit codes: 0 success, 1 validation problem, 2 classifier transport
failure, 3 I/O error.  Every flag has an environment-variable equivalent
prefixed DEEPVIEW_ (e.g. DEEPVIEW_PROJECT_SEED).

Report-style subcommands (sweep, eval, compare, confusion) write a
rendered figure next to their delimited output unless --no-figure is
given.  Delimited outputs start with a ``# provenance:`` comment line so
every artifact records what produced it.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import plots
from .bundle import DatasetBundle, SampleSpec, load_bundle, subsample
from .classifiers import Classifier, RemoteClassifier, fit_knn, load_builtin
from .errors import DeepViewError, PipelineError, TransportError, ValidationError
from .evaluate import (confusion_matrix, knn_loo_predictions, neighborhood_curves,
                       compare_models, write_curves_csv, write_summary_json)
from .metric import DiscriminativeMetricConfig
from .pipeline import RunConfig, run_deepview, sweep_lambda
from .projector import UmapConfig
from .render import render_svg


def parse_classifier_spec(spec: str, bundle: DatasetBundle | None) -> Classifier:
    """Build a classifier from a CLI spec string.

    ``knn:<true_label|dataset_tag>[:<k>]`` fits a neighbor-vote classifier
    on the bundle itself; an http(s) URL connects to a remote model; any
    other value is read as a builtin weights file path.
    """
    if spec.startswith("knn:"):
        parts = spec.split(":")
        if len(parts) not in (2, 3):
            raise ValidationError(f"bad knn spec {spec!r}; expected knn:<label_source>[:<k>]")
        label_source = parts[1]
        k = int(parts[2]) if len(parts) == 3 else 5
        if bundle is None:
            raise ValidationError("knn classifier requires a bundle")
        return fit_knn(bundle, label_source=label_source, k=k)
    if spec.startswith("http://") or spec.startswith("https://"):
        return RemoteClassifier(spec)
    return load_builtin(spec)


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise ValidationError(f"bad grid spec {text!r}; expected WIDTHxHEIGHT") from exc


def _parse_lambdas(text: str) -> list[float]:
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ValidationError("lambda list must not be empty")
    return [float(part) for part in items]


def _provenance_line(provenance: dict) -> str:
    return "# provenance: " + json.dumps(provenance, sort_keys=True)


@click.group()
def cli():
    """Decision-surface visualization and evaluation for classifier embeddings."""


_RUN_OPTIONS = [
    click.option("--bundle", "bundle_path", required=True, help="Bundle manifest path."),
    click.option("--classifier", "classifier_spec", required=True,
                 help="Weights file, remote URL, or knn:<label_source>[:<k>]."),
    click.option("--segments", type=int, default=5, show_default=True,
                 help="Arc interpolation segments."),
    click.option("--base-metric", type=click.Choice(["cosine", "euclidean"]),
                 default="cosine", show_default=True),
    click.option("--normalize-components", is_flag=True,
                 help="Rescale JS and base components by their pair means before mixing."),
    click.option("--grid", "grid_spec", default="100x100", show_default=True,
                 help="Decision grid resolution, WIDTHxHEIGHT."),
    click.option("--margin", type=float, default=0.05, show_default=True),
    click.option("--ridge", type=float, default=1e-3, show_default=True,
                 help="Inverse-map regularization."),
    click.option("--neighbors", type=int, default=15, show_default=True),
    click.option("--min-dist", type=float, default=0.1, show_default=True),
    click.option("--epochs", type=int, default=500, show_default=True),
    click.option("--negative-samples", type=int, default=5, show_default=True),
    click.option("--learning-rate", type=float, default=1.0, show_default=True),
    click.option("--init", type=click.Choice(["spectral", "random"]),
                 default="spectral", show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--sample", type=int, default=None,
                 help="Subsample this many rows (seeded) before running."),
    click.option("--batch-size", type=int, default=64, show_default=True),
    click.option("--threads", type=int, default=1, show_default=True),
]


def _with_run_options(fn):
    for option in reversed(_RUN_OPTIONS):
        fn = option(fn)
    return fn


def _prepare_run(bundle_path, classifier_spec, lam, segments, base_metric,
                 normalize_components, grid_spec, margin, ridge, neighbors,
                 min_dist, epochs, negative_samples, learning_rate, init,
                 seed, sample, batch_size, threads):
    bundle = load_bundle(bundle_path)
    if sample is not None:
        bundle = subsample(bundle, SampleSpec(count=sample, seed=seed))
    classifier = parse_classifier_spec(classifier_spec, bundle)
    cfg = RunConfig(
        metric=DiscriminativeMetricConfig(
            lam=lam, n_segments=segments, base_metric=base_metric,
            normalize_components=normalize_components,
        ),
        umap=UmapConfig(
            n_neighbors=neighbors, min_dist=min_dist, n_epochs=epochs,
            negative_samples=negative_samples, learning_rate=learning_rate,
            seed=seed, init=init,
        ),
        grid_resolution=_parse_grid(grid_spec),
        margin=margin,
        inverse_ridge=ridge,
        seed=seed,
        batch_size=batch_size,
        threads=threads,
    )
    return bundle, classifier, cfg


@cli.command("project")
@_with_run_options
@click.option("--lambda", "lam", type=float, default=0.8, show_default=True,
              help="Unsupervised metric weight (1 = purely unsupervised).")
@click.option("--out", "out_path", required=True, help="Payload JSON output path.")
def cmd_project(lam, out_path, **kwargs):
    """Run the full pipeline and write a payload JSON."""
    bundle, classifier, cfg = _prepare_run(lam=lam, **kwargs)
    payload = run_deepview(bundle, classifier, cfg)
    with open(out_path, "wb") as fh:
        fh.write(payload.to_json_bytes())
    click.echo(f"q_knn_error={payload.metrics['q_knn_error']:.4f} "
               f"q_data_error={payload.metrics['q_data_error']:.4f}", err=True)


@cli.command("sweep")
@_with_run_options
@click.option("--lambdas", "lambdas_spec", default="1.0,0.8,0.6,0.4,0.2,0.0",
              show_default=True, help="Comma-separated lambda values.")
@click.option("--out", "out_path", required=True, help="CSV output path.")
@click.option("--no-figure", is_flag=True, help="Skip the figure next to the CSV.")
def cmd_sweep(lambdas_spec, out_path, no_figure, **kwargs):
    """Run the pipeline for several lambda weightings; emit one CSV row each."""
    lambdas = _parse_lambdas(lambdas_spec)
    bundle, classifier, cfg = _prepare_run(lam=lambdas[0], **kwargs)
    rows = sweep_lambda(bundle, classifier, cfg, lambdas)
    provenance = {
        "run_config": cfg.to_dict(),
        "classifier_hash": classifier.identity(),
        "bundle_hash": bundle.content_hash(),
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(_provenance_line(provenance) + "\n")
        fh.write("lambda,q_knn_error,q_data_error\n")
        for row in rows:
            fh.write(f"{row['lambda']!r},{row['q_knn_error']!r},{row['q_data_error']!r}\n")
    if not no_figure:
        plots.sweep_figure(rows, _figure_path(out_path))
    for row in rows:
        click.echo(f"lambda={row['lambda']} q_knn_error={row['q_knn_error']:.4f} "
                   f"q_data_error={row['q_data_error']:.4f}", err=True)


def _figure_path(out_path: str) -> str:
    stem = out_path.rsplit(".", 1)[0] if "." in out_path else out_path
    return stem + ".png"


def _load_representation(path: str) -> np.ndarray:
    """Payload JSON -> its 2D coords; bundle manifest -> its embeddings."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path} is not valid JSON: {exc}") from exc
    if isinstance(doc, dict) and "points" in doc and "grid" in doc:
        return np.asarray([[p["x"], p["y"]] for p in doc["points"]])
    return load_bundle(path).embeddings.astype(np.float64)


@cli.command("eval")
@click.option("--payload", "payload_path", required=True, help="Payload JSON to evaluate.")
@click.option("--bundle", "bundle_path", required=True,
              help="Bundle the payload was projected from.")
@click.option("--out", "out_path", required=True, help="Curves CSV output path.")
@click.option("--summary", "summary_path", default=None,
              help="Summary JSON path (defaults to CSV stem + .summary.json).")
@click.option("--no-figure", is_flag=True)
def cmd_eval(payload_path, bundle_path, out_path, summary_path, no_figure):
    """Neighborhood-preservation curves between a payload's layout and its
    source embeddings, plus the payload's headline metrics."""
    with open(payload_path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    bundle = load_bundle(bundle_path)
    ids = [p["id"] for p in payload["points"]]
    if ids != [rec.id for rec in bundle.records]:
        raise ValidationError("payload points do not align with bundle rows (id mismatch)")
    coords = np.asarray([[p["x"], p["y"]] for p in payload["points"]])
    curves = neighborhood_curves(coords, bundle.embeddings.astype(np.float64))
    write_curves_csv(curves, out_path)
    summary = {
        "projection_vs_data": curves.summary(),
        "q_knn_error": payload["metrics"]["q_knn_error"],
        "q_data_error": payload["metrics"]["q_data_error"],
        "provenance": payload.get("provenance"),
    }
    with open(summary_path or _summary_path(out_path), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not no_figure:
        plots.curves_figure({("projection", "data"): curves}, _figure_path(out_path))
    click.echo(f"q_local={curves.q_local:.4f} k_max={curves.k_max} auc={curves.auc:.4f}",
               err=True)


def _summary_path(out_path: str) -> str:
    stem = out_path.rsplit(".", 1)[0] if "." in out_path else out_path
    return stem + ".summary.json"


@cli.command("compare")
@click.option("--input", "inputs", multiple=True, required=True,
              help="name=path, where path is a payload JSON or bundle manifest.")
@click.option("--out", "out_path", required=True, help="Summary JSON output path.")
@click.option("--curves-dir", default=None, help="Directory for per-pair curve CSVs.")
@click.option("--no-figure", is_flag=True)
def cmd_compare(inputs, out_path, curves_dir, no_figure):
    """Pairwise neighborhood comparison across several representations."""
    named = []
    for item in inputs:
        if "=" not in item:
            raise ValidationError(f"bad --input {item!r}; expected name=path")
        name, path = item.split("=", 1)
        named.append((name, _load_representation(path)))
    curves, summary = compare_models(named)
    write_summary_json(summary, out_path, provenance={"inputs": list(inputs)})
    if curves_dir:
        os.makedirs(curves_dir, exist_ok=True)
        for (name_a, name_b), c in curves.items():
            write_curves_csv(c, os.path.join(curves_dir, f"{name_a}_vs_{name_b}.csv"))
    if not no_figure:
        plots.curves_figure(curves, _figure_path(out_path))
    for row in summary:
        click.echo(f"{row['pair']}: q_local={row['q_local']:.4f} "
                   f"k_max={row['k_max']} auc={row['auc']:.4f}", err=True)


@cli.command("confusion")
@click.option("--bundle", "bundle_path", required=True)
@click.option("--classifier", "classifier_spec", required=True)
@click.option("--label-source", type=click.Choice(["true_label", "dataset_tag"]),
              default="true_label", show_default=True,
              help="Record field supplying the ground-truth classes.")
@click.option("--out", "out_path", required=True, help="Counts CSV output path.")
@click.option("--no-figure", is_flag=True)
def cmd_confusion(bundle_path, classifier_spec, label_source, out_path, no_figure):
    """Confusion matrix of a classifier over a bundle.

    A knn: classifier fitted on the same bundle is evaluated leave-one-out
    (self matches excluded); other classifiers predict directly.
    """
    bundle = load_bundle(bundle_path)
    classifier = parse_classifier_spec(classifier_spec, bundle)
    if label_source == "true_label":
        raw = [rec.label for rec in bundle.records]
        if any(v is None for v in raw):
            raise ValidationError("every record needs a label for --label-source true_label")
        true_labels = np.asarray(raw, dtype=np.int64)
        class_names = list(classifier.info.class_names)
    else:
        tags = [rec.dataset_tag for rec in bundle.records]
        if any(t is None for t in tags):
            raise ValidationError("every record needs a dataset tag for --label-source dataset_tag")
        class_names = sorted(set(tags))
        index = {tag: i for i, tag in enumerate(class_names)}
        true_labels = np.asarray([index[t] for t in tags], dtype=np.int64)
    if classifier_spec.startswith("knn:"):
        predicted = knn_loo_predictions(bundle.embeddings.astype(np.float64), true_labels,
                                        k=classifier.k)
    else:
        predicted = classifier.predict_labels(bundle.embeddings)
    cm = confusion_matrix(true_labels, predicted, len(class_names))
    cm.class_names = tuple(class_names)
    provenance = {"classifier_hash": classifier.identity(),
                  "bundle_hash": bundle.content_hash(), "label_source": label_source}
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(_provenance_line(provenance) + "\n")
        fh.write("true\\predicted," + ",".join(class_names) + "\n")
        for i, name in enumerate(class_names):
            fh.write(name + "," + ",".join(str(int(v)) for v in cm.counts[i]) + "\n")
    if not no_figure:
        plots.confusion_figure(cm, _figure_path(out_path))
    click.echo(f"accuracy={np.trace(cm.counts) / max(cm.counts.sum(), 1):.4f}", err=True)


@cli.command("render")
@click.option("--payload", "payload_path", required=True)
@click.option("--out", "out_path", required=True, help="SVG output path.")
def cmd_render(payload_path, out_path):
    """Render a payload to a static SVG scene."""
    with open(payload_path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"payload is not valid JSON: {exc}") from exc
    svg = render_svg(payload)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(svg)


@cli.command("serve")
@click.option("--data-dir", required=True, help="Directory for projects and payloads.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8050, show_default=True)
@click.option("--ui-dir", default=None, help="Built explorer UI to host at /.")
def cmd_serve(data_dir, host, port, ui_dir):
    """Run the HTTP service backing the explorer UI."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir, ui_dir=ui_dir), host=host, port=port)


def run_cli(argv=None) -> int:
    """Invoke the CLI, mapping errors onto the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False, auto_envvar_prefix="DEEPVIEW")
        return 0
    except SystemExit as exc:  # --help and friends
        code = exc.code
        return int(code) if isinstance(code, int) else 0
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.exceptions.Abort:
        return 1
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        cause = exc.__cause__
        while isinstance(cause, PipelineError):
            cause = cause.__cause__
        if isinstance(cause, TransportError):
            return 2
        if isinstance(cause, OSError):
            return 3
        return 1
    except TransportError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (ValidationError, DeepViewError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3


def main() -> None:
    raise SystemExit(run_cli())


if __name__ == "__main__":
    main()
