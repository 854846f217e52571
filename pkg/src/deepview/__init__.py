"""Classifier-agnostic decision-surface visualization for embedding spaces.

Projects high-dimensional classifier embeddings to 2D with a
discriminative arc metric, reconstructs the local decision surface
through an RBF inverse map and grid sampling, and evaluates projections
with neighbor-consistency and neighborhood-overlap statistics.
"""

from .bundle import DatasetBundle, Record, SampleSpec, load_bundle, save_bundle, subsample
from .classifiers import (ClassifierInfo, FeedForwardClassifier, KnnClassifier,
                          ProbDist, RemoteClassifier, fit_knn, load_builtin,
                          predict_batch)
from .errors import (DeepViewError, MetricError, PipelineError, TransportError,
                     ValidationError)
from .evaluate import (ConfusionMatrix, NeighborhoodCurves, compare_models,
                       confusion_matrix, neighborhood_curves, q_knn_error)
from .inverse import (DecisionGrid, RbfInverseMap, apply_inverse, fit_inverse,
                      inverse_jacobian, sample_decision_grid)
from .metric import (DiscriminativeMetricConfig, DistanceMatrix, base_distance,
                     build_distance_matrix, discriminative_distance, js_distance)
from .pipeline import RunConfig, VisPayload, run_deepview, sweep_lambda
from .projector import (FuzzyGraph, Projection, UmapConfig, build_fuzzy_graph,
                        knn_from_matrix, optimize_layout, project, spectral_init)
from .render import PALETTE, render_svg

__version__ = "0.1.0"

__all__ = [
    "DatasetBundle", "Record", "SampleSpec", "load_bundle", "save_bundle", "subsample",
    "ClassifierInfo", "FeedForwardClassifier", "KnnClassifier", "ProbDist",
    "RemoteClassifier", "fit_knn", "load_builtin", "predict_batch",
    "DeepViewError", "MetricError", "PipelineError", "TransportError", "ValidationError",
    "ConfusionMatrix", "NeighborhoodCurves", "compare_models", "confusion_matrix",
    "neighborhood_curves", "q_knn_error",
    "DecisionGrid", "RbfInverseMap", "apply_inverse", "fit_inverse",
    "inverse_jacobian", "sample_decision_grid",
    "DiscriminativeMetricConfig", "DistanceMatrix", "base_distance",
    "build_distance_matrix", "discriminative_distance", "js_distance",
    "RunConfig", "VisPayload", "run_deepview", "sweep_lambda",
    "FuzzyGraph", "Projection", "UmapConfig", "build_fuzzy_graph",
    "knn_from_matrix", "optimize_layout", "project", "spectral_init",
    "PALETTE", "render_svg",
    "__version__",
]
