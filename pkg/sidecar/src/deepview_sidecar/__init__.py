"""Adapters exposing real transformer text classifiers to the toolkit."""

from .export import export_bundle, read_corpus
from .model import SidecarConfig, SplitClassifier
from .server import create_app, serve_predictions

__version__ = "0.1.0"

__all__ = ["SidecarConfig", "SplitClassifier", "create_app", "serve_predictions",
           "export_bundle", "read_corpus", "__version__"]
