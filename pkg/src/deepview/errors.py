"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: validation problems exit 1, classifier
transport failures exit 2, and plain I/O errors (``OSError``) exit 3.
"""

from __future__ import annotations


class DeepViewError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(DeepViewError):
    """Malformed input data, config, or file contents."""


class TransportError(DeepViewError):
    """A remote classifier could not be reached or answered badly."""

    def __init__(self, message: str, endpoint: str | None = None, batch_index: int | None = None):
        detail = message
        if endpoint is not None:
            detail += f" (endpoint: {endpoint}"
            if batch_index is not None:
                detail += f", batch {batch_index}"
            detail += ")"
        super().__init__(detail)
        self.endpoint = endpoint
        self.batch_index = batch_index


class MetricError(DeepViewError):
    """Distance computation failed (e.g. zero vector under cosine)."""


class PipelineError(DeepViewError):
    """A pipeline stage failed; carries the stage name, original error as cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.__cause__ = cause
