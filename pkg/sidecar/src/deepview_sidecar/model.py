"""Split view of a transformer sequence classifier.

The encoder side turns texts into single vectors (the classification
token's final hidden state); the head side maps such vectors to class
probabilities (pooler dense + tanh + classification layer).  Keeping the
two halves separate is what lets the visualization toolkit treat the
encoder output as its data space while still querying the real decision
function at arbitrary points of that space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer


@dataclass(frozen=True)
class SidecarConfig:
    model: str                     # hub identifier or local path
    port: int = 8060
    host: str = "127.0.0.1"
    batch_size: int = 16
    max_length: int = 256


class SplitClassifier:
    """Encoder (text -> vector) and head (vector -> probabilities)."""

    def __init__(self, model_id_or_path: str, batch_size: int = 16, max_length: int = 256):
        self.tokenizer = AutoTokenizer.from_pretrained(model_id_or_path)
        self.model = AutoModelForSequenceClassification.from_pretrained(model_id_or_path)
        self.model.eval()
        base = self.model.base_model
        if getattr(base, "pooler", None) is None:
            raise ValueError(
                "model has no pooler; only encoder classifiers with a pooled "
                "classification head are supported"
            )
        self.pooler = base.pooler
        self.head = self.model.classifier
        self.batch_size = batch_size
        self.max_length = max_length

    @property
    def input_dim(self) -> int:
        return self.model.config.hidden_size

    @property
    def n_classes(self) -> int:
        return self.model.config.num_labels

    @property
    def class_names(self) -> list[str]:
        id2label = self.model.config.id2label
        return [str(id2label[i]) for i in range(self.n_classes)]

    def encode(self, texts: list[str]) -> np.ndarray:
        """Classification-token vectors, one per input sequence."""
        vectors = []
        for start in range(0, len(texts), self.batch_size):
            chunk = texts[start:start + self.batch_size]
            batch = self.tokenizer(chunk, return_tensors="pt", padding=True,
                                   truncation=True, max_length=self.max_length)
            with torch.no_grad():
                out = self.model(**batch, output_hidden_states=True)
            vectors.append(out.hidden_states[-1][:, 0, :].numpy())
        return np.vstack(vectors).astype(np.float32)

    def predict_vectors(self, vectors: np.ndarray) -> np.ndarray:
        """Probabilities for already-encoded vectors; rows sum to 1."""
        x = np.asarray(vectors, dtype=np.float32)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"inputs must be B x {self.input_dim}, got {x.shape}")
        probs = []
        for start in range(0, x.shape[0], self.batch_size):
            t = torch.from_numpy(x[start:start + self.batch_size])
            with torch.no_grad():
                pooled = torch.tanh(self.pooler.dense(t))
                logits = self.head(pooled)
                p = torch.softmax(logits, dim=-1)
            probs.append(p.numpy().astype(np.float64))
        rows = np.vstack(probs) if probs else np.empty((0, self.n_classes))
        return rows / rows.sum(axis=1, keepdims=True)

    def predict_texts(self, texts: list[str]) -> tuple[np.ndarray, np.ndarray]:
        """(vectors, probabilities) for raw texts, via the same CLS path."""
        vectors = self.encode(texts)
        return vectors, self.predict_vectors(vectors)
