"""Dataset bundles: embedding matrices plus per-point records.

A bundle on disk is three files described by a JSON manifest::

    {"n_rows": N, "n_cols": D, "dtype": "f32", "byte_order": "little",
     "data": "embeddings.f32", "records": "records.jsonl"}

The blob holds row-major little-endian float32 values (N*D*4 bytes) so any
ML exporter can produce it bit-exactly.  The records file is JSON Lines,
one object per row in row order.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_RECORD_FIELDS = ("id", "text", "label", "dataset_tag", "predicted")


@dataclass
class Record:
    """Metadata for one embedded data point."""

    id: str
    text: str | None = None
    label: int | None = None
    dataset_tag: str | None = None
    predicted: int | None = None

    def to_dict(self) -> dict:
        out = {"id": self.id}
        for name in _RECORD_FIELDS[1:]:
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @classmethod
    def from_dict(cls, obj: dict, row: int) -> "Record":
        if "id" not in obj:
            raise ValidationError(f"record at row {row} has no 'id' field")
        known = {k: obj[k] for k in _RECORD_FIELDS if k in obj}
        return cls(**known)


@dataclass(frozen=True)
class SampleSpec:
    """Deterministic subsample request: how many rows, which seed."""

    count: int
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError(f"sample count must be >= 0, got {self.count}")


@dataclass
class DatasetBundle:
    """N x D embedding matrix with one record per row.

    Immutable after load by convention; safe to share across threads.
    """

    embeddings: np.ndarray
    records: list[Record] = field(repr=False)

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float32)
        if emb.ndim != 2:
            raise ValidationError(f"embeddings must be 2-D, got shape {emb.shape}")
        if emb.shape[0] != len(self.records):
            raise ValidationError(
                f"embeddings have {emb.shape[0]} rows but there are {len(self.records)} records"
            )
        bad = ~np.isfinite(emb)
        if bad.any():
            row = int(np.nonzero(bad.any(axis=1))[0][0])
            raise ValidationError(f"non-finite embedding value at row {row}")
        seen: dict[str, int] = {}
        for row, rec in enumerate(self.records):
            if rec.id in seen:
                raise ValidationError(
                    f"duplicate record id {rec.id!r} at rows {seen[rec.id]} and {row}"
                )
            seen[rec.id] = row
        object.__setattr__(self, "embeddings", emb)

    @property
    def size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def record_by_id(self, point_id: str) -> Record | None:
        for rec in self.records:
            if rec.id == point_id:
                return rec
        return None

    def content_hash(self) -> str:
        """sha256 over the embedding bytes and canonical record JSON."""
        h = hashlib.sha256()
        h.update(self.embeddings.astype("<f4", copy=False).tobytes())
        for rec in self.records:
            h.update(json.dumps(rec.to_dict(), sort_keys=True).encode())
            h.update(b"\n")
        return h.hexdigest()


def load_bundle(manifest_path: str | os.PathLike) -> DatasetBundle:
    """Load and validate a bundle from its manifest file.

    Raises ValidationError on byte-length mismatches, non-finite values, or
    duplicate ids (each reported with the offending row), OSError when a
    referenced file is missing.
    """
    manifest_path = os.fspath(manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc

    for key in ("n_rows", "n_cols", "data", "records"):
        if key not in manifest:
            raise ValidationError(f"manifest {manifest_path} is missing key '{key}'")
    if manifest.get("dtype", "f32") != "f32":
        raise ValidationError(f"unsupported dtype {manifest['dtype']!r}; only 'f32' is supported")
    if manifest.get("byte_order", "little") != "little":
        raise ValidationError("unsupported byte order; only 'little' is supported")

    n_rows = int(manifest["n_rows"])
    n_cols = int(manifest["n_cols"])
    base = os.path.dirname(os.path.abspath(manifest_path))
    data_path = os.path.join(base, manifest["data"])
    records_path = os.path.join(base, manifest["records"])

    with open(data_path, "rb") as fh:
        blob = fh.read()
    expected = n_rows * n_cols * 4
    if len(blob) != expected:
        raise ValidationError(
            f"byte-length mismatch in {data_path}: expected {expected} "
            f"({n_rows}x{n_cols}x4), got {len(blob)}"
        )
    embeddings = np.frombuffer(blob, dtype="<f4").reshape(n_rows, n_cols).copy()

    records: list[Record] = []
    with open(records_path, "r", encoding="utf-8") as fh:
        for row, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"records line {row} is not valid JSON: {exc}") from exc
            records.append(Record.from_dict(obj, row))
    if len(records) != n_rows:
        raise ValidationError(
            f"manifest declares {n_rows} rows but records file has {len(records)}"
        )
    return DatasetBundle(embeddings=embeddings, records=records)


def save_bundle(bundle: DatasetBundle, out_dir: str | os.PathLike, name: str = "bundle") -> str:
    """Write manifest + blob + records under ``out_dir``; returns the manifest path.

    Round-trips bit-exactly through load_bundle.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    data_name = f"{name}.f32"
    records_name = f"{name}.records.jsonl"
    manifest = {
        "n_rows": bundle.size,
        "n_cols": bundle.dim,
        "dtype": "f32",
        "byte_order": "little",
        "data": data_name,
        "records": records_name,
    }
    with open(os.path.join(out_dir, data_name), "wb") as fh:
        fh.write(bundle.embeddings.astype("<f4", copy=False).tobytes())
    with open(os.path.join(out_dir, records_name), "w", encoding="utf-8") as fh:
        for rec in bundle.records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True))
            fh.write("\n")
    manifest_path = os.path.join(out_dir, f"{name}.manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def subsample(bundle: DatasetBundle, spec: SampleSpec) -> DatasetBundle:
    """Draw ``spec.count`` rows without replacement, deterministically.

    Uses a partial Fisher-Yates shuffle driven by NumPy's PCG64 generator
    seeded with ``spec.seed``, so identical (bundle, spec) inputs yield the
    same row sequence on every platform and thread count.
    """
    n = bundle.size
    if spec.count > n:
        raise ValidationError(f"sample count {spec.count} exceeds bundle size {n}")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    pool = np.arange(n, dtype=np.int64)
    for i in range(spec.count):
        j = i + int(rng.integers(0, n - i))
        pool[i], pool[j] = pool[j], pool[i]
    chosen = pool[: spec.count]
    return DatasetBundle(
        embeddings=bundle.embeddings[chosen].copy(),
        records=[bundle.records[int(i)] for i in chosen],
    )
