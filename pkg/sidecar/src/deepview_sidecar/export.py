"""Bundle export: raw text corpus -> manifest + f32 blob + records JSONL.

The input is JSON Lines with at least a "text" field per line; "id",
"label" and "dataset_tag" are carried through when present, and each
record gains a "predicted" field from the model's own head so exported
bundles are immediately inspectable.
"""

from __future__ import annotations

import json
import os

from .model import SplitClassifier


def read_corpus(path: str | os.PathLike) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: not valid JSON: {exc}") from exc
            if "text" not in obj or not isinstance(obj["text"], str):
                raise ValueError(f"line {lineno}: missing 'text' field")
            rows.append(obj)
    if not rows:
        raise ValueError(f"{path} contains no records")
    return rows


def export_bundle(corpus_path: str | os.PathLike, classifier: SplitClassifier,
                  out_dir: str | os.PathLike, name: str = "bundle") -> str:
    """Encode a corpus and write a loadable bundle; returns the manifest path."""
    rows = read_corpus(corpus_path)
    texts = [row["text"] for row in rows]
    vectors, probs = classifier.predict_texts(texts)
    predicted = probs.argmax(axis=1)

    os.makedirs(out_dir, exist_ok=True)
    data_name = f"{name}.f32"
    records_name = f"{name}.records.jsonl"
    with open(os.path.join(out_dir, data_name), "wb") as fh:
        fh.write(vectors.astype("<f4", copy=False).tobytes())

    seen_ids = set()
    with open(os.path.join(out_dir, records_name), "w", encoding="utf-8") as fh:
        for i, row in enumerate(rows):
            rec = {"id": str(row.get("id", f"r{i}")), "text": row["text"],
                   "predicted": int(predicted[i])}
            if rec["id"] in seen_ids:
                raise ValueError(f"duplicate id {rec['id']!r} at line {i}")
            seen_ids.add(rec["id"])
            if "label" in row and row["label"] is not None:
                rec["label"] = int(row["label"])
            if "dataset_tag" in row and row["dataset_tag"] is not None:
                rec["dataset_tag"] = str(row["dataset_tag"])
            fh.write(json.dumps(rec, sort_keys=True))
            fh.write("\n")

    manifest = {
        "n_rows": vectors.shape[0],
        "n_cols": vectors.shape[1],
        "dtype": "f32",
        "byte_order": "little",
        "data": data_name,
        "records": records_name,
    }
    manifest_path = os.path.join(out_dir, f"{name}.manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path
