"""On-disk dataset format: a JSON manifest plus plain-text matrix files.

A dataset directory contains `manifest.json` and one matrix file per view.
Each matrix file holds N blocks (one per subject) of M whitespace-separated
rows, with a blank line between blocks. Numbers are written with 17
significant digits so that every emitted value re-parses bit-exactly.
Labels, when present, are one integer (1..K) per line.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensors import GraphViewTensor, symmetrize_slices

FORMAT_VERSION = 1
_FLOAT_FMT = "%.17g"
# loader-side symmetry tolerance: small drift is averaged away, anything
# larger is rejected as wrong data
LOADER_SYMMETRY_TOL = 1e-6


class DatasetError(ValueError):
    """Malformed manifest or matrix/label file."""


@dataclass(frozen=True)
class Dataset:
    views: list[GraphViewTensor]
    labels: np.ndarray | None
    view_names: list[str]
    metadata: dict = field(default_factory=dict)

    @property
    def subject_count(self) -> int:
        return self.views[0].subject_count


def save_matrix(path: Path | str, matrix: np.ndarray, comment: str = "") -> None:
    """Write a 2-D array as delimited text with a dimension header."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    header = f"{m.shape[0]} {m.shape[1]}" + (f" {comment}" if comment else "")
    np.savetxt(path, m, fmt=_FLOAT_FMT, header=header)


def load_matrix(path: Path | str) -> np.ndarray:
    m = np.loadtxt(path, ndmin=2)
    return m


def _write_view_file(path: Path, view: GraphViewTensor) -> None:
    blocks = []
    for n in range(view.subject_count):
        rows = [" ".join(_FLOAT_FMT % x for x in row) for row in view.data[:, :, n]]
        blocks.append("\n".join(rows))
    path.write_text("\n\n".join(blocks) + "\n")


def _read_view_file(path: Path, name: str, nodes: int, subjects: int) -> GraphViewTensor:
    if not path.exists():
        raise DatasetError(f"view '{name}': matrix file {path} is missing")
    chunks = [c for c in path.read_text().split("\n\n") if c.strip()]
    if len(chunks) != subjects:
        raise DatasetError(
            f"view '{name}': found {len(chunks)} matrix blocks, manifest says {subjects}"
        )
    slices = []
    for n, chunk in enumerate(chunks):
        try:
            block = np.array([[float(x) for x in line.split()]
                              for line in chunk.strip().splitlines()])
        except ValueError as exc:
            raise DatasetError(f"view '{name}': unparsable block {n}: {exc}") from exc
        if block.shape != (nodes, nodes):
            raise DatasetError(
                f"view '{name}': block {n} has shape {block.shape}, "
                f"manifest says ({nodes}, {nodes})"
            )
        slices.append(block)
    data = np.stack(slices, axis=2)
    if not np.isfinite(data).all():
        raise DatasetError(f"view '{name}': non-finite entries")
    try:
        data = symmetrize_slices(data, LOADER_SYMMETRY_TOL)
    except ValueError as exc:
        raise DatasetError(f"view '{name}': {exc}") from exc
    return GraphViewTensor(data)


def save_dataset(path: Path | str, views: list[GraphViewTensor],
                 labels: np.ndarray | None = None,
                 view_names: list[str] | None = None,
                 metadata: dict | None = None) -> Path:
    """Write a dataset directory; returns the manifest path."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    names = view_names or [f"view{v + 1}" for v in range(len(views))]
    if len(names) != len(views):
        raise DatasetError("one name per view required")
    subjects = {v.subject_count for v in views}
    if len(subjects) != 1:
        raise DatasetError(f"views disagree on subject count: {sorted(subjects)}")
    manifest = {
        "format_version": FORMAT_VERSION,
        "subject_count": views[0].subject_count,
        "views": [],
        "metadata": metadata or {},
    }
    for name, view in zip(names, views):
        fname = f"{name}.txt"
        _write_view_file(root / fname, view)
        manifest["views"].append({
            "name": name,
            "node_count": view.node_count,
            "subject_count": view.subject_count,
            "matrix_file": fname,
        })
    if labels is not None:
        labels = np.asarray(labels, dtype=int)
        if labels.shape != (views[0].subject_count,):
            raise DatasetError("labels must hold one integer per subject")
        (root / "labels.txt").write_text("\n".join(str(x) for x in labels) + "\n")
        manifest["labels_file"] = "labels.txt"
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def load_dataset(path: Path | str) -> Dataset:
    """Load and validate a dataset directory (or its manifest file)."""
    p = Path(path)
    manifest_path = p / "manifest.json" if p.is_dir() else p
    root = manifest_path.parent
    if not manifest_path.exists():
        raise DatasetError(f"manifest {manifest_path} is missing")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest does not parse: {exc}") from exc
    subjects = int(manifest.get("subject_count", 0))
    entries = manifest.get("views", [])
    if subjects < 1 or not entries:
        raise DatasetError("manifest needs a positive subject_count and views")

    declared = {e.get("name", f"view{i + 1}"): int(e.get("subject_count", subjects))
                for i, e in enumerate(entries)}
    if len(set(declared.values())) > 1:
        pairs = ", ".join(f"{n}={s}" for n, s in declared.items())
        raise DatasetError(f"views disagree on subject count: {pairs}")

    views, names = [], []
    for i, entry in enumerate(entries):
        name = entry.get("name", f"view{i + 1}")
        nodes = int(entry.get("node_count", 0))
        if nodes < 1:
            raise DatasetError(f"view '{name}': node_count must be positive")
        if "matrix_file" not in entry:
            raise DatasetError(f"view '{name}': manifest entry lacks a matrix_file")
        views.append(_read_view_file(root / entry["matrix_file"], name, nodes, subjects))
        names.append(name)

    labels = None
    if manifest.get("labels_file"):
        label_path = root / manifest["labels_file"]
        if not label_path.exists():
            raise DatasetError(f"labels file {label_path} is missing")
        raw = [line for line in label_path.read_text().split() if line]
        try:
            labels = np.array([int(x) for x in raw])
        except ValueError as exc:
            raise DatasetError(f"labels must be integers: {exc}") from exc
        if labels.shape != (subjects,):
            raise DatasetError(
                f"labels file holds {labels.size} entries, manifest says {subjects}"
            )
        if labels.min() < 1:
            raise DatasetError("labels must be positive integers (1..K)")
    return Dataset(views, labels, names, manifest.get("metadata", {}))
