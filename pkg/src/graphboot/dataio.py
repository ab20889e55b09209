"""Portable dataset directory format.

A dataset lives in one directory of five UTF-8 text files:

* ``meta.json``     -- ``{"num_nodes": n, "num_features": d, "num_classes": c}``
* ``edges.tsv``     -- one ``src<TAB>dst`` per line, 0-indexed, each
  undirected edge listed once, no self-loops
* ``features.tsv``  -- sparse triplets ``node<TAB>feature_index<TAB>value``;
  omitted entries are zero
* ``labels.tsv``    -- ``node<TAB>class_index``, exactly one line per node
* ``splits.json``   -- ``{"train": [...], "val": [...], "test": [...]}``

Loading is forgiving about duplicate or reversed edge lines (raw citation
dumps contain both; they are merged) and strict about everything else:
every structural problem is reported with the file and line it came from.
Split arrays are canonicalized to sorted order on load; they are index
sets, so order carries no meaning.
"""

from __future__ import annotations

import json
import os

import numpy as np
import scipy.sparse as sp

from .errors import DataFormatError
from .graph import Graph, LabeledDataset
from .sparse import SparseMatrix

_FILES = ("meta.json", "edges.tsv", "features.tsv", "labels.tsv", "splits.json")


def load_dataset(path: str) -> LabeledDataset:
    """Read a dataset directory into a validated :class:`LabeledDataset`."""
    for name in _FILES:
        if not os.path.isfile(os.path.join(path, name)):
            raise DataFormatError(f"missing required file {name!r}", path=path)

    meta = _load_meta(os.path.join(path, "meta.json"))
    n, d, c = meta["num_nodes"], meta["num_features"], meta["num_classes"]

    adjacency = _load_edges(os.path.join(path, "edges.tsv"), n)
    features = _load_features(os.path.join(path, "features.tsv"), n, d)
    labels = _load_labels(os.path.join(path, "labels.tsv"), n, c)
    train_idx, val_idx, test_idx = _load_splits(os.path.join(path, "splits.json"), n)

    graph = Graph(num_nodes=n, num_features=d, features=features, adjacency=adjacency)
    return LabeledDataset(
        graph=graph,
        labels=labels,
        num_classes=c,
        train_idx=train_idx,
        val_idx=val_idx,
        test_idx=test_idx,
    )


def save_dataset(ds: LabeledDataset, path: str) -> None:
    """Write a dataset back out in the portable format.

    All lines are emitted in sorted order so that saving the same dataset
    twice produces byte-identical directories.
    """
    os.makedirs(path, exist_ok=True)
    n = ds.graph.num_nodes

    meta = {
        "num_nodes": n,
        "num_features": ds.graph.num_features,
        "num_classes": ds.num_classes,
    }
    _write_text(os.path.join(path, "meta.json"), json.dumps(meta, sort_keys=True) + "\n")

    adj = ds.graph.adjacency
    rows = adj.row_ids()
    cols = adj.col_indices
    upper = rows < cols  # each undirected edge once
    edge_lines = [f"{r}\t{c}\n" for r, c in zip(rows[upper], cols[upper])]
    _write_text(os.path.join(path, "edges.tsv"), "".join(sorted_edges(edge_lines)))

    feat_lines = []
    nz_rows, nz_cols = np.nonzero(ds.graph.features)
    for r, c in zip(nz_rows, nz_cols):
        feat_lines.append(f"{r}\t{c}\t{_fmt(ds.graph.features[r, c])}\n")
    _write_text(os.path.join(path, "features.tsv"), "".join(feat_lines))

    label_lines = [f"{i}\t{ds.labels[i]}\n" for i in range(n)]
    _write_text(os.path.join(path, "labels.tsv"), "".join(label_lines))

    splits = {
        "train": sorted(int(i) for i in ds.train_idx),
        "val": sorted(int(i) for i in ds.val_idx),
        "test": sorted(int(i) for i in ds.test_idx),
    }
    _write_text(os.path.join(path, "splits.json"), json.dumps(splits, sort_keys=True) + "\n")


def sorted_edges(lines):
    """Sort edge lines numerically by (src, dst)."""
    def key(line):
        a, b = line.split()
        return (int(a), int(b))

    return sorted(lines, key=key)


def _fmt(v: float) -> str:
    # repr round-trips doubles exactly and is stable across runs
    return repr(float(v))


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _load_meta(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            meta = json.load(f)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"invalid JSON: {e}", path=path) from e
    if not isinstance(meta, dict):
        raise DataFormatError("meta.json must contain an object", path=path)
    out = {}
    for key in ("num_nodes", "num_features", "num_classes"):
        value = meta.get(key)
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise DataFormatError(f"field {key!r} must be a non-negative integer", path=path)
        out[key] = value
    return out


def _load_edges(path: str, n: int) -> SparseMatrix:
    pairs = set()
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(
                    f"expected 'src<TAB>dst', got {line!r}", path=path, line=lineno
                )
            try:
                src, dst = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataFormatError(
                    f"non-integer edge endpoint in {line!r}", path=path, line=lineno
                ) from None
            if src == dst:
                raise DataFormatError(f"self-loop edge {src} {dst}", path=path, line=lineno)
            if not (0 <= src < n and 0 <= dst < n):
                raise DataFormatError(
                    f"edge endpoint out of range [0, {n}): {line!r}", path=path, line=lineno
                )
            # duplicates and reversed duplicates merge silently
            pairs.add((min(src, dst), max(src, dst)))
    if pairs:
        arr = np.array(sorted(pairs), dtype=np.int64)
        r = np.concatenate([arr[:, 0], arr[:, 1]])
        c = np.concatenate([arr[:, 1], arr[:, 0]])
        coo = sp.coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
        return SparseMatrix.from_scipy(coo)
    return SparseMatrix.from_scipy(sp.csr_matrix((n, n), dtype=np.float64))


def _load_features(path: str, n: int, d: int) -> np.ndarray:
    x = np.zeros((n, d), dtype=np.float64)
    filled = set()
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataFormatError(
                    f"expected 'node<TAB>feature<TAB>value', got {line!r}",
                    path=path,
                    line=lineno,
                )
            try:
                node, feat = int(parts[0]), int(parts[1])
                value = float(parts[2])
            except ValueError:
                raise DataFormatError(f"malformed triplet {line!r}", path=path, line=lineno) from None
            if not (0 <= node < n):
                raise DataFormatError(f"node index {node} out of range [0, {n})", path=path, line=lineno)
            if not (0 <= feat < d):
                raise DataFormatError(f"feature index {feat} out of range [0, {d})", path=path, line=lineno)
            if not np.isfinite(value):
                raise DataFormatError(f"non-finite feature value {parts[2]!r}", path=path, line=lineno)
            if (node, feat) in filled:
                raise DataFormatError(
                    f"duplicate feature entry for node {node}, feature {feat}",
                    path=path,
                    line=lineno,
                )
            filled.add((node, feat))
            x[node, feat] = value
    return x


def _load_labels(path: str, n: int, c: int) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(
                    f"expected 'node<TAB>class_index', got {line!r}", path=path, line=lineno
                )
            try:
                node, label = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataFormatError(f"malformed label line {line!r}", path=path, line=lineno) from None
            if not (0 <= node < n):
                raise DataFormatError(f"node index {node} out of range [0, {n})", path=path, line=lineno)
            if not (0 <= label < c):
                raise DataFormatError(
                    f"class index {label} out of range [0, {c})", path=path, line=lineno
                )
            if labels[node] != -1:
                raise DataFormatError(f"node {node} labeled twice", path=path, line=lineno)
            labels[node] = label
    missing = np.nonzero(labels == -1)[0]
    if len(missing):
        raise DataFormatError(
            f"{len(missing)} node(s) missing a label (first: {int(missing[0])})", path=path
        )
    return labels


def _load_splits(path: str, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        with open(path, encoding="utf-8") as f:
            splits = json.load(f)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"invalid JSON: {e}", path=path) from e
    if not isinstance(splits, dict):
        raise DataFormatError("splits.json must contain an object", path=path)
    out = []
    for key in ("train", "val", "test"):
        arr = splits.get(key)
        if not isinstance(arr, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) for i in arr
        ):
            raise DataFormatError(f"field {key!r} must be an array of integers", path=path)
        idx = np.array(sorted(arr), dtype=np.int64)
        if len(idx) and (idx[0] < 0 or idx[-1] >= n):
            raise DataFormatError(f"{key} index out of range [0, {n})", path=path)
        out.append(idx)
    return tuple(out)
