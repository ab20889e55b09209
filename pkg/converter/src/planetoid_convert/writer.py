"""Writer for the portable dataset directory format.

Five text files (UTF-8, LF): meta.json, edges.tsv, features.tsv,
labels.tsv, splits.json. Every file is emitted with its lines in sorted
order so a second conversion of the same input is byte-identical.
"""

from __future__ import annotations

import json
import os

import numpy as np


def write_dataset(
    out_dir: str,
    features: np.ndarray,
    edges: set,
    labels: np.ndarray,
    num_classes: int,
    train_idx,
    val_idx,
    test_idx,
) -> None:
    n, d = features.shape
    os.makedirs(out_dir, exist_ok=True)

    meta = {"num_nodes": int(n), "num_features": int(d), "num_classes": int(num_classes)}
    _write(out_dir, "meta.json", json.dumps(meta, sort_keys=True) + "\n")

    edge_lines = [f"{a}\t{b}\n" for a, b in sorted(edges)]
    _write(out_dir, "edges.tsv", "".join(edge_lines))

    rows, cols = np.nonzero(features)
    feature_lines = [
        f"{r}\t{c}\t{float(features[r, c])!r}\n" for r, c in zip(rows, cols)
    ]
    _write(out_dir, "features.tsv", "".join(feature_lines))

    label_lines = [f"{i}\t{int(labels[i])}\n" for i in range(n)]
    _write(out_dir, "labels.tsv", "".join(label_lines))

    splits = {
        "train": sorted(int(i) for i in train_idx),
        "val": sorted(int(i) for i in val_idx),
        "test": sorted(int(i) for i in test_idx),
    }
    _write(out_dir, "splits.json", json.dumps(splits, sort_keys=True) + "\n")


def _write(out_dir: str, name: str, text: str) -> None:
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
