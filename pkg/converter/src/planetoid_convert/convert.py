"""Assemble a raw Planetoid bundle into the portable directory format.

Node ids are global: the non-test nodes occupy 0..len(allx)-1 and the test
nodes occupy the ids listed in test.index. Citeseer's test.index has gaps
(a few test-set papers are isolated and were dropped from the raw feature
blocks); the standard fix applies: the missing ids become nodes with
all-zero features and class 0, and belong to no split.

Splits follow the standard protocol: the labeled nodes (20 per class) are
the train split, the next ``val_size`` nodes (500) are validation, and
test.index is the test split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raw import RawBundleError, RawPlanetoidBundle
from .writer import write_dataset

# edge counts as usually cited for these benchmarks; raw dumps contain
# duplicate and reversed entries, so the post-dedup count is reported
# alongside for comparison
PUBLISHED_EDGE_COUNTS = {"cora": 5429, "citeseer": 4732, "pubmed": 44338}


@dataclass(frozen=True)
class ConversionReport:
    name: str
    num_nodes: int
    num_features: int
    num_classes: int
    undirected_edges: int
    self_loops_dropped: int
    duplicate_entries_merged: int
    published_edge_count: int | None
    isolated_test_nodes: int

    def summary(self) -> str:
        lines = [
            f"{self.name}: {self.num_nodes} nodes, {self.num_features} features, "
            f"{self.num_classes} classes",
            f"undirected edges after dedup: {self.undirected_edges}"
            + (
                f" (published figure: {self.published_edge_count})"
                if self.published_edge_count is not None
                else ""
            ),
            f"merged duplicate/reversed entries: {self.duplicate_entries_merged}, "
            f"self-loops dropped: {self.self_loops_dropped}",
        ]
        if self.isolated_test_nodes:
            lines.append(
                f"inserted {self.isolated_test_nodes} zero-feature rows for "
                f"isolated test nodes"
            )
        return "\n".join(lines)


def convert(bundle: RawPlanetoidBundle, out_dir: str, val_size: int = 500) -> ConversionReport:
    x = bundle.load_sparse("x")
    y = bundle.load_labels("y")
    tx = bundle.load_sparse("tx")
    ty = bundle.load_labels("ty")
    allx = bundle.load_sparse("allx")
    ally = bundle.load_labels("ally")
    graph = bundle.load_graph()
    test_ids = bundle.load_test_index()

    d = allx.shape[1]
    num_classes = y.shape[1]
    for name, block, width in (("x", x, d), ("tx", tx, d)):
        if block.shape[1] != width:
            raise RawBundleError(
                f"feature width mismatch: {name} has {block.shape[1]} columns, allx has {width}"
            )
    for name, block in (("y", y), ("ty", ty), ("ally", ally)):
        if block.shape[1] != num_classes:
            raise RawBundleError(f"label width mismatch in {name}")
    if x.shape[0] != y.shape[0] or tx.shape[0] != ty.shape[0] or allx.shape[0] != ally.shape[0]:
        raise RawBundleError("feature/label row counts disagree")
    if len(test_ids) != tx.shape[0]:
        raise RawBundleError(
            f"test.index lists {len(test_ids)} nodes but tx has {tx.shape[0]} rows"
        )
    if len(set(test_ids)) != len(test_ids):
        raise RawBundleError("test.index contains duplicates")

    n_known = allx.shape[0]
    lo, hi = min(test_ids), max(test_ids)
    if lo < n_known:
        raise RawBundleError(
            f"test index {lo} overlaps the non-test block (0..{n_known - 1})"
        )
    n = hi + 1
    isolated = (hi - lo + 1) - len(test_ids)

    features = np.zeros((n, d))
    features[:n_known] = allx.toarray()
    features[np.asarray(test_ids)] = tx.toarray()

    onehot = np.zeros((n, num_classes))
    onehot[:n_known] = ally
    onehot[np.asarray(test_ids)] = ty
    labels = np.argmax(onehot, axis=1)

    # the labeled training block must be the head of allx
    if not np.array_equal(x.toarray(), features[: x.shape[0]]):
        raise RawBundleError("x does not match the first rows of allx")
    if not np.array_equal(y, ally[: y.shape[0]]):
        raise RawBundleError("y does not match the first rows of ally")

    edges = set()
    self_loops = 0
    raw_entries = 0
    for node, neighbors in graph.items():
        node = int(node)
        if not (0 <= node < n):
            raise RawBundleError(f"graph key {node} out of range [0, {n})")
        for neighbor in neighbors:
            neighbor = int(neighbor)
            raw_entries += 1
            if not (0 <= neighbor < n):
                raise RawBundleError(
                    f"neighbor {neighbor} of node {node} out of range [0, {n})"
                )
            if neighbor == node:
                self_loops += 1
                continue
            edges.add((min(node, neighbor), max(node, neighbor)))

    train_idx = list(range(y.shape[0]))
    if y.shape[0] + val_size > n_known:
        raise RawBundleError(
            f"validation split needs {val_size} nodes after the {y.shape[0]} "
            f"training nodes, but only {n_known - y.shape[0]} are available"
        )
    val_idx = list(range(y.shape[0], y.shape[0] + val_size))
    test_idx = sorted(test_ids)

    write_dataset(out_dir, features, edges, labels, num_classes, train_idx, val_idx, test_idx)
    return ConversionReport(
        name=bundle.name,
        num_nodes=n,
        num_features=d,
        num_classes=num_classes,
        undirected_edges=len(edges),
        self_loops_dropped=self_loops,
        duplicate_entries_merged=raw_entries - self_loops - 2 * len(edges),
        published_edge_count=PUBLISHED_EDGE_COUNTS.get(bundle.name),
        isolated_test_nodes=isolated,
    )
