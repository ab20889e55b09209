import os

import numpy as np
import pytest

from graphboot import Graph, LabeledDataset, SparseMatrix


def symmetric_adjacency(n: int, edge_prob: float, rng: np.random.Generator, connected=True) -> SparseMatrix:
    """Random undirected adjacency; a chain keeps every node reachable."""
    dense = np.triu((rng.random((n, n)) < edge_prob).astype(np.float64), k=1)
    if connected:
        for i in range(n - 1):
            dense[i, i + 1] = 1.0
    dense = dense + dense.T
    return SparseMatrix.from_dense(dense)


def cluster_dataset(
    n=30,
    clusters=2,
    d=12,
    p_in=0.5,
    p_out=0.05,
    feature_strength=0.6,
    feature_noise=0.05,
    seed=7,
    train_per_class=5,
    val_per_class=2,
) -> LabeledDataset:
    """Planted-partition graph with cluster-correlated bag-of-words features.

    Splits are stratified so every class appears in every split.
    """
    rng = np.random.default_rng(seed)
    sizes = [n // clusters + (1 if k < n % clusters else 0) for k in range(clusters)]
    labels = np.repeat(np.arange(clusters), sizes)

    dense = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                dense[i, j] = dense[j, i] = 1.0
    for i in range(n):  # no isolated nodes
        if dense[i].sum() == 0:
            j = (i + 1) % n
            dense[i, j] = dense[j, i] = 1.0

    block = max(1, d // clusters)
    x = np.zeros((n, d))
    for i in range(n):
        own = labels[i] * block
        x[i, own : own + block] = (rng.random(block) < feature_strength).astype(float)
        x[i] += (rng.random(d) < feature_noise).astype(float)
    x = np.minimum(x, 1.0)
    x[x.sum(axis=1) == 0, 0] = 1.0

    train, val, test = [], [], []
    for k in range(clusters):
        members = rng.permutation(np.nonzero(labels == k)[0])
        train.extend(members[:train_per_class])
        val.extend(members[train_per_class : train_per_class + val_per_class])
        test.extend(members[train_per_class + val_per_class :])

    graph = Graph(num_nodes=n, num_features=d, features=x, adjacency=SparseMatrix.from_dense(dense))
    return LabeledDataset(
        graph=graph,
        labels=labels,
        num_classes=clusters,
        train_idx=np.array(sorted(train)),
        val_idx=np.array(sorted(val)),
        test_idx=np.array(sorted(test)),
    )


@pytest.fixture
def small_dataset() -> LabeledDataset:
    return cluster_dataset()


@pytest.fixture
def path_adjacency() -> SparseMatrix:
    return SparseMatrix.from_dense(
        np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    )


def converted_dataset_dir(name: str) -> str | None:
    """Locate a converted benchmark dataset, or None when not supplied.

    Looks in $GRAPHBOOT_DATA_DIR, then ./data relative to the repo root.
    """
    roots = []
    env = os.environ.get("GRAPHBOOT_DATA_DIR")
    if env:
        roots.append(env)
    roots.append(os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data"))
    for root in roots:
        candidate = os.path.join(root, name)
        if os.path.isfile(os.path.join(candidate, "meta.json")):
            return candidate
    return None


def require_dataset(name: str) -> str:
    path = converted_dataset_dir(name)
    if path is None:
        pytest.skip(
            f"converted {name} dataset not available; this sandbox has no network "
            f"access to fetch the raw files. Supply them and run the converter "
            f"(see README), placing the output under data/{name} or $GRAPHBOOT_DATA_DIR/{name}."
        )
    return path
