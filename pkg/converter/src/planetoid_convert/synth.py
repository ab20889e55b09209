"""Synthetic planted-partition datasets for tests and demos.

Nodes split into balanced clusters; an edge appears with probability p_in
inside a cluster and p_out across clusters. Features are bag-of-words-like:
each cluster owns a block of feature columns that its members activate with
high probability, plus uniform background noise. Labels are the cluster
ids; splits are balanced at one fifth train, one fifth validation, the rest
test (at least one node per class in each).

p_in = p_out is allowed on purpose: it yields a label-uninformative graph
that serves as a negative-control fixture.
"""

from __future__ import annotations

import numpy as np

from .writer import write_dataset


def synth(
    n: int,
    clusters: int,
    p_in: float,
    p_out: float,
    d: int,
    seed: int,
    out_dir: str,
    feature_strength: float = 0.6,
    feature_noise: float = 0.05,
) -> None:
    if not (n >= clusters >= 2):
        raise ValueError("need n >= clusters >= 2")
    if not (0.0 <= p_out <= p_in <= 1.0):
        raise ValueError("need 0 <= p_out <= p_in <= 1")
    if d < clusters:
        raise ValueError("need at least one feature column per cluster")

    rng = np.random.Generator(np.random.PCG64(int(seed)))
    sizes = [n // clusters + (1 if k < n % clusters else 0) for k in range(clusters)]
    if min(sizes) < 3:
        raise ValueError("each cluster needs at least 3 nodes to fill train/val/test")
    labels = np.repeat(np.arange(clusters), sizes)

    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                edges.add((i, j))
    # keep the graph usable downstream: tie isolated nodes to a same-cluster peer
    degree = np.zeros(n, dtype=int)
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    for i in range(n):
        if degree[i] == 0:
            peers = np.nonzero(labels == labels[i])[0]
            peers = peers[peers != i]
            j = int(peers[0]) if len(peers) else (i + 1) % n
            edges.add((min(i, j), max(i, j)))
            degree[i] += 1
            degree[j] += 1

    block = d // clusters
    features = np.zeros((n, d))
    for i in range(n):
        own = labels[i] * block
        features[i, own : own + block] = (rng.random(block) < feature_strength).astype(float)
        features[i] = np.maximum(features[i], (rng.random(d) < feature_noise).astype(float))
    features[features.sum(axis=1) == 0, 0] = 1.0

    train_idx, val_idx, test_idx = [], [], []
    for k in range(clusters):
        members = rng.permutation(np.nonzero(labels == k)[0])
        n_train = max(1, len(members) // 5)
        n_val = max(1, len(members) // 5)
        train_idx.extend(int(i) for i in members[:n_train])
        val_idx.extend(int(i) for i in members[n_train : n_train + n_val])
        test_idx.extend(int(i) for i in members[n_train + n_val :])

    write_dataset(out_dir, features, edges, labels, clusters, train_idx, val_idx, test_idx)
