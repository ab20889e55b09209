"""Stochastic view generation: feature corruption and graph diffusion.

A view is described declaratively by :class:`ViewConfig`. The feature side
is random (fresh Bernoulli masks every epoch); the adjacency side is
deterministic (normalized adjacency or a sparsified diffusion matrix), so
propagation matrices are computed once and cached across epochs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, PropagationMatrix, degree_vector, normalize_adjacency
from .rng import RngState
from .sparse import SparseMatrix

NODE_KINDS = ("identity", "node_dropout", "node_feature_dropout")
ADJACENCY_KINDS = ("normalized_adjacency", "ppr", "heat")
SOLVERS = ("auto", "exact", "iterative")

# dense linear solves above this size would need gigabytes; fall back to the
# truncated-series solver when solver="auto"
EXACT_SOLVE_MAX_NODES = 5000

# CSR products degrade badly once a sparsified diffusion matrix stops being
# sparse; above this fill fraction the propagation keeps a dense backing
# (the two backings are numerically interchangeable, see graph.spmm)
DENSE_BACKING_THRESHOLD = 0.25


@dataclass(frozen=True)
class NodeAugmentation:
    kind: str = "identity"
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node augmentation kind {self.kind!r}")
        if not (0.0 <= self.rate < 1.0):
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.rate}")


@dataclass(frozen=True)
class AdjacencyAugmentation:
    kind: str = "normalized_adjacency"
    alpha: float = 0.15  # teleport probability, used iff kind == "ppr"
    t: float = 5.0  # diffusion time, used iff kind == "heat"
    series_order: int = 50
    solver: str = "auto"
    sparsify_epsilon: float = 1e-4
    sparsify_top_k: int | None = None

    def __post_init__(self):
        if self.kind not in ADJACENCY_KINDS:
            raise ValueError(f"unknown adjacency augmentation kind {self.kind!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"teleport probability must lie in (0, 1], got {self.alpha}")
        if self.t <= 0.0:
            raise ValueError(f"diffusion time must be positive, got {self.t}")
        if self.series_order < 1:
            raise ValueError("series_order must be at least 1")
        if self.sparsify_epsilon < 0.0:
            raise ValueError("sparsify_epsilon must be non-negative")
        if self.sparsify_top_k is not None and self.sparsify_top_k < 1:
            raise ValueError("sparsify_top_k must be at least 1")


@dataclass(frozen=True)
class ViewConfig:
    node: NodeAugmentation = NodeAugmentation()
    adjacency: AdjacencyAugmentation = AdjacencyAugmentation()


def node_feature_dropout(x: np.ndarray, delta: float, rng: RngState) -> np.ndarray:
    """Zero each entry independently with probability delta.

    Surviving entries are scaled by 1/(1-delta) so the result equals the
    input in expectation. The input is never modified.
    """
    _check_rate(delta)
    x = np.asarray(x, dtype=np.float64)
    keep = rng.random(x.shape) >= delta
    return x * (keep / (1.0 - delta))


def node_dropout(x: np.ndarray, delta: float, rng: RngState) -> np.ndarray:
    """Zero entire rows with probability delta, scaling kept rows by 1/(1-delta)."""
    _check_rate(delta)
    x = np.asarray(x, dtype=np.float64)
    keep = rng.random(x.shape[0]) >= delta
    return x * (keep / (1.0 - delta))[:, None]


def _check_rate(delta: float) -> None:
    if not (0.0 <= delta < 1.0):
        raise ValueError(f"dropout rate must lie in [0, 1), got {delta}")


def _inv_sqrt_degrees(a: SparseMatrix, op_name: str) -> np.ndarray:
    deg = degree_vector(a)
    if np.any(deg == 0.0):
        bad = int(np.nonzero(deg == 0.0)[0][0])
        raise ValueError(
            f"{op_name} is undefined for zero-degree nodes (node {bad} has no edges); "
            "pre-add self-loops or remove isolated nodes first"
        )
    return deg


def ppr_diffusion(
    a: SparseMatrix, alpha: float, solver: str = "exact", series_order: int = 50
) -> np.ndarray:
    """Personalized-PageRank diffusion of a symmetric adjacency.

    With M = D^{-1/2} A D^{-1/2}, the exact solver returns
    alpha * (I - (1-alpha) M)^{-1} by dense linear solve; the iterative
    solver returns the truncated series alpha * sum_{k=0}^{K} ((1-alpha) M)^k,
    whose spectral-norm error is bounded by (1-alpha)^{K+1} / alpha.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"teleport probability must lie in (0, 1], got {alpha}")
    if solver not in ("exact", "iterative"):
        raise ValueError(f"unknown solver {solver!r}")
    deg = _inv_sqrt_degrees(a, "ppr diffusion")
    dinv = 1.0 / np.sqrt(deg)
    m = a.to_dense() * dinv[:, None] * dinv[None, :]
    n = a.num_rows
    eye = np.eye(n)
    if solver == "exact":
        return np.linalg.solve(eye - (1.0 - alpha) * m, alpha * eye)
    # Horner recurrence: S_k = alpha*I + (1-alpha) M S_{k-1}
    b = (1.0 - alpha) * m
    s = alpha * eye
    for _ in range(series_order):
        s = alpha * eye + b @ s
    return s


def heat_diffusion(a: SparseMatrix, t: float, series_order: int = 50) -> np.ndarray:
    """Heat-kernel diffusion exp(t A D^{-1} - t), truncated Taylor series.

    The transition matrix T = A D^{-1} is column-stochastic, so in exact
    arithmetic every column of the full series sums to 1; truncation at K
    leaves column sums within e^{-t} * sum_{k>K} t^k/k! of 1.
    """
    if t <= 0.0:
        raise ValueError(f"diffusion time must be positive, got {t}")
    if series_order < 1:
        raise ValueError("series_order must be at least 1")
    deg = _inv_sqrt_degrees(a, "heat diffusion")
    trans = a.to_dense() / deg[None, :]
    n = a.num_rows
    # fold e^{-t} into the k=0 term to keep intermediates bounded
    term = math.exp(-t) * np.eye(n)
    s = term.copy()
    for k in range(1, series_order + 1):
        term = (t / k) * (trans @ term)
        s += term
    return s


def heat_tail_bound(t: float, series_order: int) -> float:
    """Analytic bound on how far truncated heat-kernel column sums sit from 1."""
    partial = 0.0
    term = math.exp(-t)
    for k in range(series_order + 1):
        partial += term
        term *= t / (k + 1)
    return max(0.0, 1.0 - partial)


def ppr_series_bound(alpha: float, series_order: int) -> float:
    """Spectral-norm error bound of the truncated PPR series."""
    return (1.0 - alpha) ** (series_order + 1) / alpha


def ppr_order_for_tolerance(alpha: float, tol: float) -> int:
    """Smallest K with (1-alpha)^{K+1}/alpha below tol."""
    k = 0
    while ppr_series_bound(alpha, k) >= tol:
        k += 1
    return k


def sparsify(s: np.ndarray, epsilon: float) -> SparseMatrix:
    """Threshold a dense diffusion matrix back to sparse form.

    Entries below epsilon are dropped and each surviving row is rescaled so
    its sum matches the original row sum. A row whose every entry falls
    below the threshold keeps its single largest entry (carrying the whole
    row mass); rows that were entirely zero stay empty.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("expected a square matrix")
    if epsilon < 0.0:
        raise ValueError("epsilon must be non-negative")
    if np.any(s < 0.0):
        raise ValueError("negative entry in diffusion matrix")
    keep = (s >= epsilon) & (s > 0.0)
    row_sums = s.sum(axis=1)
    emptied = ~keep.any(axis=1) & (row_sums > 0.0)
    if np.any(emptied):
        keep[emptied, np.argmax(s[emptied], axis=1)] = True
    return _rescaled_csr(s, keep, row_sums)


def sparsify_top_k(s: np.ndarray, k: int) -> SparseMatrix:
    """Keep the k largest entries of each row, rescaling to the row sum."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("expected a square matrix")
    if k < 1:
        raise ValueError("k must be at least 1")
    if np.any(s < 0.0):
        raise ValueError("negative entry in diffusion matrix")
    n = s.shape[0]
    keep = np.zeros_like(s, dtype=bool)
    if k >= n:
        keep[:] = True
    else:
        top = np.argpartition(s, -k, axis=1)[:, -k:]
        keep[np.arange(n)[:, None], top] = True
    keep &= s > 0.0
    return _rescaled_csr(s, keep, s.sum(axis=1))


def _rescaled_csr(s: np.ndarray, keep: np.ndarray, row_sums: np.ndarray) -> SparseMatrix:
    kept_sums = np.where(keep, s, 0.0).sum(axis=1)
    scale = np.where(kept_sums > 0.0, row_sums / np.where(kept_sums == 0.0, 1.0, kept_sums), 1.0)
    values = np.where(keep, s * scale[:, None], 0.0)
    return SparseMatrix.from_dense(values)


def build_propagation(graph: Graph, config: AdjacencyAugmentation) -> PropagationMatrix:
    """Construct the (deterministic) propagation matrix for one view."""
    if config.kind == "normalized_adjacency":
        return normalize_adjacency(graph.adjacency)
    if config.kind == "ppr":
        solver = config.solver
        if solver == "auto":
            solver = "exact" if graph.num_nodes <= EXACT_SOLVE_MAX_NODES else "iterative"
        order = config.series_order
        if solver == "iterative":
            order = max(order, ppr_order_for_tolerance(config.alpha, 1e-6))
        dense = ppr_diffusion(graph.adjacency, config.alpha, solver=solver, series_order=order)
    else:
        dense = heat_diffusion(graph.adjacency, config.t, series_order=config.series_order)
    if config.sparsify_top_k is not None:
        sparse = sparsify_top_k(dense, config.sparsify_top_k)
    else:
        sparse = sparsify(dense, config.sparsify_epsilon)
    n = sparse.num_rows
    if n > 0 and sparse.nnz / (n * n) > DENSE_BACKING_THRESHOLD:
        return PropagationMatrix(matrix=sparse.to_dense(), kind=config.kind)
    return PropagationMatrix(matrix=sparse, kind=config.kind)


def augment_features(x: np.ndarray, config: NodeAugmentation, rng: RngState) -> np.ndarray:
    if config.kind == "identity":
        return np.asarray(x, dtype=np.float64)
    if config.kind == "node_dropout":
        return node_dropout(x, config.rate, rng)
    return node_feature_dropout(x, config.rate, rng)


def make_view(
    graph: Graph,
    config: ViewConfig,
    rng: RngState,
    propagation_cache: dict | None = None,
) -> tuple[np.ndarray, PropagationMatrix]:
    """Sample one augmented view of a graph.

    Feature corruption is re-drawn on every call; the propagation matrix is
    deterministic given the config, so when a cache dict is supplied it is
    computed once and reused across epochs.
    """
    if propagation_cache is not None and config.adjacency in propagation_cache:
        propagation = propagation_cache[config.adjacency]
    else:
        propagation = build_propagation(graph, config.adjacency)
        if propagation_cache is not None:
            propagation_cache[config.adjacency] = propagation
    features = augment_features(graph.features, config.node, rng)
    return features, propagation
