"""Graph data model and the deterministic matrix normalizations.

Dense matrices are plain float64 ``numpy.ndarray`` (row-major); sparse
matrices use :class:`~graphboot.sparse.SparseMatrix`. All structures are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix

PROPAGATION_KINDS = ("normalized_adjacency", "ppr", "heat")


@dataclass(frozen=True)
class PropagationMatrix:
    """The n-by-n operator a graph convolution propagates with.

    Either the symmetrically normalized adjacency with self-loops, or a
    sparsified diffusion matrix that replaces it.
    """

    matrix: object  # SparseMatrix or 2-D ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in PROPAGATION_KINDS:
            raise ValueError(f"unknown propagation kind {self.kind!r}")
        r, c = self.shape
        if r != c:
            raise ValueError("propagation matrix must be square")
        if isinstance(self.matrix, np.ndarray):
            if not np.all(np.isfinite(self.matrix)):
                raise ValueError("non-finite entry in propagation matrix")
        # SparseMatrix validates finiteness itself

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def num_rows(self) -> int:
        return self.shape[0]

    @property
    def num_cols(self) -> int:
        return self.shape[1]

    def to_dense(self) -> np.ndarray:
        if isinstance(self.matrix, SparseMatrix):
            return self.matrix.to_dense()
        return np.array(self.matrix)


@dataclass(frozen=True)
class Graph:
    """Node features plus an undirected, self-loop-free adjacency."""

    num_nodes: int
    num_features: int
    features: np.ndarray
    adjacency: SparseMatrix

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        if self.features.shape != (self.num_nodes, self.num_features):
            raise ValueError(
                f"feature matrix shape {self.features.shape} does not match "
                f"({self.num_nodes}, {self.num_features})"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValueError("non-finite feature value")
        adj = self.adjacency
        if adj.shape != (self.num_nodes, self.num_nodes):
            raise ValueError("adjacency must be square with num_rows = num_nodes")
        if np.any(adj.diagonal() != 0.0):
            raise ValueError("adjacency diagonal must be zero (self-loops are added by normalization only)")
        if not adj.is_symmetric():
            raise ValueError("adjacency must be symmetric")


@dataclass(frozen=True)
class LabeledDataset:
    graph: Graph
    labels: np.ndarray
    num_classes: int
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        for name in ("train_idx", "val_idx", "test_idx"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        n = self.graph.num_nodes
        if self.labels.shape != (n,):
            raise ValueError(f"labels must have length {n}")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("label out of range")
        seen = set()
        for name in ("train_idx", "val_idx", "test_idx"):
            idx = getattr(self, name)
            if len(idx) and (idx.min() < 0 or idx.max() >= n):
                raise ValueError(f"{name} contains an index outside [0, {n})")
            s = set(idx.tolist())
            if len(s) != len(idx):
                raise ValueError(f"{name} contains duplicates")
            if seen & s:
                raise ValueError("train/val/test index sets must be pairwise disjoint")
            seen |= s


def row_normalize_features(x: np.ndarray) -> np.ndarray:
    """Divide each row by its sum; all-zero rows pass through unchanged.

    Inputs are bag-of-words style counts, so entries must be non-negative.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("negative feature entry; row normalization expects non-negative counts")
    sums = x.sum(axis=1)
    divisors = np.where(sums == 0.0, 1.0, sums)
    return x / divisors[:, None]


def degree_vector(a: SparseMatrix) -> np.ndarray:
    """Row sums of the adjacency (degrees, no self-loops involved)."""
    if a.num_rows != a.num_cols:
        raise ValueError("degree_vector expects a square matrix")
    return np.asarray(a.to_scipy().sum(axis=1)).ravel()


def normalize_adjacency(a: SparseMatrix) -> PropagationMatrix:
    """Symmetric normalization with self-loops added to the adjacency.

    Returns D^{-1/2} (A + I) D^{-1/2} where D holds the row sums of A + I.
    Each output entry is computed as value * (dinv[row] * dinv[col]), so the
    result is exactly symmetric for symmetric input.
    """
    if a.num_rows != a.num_cols:
        raise ValueError("adjacency must be square")
    if np.any(a.diagonal() != 0.0):
        raise ValueError("adjacency must have a zero diagonal")
    if not a.is_symmetric():
        raise ValueError("adjacency must be symmetric")
    n = a.num_rows
    with_loops = SparseMatrix.from_scipy(
        a.to_scipy() + np.float64(1.0) * _scipy_identity(n)
    )
    deg = np.asarray(with_loops.to_scipy().sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(deg)
    rows = with_loops.row_ids()
    cols = with_loops.col_indices
    scaled = with_loops.values * (dinv[rows] * dinv[cols])
    result = SparseMatrix(
        num_rows=n,
        num_cols=n,
        row_offsets=with_loops.row_offsets,
        col_indices=cols,
        values=scaled,
    )
    return PropagationMatrix(matrix=result, kind="normalized_adjacency")


def spmm(p: PropagationMatrix, x: np.ndarray) -> np.ndarray:
    """Propagation-matrix times dense-matrix product.

    Sparse and dense backings give the same result up to accumulation
    rounding. The sparse kernel is scipy's sequential CSR loop (per output
    row, stored column order), so results are reproducible.
    """
    x = np.asarray(x, dtype=np.float64)
    if p.num_cols != x.shape[0]:
        raise ValueError(f"dimension mismatch: {p.shape} @ {x.shape}")
    if isinstance(p.matrix, SparseMatrix):
        return p.matrix.matmul_dense(x)
    return p.matrix @ x


def _scipy_identity(n: int):
    import scipy.sparse as sp

    return sp.identity(n, format="csr", dtype=np.float64)
