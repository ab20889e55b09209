"""Compressed sparse row matrices.

``SparseMatrix`` is a validated CSR container: row ``i`` owns the half-open
slice ``row_offsets[i]:row_offsets[i+1]`` of ``col_indices``/``values``,
column indices are strictly increasing within a row, and explicit zeros are
never stored. Products are delegated to scipy's CSR kernels, which run
single-threaded and accumulate each output row sequentially in stored column
order, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class SparseMatrix:
    num_rows: int
    num_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", np.asarray(self.row_offsets, dtype=np.int64))
        object.__setattr__(self, "col_indices", np.asarray(self.col_indices, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        ro, ci, v = self.row_offsets, self.col_indices, self.values
        if self.num_rows < 0 or self.num_cols < 0:
            raise ValueError("negative dimensions")
        if ro.shape != (self.num_rows + 1,):
            raise ValueError(f"row_offsets must have length num_rows+1, got {ro.shape}")
        if ci.shape != v.shape or ci.ndim != 1:
            raise ValueError("col_indices and values must be 1-D arrays of equal length")
        if ro[0] != 0 or ro[-1] != len(ci):
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if len(ci):
            if ci.min() < 0 or ci.max() >= self.num_cols:
                raise ValueError("column index out of range")
        if len(ci) > 1:
            # strictly increasing columns inside each row; positions that
            # start a new row are exempt from the comparison
            starts = np.zeros(len(ci), dtype=bool)
            inner = ro[1:-1]
            starts[inner[inner < len(ci)]] = True
            if not np.all((np.diff(ci) > 0) | starts[1:]):
                raise ValueError("col_indices must be strictly increasing within each row")
        if np.any(v == 0.0):
            raise ValueError("explicit zero values are not allowed")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite value in sparse matrix")

    @property
    def nnz(self) -> int:
        return int(len(self.values))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.num_rows, self.num_cols)

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        return cls(
            num_rows=m.shape[0],
            num_cols=m.shape[1],
            row_offsets=m.indptr.astype(np.int64),
            col_indices=m.indices.astype(np.int64),
            values=m.data.astype(np.float64),
        )

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls.from_scipy(sp.csr_matrix(dense))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(
            num_rows=n,
            num_cols=n,
            row_offsets=np.arange(n + 1, dtype=np.int64),
            col_indices=np.arange(n, dtype=np.int64),
            values=np.ones(n, dtype=np.float64),
        )

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets),
            shape=(self.num_rows, self.num_cols),
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.to_scipy().T.tocsr())

    def row_ids(self) -> np.ndarray:
        """Row index of every stored entry, aligned with col_indices/values."""
        return np.repeat(
            np.arange(self.num_rows, dtype=np.int64), np.diff(self.row_offsets)
        )

    def matmul_dense(self, x: np.ndarray) -> np.ndarray:
        """Product with a dense matrix or vector."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.num_cols:
            raise ValueError(
                f"dimension mismatch: {self.shape} @ {x.shape}"
            )
        return self.to_scipy() @ x

    def is_symmetric(self, tol: float = 0.0) -> bool:
        if self.num_rows != self.num_cols:
            return False
        m = self.to_scipy()
        d = abs(m - m.T)
        return d.nnz == 0 or d.max() <= tol

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()
