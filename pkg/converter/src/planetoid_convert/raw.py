"""Readers for the raw Planetoid file bundle.

A bundle for dataset NAME consists of eight files:

* ``ind.NAME.x``   pickled scipy CSR, features of the labeled training nodes
* ``ind.NAME.y``   pickled one-hot label array for the same nodes
* ``ind.NAME.tx``  pickled CSR, features of the test nodes (in test.index order)
* ``ind.NAME.ty``  pickled one-hot labels for the test nodes
* ``ind.NAME.allx`` pickled CSR, features of every non-test node
* ``ind.NAME.ally`` pickled one-hot labels for every non-test node
* ``ind.NAME.graph`` pickled dict: node id -> list of neighbor ids
* ``ind.NAME.test.index`` text file, one test node id per line

The pickles were produced under Python 2, hence the latin1 decoding.
"""

from __future__ import annotations

import os
import pickle
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

SUFFIXES = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")


class RawBundleError(Exception):
    """A raw file is missing or internally inconsistent."""


@dataclass(frozen=True)
class RawPlanetoidBundle:
    name: str
    paths: dict

    @classmethod
    def from_dir(cls, input_dir: str, name: str) -> "RawPlanetoidBundle":
        paths = {}
        for suffix in SUFFIXES:
            path = os.path.join(input_dir, f"ind.{name}.{suffix}")
            if not os.path.isfile(path):
                raise RawBundleError(f"missing raw file {path}")
            paths[suffix] = path
        return cls(name=name, paths=paths)

    def load_pickle(self, suffix: str):
        with open(self.paths[suffix], "rb") as f:
            try:
                return pickle.load(f, encoding="latin1")
            except Exception as e:
                raise RawBundleError(f"cannot unpickle {self.paths[suffix]}: {e}") from e

    def load_sparse(self, suffix: str) -> sp.csr_matrix:
        obj = self.load_pickle(suffix)
        try:
            return sp.csr_matrix(obj, dtype=np.float64)
        except Exception as e:
            raise RawBundleError(
                f"{self.paths[suffix]} does not contain a sparse feature block: {e}"
            ) from e

    def load_labels(self, suffix: str) -> np.ndarray:
        obj = np.asarray(self.load_pickle(suffix), dtype=np.float64)
        if obj.ndim != 2:
            raise RawBundleError(f"{self.paths[suffix]} must hold a 2-D one-hot array")
        return obj

    def load_graph(self) -> dict:
        obj = self.load_pickle("graph")
        if not isinstance(obj, dict):
            raise RawBundleError(f"{self.paths['graph']} must hold a node -> neighbors dict")
        return obj

    def load_test_index(self) -> list[int]:
        indices = []
        with open(self.paths["test.index"], encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    indices.append(int(line))
                except ValueError:
                    raise RawBundleError(
                        f"{self.paths['test.index']}:{lineno}: not an integer: {line!r}"
                    ) from None
        if not indices:
            raise RawBundleError(f"{self.paths['test.index']} is empty")
        return indices
