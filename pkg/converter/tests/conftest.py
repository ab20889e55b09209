import os
import pickle

import numpy as np
import pytest
import scipy.sparse as sp


def pickle_to(path, obj):
    with open(path, "wb") as f:
        pickle.dump(obj, f)


def write_mini_bundle(directory, name="cora", test_ids=(8, 6, 7), graph=None):
    """A tiny raw bundle shaped like the real thing.

    Six non-test nodes (four labeled) plus test nodes at the given ids, two
    classes, five features. tx rows follow test.index order, which here is
    deliberately unsorted.
    """
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(0)
    n_test = len(test_ids)
    d, c = 5, 2

    allx = np.zeros((6, d))
    for i in range(6):
        allx[i, i % d] = 1.0
        allx[i, (i + 2) % d] = 2.0
    ally = np.zeros((6, c))
    ally[np.arange(6), np.array([0, 0, 1, 1, 0, 1])] = 1.0

    x = allx[:4]
    y = ally[:4]

    tx = np.zeros((n_test, d))
    for k in range(n_test):
        tx[k, (k + 1) % d] = float(10 + k)  # distinct values to track reordering
    ty = np.zeros((n_test, c))
    ty[np.arange(n_test), np.arange(n_test) % c] = 1.0

    if graph is None:
        graph = {
            0: [1, 2],
            1: [0],
            2: [0, 2, 3],  # self-loop at 2, must be dropped
            3: [2, 4, 4],  # duplicate listing of 3-4
            4: [3],
            5: [int(test_ids[0])],
            int(test_ids[0]): [5],
        }
        for t in test_ids[1:]:
            graph[int(t)] = [0]
            graph[0] = graph[0] + [int(t)]

    prefix = os.path.join(directory, f"ind.{name}")
    pickle_to(f"{prefix}.x", sp.csr_matrix(x))
    pickle_to(f"{prefix}.y", y)
    pickle_to(f"{prefix}.tx", sp.csr_matrix(tx))
    pickle_to(f"{prefix}.ty", ty)
    pickle_to(f"{prefix}.allx", sp.csr_matrix(allx))
    pickle_to(f"{prefix}.ally", ally)
    pickle_to(f"{prefix}.graph", graph)
    with open(f"{prefix}.test.index", "w", encoding="utf-8") as f:
        for t in test_ids:
            f.write(f"{t}\n")
    return directory


@pytest.fixture
def mini_bundle_dir(tmp_path):
    return write_mini_bundle(str(tmp_path / "raw"))


def raw_data_dir() -> str | None:
    """Directory with the real ind.NAME.* files, if the user supplied one."""
    candidates = []
    env = os.environ.get("PLANETOID_RAW_DIR")
    if env:
        candidates.append(env)
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates.append(os.path.join(os.path.dirname(here), "data", "raw"))
    for root in candidates:
        if os.path.isfile(os.path.join(root, "ind.cora.x")):
            return root
    return None


def require_raw(name: str) -> str:
    root = raw_data_dir()
    if root is None or not os.path.isfile(os.path.join(root, f"ind.{name}.x")):
        pytest.skip(
            f"raw {name} files not available (no network in this sandbox); place "
            f"ind.{name}.* under data/raw or $PLANETOID_RAW_DIR to run this test"
        )
    return root
