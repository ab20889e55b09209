import os
import warnings

import numpy as np
import pytest

from planetoid_convert import synth
from planetoid_convert.cli import main as cli_main


def read(path):
    with open(path, "rb") as f:
        return f.read()


def load_clean(path):
    from graphboot import load_dataset

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        return load_dataset(path)


def test_synth_output_loads(tmp_path):
    out = str(tmp_path / "synth")
    synth(n=30, clusters=2, p_in=0.5, p_out=0.05, d=10, seed=3, out_dir=out)
    ds = load_clean(out)
    assert ds.graph.num_nodes == 30
    assert ds.num_classes == 2
    np.testing.assert_array_equal(np.unique(ds.labels), [0, 1])
    # every class appears in every split
    for idx in (ds.train_idx, ds.val_idx, ds.test_idx):
        assert set(ds.labels[idx].tolist()) == {0, 1}
    # no isolated nodes (fallback edges)
    from graphboot import degree_vector

    assert degree_vector(ds.graph.adjacency).min() >= 1.0


def test_synth_deterministic(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    synth(n=25, clusters=3, p_in=0.4, p_out=0.1, d=9, seed=7, out_dir=a)
    synth(n=25, clusters=3, p_in=0.4, p_out=0.1, d=9, seed=7, out_dir=b)
    for name in ("meta.json", "edges.tsv", "features.tsv", "labels.tsv", "splits.json"):
        assert read(os.path.join(a, name)) == read(os.path.join(b, name))


def test_negative_control_equal_probabilities(tmp_path):
    # p_in = p_out is the label-uninformative fixture and must be accepted
    out = str(tmp_path / "flat")
    synth(n=20, clusters=2, p_in=0.3, p_out=0.3, d=8, seed=1, out_dir=out)
    load_clean(out)


def test_parameter_validation(tmp_path):
    with pytest.raises(ValueError):
        synth(n=5, clusters=6, p_in=0.5, p_out=0.1, d=8, seed=0, out_dir=str(tmp_path / "x"))
    with pytest.raises(ValueError):
        synth(n=20, clusters=2, p_in=0.2, p_out=0.5, d=8, seed=0, out_dir=str(tmp_path / "y"))


def test_cli_synth(tmp_path):
    out = str(tmp_path / "cli")
    code = cli_main(
        [
            "synth", "--n", "24", "--clusters", "2", "--p-in", "0.5",
            "--p-out", "0.05", "--dim", "8", "--seed", "5", "--out", out,
        ]
    )
    assert code == 0
    load_clean(out)
