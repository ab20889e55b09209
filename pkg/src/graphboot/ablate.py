"""Ablation grids: augmentation pairs, projection removal, decay sweeps.

Every cell is identified by a fingerprint of its semantic configuration.
Results append to ``metrics.jsonl`` one record per cell; re-running a grid
skips cells whose fingerprint already has a successful record, so an
interrupted grid resumes where it stopped. A ranked ``summary.csv`` is
rewritten from all successful records at the end. A failed cell is recorded
with its error and the grid continues.

Cells are independent (own RNG streams, no shared mutable state) and can run
in a process pool; only the record writer is serialized.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .augment import NodeAugmentation, ViewConfig
from .config import (
    AblateConfig,
    ExperimentConfig,
    fingerprint,
    parse_pair_label,
    train_to_dict,
    view_to_dict,
)
from .dataio import load_dataset
from .errors import UsageError
from .evaluate import EvalConfig, evaluate_protocol
from .graph import LabeledDataset
from .trainer import TrainConfig, train

METRICS_NAME = "metrics.jsonl"
SUMMARY_NAME = "summary.csv"


@dataclass(frozen=True)
class Cell:
    label: str
    view1: ViewConfig
    view2: ViewConfig
    use_projector: bool = True
    decay_p: float | None = None  # None -> the configured default
    kind: str = "cell"  # "cell" or "sweep"


def _with_rates(view: ViewConfig, nfd_rate: float, nd_rate: float) -> ViewConfig:
    node = view.node
    if node.kind == "node_feature_dropout":
        node = NodeAugmentation(kind=node.kind, rate=nfd_rate)
    elif node.kind == "node_dropout":
        node = NodeAugmentation(kind=node.kind, rate=nd_rate)
    return ViewConfig(node=node, adjacency=view.adjacency)


def build_cells(cfg: ExperimentConfig, nfd_rate: float, nd_rate: float) -> list[Cell]:
    """Expand the configured grid into concrete cells."""
    ab = cfg.ablate
    train_cfg = cfg.train
    diffusion_kinds = [ab.diffusion] if ab.diffusion != "both" else ["ppr", "heat"]
    cells: list[Cell] = []
    for label in ab.pairs:
        for diff_kind in diffusion_kinds:
            v1, v2 = parse_pair_label(label, train_cfg.view1, train_cfg.view2, diff_kind)
            v1 = _with_rates(v1, nfd_rate, nd_rate)
            v2 = _with_rates(v2, nfd_rate, nd_rate)
            suffix = f" [{diff_kind}]" if len(diffusion_kinds) > 1 and "diff" in label.lower() else ""
            cells.append(Cell(label=label + suffix, view1=v1, view2=v2))
            if "diff" not in label.lower():
                break  # the cell does not depend on what DIFF means
    reference1 = _with_rates(train_cfg.view1, nfd_rate, nd_rate)
    reference2 = _with_rates(train_cfg.view2, nfd_rate, nd_rate)
    if ab.include_projection_ablation:
        cells.append(
            Cell(label="without projection", view1=reference1, view2=reference2, use_projector=False)
        )
    for p in ab.decay_values:
        cells.append(
            Cell(label=f"decay_p={p:g}", view1=reference1, view2=reference2, decay_p=p)
        )
    return cells


def cell_train_config(cell: Cell, base: TrainConfig, seed: int, epochs: int | None) -> TrainConfig:
    return replace(
        base,
        seed=seed,
        view1=cell.view1,
        view2=cell.view2,
        use_projector=cell.use_projector,
        decay_p=base.decay_p if cell.decay_p is None else cell.decay_p,
        epochs=base.epochs if epochs is None else epochs,
        checkpoint_every=0,
    )


def cell_fingerprint(dataset_name: str, cell: Cell, base: TrainConfig, seeds, epochs, eval_runs) -> str:
    payload = {
        "dataset": dataset_name,
        "kind": cell.kind,
        "label": cell.label,
        "train": train_to_dict(cell_train_config(cell, base, seed=0, epochs=epochs)),
        "seeds": list(seeds),
        "eval_runs": eval_runs,
    }
    return fingerprint(payload)


def run_cell(
    dataset: LabeledDataset,
    dataset_name: str,
    cell: Cell,
    base_train: TrainConfig,
    eval_cfg: EvalConfig,
    seeds,
    epochs: int | None,
    eval_runs: int,
    split: str = "test",
) -> dict:
    """Train and probe one cell over its seeds; returns the metrics record."""
    started = time.perf_counter()
    per_seed = []
    val_per_seed = []
    final_losses = []
    first_curve = None
    for seed in seeds:
        cfg = cell_train_config(cell, base_train, seed=seed, epochs=epochs)
        encoder, report = train(dataset, cfg)
        probe_cfg = replace(eval_cfg, runs=eval_runs)
        result = evaluate_protocol(encoder, dataset, probe_cfg, split=split)
        per_seed.append(result.mean)
        if split == "test":
            val = evaluate_protocol(encoder, dataset, replace(probe_cfg, runs=max(1, eval_runs // 2)), split="val")
            val_per_seed.append(val.mean)
        else:
            val_per_seed.append(result.mean)
        final_losses.append(report.losses[-1])
        if first_curve is None:
            first_curve = report.losses
    mean = sum(per_seed) / len(per_seed)
    std = (sum((a - mean) ** 2 for a in per_seed) / len(per_seed)) ** 0.5
    return {
        "fingerprint": cell_fingerprint(dataset_name, cell, base_train, seeds, epochs, eval_runs),
        "status": "ok",
        "kind": cell.kind,
        "dataset": dataset_name,
        "label": cell.label,
        "view1": view_to_dict(cell.view1),
        "view2": view_to_dict(cell.view2),
        "use_projector": cell.use_projector,
        "decay_p": base_train.decay_p if cell.decay_p is None else cell.decay_p,
        "seeds": list(seeds),
        "epochs": base_train.epochs if epochs is None else epochs,
        "eval_runs": eval_runs,
        "accuracy_mean": mean,
        "accuracy_std": std,
        "per_seed_accuracy": per_seed,
        "val_accuracy_mean": sum(val_per_seed) / len(val_per_seed),
        "final_losses": final_losses,
        "loss_curve": first_curve,
        "wall_clock_seconds": time.perf_counter() - started,
    }


def sweep_cells(cfg: ExperimentConfig) -> list[tuple[float, Cell]]:
    """One cell per dropout rate; both views' node rates move together."""
    cells = []
    for rate in cfg.ablate.sweep.rates:
        v1 = _with_rates(cfg.train.view1, rate, rate)
        v2 = _with_rates(cfg.train.view2, rate, rate)
        cells.append((rate, Cell(label=f"sweep rate={rate:g}", view1=v1, view2=v2, kind="sweep")))
    return cells


def load_records(path: str) -> list[dict]:
    records = []
    if os.path.isfile(path):
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
    return records


def append_record(path: str, record: dict) -> None:
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record, sort_keys=True) + "\n")


def write_summary(records: list[dict], path: str) -> None:
    rows = [r for r in records if r.get("status") == "ok" and r.get("kind") == "cell"]
    rows.sort(key=lambda r: (-r["accuracy_mean"], r["label"]))
    lines = ["rank,label,accuracy_mean,accuracy_std,decay_p,use_projector,fingerprint\n"]
    for rank, r in enumerate(rows, start=1):
        label = '"' + r["label"].replace('"', '""') + '"'
        lines.append(
            f"{rank},{label},{r['accuracy_mean']!r},{r['accuracy_std']!r},"
            f"{r['decay_p']!r},{r['use_projector']},{r['fingerprint']}\n"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.writelines(lines)


def run_grid(dataset_path: str, cfg: ExperimentConfig, out_dir: str, jobs: int = 1) -> list[dict]:
    """Run the whole grid: optional dropout sweep, then every cell.

    Returns all records (existing and new). Raises UsageError on an empty
    grid; records per-cell failures without stopping.
    """
    os.makedirs(out_dir, exist_ok=True)
    metrics_path = os.path.join(out_dir, METRICS_NAME)
    records = load_records(metrics_path)
    done = {r["fingerprint"] for r in records if r.get("status") == "ok"}
    dataset_name = os.path.basename(os.path.normpath(dataset_path))
    ab = cfg.ablate

    dataset = load_dataset(dataset_path)

    # dropout-rate selection on the validation split
    nfd_rate = cfg.train.view1.node.rate
    nd_rate = cfg.train.view2.node.rate
    if ab.sweep.enabled:
        sweep_epochs = ab.sweep.epochs if ab.sweep.epochs is not None else ab.epochs
        best_rate, best_val = None, -1.0
        for rate, cell in sweep_cells(cfg):
            fp = cell_fingerprint(dataset_name, cell, cfg.train, [ab.sweep.seed], sweep_epochs, ab.sweep.eval_runs)
            record = next((r for r in records if r["fingerprint"] == fp and r.get("status") == "ok"), None)
            if record is None:
                record = _guarded_cell(
                    dataset, dataset_name, cell, cfg.train, cfg.eval,
                    [ab.sweep.seed], sweep_epochs, ab.sweep.eval_runs, split="val",
                )
                record["sweep_rate"] = rate
                append_record(metrics_path, record)
                records.append(record)
            if record.get("status") == "ok" and record["accuracy_mean"] > best_val:
                best_val = record["accuracy_mean"]
                best_rate = rate
        if best_rate is not None:
            nfd_rate = nd_rate = float(best_rate)

    cells = build_cells(cfg, nfd_rate, nd_rate)
    if not cells:
        raise UsageError("ablation grid is empty; configure ablate.pairs")
    pending = [
        c
        for c in cells
        if cell_fingerprint(dataset_name, c, cfg.train, ab.seeds, ab.epochs, ab.eval_runs) not in done
    ]

    if jobs > 1 and len(pending) > 1:
        tasks = [
            (dataset_path, dataset_name, c, cfg.train, cfg.eval, ab.seeds, ab.epochs, ab.eval_runs, "test")
            for c in pending
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for record in pool.map(_guarded_cell_by_path, tasks):
                append_record(metrics_path, record)
                records.append(record)
    else:
        for cell in pending:
            record = _guarded_cell(
                dataset, dataset_name, cell, cfg.train, cfg.eval, ab.seeds, ab.epochs, ab.eval_runs
            )
            append_record(metrics_path, record)
            records.append(record)

    write_summary(records, os.path.join(out_dir, SUMMARY_NAME))
    return records


def _guarded_cell(dataset, dataset_name, cell, base_train, eval_cfg, seeds, epochs, eval_runs, split="test") -> dict:
    try:
        return run_cell(dataset, dataset_name, cell, base_train, eval_cfg, seeds, epochs, eval_runs, split)
    except Exception as e:  # cell failures must not kill the grid
        return {
            "fingerprint": cell_fingerprint(dataset_name, cell, base_train, seeds, epochs, eval_runs),
            "status": "failed",
            "kind": cell.kind,
            "dataset": dataset_name,
            "label": cell.label,
            "error": f"{type(e).__name__}: {e}",
        }


def _guarded_cell_by_path(args) -> dict:
    (dataset_path, dataset_name, cell, base_train, eval_cfg, seeds, epochs, eval_runs, split) = args
    try:
        dataset = load_dataset(dataset_path)
    except Exception as e:
        return {
            "fingerprint": cell_fingerprint(dataset_name, cell, base_train, seeds, epochs, eval_runs),
            "status": "failed",
            "kind": cell.kind,
            "dataset": dataset_name,
            "label": cell.label,
            "error": f"{type(e).__name__}: {e}",
        }
    return _guarded_cell(dataset, dataset_name, cell, base_train, eval_cfg, seeds, epochs, eval_runs, split)
