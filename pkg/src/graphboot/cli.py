"""Command-line surface.

Verbs: ``train``, ``eval``, ``ablate``, ``gradcheck``, ``export-embeddings``.
All commands are config-file driven (YAML, see ``graphboot
--print-defaults``) with a few overriding flags. Outputs are plain files:
checkpoints, CSV curves, JSON reports, JSONL metrics. Given the same config,
seed and thread count, every command writes byte-identical outputs
(wall-clock fields aside).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__, ablate, gradcheck
from .checkpoint import load_encoder
from .config import (
    ExperimentConfig,
    load_config,
    render_defaults,
    train_fingerprint,
    train_to_dict,
)
from .dataio import load_dataset
from .errors import CheckpointError, DataFormatError, NumericError, UsageError
from .evaluate import evaluate_embeddings, evaluate_protocol
from .graph import row_normalize_features
from .trainer import embed, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphboot", description=__doc__)
    parser.add_argument("--version", action="version", version=f"graphboot {__version__}")
    parser.add_argument(
        "--print-defaults",
        action="store_true",
        help="print the full default configuration as YAML and exit",
    )
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--dataset", help="dataset directory (overrides config)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed override")

    p_train = sub.add_parser("train", help="train an encoder, write checkpoint + loss curve")
    common(p_train)

    p_eval = sub.add_parser("eval", help="linear evaluation of a checkpoint (or raw features)")
    common(p_eval)
    p_eval.add_argument("--checkpoint", help="encoder checkpoint to evaluate")
    p_eval.add_argument(
        "--raw", action="store_true", help="probe the row-normalized input features instead"
    )

    p_ablate = sub.add_parser("ablate", help="run the augmentation/projection/decay ablation grid")
    common(p_ablate)
    p_ablate.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of every backward pass")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--instances", type=int, default=20, help="random instances per component")
    p_grad.add_argument("--nodes", type=int, default=12, help="graph size of the GCN instances")
    p_grad.add_argument("--dim", type=int, default=7, help="feature width of the GCN instances")
    p_grad.add_argument("--out", help="write the report to this directory as gradcheck.txt")

    p_export = sub.add_parser("export-embeddings", help="write embeddings + labels as TSV")
    p_export.add_argument("--checkpoint", required=True)
    p_export.add_argument("--config", help="YAML experiment config")
    p_export.add_argument("--dataset", help="dataset directory (overrides config)")
    p_export.add_argument("--out", required=True, help="output TSV file")

    return parser


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "dataset", None):
        cfg.dataset = args.dataset
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    if getattr(args, "seed", None) is not None:
        cfg.train = replace(cfg.train, seed=args.seed)
        cfg.eval = replace(cfg.eval, seed=args.seed)
    return cfg


def _require_dataset(cfg: ExperimentConfig):
    if not os.path.isdir(cfg.dataset):
        raise DataFormatError(f"dataset directory not found: {cfg.dataset}")
    return load_dataset(cfg.dataset)


def _fmt(v: float) -> str:
    return repr(float(v))


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    dataset = _require_dataset(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    fp = train_fingerprint(cfg.dataset, cfg.train)
    checkpoint_path = os.path.join(cfg.output_dir, "checkpoint.ckpt")
    encoder, report = train(
        dataset,
        cfg.train,
        checkpoint_path=checkpoint_path,
        checkpoint_meta={"fingerprint": fp, "train": train_to_dict(cfg.train)},
    )

    losses_path = os.path.join(cfg.output_dir, "losses.csv")
    with open(losses_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("epoch,loss\n")
        for i, loss in enumerate(report.losses):
            f.write(f"{i},{_fmt(loss)}\n")

    report_path = os.path.join(cfg.output_dir, "train_report.json")
    payload = {
        "fingerprint": fp,
        "dataset": cfg.dataset,
        "epochs_run": report.epochs_run,
        "final_loss": report.losses[-1],
        "checkpoint": checkpoint_path,
        "losses_csv": losses_path,
        "wall_clock_seconds": sum(report.wall_clock),
    }
    with open(report_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(payload, sort_keys=True) + "\n")

    print(f"trained {report.epochs_run} epochs, final loss {report.losses[-1]:.6f}")
    print(f"checkpoint: {checkpoint_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    dataset = _require_dataset(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    if args.raw:
        h = row_normalize_features(dataset.graph.features)
        report = evaluate_embeddings(h, dataset, cfg.eval)
        source = "raw-features"
    else:
        if not args.checkpoint:
            raise UsageError("eval needs --checkpoint PATH (or --raw)")
        encoder, _ = load_encoder(args.checkpoint)
        report = evaluate_protocol(encoder, dataset, cfg.eval)
        source = args.checkpoint
    out_path = os.path.join(cfg.output_dir, "eval.json")
    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(report.to_json() + "\n")
    print(f"{source}: mean accuracy {report.mean:.4f} +- {report.std:.4f} over {len(report.accuracies)} runs")
    print(f"report: {out_path}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _resolve_config(args)
    if not os.path.isdir(cfg.dataset):
        raise DataFormatError(f"dataset directory not found: {cfg.dataset}")
    records = ablate.run_grid(cfg.dataset, cfg, cfg.output_dir, jobs=args.jobs)
    ok = [r for r in records if r.get("status") == "ok" and r.get("kind") == "cell"]
    failed = [r for r in records if r.get("status") == "failed"]
    for r in sorted(ok, key=lambda r: -r["accuracy_mean"]):
        print(f"{r['accuracy_mean']:.4f} +- {r['accuracy_std']:.4f}  {r['label']}")
    for r in failed:
        print(f"FAILED  {r['label']}: {r['error']}", file=sys.stderr)
    print(f"metrics: {os.path.join(cfg.output_dir, ablate.METRICS_NAME)}")
    print(f"summary: {os.path.join(cfg.output_dir, ablate.SUMMARY_NAME)}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results, elapsed = gradcheck.run_timed(
        seed=args.seed, instances=args.instances, nodes=args.nodes, dim=args.dim
    )
    text = gradcheck.format_report(results) + f"\n{args.instances} instances per component in {elapsed:.2f}s\n"
    print(text, end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "gradcheck.txt"), "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    if not all(r.passed for r in results):
        raise NumericError("gradient check failed; see report above")
    return EXIT_OK


def cmd_export_embeddings(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.dataset:
        cfg.dataset = args.dataset
    dataset = _require_dataset(cfg)
    encoder, _ = load_encoder(args.checkpoint)
    h = embed(encoder, dataset.graph)
    parent = os.path.dirname(args.out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write("\t".join(f"dim_{j}" for j in range(h.shape[1])) + "\tlabel\n")
        for i in range(h.shape[0]):
            f.write("\t".join(_fmt(v) for v in h[i]) + f"\t{dataset.labels[i]}\n")
    print(f"wrote {h.shape[0]} x {h.shape[1]} embeddings to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "gradcheck": cmd_gradcheck,
    "export-embeddings": cmd_export_embeddings,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.print_defaults:
            print(render_defaults(), end="")
            return EXIT_OK
        if not args.command:
            parser.print_help()
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, CheckpointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
