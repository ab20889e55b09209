"""Command line: ``planetoid-convert convert ...`` and ``planetoid-convert synth ...``."""

from __future__ import annotations

import argparse
import sys

from .convert import convert
from .raw import RawBundleError, RawPlanetoidBundle
from .synth import synth


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planetoid-convert", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_convert = sub.add_parser("convert", help="convert a raw citation-dataset bundle")
    p_convert.add_argument("--input", required=True, help="directory holding the ind.NAME.* files")
    p_convert.add_argument("--name", required=True, choices=["cora", "citeseer", "pubmed"])
    p_convert.add_argument("--out", required=True, help="output dataset directory")
    p_convert.add_argument("--val-size", type=int, default=500, help="validation split size")

    p_synth = sub.add_parser("synth", help="generate a synthetic planted-partition dataset")
    p_synth.add_argument("--n", type=int, required=True, help="number of nodes")
    p_synth.add_argument("--clusters", type=int, required=True)
    p_synth.add_argument("--p-in", type=float, required=True, help="intra-cluster edge probability")
    p_synth.add_argument("--p-out", type=float, required=True, help="inter-cluster edge probability")
    p_synth.add_argument("--dim", type=int, required=True, help="feature dimension")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--out", required=True, help="output dataset directory")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "convert":
            bundle = RawPlanetoidBundle.from_dir(args.input, args.name)
            report = convert(bundle, args.out, val_size=args.val_size)
            print(report.summary())
        else:
            synth(
                n=args.n,
                clusters=args.clusters,
                p_in=args.p_in,
                p_out=args.p_out,
                d=args.dim,
                seed=args.seed,
                out_dir=args.out,
            )
            print(f"wrote synthetic dataset to {args.out}")
    except (RawBundleError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
