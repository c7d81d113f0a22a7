"""Command line entry point for emitting bond-length Hamiltonian scans."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .generate import MOLECULES, bond_grid, family_json


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamgen-chem",
        description="Tabulated qubit Hamiltonians for diatomic bond-length scans.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--molecule", choices=sorted(MOLECULES), default="h2"
    )
    parser.add_argument(
        "--from", dest="start", type=float, default=0.3, help="grid start (Angstrom)"
    )
    parser.add_argument(
        "--to", dest="stop", type=float, default=2.5, help="grid end (Angstrom)"
    )
    parser.add_argument("--step", type=float, default=0.02)
    parser.add_argument("--basis", choices=["sto-3g"], default="sto-3g")
    parser.add_argument(
        "--mapping",
        choices=["jordan-wigner", "bravyi-kitaev"],
        default="jordan-wigner",
    )
    parser.add_argument("--out", help="output path (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        grid = bond_grid(args.start, args.stop, args.step)
        text = family_json(MOLECULES[args.molecule](), grid, args.mapping)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"guard failure: {exc}", file=sys.stderr)
        return 3
    if args.out is None:
        print(text)
        return 0
    try:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
