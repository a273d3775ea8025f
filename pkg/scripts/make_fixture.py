#!/usr/bin/env python3
"""Write the synthetic fixture corpus (pairs, embeddings, slices) to a directory."""

import argparse

from colorlang.fixture import write_fixture


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="fixture", help="output directory")
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    paths = write_fixture(args.out, n=args.n, seed=args.seed)
    for name, path in paths.items():
        print(f"{name}\t{path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
