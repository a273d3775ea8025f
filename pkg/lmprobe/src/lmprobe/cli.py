"""lm-probe CLI: `extract` descriptions to EMBV1, `fill` masked prompts.

Shares the primary pipeline's exit-code convention: 0 success, 1 validation
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from colorlang.core import FormatError

from .probe import ProbeConfig, extract_embeddings, fill_comparatives


def _config(args) -> ProbeConfig:
    return ProbeConfig(
        model=args.model,
        layer=args.layer,
        pool=args.pool,
        batch=args.batch,
        device=args.device,
    )


def _write_report(path, body: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_extract(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report = extract_embeddings(args.pairs, out, _config(args))
    _write_report(out.with_suffix(out.suffix + ".report.json"), report)
    print(f"wrote {report['n']} x {report['dim']} embeddings to {out}")
    return 0


def cmd_fill(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report = fill_comparatives(args.prompts, out, _config(args))
    _write_report(out.with_suffix(out.suffix + ".report.json"), report)
    print(f"ranked {report['candidates']} candidates for "
          f"{report['prompts']} prompts into {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lm-probe",
        description="Embed descriptions and answer masked-comparative prompts",
    )
    parser.add_argument("--model", default="static",
                        help="'static', 'static:<dim>', or a hub model name")
    parser.add_argument("--layer", type=int, default=-1)
    parser.add_argument("--pool", default="mean", choices=["mean"])
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--device", default="cpu")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="pairs TSV -> EMBV1 embeddings")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fill", help="prompts JSONL -> predictions JSONL")
    p.add_argument("--prompts", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fill)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
