"""Command-line pipeline: ingest -> score -> segment -> align / match ->
prompts -> eval, plus cluster and graph.

Every command writes one JSON report embedding its config, seed, library
versions and input digests, so a rerun with identical inputs is byte-identical
(wall-clock goes to run.log, never into reports).

Exit codes: 0 success, 1 validation error, 2 solver failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, alignment, comparatives, core, scoring
from .alignment.gw import SolverError


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_report(out_dir: Path, name: str, config: dict, inputs: list, body: dict,
                  outputs: list) -> Path:
    report = {
        "command": name,
        "config": config,
        "versions": {
            "colorlang": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "input_digests": {str(p): _digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        **body,
    }
    path = out_dir / f"{name}.report.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    with open(out_dir / "run.log", "a", encoding="utf-8") as fh:
        fh.write(f"{time.time():.3f}\t{name}\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_rules(path) -> list[tuple[str, re.Pattern]]:
    """Rule file: ``name<TAB>regex`` per line; a bare regex gets a positional name."""
    rules = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            if "\t" in line:
                name, pattern = line.split("\t", 1)
            else:
                name, pattern = f"rule{i}", line
            rules.append((name.strip(), re.compile(pattern)))
    return rules


MAX_WORDS = 5


def cmd_ingest(args) -> int:
    out = _out_dir(args)
    pairs, row_errors = core.read_pairs(args.pairs)
    rules = []
    if args.rules:
        if Path(args.rules).exists():
            rules = _read_rules(args.rules)
        else:
            print(f"warning: rule file {args.rules} missing; "
                  "applying word-count filter only", file=sys.stderr)
    kept, drops = [], {"max_words": 0}
    for name, _ in rules:
        drops.setdefault(name, 0)
    for p in pairs:
        if len(p.description.split()) > MAX_WORDS:
            drops["max_words"] += 1
            continue
        hit = next((name for name, rx in rules if rx.search(p.description)), None)
        if hit is not None:
            drops[hit] += 1
            continue
        kept.append(p)
    clean_path = out / "pairs.clean.tsv"
    core.write_pairs(kept, clean_path)
    drops_path = out / "drops.json"
    with open(drops_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "drops": drops,
                "row_errors": [
                    {"line": e.line_number, "reason": e.reason} for e in row_errors
                ],
                "read": len(pairs),
                "kept": len(kept),
            },
            fh, indent=2, sort_keys=True,
        )
        fh.write("\n")
    _write_report(
        out, "ingest",
        {"pairs": args.pairs, "rules": args.rules, "max_words": MAX_WORDS},
        [args.pairs] + ([args.rules] if rules else []),
        {"read": len(pairs), "kept": len(kept), "dropped": sum(drops.values()),
         "row_errors": len(row_errors)},
        [clean_path, drops_path],
    )
    return 0


def cmd_score(args) -> int:
    out = _out_dir(args)
    pairs, _ = core.read_pairs(args.pairs)
    conc = scoring.ConcretenessLexicon.from_tsv(args.concreteness)
    subj = scoring.SubjectivityLexicon.from_tsv(args.subjectivity)
    colorwords = scoring.DEFAULT_COLOR_WORDS
    if args.colorwords:
        with open(args.colorwords, encoding="utf-8") as fh:
            colorwords = frozenset(w.strip().lower() for w in fh if w.strip())
    scores_path = out / "scores.tsv"
    with open(scores_path, "w", encoding="utf-8") as fh:
        for p in pairs:
            c, cov = scoring.concreteness(p.description, conc)
            s = scoring.subjectivity(p.description, subj)
            has_cw = scoring.has_color_word(p.description, colorwords)
            fh.write(
                "\t".join(
                    [p.id, "" if c is None else f"{c:.6g}", f"{cov:.6g}",
                     f"{s:.6g}", "1" if has_cw else "0"]
                ) + "\n"
            )
    patterns, untagged = scoring.pos_pattern_counts(pairs)
    _write_report(
        out, "score",
        {"pairs": args.pairs, "concreteness": args.concreteness,
         "subjectivity": args.subjectivity, "colorwords": args.colorwords},
        [args.pairs, args.concreteness, args.subjectivity],
        {"n": len(pairs),
         "pos_patterns": [[list(k), v] for k, v in list(patterns.items())[:50]],
         "untagged": untagged},
        [scores_path],
    )
    return 0


def _read_scores(path) -> dict[str, dict]:
    rows = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            pid, c, cov, s, cw = line.split("\t")
            rows[pid] = {
                "concreteness": float(c) if c else None,
                "covered_fraction": float(cov),
                "subjectivity": float(s),
                "has_color_word": cw == "1",
            }
    return rows


def cmd_segment(args) -> int:
    out = _out_dir(args)
    rows = _read_scores(args.scores)
    if args.by == "subjectivity":
        values = {pid: r["subjectivity"] for pid, r in rows.items()}
        lo, hi = 0.0, 1.0
    elif args.by == "concreteness":
        values = {pid: r["concreteness"] for pid, r in rows.items()
                  if r["concreteness"] is not None}
        lo, hi = 1.0, 5.0
    elif args.by == "colorword":
        with_cw = frozenset(p for p, r in rows.items() if r["has_color_word"])
        without = frozenset(rows) - with_cw
        slices = [
            core.CorpusSlice("colorword", with_cw, "filter:has_color_word"),
            core.CorpusSlice("no_colorword", without, "filter:no_color_word"),
        ]
        return _write_slices(out, args, slices, len(rows))
    else:
        raise ValueError(f"unknown segmentation axis {args.by!r}")
    slices = scoring.uniform_bins(values, args.bins, lo, hi)
    named = [
        core.CorpusSlice(f"{args.by}_{s.name}", s.member_ids, s.provenance)
        for s in slices
    ]
    return _write_slices(out, args, named, len(rows))


def _write_slices(out, args, slices, n_scored) -> int:
    slices_path = out / "slices.json"
    with open(slices_path, "w", encoding="utf-8") as fh:
        json.dump(core.slices_to_json(slices), fh, indent=2)
        fh.write("\n")
    _write_report(
        out, "segment",
        {"scores": args.scores, "by": args.by,
         "bins": getattr(args, "bins", None)},
        [args.scores],
        {"n_scored": n_scored,
         "slice_sizes": {s.name: len(s.member_ids) for s in slices}},
        [slices_path],
    )
    return 0


def cmd_align(args) -> int:
    out = _out_dir(args)
    pairs, _ = core.read_pairs(args.pairs)
    emb = core.read_embeddings(args.embeddings)
    if args.slices:
        with open(args.slices, encoding="utf-8") as fh:
            slices = core.slices_from_json(json.load(fh))
    else:
        slices = [core.CorpusSlice("all", frozenset(emb.ids), "all")]
    params: dict = {}
    if args.method == "lmap":
        params = {"alpha": args.alpha, "folds": args.folds, "seed": args.seed}
    elif args.method == "gw":
        params = {"epsilon": args.epsilon, "schedule": args.schedule,
                  "restarts": args.restarts, "seed": args.seed}
    reports = alignment.align_slices(
        pairs, emb, slices, args.method, params, floor=args.floor
    )
    tidy_path = out / f"align.{args.method}.tsv"
    with open(tidy_path, "w", encoding="utf-8") as fh:
        fh.write("slice\tmethod\tscore\tn\n")
        for r in reports:
            score = "" if np.isnan(r.score) else f"{r.score:.6f}"
            fh.write(f"{r.slice_name}\t{r.method}\t{score}\t{r.n}\n")
    body = {
        "reports": [
            {**r.to_json(),
             "score": None if np.isnan(r.score) else r.score}
            for r in reports
        ]
    }
    inputs = [args.pairs, args.embeddings] + ([args.slices] if args.slices else [])
    _write_report(
        out, f"align_{args.method}",
        {"method": args.method, "floor": args.floor, **params},
        inputs, body, [tidy_path],
    )
    return 0


def cmd_match(args) -> int:
    out = _out_dir(args)
    pairs, _ = core.read_pairs(args.pairs)
    tuples = comparatives.read_tuples(args.tuples)
    rng = np.random.default_rng(args.seed)
    n = len(pairs)
    matched_path = out / "matched.jsonl"
    count = 0
    with open(matched_path, "w", encoding="utf-8") as fh:
        for _ in range(args.n_pairs):
            i, j = rng.choice(n, size=2, replace=False)
            m = comparatives.match_pair(pairs[i], pairs[j], tuples)
            fh.write(json.dumps({
                "pair_id": m.pair_id,
                "left_id": m.left_id,
                "right_id": m.right_id,
                "gold": m.gold,
                "ranking": [[label, cost] for label, cost in m.ranking],
            }, ensure_ascii=False) + "\n")
            count += 1
    _write_report(
        out, "match",
        {"pairs": args.pairs, "tuples": args.tuples,
         "n_pairs": args.n_pairs, "seed": args.seed},
        [args.pairs, args.tuples],
        {"matched": count, "comparatives": len({t.comparative for t in tuples})},
        [matched_path],
    )
    return 0


def _read_matched(path) -> list[comparatives.MatchedPair]:
    matched = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            matched.append(comparatives.MatchedPair(
                d["pair_id"], d["left_id"], d["right_id"],
                [(label, cost) for label, cost in d["ranking"]],
                gold=d["gold"],
            ))
    return matched


def cmd_prompts(args) -> int:
    out = _out_dir(args)
    pairs, _ = core.read_pairs(args.pairs)
    matched = _read_matched(args.matched)
    prompts = comparatives.build_prompts(
        matched, pairs, K=args.k_shots, seed=args.seed, n_prompts=args.count
    )
    candidates = sorted({label for m in matched for label, _ in m.ranking})
    prompts_path = out / "prompts.jsonl"
    comparatives.write_prompts(prompts, candidates, prompts_path)
    _write_report(
        out, "prompts",
        {"matched": args.matched, "pairs": args.pairs, "K": args.k_shots,
         "count": args.count, "seed": args.seed},
        [args.matched, args.pairs],
        {"prompts": len(prompts), "candidates": len(candidates)},
        [prompts_path],
    )
    return 0


def cmd_eval(args) -> int:
    out = _out_dir(args)
    prompts, _ = comparatives.read_prompts(args.prompts)
    preds = comparatives.read_predictions(args.predictions)
    slice_map = None
    if args.slices:
        with open(args.slices, encoding="utf-8") as fh:
            corpus_slices = core.slices_from_json(json.load(fh))
        slice_map = {}
        for sl in corpus_slices:
            members = set()
            for p in prompts:
                parts = p.query_pair_id.split("__")
                if len(parts) == 2 and all(x in sl.member_ids for x in parts):
                    members.add(p.prompt_id)
            slice_map[sl.name] = members
    report = comparatives.eval_mrr(prompts, preds, slice_map)
    mrr_path = out / "mrr.json"
    with open(mrr_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    inputs = [args.prompts, args.predictions] + ([args.slices] if args.slices else [])
    _write_report(
        out, "eval",
        {"prompts": args.prompts, "predictions": args.predictions,
         "slices": args.slices},
        inputs, {"mrr": report.mrr, "missing": report.missing,
                 "unanswered": report.unanswered},
        [mrr_path],
    )
    return 0


def cmd_cluster(args) -> int:
    out = _out_dir(args)
    pairs, _ = core.read_pairs(args.pairs)
    if args.within:
        with open(args.within, encoding="utf-8") as fh:
            clusters = json.load(fh)["clusters"]
        member_ids = set(clusters[str(args.within_cluster)])
        pairs = [p for p in pairs if p.id in member_ids]
    ids = [p.id for p in pairs]
    if args.space == "color":
        from .colorspace import srgb_to_lab
        points = np.array([srgb_to_lab(p.color) for p in pairs])
    elif args.space == "embedding":
        if not args.embeddings:
            raise ValueError("--embeddings required for --space embedding")
        emb = core.read_embeddings(args.embeddings)
        rows = {pid: i for i, pid in enumerate(emb.ids)}
        missing = [pid for pid in ids if pid not in rows]
        if missing:
            raise core.JoinError(missing)
        points = emb.values[[rows[pid] for pid in ids]]
    else:
        raise ValueError(f"unknown space {args.space!r}")
    labels, centroids, inertia = alignment.kmeans(points, args.k, args.seed)
    clusters_path = out / "clusters.json"
    grouped: dict[str, list[str]] = {str(c): [] for c in range(args.k)}
    for pid, lab in zip(ids, labels):
        grouped[str(int(lab))].append(pid)
    with open(clusters_path, "w", encoding="utf-8") as fh:
        json.dump({
            "space": args.space, "k": args.k, "seed": args.seed,
            "inertia": inertia,
            "centroids": centroids.tolist(),
            "clusters": grouped,
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    inputs = [args.pairs] + ([args.embeddings] if args.embeddings else []) \
        + ([args.within] if args.within else [])
    _write_report(
        out, "cluster",
        {"space": args.space, "k": args.k, "seed": args.seed,
         "within": args.within, "within_cluster": args.within_cluster},
        inputs,
        {"inertia": inertia,
         "sizes": {c: len(v) for c, v in grouped.items()}},
        [clusters_path],
    )
    return 0


def cmd_graph(args) -> int:
    out = _out_dir(args)
    pairs, _ = core.read_pairs(args.pairs)
    matched = _read_matched(args.matched)
    prompts, _ = comparatives.read_prompts(args.prompts)
    preds = comparatives.read_predictions(args.predictions)
    pred_by_id = {p.prompt_id: p for p in preds}
    correct_pair_ids = set()
    for p in prompts:
        pred = pred_by_id.get(p.prompt_id)
        if pred and pred.ranking and pred.ranking[0] == p.gold:
            correct_pair_ids.add(p.query_pair_id)
    used = {m.pair_id for m in matched}
    dot = comparatives.comparative_graph(
        matched, correct_pair_ids & used, pairs
    )
    graph_path = out / "graph.dot"
    with open(graph_path, "w", encoding="utf-8") as fh:
        fh.write(dot)
    _write_report(
        out, "graph",
        {"matched": args.matched, "prompts": args.prompts,
         "predictions": args.predictions},
        [args.matched, args.prompts, args.predictions, args.pairs],
        {"correct_edges": len(correct_pair_ids & used)},
        [graph_path],
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colorlang",
        description="Color-language alignment pipeline",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out")
    parser.add_argument("--jobs", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="filter a raw pairs TSV")
    p.add_argument("--pairs", required=True)
    p.add_argument("--rules")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("score", help="concreteness/subjectivity/color-word scores")
    p.add_argument("--pairs", required=True)
    p.add_argument("--concreteness", required=True)
    p.add_argument("--subjectivity", required=True)
    p.add_argument("--colorwords")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("segment", help="uniform score bins or color-word split")
    p.add_argument("--scores", required=True)
    p.add_argument("--by", required=True,
                   choices=["subjectivity", "concreteness", "colorword"])
    p.add_argument("--bins", type=int, default=5)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("align", help="per-slice alignment estimates")
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--slices")
    p.add_argument("--method", required=True, choices=list(alignment.METHODS))
    p.add_argument("--alpha", type=float, default=1e-2)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--epsilon", type=float, default=5e-3)
    p.add_argument("--schedule", action="store_true")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--floor", type=int, default=alignment.DEFAULT_SLICE_FLOOR)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("match", help="grounded comparative matching")
    p.add_argument("--pairs", required=True)
    p.add_argument("--tuples", required=True)
    p.add_argument("--n-pairs", type=int, default=1000)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("prompts", help="K-shot masked prompt construction")
    p.add_argument("--matched", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--k-shots", type=int, default=10)
    p.add_argument("--count", type=int, default=1000)
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("eval", help="MRR over model predictions")
    p.add_argument("--prompts", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--slices")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cluster", help="k-means in color or embedding space")
    p.add_argument("--pairs", required=True)
    p.add_argument("--space", required=True, choices=["color", "embedding"])
    p.add_argument("--embeddings")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--within", help="clusters.json from a previous run")
    p.add_argument("--within-cluster", type=int, default=0)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("graph", help="DOT export of correctly predicted comparatives")
    p.add_argument("--pairs", required=True)
    p.add_argument("--matched", required=True)
    p.add_argument("--prompts", required=True)
    p.add_argument("--predictions", required=True)
    p.set_defaults(func=cmd_graph)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except (core.FormatError, core.JoinError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
