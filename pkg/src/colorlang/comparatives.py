"""Grounded comparative matching, K-shot masked prompts, and MRR evaluation.

A ComparativeTuple grounds one comparative label ("DARKER", "DEEPER", ...) in
two point sets in Lab space.  Matching a pair of corpus colors against the
tuple set yields a full cost ranking over labels; the top label is the gold
answer the language model is later asked to reproduce through a masked slot.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np

from .colorspace import delta_e, srgb_to_lab
from .core import ColorPair

MASK_TOKEN = "[MASK]"
DEFAULT_TEMPLATE = "{left} is {comparative} than {right}"


@dataclass(frozen=True)
class ComparativeTuple:
    comparative: str  # uppercase label
    reference: tuple[tuple[float, float, float], ...]
    target: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.comparative:
            raise ValueError("comparative label must be nonempty")
        if not self.reference or not self.target:
            raise ValueError(f"{self.comparative}: empty point set")
        object.__setattr__(self, "comparative", self.comparative.upper())


@dataclass
class MatchedPair:
    pair_id: str
    left_id: str
    right_id: str
    ranking: list[tuple[str, float]]  # ascending cost
    gold: str = ""

    def __post_init__(self):
        if not self.gold:
            self.gold = self.ranking[0][0]


@dataclass
class PromptSet:
    prompt_id: str
    shots: list[str]
    query: str
    gold: str
    K: int
    query_pair_id: str = ""  # matched pair behind the query, for graph export


@dataclass
class PredictionRecord:
    prompt_id: str
    ranking: list[str]


def read_tuples(path) -> list[ComparativeTuple]:
    """JSONL rows: {"comparative": str, "reference": [[L,a,b],...], "target": [...]}."""
    tuples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            tuples.append(
                ComparativeTuple(
                    d["comparative"],
                    tuple(tuple(p) for p in d["reference"]),
                    tuple(tuple(p) for p in d["target"]),
                )
            )
    return tuples


def _mean_delta_e(points, lab) -> float:
    return float(np.mean([delta_e(p, lab) for p in points]))


def match_pair(
    left: ColorPair, right: ColorPair, tuples: list[ComparativeTuple]
) -> MatchedPair:
    """Rank every distinct comparative by grounded cost against (left, right).

    cost(tuple) = mean deltaE(reference set, left) + mean deltaE(target set,
    right); a label with several tuples takes the min.  Ties order
    lexicographically.
    """
    if not tuples:
        raise ValueError("tuple set must be nonempty")
    lab_left = srgb_to_lab(left.color)
    lab_right = srgb_to_lab(right.color)
    costs: dict[str, float] = {}
    for t in tuples:
        c = _mean_delta_e(t.reference, lab_left) + _mean_delta_e(t.target, lab_right)
        prev = costs.get(t.comparative)
        if prev is None or c < prev:
            costs[t.comparative] = c
    ranking = sorted(costs.items(), key=lambda kv: (kv[1], kv[0]))
    return MatchedPair(
        pair_id=f"{left.id}__{right.id}",
        left_id=left.id,
        right_id=right.id,
        ranking=ranking,
    )


def build_prompts(
    matched: list[MatchedPair],
    pairs: list[ColorPair],
    K: int,
    seed: int,
    template: str = DEFAULT_TEMPLATE,
    n_prompts: int = 1000,
    mask_token: str = MASK_TOKEN,
) -> list[PromptSet]:
    """K-shot prompts: K-1 filled demonstrations plus one masked query.

    Each PromptSet samples K matched pairs without replacement; the gold
    comparative appears lowercased inside the shots and never in the query.
    Byte-for-byte deterministic given (seed, K, n_prompts).
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    if len(matched) < K:
        raise ValueError(f"need at least K={K} matched pairs, have {len(matched)}")
    desc = {p.id: p.description for p in pairs}
    rng = random.Random(seed)
    prompts = []
    for i in range(n_prompts):
        chosen = rng.sample(matched, K)
        shots = [
            template.format(
                left=desc[m.left_id],
                comparative=m.gold.lower(),
                right=desc[m.right_id],
            )
            for m in chosen[:-1]
        ]
        q = chosen[-1]
        query = template.format(
            left=desc[q.left_id], comparative=mask_token, right=desc[q.right_id]
        )
        prompts.append(
            PromptSet(
                prompt_id=f"p{i:06d}",
                shots=shots,
                query=query,
                gold=q.gold,
                K=K,
                query_pair_id=q.pair_id,
            )
        )
    return prompts


def write_prompts(prompts: list[PromptSet], candidates: list[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in prompts:
            fh.write(
                json.dumps(
                    {
                        "prompt_id": p.prompt_id,
                        "shots": p.shots,
                        "query": p.query,
                        "mask_token": MASK_TOKEN,
                        "gold": p.gold,
                        "query_pair_id": p.query_pair_id,
                        "candidates": candidates,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_prompts(path) -> tuple[list[PromptSet], list[str]]:
    prompts, candidates = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            prompts.append(
                PromptSet(
                    d["prompt_id"], d["shots"], d["query"], d["gold"],
                    K=len(d["shots"]) + 1,
                    query_pair_id=d.get("query_pair_id", ""),
                )
            )
            candidates = d.get("candidates", candidates)
    return prompts, candidates


def read_predictions(path) -> list[PredictionRecord]:
    preds = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            preds.append(PredictionRecord(d["prompt_id"], list(d["ranking"])))
    return preds


@dataclass
class MrrReport:
    mrr: float
    n_evaluated: int
    missing: int  # gold absent from a provided ranking
    unanswered: int  # prompt with no prediction record
    per_slice: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "mrr": self.mrr,
            "n_evaluated": self.n_evaluated,
            "missing": self.missing,
            "unanswered": self.unanswered,
            "per_slice": self.per_slice,
        }


def eval_mrr(
    prompts: list[PromptSet],
    preds: list[PredictionRecord],
    slices: dict[str, set[str]] | None = None,
) -> MrrReport:
    """MRR = mean over answered prompts of 1/rank(gold); missing gold scores 0."""
    by_id: dict[str, PredictionRecord] = {}
    for p in preds:
        if p.prompt_id in by_id:
            raise ValueError(f"duplicate prompt_id in predictions: {p.prompt_id}")
        by_id[p.prompt_id] = p
    known = {p.prompt_id for p in prompts}
    unknown = set(by_id) - known
    if unknown:
        raise ValueError(f"predictions for unknown prompt_ids: {sorted(unknown)[:5]}")

    rr: dict[str, float] = {}
    missing = 0
    unanswered = 0
    for prompt in prompts:
        pred = by_id.get(prompt.prompt_id)
        if pred is None:
            unanswered += 1
            continue
        try:
            rank = pred.ranking.index(prompt.gold) + 1
            rr[prompt.prompt_id] = 1.0 / rank
        except ValueError:
            missing += 1
            rr[prompt.prompt_id] = 0.0
    mrr = sum(rr.values()) / len(rr) if rr else 0.0

    per_slice = {}
    if slices:
        for name, ids in slices.items():
            vals = [v for pid, v in rr.items() if pid in ids]
            if vals:
                per_slice[name] = sum(vals) / len(vals)
    return MrrReport(mrr, len(rr), missing, unanswered, per_slice)


def comparative_graph(
    matched: list[MatchedPair],
    correct_ids: set[str],
    pairs: list[ColorPair],
) -> str:
    """DOT digraph of correctly predicted comparatives between descriptions."""
    by_id = {p.id: p for p in pairs}
    matched_by_id = {m.pair_id: m for m in matched}
    nodes: dict[str, ColorPair] = {}
    edges = []
    for m in matched:
        nodes.setdefault(m.left_id, by_id[m.left_id])
        nodes.setdefault(m.right_id, by_id[m.right_id])
    for pid in sorted(correct_ids):
        m = matched_by_id[pid]
        edges.append((m.left_id, m.right_id, m.gold))
    lines = ["digraph comparatives {"]
    for nid, p in sorted(nodes.items()):
        r, g, b = p.color
        label = p.description.replace('"', r"\"")
        lines.append(
            f'  "{nid}" [label="{label}" hexcolor="#{r:02X}{g:02X}{b:02X}"];'
        )
    for left, right, comp in edges:
        lines.append(f'  "{left}" -> "{right}" [label="{comp}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
