"""Description-level scores: concreteness, subjectivity, color-word presence,
POS-pattern statistics, and uniform score binning."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass

from .core import ColorPair, CorpusSlice

# Lemma fallback: exact lookup first, then strip one suffix and retry.
# Longest suffix tried first so "matching" checks "match" before "matchin g".
_SUFFIXES = ("ing", "ed", "es", "s")

# The 11 basic English color terms plus common variants.
DEFAULT_COLOR_WORDS = frozenset(
    {
        "red", "orange", "yellow", "green", "blue", "purple",
        "pink", "brown", "black", "white", "gray",
        "grey", "violet",
        "reddish", "orangish", "yellowish", "greenish", "bluish",
        "purplish", "pinkish", "brownish", "blackish", "whitish",
        "grayish", "greyish",
    }
)


def tokenize(text: str) -> list[str]:
    """Shared tokenizer: whitespace split, strip edge punctuation, lowercase."""
    out = []
    for raw in text.split():
        tok = _strip_edges(raw)
        if tok:
            out.append(tok.lower())
    return out


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_edges(tok: str) -> str:
    start, end = 0, len(tok)
    while start < end and _is_punct(tok[start]):
        start += 1
    while end > start and _is_punct(tok[end - 1]):
        end -= 1
    return tok[start:end]


@dataclass(frozen=True)
class ConcretenessLexicon:
    scores: dict[str, float]  # lemma -> [1,5]

    def __post_init__(self):
        for lemma, s in self.scores.items():
            if not 1.0 <= s <= 5.0:
                raise ValueError(f"concreteness of {lemma!r} outside [1,5]: {s}")

    def lookup(self, token: str) -> float | None:
        hit = self.scores.get(token)
        if hit is not None:
            return hit
        for suf in _SUFFIXES:
            if token.endswith(suf) and len(token) > len(suf):
                hit = self.scores.get(token[: -len(suf)])
                if hit is not None:
                    return hit
        return None

    @classmethod
    def from_tsv(cls, path) -> "ConcretenessLexicon":
        scores = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                lemma, value = line.split("\t")[:2]
                scores[lemma.strip().lower()] = float(value)
        return cls(scores)


@dataclass(frozen=True)
class SubjectivityLexicon:
    scores: dict[str, float]  # word -> [0,1]
    modifiers: dict[str, float]  # intensifier -> positive multiplier

    def __post_init__(self):
        for w, s in self.scores.items():
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"subjectivity of {w!r} outside [0,1]: {s}")
        for w, m in self.modifiers.items():
            if m <= 0:
                raise ValueError(f"modifier multiplier of {w!r} not positive: {m}")

    @classmethod
    def from_tsv(cls, path) -> "SubjectivityLexicon":
        """``word<TAB>subjectivity[<TAB>modifier_multiplier]`` rows."""
        scores, modifiers = {}, {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                cols = line.split("\t")
                word = cols[0].strip().lower()
                scores[word] = float(cols[1])
                if len(cols) >= 3 and cols[2].strip():
                    modifiers[word] = float(cols[2])
        return cls(scores, modifiers)


@dataclass(frozen=True)
class ScoredDescription:
    id: str
    concreteness: float | None
    covered_fraction: float
    subjectivity: float


def concreteness(
    description: str, lex: ConcretenessLexicon
) -> tuple[float | None, float]:
    """Mean lexicon value over covered tokens; (None, 0.0) when nothing is covered."""
    tokens = tokenize(description)
    if not tokens:
        return None, 0.0
    hits = [v for v in (lex.lookup(t) for t in tokens) if v is not None]
    if not hits:
        return None, 0.0
    return sum(hits) / len(hits), len(hits) / len(tokens)


def subjectivity(description: str, lex: SubjectivityLexicon) -> float:
    """Mean subjectivity over covered words, intensified by preceding modifiers.

    A covered word's score is multiplied by the multipliers of the modifier
    words immediately before it (a consecutive run).  Result clamps to [0,1];
    0.0 when nothing is covered.
    """
    tokens = tokenize(description)
    values = []
    for i, tok in enumerate(tokens):
        base = lex.scores.get(tok)
        if base is None:
            continue
        mult = 1.0
        j = i - 1
        while j >= 0 and tokens[j] in lex.modifiers:
            mult *= lex.modifiers[tokens[j]]
            j -= 1
        values.append(base * mult)
    if not values:
        return 0.0
    return min(1.0, max(0.0, sum(values) / len(values)))


def has_color_word(description: str, colorwords=DEFAULT_COLOR_WORDS) -> bool:
    if not colorwords:
        raise ValueError("color word set must be nonempty")
    return any(tok in colorwords for tok in tokenize(description))


def pos_pattern_counts(
    pairs: list[ColorPair],
) -> tuple[dict[tuple[str, ...], int], int]:
    """Frequency of POS-tag tuples, descending count; also how many pairs lacked tags."""
    counts: Counter[tuple[str, ...]] = Counter()
    skipped = 0
    for p in pairs:
        if p.pos_tags:
            counts[tuple(p.pos_tags)] += 1
        else:
            skipped += 1
    ordered = dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    return ordered, skipped


def uniform_bins(
    scores: dict[str, float], k: int, lo: float, hi: float
) -> list[CorpusSlice]:
    """k equal-width bins over [lo,hi]; half-open except the last bin, which is closed."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo},{hi}]")
    width = (hi - lo) / k
    members: list[set[str]] = [set() for _ in range(k)]
    for pid, s in scores.items():
        if not lo <= s <= hi:
            raise ValueError(f"score {s} for {pid!r} outside [{lo},{hi}]")
        idx = min(int((s - lo) / width), k - 1)
        members[idx].add(pid)
    return [
        CorpusSlice(
            name=f"bin{i}",
            member_ids=frozenset(members[i]),
            provenance=f"[{lo + i * width:.6g},{lo + (i + 1) * width:.6g}"
            + ("]" if i == k - 1 else ")"),
        )
        for i in range(k)
    ]
