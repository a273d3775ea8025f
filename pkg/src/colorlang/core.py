"""Core data types and file formats shared by every stage of the pipeline.

Corpora are (color, description) pairs keyed by a string id.  Embeddings and
CIELAB coordinates travel as id-aligned matrices so downstream estimators can
assume row i of X and row i of Y describe the same sample.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field

import numpy as np

from .colorspace import srgb_to_lab

EMB_MAGIC = b"EMBV1\n"

_HEX_RE = re.compile(r"^#([0-9a-fA-F]{6})$")


class FormatError(ValueError):
    """A file does not conform to one of the declared formats."""


class JoinError(ValueError):
    """Embedding ids could not be matched against the pair corpus."""

    def __init__(self, missing_ids):
        self.missing_ids = list(missing_ids)
        super().__init__(f"embedding ids missing from pairs: {self.missing_ids}")


@dataclass(frozen=True)
class ColorPair:
    id: str
    color: tuple[int, int, int]
    description: str
    pos_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("pair id must be nonempty")
        if not self.description.strip():
            raise ValueError(f"pair {self.id}: empty description")
        for c in self.color:
            if not (0 <= c <= 255):
                raise ValueError(f"pair {self.id}: channel {c} outside [0,255]")


@dataclass(frozen=True)
class RowError:
    """One unparseable TSV row, kept so dirty corpora fail loudly but partially."""

    line_number: int
    line: str
    reason: str


@dataclass
class EmbeddingMatrix:
    ids: list[str]
    values: np.ndarray  # n x d, float32

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ValueError("embedding values must be 2-D")
        if len(self.ids) != self.values.shape[0]:
            raise ValueError(
                f"{len(self.ids)} ids but {self.values.shape[0]} rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("embedding ids are not unique")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("embedding values must be finite")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, EmbeddingMatrix)
            and self.ids == other.ids
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
        )


@dataclass
class ColorMatrix:
    ids: list[str]
    values: np.ndarray  # n x 3 CIELAB

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != 3:
            raise ValueError("color matrix must be n x 3")
        if len(self.ids) != self.values.shape[0]:
            raise ValueError("id count does not match row count")


@dataclass(frozen=True)
class CorpusSlice:
    name: str
    member_ids: frozenset[str]
    provenance: str = ""


def parse_hex_color(token: str) -> tuple[int, int, int]:
    m = _HEX_RE.match(token.strip())
    if m is None:
        raise ValueError(f"not a #RRGGBB color: {token!r}")
    h = m.group(1)
    return (int(h[0:2], 16), int(h[2:4], 16), int(h[4:6], 16))


def read_pairs(path) -> tuple[list[ColorPair], list[RowError]]:
    """Read a pairs TSV: ``id<TAB>#RRGGBB<TAB>description[<TAB>POS|POS|...]``.

    Malformed rows are collected as RowError records instead of aborting the
    whole read; crowdsourced corpora always contain a few.
    """
    pairs: list[ColorPair] = []
    errors: list[RowError] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 3:
                errors.append(RowError(lineno, line, "expected at least 3 columns"))
                continue
            pid, hexcol, desc = cols[0].strip(), cols[1], cols[2]
            tags = None
            if len(cols) >= 4 and cols[3].strip():
                tags = tuple(t for t in cols[3].split("|") if t)
            try:
                color = parse_hex_color(hexcol)
            except ValueError as exc:
                errors.append(RowError(lineno, line, str(exc)))
                continue
            if pid in seen:
                errors.append(RowError(lineno, line, f"duplicate id {pid!r}"))
                continue
            try:
                pair = ColorPair(pid, color, desc, tags)
            except ValueError as exc:
                errors.append(RowError(lineno, line, str(exc)))
                continue
            seen.add(pid)
            pairs.append(pair)
    return pairs, errors


def write_pairs(pairs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            r, g, b = p.color
            cols = [p.id, f"#{r:02X}{g:02X}{b:02X}", p.description]
            if p.pos_tags:
                cols.append("|".join(p.pos_tags))
            fh.write("\t".join(cols) + "\n")


def write_embeddings(m: EmbeddingMatrix, path, meta: dict | None = None) -> None:
    """Binary format: magic, u32-length-prefixed JSON header, then float32 LE payload."""
    header = {"n": m.n, "d": m.dim, "ids": list(m.ids)}
    if meta:
        header["meta"] = meta
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    payload = np.ascontiguousarray(m.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(payload)


def read_embeddings(path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(len(EMB_MAGIC))
        if magic != EMB_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {EMB_MAGIC!r}")
        raw_len = fh.read(4)
        if len(raw_len) < 4:
            raise FormatError("truncated header length field")
        (hlen,) = struct.unpack("<I", raw_len)
        blob = fh.read(hlen)
        if len(blob) < hlen:
            raise FormatError("truncated header")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"unparseable header: {exc}") from exc
        for key in ("n", "d", "ids"):
            if key not in header:
                raise FormatError(f"header missing field {key!r}")
        n, d = header["n"], header["d"]
        if len(header["ids"]) != n:
            raise FormatError("header field 'ids' length does not match 'n'")
        payload = fh.read(n * d * 4 + 1)
        if len(payload) < n * d * 4:
            raise FormatError(f"payload shorter than n*d*4 = {n * d * 4} bytes")
        if len(payload) > n * d * 4:
            raise FormatError("payload longer than n*d*4 bytes")
    values = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    return EmbeddingMatrix(list(header["ids"]), values.copy())


def read_embedding_meta(path) -> dict:
    """Header metadata only (model, layer, pooling for extracted embeddings)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(EMB_MAGIC))
        if magic != EMB_MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
    return header.get("meta", {})


def write_embeddings_tsv(m: EmbeddingMatrix, path) -> None:
    """Interchange TSV: ``id<TAB>v1<TAB>...<TAB>vd``.  Not bit-exact; debugging aid."""
    with open(path, "w", encoding="utf-8") as fh:
        for pid, row in zip(m.ids, m.values):
            fh.write(pid + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")


def read_embeddings_tsv(path) -> EmbeddingMatrix:
    ids, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise FormatError(f"line {lineno}: expected id plus values")
            ids.append(cols[0])
            try:
                rows.append([float(v) for v in cols[1:]])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from exc
    if rows and len({len(r) for r in rows}) != 1:
        raise FormatError("rows have inconsistent dimension")
    return EmbeddingMatrix(ids, np.array(rows, dtype=np.float32))


def join(pairs, emb: EmbeddingMatrix) -> tuple[EmbeddingMatrix, ColorMatrix]:
    """Pair embedding rows with CIELAB rows, preserving embedding row order.

    Extra pairs are permitted; every embedding id must have a pair.
    """
    by_id = {p.id: p for p in pairs}
    missing = [pid for pid in emb.ids if pid not in by_id]
    if missing:
        raise JoinError(missing)
    lab = np.array([srgb_to_lab(by_id[pid].color) for pid in emb.ids])
    return emb, ColorMatrix(list(emb.ids), lab)


def slices_to_json(slices) -> list[dict]:
    return [
        {"name": s.name, "provenance": s.provenance, "member_ids": sorted(s.member_ids)}
        for s in slices
    ]


def slices_from_json(items) -> list[CorpusSlice]:
    return [
        CorpusSlice(d["name"], frozenset(d["member_ids"]), d.get("provenance", ""))
        for d in items
    ]
