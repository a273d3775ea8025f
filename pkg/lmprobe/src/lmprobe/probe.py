"""Probe operations: embedding extraction and masked-comparative filling.

Both write atomically (temp file in the target directory, then rename) so a
crash never leaves a half-written artifact where the pipeline expects output.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from colorlang.comparatives import MASK_TOKEN, read_prompts
from colorlang.core import EmbeddingMatrix, read_pairs, write_embeddings

from .backends import make_backend


@dataclass
class ProbeConfig:
    model: str = "static"
    layer: int = -1
    pool: str = "mean"
    batch: int = 32
    device: str = "cpu"
    max_tokens: int = 512
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.pool != "mean":
            raise ValueError(f"unsupported pooling {self.pool!r}; only 'mean'")
        if self.batch < 1:
            raise ValueError("batch must be positive")


def _atomic_write(path, write_fn) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def extract_embeddings(pairs_path, out_path, config: ProbeConfig) -> dict:
    """One pooled vector per description, in EMBV1 with attribution metadata.

    Descriptions longer than ``config.max_tokens`` whitespace tokens are
    truncated and flagged in the returned sidecar report rather than dropped,
    so the embedding file stays id-aligned with the input corpus.
    """
    pairs, row_errors = read_pairs(pairs_path)
    backend = make_backend(config.model, layer=config.layer,
                           device=config.device)
    texts, truncated = [], []
    for p in pairs:
        toks = p.description.split()
        if len(toks) > config.max_tokens:
            texts.append(" ".join(toks[: config.max_tokens]))
            truncated.append(p.id)
        else:
            texts.append(p.description)
    chunks = [
        backend.encode(texts[i:i + config.batch])
        for i in range(0, len(texts), config.batch)
    ]
    values = np.concatenate(chunks) if chunks else np.zeros((0, backend.dim),
                                                            dtype=np.float32)
    matrix = EmbeddingMatrix([p.id for p in pairs], values)
    meta = {"model": config.model, "layer": config.layer, "pool": config.pool}
    _atomic_write(out_path, lambda tmp: write_embeddings(matrix, tmp, meta=meta))
    return {
        "n": matrix.n,
        "dim": matrix.dim,
        "truncated": truncated,
        "row_errors": len(row_errors),
        "meta": meta,
    }


def fill_comparatives(prompts_path, out_path, config: ProbeConfig) -> dict:
    """Rank every candidate label for every masked prompt.

    Candidates are scored by the backend's fill score and sorted descending,
    with the label as a tie-break so equal scores still yield a deterministic
    permutation.  A candidate the backend cannot score lands last and is
    flagged in the report.
    """
    prompts, candidates = read_prompts(prompts_path)
    if not candidates:
        raise ValueError(f"{prompts_path}: no candidate list in prompts file")
    backend = make_backend(config.model, layer=config.layer,
                           device=config.device)
    unscorable: set[str] = set()
    lines = []
    for p in prompts:
        scored = []
        for cand in candidates:
            s = backend.score_fill(p.shots, p.query, MASK_TOKEN, cand)
            if not np.isfinite(s):
                unscorable.add(cand)
                s = float("-inf")
            scored.append((-s, cand))
        ranking = [cand for _, cand in sorted(scored)]
        lines.append(json.dumps(
            {"prompt_id": p.prompt_id, "ranking": ranking}, ensure_ascii=False
        ))

    def write(tmp):
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))

    _atomic_write(out_path, write)
    return {
        "prompts": len(prompts),
        "candidates": len(candidates),
        "unscorable": sorted(unscorable),
        "model": config.model,
    }
