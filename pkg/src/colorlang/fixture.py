"""Synthetic corpus with planted geometric structure, for end-to-end runs.

Every description literally spells out the Lab coordinates of its color.  In
the planted half the pseudo-embedding of each description is those same Lab
coordinates (plus small noise), so embedding space and color space are nearly
isometric and alignment should be close to perfect.  In the scrambled half the
embeddings are independent Gaussian draws with Lab-like spread, so neither the
correspondence nor the fine geometric structure survives and every alignment
score should sit near chance.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .colorspace import srgb_to_lab
from .core import (
    ColorPair,
    CorpusSlice,
    EmbeddingMatrix,
    slices_to_json,
    write_embeddings,
    write_pairs,
)


def make_fixture_corpus(
    n: int = 500, seed: int = 7, noise: float = 0.5
) -> tuple[list[ColorPair], EmbeddingMatrix, list[CorpusSlice]]:
    rng = np.random.default_rng(seed)
    half = n // 2
    colors = rng.integers(0, 256, size=(n, 3))
    pairs = []
    labs = np.empty((n, 3))
    for i in range(n):
        rgb = tuple(int(c) for c in colors[i])
        lab = srgb_to_lab(rgb)
        labs[i] = lab
        desc = f"lab {lab.L:.1f} {lab.a:.1f} {lab.b:.1f}"
        pairs.append(ColorPair(f"fx{i:04d}", rgb, desc))

    emb = labs + noise * rng.standard_normal((n, 3))
    # Scrambled half: independent noise matched to the Lab marginals, so no
    # geometric structure relates these embeddings to their colors.
    emb[half:] = labs.mean(axis=0) + labs.std(axis=0) * rng.standard_normal(
        (n - half, 3)
    )
    matrix = EmbeddingMatrix([p.id for p in pairs], emb.astype(np.float32))

    slices = [
        CorpusSlice(
            "planted", frozenset(p.id for p in pairs[:half]), "fixture:planted"
        ),
        CorpusSlice(
            "scrambled", frozenset(p.id for p in pairs[half:]), "fixture:scrambled"
        ),
    ]
    return pairs, matrix, slices


def write_fixture(out_dir, n: int = 500, seed: int = 7) -> dict[str, str]:
    import json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pairs, emb, slices = make_fixture_corpus(n=n, seed=seed)
    paths = {
        "pairs": str(out / "pairs.tsv"),
        "embeddings": str(out / "embeddings.emb"),
        "slices": str(out / "slices.json"),
    }
    write_pairs(pairs, paths["pairs"])
    write_embeddings(emb, paths["embeddings"], meta={"source": "fixture", "seed": seed})
    with open(paths["slices"], "w", encoding="utf-8") as fh:
        json.dump(slices_to_json(slices), fh, indent=2)
    return paths
