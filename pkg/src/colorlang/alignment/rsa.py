"""Representational similarity analysis between embedding and color geometry.

Both spaces are summarized by cosine self-similarity matrices; agreement is
Kendall's tau-b between matching similarity rows (diagonal removed), averaged
over rows.  tau-b because crowdsourced color data produces many ties.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import kendalltau

from .lmap import AlignmentReport


def cosine_similarity_matrix(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cosine self-similarities; returns (matrix over nonzero rows, kept-row mask)."""
    M = np.asarray(M, dtype=np.float64)
    norms = np.linalg.norm(M, axis=1)
    keep = norms > 0.0
    U = M[keep] / norms[keep, None]
    return U @ U.T, keep


def rsa(
    X: np.ndarray,
    Y: np.ndarray,
    slice_name: str = "",
    flattened: bool = False,
) -> AlignmentReport:
    """Mean row-wise tau-b between the two similarity matrices.

    ``flattened`` additionally reports a single tau over the upper triangles.
    Zero-norm rows (in either space) are excluded and counted.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must have the same number of rows")
    _, keep_x = cosine_similarity_matrix(X)
    _, keep_y = cosine_similarity_matrix(Y)
    keep = keep_x & keep_y
    n = int(keep.sum())
    if n < 3:
        raise ValueError(f"need at least 3 usable rows, have {n}")
    Cx, _ = cosine_similarity_matrix(X[keep])
    Cy, _ = cosine_similarity_matrix(Y[keep])

    taus = []
    for i in range(n):
        row_x = np.delete(Cx[i], i)
        row_y = np.delete(Cy[i], i)
        tau, _ = kendalltau(row_x, row_y)
        taus.append(0.0 if np.isnan(tau) else float(tau))
    score = float(np.mean(taus))

    detail: list = [{"row_taus": taus, "excluded_rows": int((~keep).sum())}]
    if flattened:
        iu = np.triu_indices(n, k=1)
        tau_flat, _ = kendalltau(Cx[iu], Cy[iu])
        detail.append({"flattened_tau": float(tau_flat)})

    return AlignmentReport(
        method="rsa",
        score=score,
        slice_name=slice_name,
        n=n,
        params={"aggregation": "row_mean", "flattened": flattened},
        detail=detail,
    )
