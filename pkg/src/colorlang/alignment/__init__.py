"""Inter-space alignment estimators: linear mapping, RSA, Gromov-Wasserstein,
plus k-means and the per-slice fan-out."""

from __future__ import annotations

from .cluster import kmeans
from .gw import Coupling, SolverError, gw_align, gw_cost, matching_accuracy
from .lmap import AlignmentReport, MappingWeights, fit_lmap, lasso_cd, lasso_objective
from .rsa import cosine_similarity_matrix, rsa

from ..core import CorpusSlice, join

DEFAULT_SLICE_FLOOR = 20

METHODS = ("lmap", "rsa", "gw")


def align_slices(
    pairs,
    emb,
    slices: list[CorpusSlice],
    method: str,
    params: dict | None = None,
    floor: int = DEFAULT_SLICE_FLOOR,
) -> list[AlignmentReport]:
    """Run one estimator independently per slice.

    Slices smaller than ``floor`` after the join produce a warning report
    (score None in serialized form) instead of an unstable estimate.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    params = dict(params or {})
    reports = []
    id_to_row = {pid: i for i, pid in enumerate(emb.ids)}
    for sl in slices:
        rows = [id_to_row[pid] for pid in sorted(sl.member_ids) if pid in id_to_row]
        if len(rows) < floor:
            reports.append(
                AlignmentReport(
                    method=method,
                    score=float("nan"),
                    slice_name=sl.name,
                    n=len(rows),
                    params={"skipped": True, "floor": floor},
                )
            )
            continue
        sub_ids = [emb.ids[i] for i in rows]
        sub_emb = type(emb)(sub_ids, emb.values[rows])
        X, Y = join(pairs, sub_emb)
        if method == "lmap":
            _, report = fit_lmap(X.values, Y.values, slice_name=sl.name, **params)
        elif method == "rsa":
            report = rsa(X.values, Y.values, slice_name=sl.name, **params)
        else:
            _, report = gw_align(X.values, Y.values, slice_name=sl.name, **params)
        reports.append(report)
    return reports
