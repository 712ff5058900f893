"""Trend experiments producing flat tables (lists of row dicts)."""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .blocks import SolverOptions
from .grid import ExponentSet
from .lattice import LatticeConfig
from .verify import maximal_ratios, refinement_corpus, triviality_series

TRIVIALITY_COLUMNS = ("J", "partial_norm", "increment", "increment_ratio", "target_ratio")
REFINEMENT_COLUMNS = ("extra", "J", "quantity", "ratio", "drift")


def triviality_table(e: ExponentSet, J_max: int = 12, j_min: int = 0) -> list[dict]:
    """Partial norms of the window indicator and their per-scale increments.

    The increment at ``J`` is the scale-``J`` contribution; when ``r > t`` its
    successive ratios approach ``target_ratio`` and the partial norms converge.
    """
    s = triviality_series(e, J_max, j_min)
    target = 2.0 ** (e.n * (_recip(e.r) - 1.0 / e.t))
    rows = []
    for k, J in enumerate(s["J"]):
        ratio = s["per_scale"][k] / s["per_scale"][k - 1] if k else math.nan
        rows.append({"J": J, "partial_norm": s["partial"][k], "increment": s["per_scale"][k],
                     "increment_ratio": ratio, "target_ratio": target})
    return rows


def _recip(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def refinement_table(e: ExponentSet, base: LatticeConfig, refinements: int = 3, count: int = 6, d: int = 3,
                     seed: int = 0, etas=None, opts: SolverOptions | None = None,
                     block_cells: int = 64) -> list[dict]:
    """Maximal-operator norm ratios as the corpus is embedded in finer lattices.

    The block side is only solved while the lattice has at most ``block_cells`` cells.
    """
    if etas is None:
        etas = (1.0, (1.0 + min(e.r_conj, e.q_conj)) / 2.0)
    rows, prev = [], {}
    for extra in range(refinements + 1):
        fine = base.refine(extra)
        parts = ("bm", "slice") + (("block",) if fine.num_cells <= block_cells else ())
        fs = refinement_corpus(np.random.default_rng(seed), base, extra, count, d)
        ratios = maximal_ratios(fs, e, etas, opts, parts)
        for key in sorted(ratios):
            drift = ratios[key] / prev[key] - 1.0 if prev.get(key) else math.nan
            rows.append({"extra": extra, "J": fine.J, "quantity": key, "ratio": ratios[key], "drift": drift})
        prev = ratios
    return rows


def to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
