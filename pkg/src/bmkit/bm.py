"""Bourgain-Morrey norms, slice norms and the ball-average characterization."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .grid import ExponentSet, GridFunction, _inv, _lp, cube_power_sums
from .lattice import CubeIndex, DomainError, LatticeConfig, _tables


def _aggregate(x: np.ndarray, r: float) -> float:
    return _lp(np.asarray(x, dtype=float), r)


def morrey_terms(a: np.ndarray, config: LatticeConfig, p: float, t: float) -> np.ndarray:
    """``|Q|^{1/t-1/p} ||a||_{L^p(Q)}`` for every cube, from cell magnitudes ``a``."""
    tab = _tables(config)
    alpha = _inv(t) - _inv(p)
    weight = np.exp2(-tab.scale * config.n * alpha)
    if math.isinf(p):
        local = np.zeros(len(tab.cubes))
        np.maximum.at(local, tab.anc.ravel(), np.repeat(a, config.levels))
    else:
        local = cube_power_sums(a, config, p) ** (1.0 / p)
    return weight * local


@dataclass(frozen=True)
class CubeTermTable:
    cubes: tuple[CubeIndex, ...]
    terms: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.cubes[0].n if self.cubes else 1
        w.writerow(["j"] + [f"m{i}" for i in range(n)] + ["term"])
        for Q, v in zip(self.cubes, self.terms):
            w.writerow([Q.j, *Q.m, repr(float(v))])
        return buf.getvalue()

    def as_dict(self) -> dict[CubeIndex, float]:
        return {Q: float(v) for Q, v in zip(self.cubes, self.terms)}


def _check_dim(f: GridFunction, e: ExponentSet) -> None:
    if f.config.n != e.n:
        raise DomainError(f"exponent set is for n={e.n}, function lives in n={f.config.n}")


def cube_terms(f: GridFunction, e: ExponentSet) -> CubeTermTable:
    _check_dim(f, e)
    terms = morrey_terms(f.cell_norms(e.q), f.config, e.p, e.t)
    return CubeTermTable(_tables(f.config).cubes, terms)


def bm_norm(f: GridFunction, e: ExponentSet) -> float:
    """The Bourgain-Morrey norm of ``f`` over the finite cube family.

    ``l^r`` aggregation of ``|Q|^{1/t-1/p} (int_Q |f|_{l^q}^p)^{1/p}`` over all
    cubes with scale in ``[j_min, J]`` (a maximum when ``r = inf``).
    """
    return _aggregate(cube_terms(f, e).terms, e.r)


def _check_scale(config: LatticeConfig, j: int) -> None:
    if not config.j_min <= j <= config.J:
        raise DomainError(f"scale {j} outside [{config.j_min}, {config.J}]")


def per_scale_bm(f: GridFunction, e: ExponentSet, v: int) -> float:
    """The scale-``v`` slice of the Bourgain-Morrey norm."""
    _check_scale(f.config, v)
    tab = _tables(f.config)
    lo, hi = tab.offsets[v - f.config.j_min], tab.offsets[v - f.config.j_min + 1]
    return _aggregate(cube_terms(f, e).terms[lo:hi], e.r)


def slice_norm(f: GridFunction, e: ExponentSet, j: int) -> float:
    """Norm of ``f`` in the scale-``j`` slice space of the block side.

    ``( sum_k (|Q_{j,k}|^{1/t'-1/p'} ||f||_{L^{p'}(Q_{j,k}; l^{q'})})^{r'} )^{1/r'}``.
    """
    _check_dim(f, e)
    _check_scale(f.config, j)
    if e.p <= 1:
        raise DomainError("slice norms need p > 1")
    tab = _tables(f.config)
    terms = morrey_terms(f.cell_norms(e.q_conj), f.config, e.p_conj, e.t_conj)
    lo, hi = tab.offsets[j - f.config.j_min], tab.offsets[j - f.config.j_min + 1]
    return _aggregate(terms[lo:hi], e.r_conj)


def _ball_volume(n: int, R: float) -> float:
    return 2.0 * R if n == 1 else math.pi * R * R


def continuous_char_estimate(f: GridFunction, e: ExponentSet, samples_per_cell: int = 2) -> float:
    """Sampled ball-average functional equivalent to the Bourgain-Morrey norm.

    Discretizes
    ``( int_0^inf int_{R^n} (|B(y,s)|^{1/t-1/p-1/r} ||f||_{L^p(B(y,s))})^r dy ds/s )^{1/r}``
    with radii ``s = 2^-j`` for ``j`` in ``[j_min, J]`` (each weighted by ``ln 2``)
    and centers on a grid of spacing ``cell_size / samples_per_cell`` per axis.
    ``f`` is extended by zero outside the window. Ball ``L^p`` norms use exact
    overlap lengths in 1D and cell-center membership in 2D.
    """
    _check_dim(f, e)
    if math.isinf(e.r):
        raise DomainError("the sampled characterization needs r < inf")
    if samples_per_cell < 1:
        raise DomainError("samples_per_cell must be >= 1")
    c = f.config
    h, W, n = c.cell_size, c.window_size, c.n
    a_p = f.cell_norms(e.q) ** e.p
    if not np.any(a_p):
        return 0.0
    delta = h / samples_per_cell
    expo = _inv(e.t) - _inv(e.p) - _inv(e.r)
    total = 0.0
    lo = np.arange(c.side) * h
    centers_1d_cells = lo + 0.5 * h
    for j in range(c.j_min, c.J + 1):
        R = 2.0 ** (-j)
        count = int(round((W + 2 * R) / delta))
        ys = -R + (np.arange(count) + 0.5) * delta
        if n == 1:
            overlap = np.clip(np.minimum(ys[:, None] + R, lo[None, :] + h)
                              - np.maximum(ys[:, None] - R, lo[None, :]), 0.0, None)
            mass = overlap @ a_p
        else:
            dx = ys[:, None] - centers_1d_cells[None, :]
            inside = (dx[:, None, :, None] ** 2 + dx[None, :, None, :] ** 2) < R * R
            mass = np.einsum("abij,ij->ab", inside, a_p.reshape(c.side, c.side)).ravel() * h * h
        local = mass ** (1.0 / e.p)
        vals = (_ball_volume(n, R) ** expo * local) ** e.r
        total += vals.sum() * delta ** n * math.log(2.0)
    return float(total ** (1.0 / e.r))
