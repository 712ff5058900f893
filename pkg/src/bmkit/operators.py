"""Averaging, translation, convolution and dyadic maximal operators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, _inv
from .lattice import DomainError, LatticeConfig, _tables


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Scalar convolution kernel; values are per-cell densities."""

    kernel: GridFunction
    l1_norm: float = field(init=False)

    def __post_init__(self):
        if self.kernel.d != 1:
            raise DomainError(f"kernels are scalar (d=1), got d={self.kernel.d}")
        object.__setattr__(self, "l1_norm",
                           float(np.abs(self.kernel.values[:, 0]).sum() * self.kernel.config.cell_volume))

    @classmethod
    def dirac(cls, config: LatticeConfig, cell: int = 0) -> "KernelSpec":
        vals = np.zeros(config.num_cells)
        vals[cell] = 1.0 / config.cell_volume
        return cls(GridFunction(config, vals))


def _level(config: LatticeConfig, k: int) -> int:
    if not config.j_min <= k <= config.J:
        raise DomainError(f"scale {k} outside [{config.j_min}, {config.J}]")
    return k - config.j_min


def average_Ek(f: GridFunction, k: int) -> GridFunction:
    """Replace ``f`` on each scale-``k`` cube by its mean over that cube."""
    c = f.config
    ids = _tables(c).anc[:, _level(c, k)]
    counts = np.bincount(ids)
    sums = np.stack([np.bincount(ids, weights=f.values[:, i], minlength=counts.size)
                     for i in range(f.d)], axis=1)
    means = sums / np.maximum(counts, 1)[:, None]
    return GridFunction(c, means[ids])


def _grid(f: GridFunction) -> np.ndarray:
    return f.values.reshape((f.config.side,) * f.config.n + (f.d,))


def translate_cells(f: GridFunction, shift) -> GridFunction:
    """``f(. - y)`` for ``y = shift * cell_size`` with periodic wrap."""
    c = f.config
    if not c.periodic:
        raise DomainError("translation needs a periodic lattice")
    shift = tuple(int(s) for s in np.broadcast_to(np.asarray(shift), (c.n,)))
    out = np.roll(_grid(f), shift, axis=tuple(range(c.n)))
    return GridFunction(c, out.reshape(c.num_cells, f.d))


def translate(f: GridFunction, y) -> GridFunction:
    """Translate by a displacement ``y`` that is a whole number of cells per axis."""
    c = f.config
    y = np.broadcast_to(np.asarray(y, dtype=float), (c.n,))
    steps = y / c.cell_size
    shift = np.round(steps)
    if np.any(np.abs(steps - shift) > 1e-9 * np.maximum(1.0, np.abs(steps))):
        raise DomainError(f"displacement {tuple(y)} is not a multiple of the cell size {c.cell_size}")
    return translate_cells(f, shift.astype(int))


def convolve(f: GridFunction, g: KernelSpec) -> GridFunction:
    """Periodic convolution ``sum_c g(c) f(. - c) |cell|`` with a cell-aligned kernel."""
    c = f.config
    if g.kernel.config != c:
        raise DomainError("kernel and function live on different lattices")
    if not c.periodic:
        raise DomainError("convolution needs a periodic lattice")
    out = np.zeros_like(f.values)
    kv = g.kernel.values[:, 0]
    for cell in np.flatnonzero(kv):
        out += kv[cell] * c.cell_volume * translate_cells(f, c.cell_coords(cell)).values
    return GridFunction(c, out)


def _dyadic_max_average(x: np.ndarray, config: LatticeConfig) -> np.ndarray:
    """For each cell, the largest mean of ``x`` over the cubes containing it."""
    tab = _tables(config)
    sums = np.bincount(tab.anc.ravel(), weights=np.repeat(x, config.levels), minlength=len(tab.cubes))
    counts = np.bincount(tab.anc.ravel(), minlength=len(tab.cubes))
    return (sums / counts)[tab.anc].max(axis=1)


def maximal(f: GridFunction, variant: str = "scalar_X", eta: float | None = None,
            q: float = 2.0) -> GridFunction:
    """Dyadic (powered) maximal function over the cube family.

    ``scalar_X`` applies ``M_eta`` to ``|f|_{l^q}`` and returns a scalar function;
    ``componentwise`` applies it to each ``|f_i|``. ``eta`` defaults to 1.
    """
    eta = 1.0 if eta is None else float(eta)
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    c = f.config
    if variant == "scalar_X":
        cols = f.cell_norms(q)[:, None]
    elif variant == "componentwise":
        cols = np.abs(f.values)
    else:
        raise DomainError(f"unknown maximal variant {variant!r}")
    out = np.stack([_dyadic_max_average(cols[:, i] ** eta, c) ** (1.0 / eta)
                    for i in range(cols.shape[1])], axis=1)
    return GridFunction(c, out)


def ek_constant(n: int, r: float, t: float) -> float:
    """``(1 + sum_{i>=1} 2^{n r i (1/r - 1/t)})^{1/r}`` in closed form; 1 when ``r = inf``."""
    if math.isinf(r):
        return 1.0
    x = 2.0 ** (n * r * (1.0 / r - _inv(t)))
    if x >= 1.0:
        return math.inf
    return (1.0 / (1.0 - x)) ** (1.0 / r)


def translation_constant(n: int, r_conj: float) -> float:
    """``2^{n/r'}``: each translated cube meets at most ``2^n`` cubes of its scale."""
    return 2.0 ** (n / r_conj)
