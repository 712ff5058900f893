"""Dyadic cubes on a finite window.

A cube ``(j, m)`` is the half-open box ``prod_i [2^-j m_i, 2^-j (m_i + 1))``.
The window is the coarsest cube ``[0, 2^-j_min)^n`` and functions live on the
finest cells, scale ``J``, indexed row-major.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True, order=True)
class CubeIndex:
    j: int
    m: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))

    @property
    def n(self) -> int:
        return len(self.m)

    def volume(self) -> float:
        # exact power of two for |j n| <= 900
        return float(np.exp2(-self.j * self.n))

    def volume_power(self, alpha: float) -> float:
        """``|Q|^alpha`` evaluated as ``2^(-j n alpha)``."""
        return float(np.exp2(-self.j * self.n * alpha))

    def children(self) -> list["CubeIndex"]:
        return [
            CubeIndex(self.j + 1, tuple(2 * mi + ei for mi, ei in zip(self.m, e)))
            for e in itertools.product((0, 1), repeat=self.n)
        ]

    def parent(self) -> "CubeIndex":
        return CubeIndex(self.j - 1, tuple(mi >> 1 for mi in self.m))

    def contains(self, other: "CubeIndex") -> bool:
        """True if ``other`` is a subcube (or equal)."""
        if other.j < self.j:
            return False
        shift = other.j - self.j
        return all((om >> shift) == sm for om, sm in zip(other.m, self.m))

    def interval(self, axis: int = 0) -> tuple[float, float]:
        h = 2.0 ** (-self.j)
        return self.m[axis] * h, (self.m[axis] + 1) * h


@dataclass(frozen=True)
class LatticeConfig:
    n: int = 1
    J: int = 3
    j_min: int = 0
    periodic: bool = True

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {self.n}")
        if self.j_min > self.J:
            raise DomainError(f"need j_min <= J, got j_min={self.j_min}, J={self.J}")

    @property
    def levels(self) -> int:
        return self.J - self.j_min + 1

    @property
    def side(self) -> int:
        """Number of finest cells along one axis."""
        return 1 << (self.J - self.j_min)

    @property
    def num_cells(self) -> int:
        return self.side ** self.n

    @property
    def cell_volume(self) -> float:
        return float(np.exp2(-self.J * self.n))

    @property
    def cell_size(self) -> float:
        return float(np.exp2(-self.J))

    @property
    def window_size(self) -> float:
        return float(np.exp2(-self.j_min))

    def refine(self, extra: int = 1) -> "LatticeConfig":
        return LatticeConfig(self.n, self.J + extra, self.j_min, self.periodic)

    def cubes_at(self, j: int) -> int:
        return (1 << (j - self.j_min)) ** self.n

    def in_family(self, cube: CubeIndex) -> bool:
        if cube.n != self.n or not (self.j_min <= cube.j <= self.J):
            return False
        k = 1 << (cube.j - self.j_min)
        return all(0 <= mi < k for mi in cube.m)

    def cell_coords(self, cell: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(cell, (self.side,) * self.n))


def enumerate_cubes(config: LatticeConfig) -> list[CubeIndex]:
    """All cubes of the family, sorted lexicographically in ``(j, m)``."""
    return list(_tables(config).cubes)


def cells_of(cube: CubeIndex, config: LatticeConfig) -> np.ndarray:
    """Row-major indices of the finest cells making up ``cube``.

    In one dimension this is a contiguous range.
    """
    if not config.in_family(cube):
        raise DomainError(f"cube {cube} is not in the family of {config}")
    w = 1 << (config.J - cube.j)
    ranges = [np.arange(mi * w, (mi + 1) * w) for mi in cube.m]
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.sort(np.ravel_multi_index([g.ravel() for g in grids], (config.side,) * config.n))


def ancestors_of_cell(cell: int, config: LatticeConfig) -> list[CubeIndex]:
    """The chain of cubes containing ``cell``, coarsest first."""
    if not 0 <= cell < config.num_cells:
        raise DomainError(f"cell {cell} out of range [0, {config.num_cells})")
    coords = config.cell_coords(cell)
    return [
        CubeIndex(j, tuple(c >> (config.J - j) for c in coords))
        for j in range(config.j_min, config.J + 1)
    ]


@dataclass(frozen=True)
class _Tables:
    cubes: tuple[CubeIndex, ...]
    scale: np.ndarray  # (K,) scale j of each cube
    anc: np.ndarray  # (N, L) flat id of the level-l ancestor of each cell
    offsets: np.ndarray  # (L + 1,) first flat id at each level


@functools.lru_cache(maxsize=64)
def _tables(config: LatticeConfig) -> _Tables:
    n, side = config.n, config.side
    coords = np.stack(np.unravel_index(np.arange(config.num_cells), (side,) * n), axis=1)
    cubes: list[CubeIndex] = []
    scale = []
    offsets = [0]
    anc = np.empty((config.num_cells, config.levels), dtype=np.int64)
    for level, j in enumerate(range(config.j_min, config.J + 1)):
        k = 1 << (j - config.j_min)
        for m in itertools.product(range(k), repeat=n):
            cubes.append(CubeIndex(j, m))
            scale.append(j)
        shifted = coords >> (config.J - j)
        anc[:, level] = offsets[-1] + np.ravel_multi_index(shifted.T, (k,) * n)
        offsets.append(len(cubes))
    anc.setflags(write=False)
    return _Tables(tuple(cubes), np.array(scale), anc, np.array(offsets))


def cube_position(cube: CubeIndex, config: LatticeConfig) -> int:
    """Position of ``cube`` in :func:`enumerate_cubes`."""
    if not config.in_family(cube):
        raise DomainError(f"cube {cube} is not in the family of {config}")
    t = _tables(config)
    k = 1 << (cube.j - config.j_min)
    return int(t.offsets[cube.j - config.j_min] + np.ravel_multi_index(cube.m, (k,) * config.n))
