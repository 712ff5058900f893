"""Exponents, vector-valued grid functions, value norms and the pairing."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import CubeIndex, DomainError, LatticeConfig, _tables, cells_of

INF = math.inf

TRIVIALITY_RULE = (
    "the Bourgain-Morrey space M_p^{t,r} is nonzero only when "
    "p < t < r < inf or p <= t < r = inf"
)


def conjugate(s: float) -> float:
    """Hoelder conjugate ``s / (s - 1)`` with ``1' = inf`` and ``inf' = 1``."""
    if s == 1:
        return INF
    if math.isinf(s):
        return 1.0
    return s / (s - 1.0)


def _inv(s: float) -> float:
    return 0.0 if math.isinf(s) else 1.0 / s


@dataclass(frozen=True)
class ExponentSet:
    """Exponents ``(n, p, t, r, q, eta)`` with derived conjugates.

    ``r = math.inf`` selects sup-aggregation. ``q`` is the exponent of the
    value space ``l^q``; block-side functions take values in ``l^{q'}``.
    """

    p: float
    t: float
    r: float
    q: float = 2.0
    eta: float | None = None
    n: int = 1
    p_conj: float = field(init=False)
    t_conj: float = field(init=False)
    r_conj: float = field(init=False)
    q_conj: float = field(init=False)

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError(f"p must be >= 1, got {self.p}")
        if not self.t >= self.p:
            raise DomainError(f"need p <= t, got p={self.p}, t={self.t}")
        if not self.r > 0:
            raise DomainError(f"r must be positive, got {self.r}")
        if not (1 < self.q < INF):
            raise DomainError(f"q must lie in (1, inf), got {self.q}")
        if self.eta is not None and not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        for name in ("p", "t", "r", "q"):
            object.__setattr__(self, name + "_conj", conjugate(getattr(self, name)))

    @property
    def nontrivial(self) -> bool:
        if math.isinf(self.r):
            return self.p <= self.t
        return self.p < self.t < self.r

    @property
    def predual_ok(self) -> bool:
        """Exponent range where the block space is the predual (needs p > 1)."""
        return self.p > 1 and self.nontrivial

    def require_predual(self) -> None:
        if not self.nontrivial:
            raise DomainError(f"invalid exponents (p={self.p}, t={self.t}, r={self.r}): {TRIVIALITY_RULE}")
        if self.p <= 1:
            raise DomainError("block-space computations need p > 1")

    @property
    def eta_max(self) -> float:
        return min(self.p_conj, self.q_conj)

    @property
    def morrey_exponent(self) -> float:
        """``1/t - 1/p``, the power of ``|Q|`` in the Bourgain-Morrey terms."""
        return _inv(self.t) - _inv(self.p)

    def with_(self, **changes) -> "ExponentSet":
        kw = dict(p=self.p, t=self.t, r=self.r, q=self.q, eta=self.eta, n=self.n)
        kw.update(changes)
        return ExponentSet(**kw)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "p": self.p, "t": self.t,
            "r": "inf" if math.isinf(self.r) else self.r,
            "q": self.q, "eta": self.eta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExponentSet":
        r = d["r"]
        r = INF if r in ("inf", "infinity", None) else float(r)
        return cls(p=float(d["p"]), t=float(d["t"]), r=r, q=float(d.get("q", 2.0)),
                   eta=None if d.get("eta") is None else float(d["eta"]), n=int(d.get("n", 1)))


def value_norm(v, s: float) -> float:
    """``l^s`` norm of a finite vector, ``1 < s < inf``."""
    v = np.asarray(v, dtype=float)
    if not (1 < s < INF):
        raise DomainError(f"value exponent must lie in (1, inf), got {s}")
    if not np.all(np.isfinite(v)):
        raise DomainError("non-finite vector entries")
    return _lp(np.abs(v).ravel(), s)


def _lp(x: np.ndarray, s: float, axis=None) -> np.ndarray | float:
    """Scaled l^s norm of nonnegative entries; avoids overflow for large s."""
    if math.isinf(s):
        return x.max(axis=axis, initial=0.0)
    scale = x.max(axis=axis, keepdims=True, initial=0.0)
    safe = np.where(scale > 0, scale, 1.0)
    out = safe * np.sum((x / safe) ** s, axis=axis, keepdims=True) ** (1.0 / s)
    out = np.where(scale > 0, out, 0.0)
    if axis is None:
        return float(out.ravel()[0])
    return np.squeeze(out, axis=axis)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant ``R^d``-valued function on the finest cells.

    ``values`` has shape ``(num_cells, d)`` with cells in row-major order.
    """

    config: LatticeConfig
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] != self.config.num_cells:
            raise DomainError(
                f"values must have shape ({self.config.num_cells}, d), got {np.shape(self.values)}")
        if vals.shape[1] < 1:
            raise DomainError("need d >= 1")
        if not np.all(np.isfinite(vals)):
            raise DomainError("non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zeros(cls, config: LatticeConfig, d: int = 1) -> "GridFunction":
        return cls(config, np.zeros((config.num_cells, d)))

    @classmethod
    def constant(cls, config: LatticeConfig, value) -> "GridFunction":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(config, np.tile(value, (config.num_cells, 1)))

    @classmethod
    def indicator(cls, cube: CubeIndex, config: LatticeConfig, value=1.0) -> "GridFunction":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        vals = np.zeros((config.num_cells, value.size))
        vals[cells_of(cube, config)] = value
        return cls(config, vals)

    def _check(self, other: "GridFunction") -> None:
        if other.config != self.config or other.d != self.d:
            raise DomainError("grid functions live on different lattices or dimensions")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.config, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.config, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.config, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.config, -self.values)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.config, values)

    def restrict(self, cube: CubeIndex) -> "GridFunction":
        vals = np.zeros_like(self.values)
        idx = cells_of(cube, self.config)
        vals[idx] = self.values[idx]
        return GridFunction(self.config, vals)

    def cell_norms(self, s: float) -> np.ndarray:
        """Per-cell ``l^s`` norms, shape ``(num_cells,)``."""
        return _lp(np.abs(self.values), s, axis=1)

    def refine(self, extra: int = 1) -> "GridFunction":
        """The same function on a lattice ``extra`` scales finer."""
        fine = self.config.refine(extra)
        n, k = self.config.n, 1 << extra
        grid = self.values.reshape((self.config.side,) * n + (self.d,))
        for axis in range(n):
            grid = np.repeat(grid, k, axis=axis)
        return GridFunction(fine, grid.reshape(fine.num_cells, self.d))

    def support(self) -> np.ndarray:
        return np.flatnonzero(np.any(self.values != 0, axis=1))

    def to_dict(self) -> dict:
        c = self.config
        return {"n": c.n, "J": c.J, "j_min": c.j_min, "periodic": c.periodic,
                "d": self.d, "values": self.values.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "GridFunction":
        try:
            config = LatticeConfig(int(doc["n"]), int(doc["J"]), int(doc["j_min"]),
                                   bool(doc.get("periodic", True)))
            d = int(doc["d"])
            values = np.asarray(doc["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed grid function document: {exc}") from exc
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[1] != d:
            raise DomainError(f"values do not match d={d}: shape {values.shape}")
        return cls(config, values)

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


def cube_power_sums(a: np.ndarray, config: LatticeConfig, p: float) -> np.ndarray:
    """``sum_{cells in Q} a^p |cell|`` for every cube, in enumeration order.

    Accumulation runs over cells in ascending index within each cube.
    """
    t = _tables(config)
    w = config.cell_volume * np.asarray(a, dtype=float) ** p
    K = len(t.cubes)
    return np.bincount(t.anc.ravel(), weights=np.repeat(w, config.levels), minlength=K)


def lp_norm_on_cube(f: GridFunction, Q: CubeIndex, p: float, q: float) -> float:
    """``( int_Q |f|_{l^q}^p )^{1/p}``, an exact cell sum."""
    idx = cells_of(Q, f.config)
    a = f.cell_norms(q)[idx]
    if math.isinf(p):
        return float(a.max(initial=0.0))
    return _lp(a, p) * f.config.cell_volume ** (1.0 / p)


def pairing(g: GridFunction, f: GridFunction) -> float:
    """``int <g(x), f(x)> dx`` summed in ascending cell order."""
    g._check(f)
    per_cell = np.sum(g.values * f.values, axis=1)
    return float(np.sum(per_cell) * g.config.cell_volume)


def random_function(seed, config: LatticeConfig, d: int = 4, sparsity: float = 0.0) -> GridFunction:
    """Seeded test function.

    Entries are i.i.d. standard normal; ``round(sparsity * num_cells)`` cells,
    chosen uniformly without replacement, are then set to zero.
    """
    if not 0 <= sparsity <= 1:
        raise DomainError(f"sparsity must lie in [0, 1], got {sparsity}")
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((config.num_cells, d))
    k = int(round(sparsity * config.num_cells))
    if k:
        vals[rng.choice(config.num_cells, size=k, replace=False)] = 0.0
    return GridFunction(config, vals)
