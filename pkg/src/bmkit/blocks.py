"""Block-space norms: decomposition infimum, dual supremum, and bounds.

A ``(p', t')``-block on a cube ``Q`` is an ``l^{q'}``-valued function supported
on ``Q`` with ``||b||_{L^{p'}} <= |Q|^{1/t-1/p}``. The block norm of ``g`` is
the least ``l^{r'}`` norm of coefficients ``lambda`` with ``g = sum lambda_Q b_Q``.

Writing ``g_Q = lambda_Q b_Q`` turns this into the convex program

    min  ( sum_Q (|Q|^{1/p-1/t} ||g_Q||_{L^{p'}(Q; l^{q'})})^{r'} )^{1/r'}
    s.t. sum_Q g_Q = g,  supp g_Q in Q.

Replacing ``g_Q(x)`` by ``g(x) |g_Q(x)| / sum_Q' |g_Q'(x)|`` never increases any
``||g_Q||``, so an optimal splitting can be sought among
``g_Q(x) = g(x) y_Q(x) / |g(x)|`` with ``y >= 0`` and ``sum_Q y_Q(x) = |g(x)|``:
a problem in the per-cell magnitudes only. The same Hoelder argument on the
dual side restricts maximizers to ``f(x) = s(x) u(x)`` where ``u(x)`` is the
unit ``l^q`` vector norming ``g(x)``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, minimize

from .bm import bm_norm, morrey_terms
from .grid import ExponentSet, GridFunction, _inv, _lp
from .lattice import CubeIndex, DomainError, LatticeConfig, _tables, ancestors_of_cell, cube_position


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iters: int = 20000
    seed: int = 0


class NotConverged(RuntimeError):
    """Solver stopped before reaching tolerance; carries the best feasible result."""

    def __init__(self, message, value, decomposition=None, gap=None):
        super().__init__(message)
        self.value = value
        self.decomposition = decomposition
        self.gap = gap


@dataclass(frozen=True, eq=False)
class BlockEntry:
    cube: CubeIndex
    lam: float
    block: GridFunction


@dataclass(eq=False)
class BlockDecomposition:
    entries: list[BlockEntry]
    r_conj: float
    residual_norm: float = 0.0
    lower_bound: float | None = None

    @property
    def cost(self) -> float:
        return _lp(np.array([abs(e.lam) for e in self.entries]), self.r_conj) if self.entries else 0.0

    def __len__(self) -> int:
        return len(self.entries)

    def reconstruct(self, config: LatticeConfig, d: int) -> GridFunction:
        vals = np.zeros((config.num_cells, d))
        for e in self.entries:
            vals += e.lam * e.block.values
        return GridFunction(config, vals)

    def capacity_ok(self, e: ExponentSet, slack: float = 1e-9) -> bool:
        from .grid import lp_norm_on_cube
        for ent in self.entries:
            outside = np.ones(ent.block.config.num_cells, bool)
            outside[_cells(ent.cube, ent.block.config)] = False
            if np.any(ent.block.values[outside] != 0):
                return False
            cap = ent.cube.volume_power(_inv(e.t) - _inv(e.p))
            if lp_norm_on_cube(ent.block, ent.cube, e.p_conj, e.q_conj) > cap * (1 + slack):
                return False
        return True

    def to_json(self) -> str:
        doc = [{"j": e.cube.j, "m": list(e.cube.m), "lambda": e.lam,
                "block_values": e.block.values.tolist()} for e in self.entries]
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str, config: LatticeConfig, r_conj: float) -> "BlockDecomposition":
        entries = [BlockEntry(CubeIndex(it["j"], tuple(it["m"])), float(it["lambda"]),
                              GridFunction(config, np.asarray(it["block_values"], dtype=float)))
                   for it in json.loads(text)]
        return cls(entries, r_conj)


def _cells(cube, config):
    from .lattice import cells_of
    return cells_of(cube, config)


@dataclass(eq=False)
class DualCertificate:
    f_star: GridFunction
    value: float
    bm: float
    converged: bool = True
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)


def _unit_directions(g: GridFunction, q: float) -> np.ndarray:
    """Unit ``l^q`` vectors ``u(x)`` with ``<u(x), g(x)> = |g(x)|_{l^{q'}}``."""
    qc = q / (q - 1.0)
    a = g.cell_norms(qc)
    safe = np.where(a > 0, a, 1.0)
    u = np.sign(g.values) * (np.abs(g.values) / safe[:, None]) ** (qc - 1.0)
    u[a == 0] = 0.0
    return u


class _Splitting:
    """The magnitude splitting problem behind the block norm."""

    def __init__(self, a: np.ndarray, config: LatticeConfig, e: ExponentSet):
        self.config = config
        self.e = e
        tab = _tables(config)
        self.K = len(tab.cubes)
        self.scale = tab.scale
        self.active = np.flatnonzero(a > 0)
        self.amax = float(a.max(initial=0.0))
        self.a = a[self.active] / self.amax if self.amax > 0 else a[self.active]
        self.anc = tab.anc[self.active]
        self.v = config.cell_volume
        self.pc = e.p_conj
        self.rc = e.r_conj
        # |Q|^{1/p - 1/t}, the cost per unit L^{p'} mass on Q
        self.alpha_Q = np.exp2(-self.scale * config.n * (_inv(e.p) - _inv(e.t)))
        self.alpha = self.alpha_Q[self.anc]

    def initial(self, power: float) -> np.ndarray:
        # weights |Q|^{-power (1/p-1/t)}; power = r is the single-cell optimum
        return -power * np.log(self.alpha)

    def split(self, z: np.ndarray) -> np.ndarray:
        z = z - z.max(axis=1, keepdims=True)
        w = np.exp(z)
        return self.a[:, None] * w / w.sum(axis=1, keepdims=True)

    def mass(self, y: np.ndarray) -> np.ndarray:
        return np.bincount(self.anc.ravel(), weights=(self.v * y ** self.pc).ravel(), minlength=self.K)

    def cost(self, y: np.ndarray) -> float:
        """Exact ``l^{r'}`` coefficient norm of the splitting ``y`` (normalized units)."""
        T = self.alpha_Q * self.mass(y) ** (1.0 / self.pc)
        return _lp(T, self.rc)

    def value_grad(self, y: np.ndarray, eps: float = 0.0):
        """``sum_Q T_Q^{r'}`` and its gradient in ``y``.

        ``eps > 0`` adds a floor ``eps^{p'} |cell|`` to every cube mass, which
        makes the objective differentiable where a cube carries no mass.
        """
        S = self.mass(y)
        if eps > 0:
            S = S + self.v * eps ** self.pc
        used = S > 0
        coef = np.zeros(self.K)
        coef[used] = self.rc * self.alpha_Q[used] ** self.rc * S[used] ** (self.rc / self.pc - 1.0)
        F = float(np.sum(self.alpha_Q[used] ** self.rc * S[used] ** (self.rc / self.pc)))
        return F, coef[self.anc] * self.v * y ** (self.pc - 1.0)

    def softmax_objective(self, z: np.ndarray):
        """Objective in softmax logits, flattened."""
        y = self.split(z.reshape(self.anc.shape))
        F, G = self.value_grad(y)
        dz = y * (G - (y * G).sum(axis=1, keepdims=True) / self.a[:, None])
        return F, dz.ravel()

    def ratio_objective(self, w: np.ndarray, eps: float):
        """Objective in unnormalised nonnegative shares ``y = a w / sum(w)``."""
        W = w.reshape(self.anc.shape)
        tot = W.sum(axis=1, keepdims=True)
        y = self.a[:, None] * _rows(W, W.shape)
        tot = np.where(tot > 0, tot, 1.0)
        F, G = self.value_grad(y, eps)
        dw = self.a[:, None] * (G - (y * G).sum(axis=1, keepdims=True) / self.a[:, None]) / tot
        return F, dw.ravel()

    def certificate(self, y: np.ndarray) -> tuple[float, np.ndarray]:
        """Lower bound and scalar dual profile derived from the gradient at ``z``.

        At an optimal splitting ``y`` the gradient of the coefficient norm is constant along
        the used part of each cell's ancestor chain; that common value, scaled
        into the Bourgain-Morrey unit ball, is a dual feasible point.
        """
        F, G = self.value_grad(y)
        phi = F ** (1.0 / self.rc)
        grad = G * phi ** (1.0 - self.rc) / self.rc / self.v
        s = np.zeros(self.config.num_cells)
        # y-weighted mean: the KKT multiplier estimate, robust to cubes with vanishing mass
        s[self.active] = (y * grad).sum(axis=1) / self.a
        e = self.e
        bm = _lp(morrey_terms(s, self.config, e.p, e.t), e.r)
        if bm <= 0:
            return 0.0, s
        lower = self.v * float(np.dot(self.a, s[self.active])) / bm
        return lower, s / bm


def _start_powers(r: float) -> list[float]:
    # low powers spread mass over coarse cubes, where softmax gradients stay alive
    out = [1.0, 0.0, 2.0]
    if r not in out:
        out.append(min(r, 64.0))
    return out


def _project_rows(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Project each row of ``x`` onto ``{y >= 0, sum y = a_row}``."""
    u = -np.sort(-x, axis=1)
    css = np.cumsum(u, axis=1) - a[:, None]
    k = np.arange(1, x.shape[1] + 1)
    cond = u - css / k > 0
    rho = x.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = css[np.arange(x.shape[0]), rho] / (rho + 1)
    return np.maximum(x - tau[:, None], 0.0)


_FLOOR_LADDER = (1e-3, 1e-6, 1e-9, 1e-12)
# r' = 1: after each floor, cubes below this share of the cost are dropped and the rest solved unsmoothed
_DROP = 1e-3
_POLISH_ROUNDS = 4

# stop a run once the certified gap is this fraction of the tolerance
_MARGIN = 0.01


def _solve_splitting(prob: _Splitting, opts: SolverOptions):
    """Ratio-weight L-BFGS (with a floor ladder and active-set polish when r' = 1),
    then multi-start softmax L-BFGS, then a projected-gradient polish."""
    iters = 0
    best_y, best_up, best_lo = None, math.inf, 0.0

    def consider(y, tol=opts.tol):
        nonlocal best_y, best_up, best_lo
        up = prob.cost(y)
        lo, _ = prob.certificate(y)
        if up < best_up:
            best_y, best_up = y, up
        best_lo = max(best_lo, lo)
        return (best_up - best_lo) / best_up <= tol

    def run(fun, x0, to_y, bounds=None):
        nonlocal iters
        count = [0]

        def check(intermediate_result):
            count[0] += 1
            if count[0] % 10 == 0 and consider(to_y(intermediate_result.x), opts.tol * _MARGIN):
                raise StopIteration

        scale = 1.0 / fun(x0)[0]
        res = minimize(lambda x: tuple(v * scale for v in fun(x)), x0, jac=True, method="L-BFGS-B",
                       bounds=bounds, callback=check,
                       options={"maxiter": max(opts.max_iters - iters, 1), "maxcor": 30,
                                "ftol": 1e-16, "gtol": 1e-14})
        iters += int(res.nit)
        return res.x

    # shares as ratios of nonnegative weights keep a live gradient at zero share;
    # when r' = 1 the objective is nonsmooth there, so a mass floor is driven to zero
    shape = prob.anc.shape
    # single-scale splittings: the result never exceeds the best of them
    for lv in range(shape[1]):
        y = np.zeros(shape)
        y[:, lv] = prob.a
        consider(y)
    def to_y(x):
        return prob.a[:, None] * _rows(x, shape)

    def polish(w):
        # drop the cubes the smoothed solution leaves (nearly) empty; the rest is smooth
        keep = np.ones(shape, dtype=bool)
        for _ in range(_POLISH_ROUNDS):
            T = prob.alpha_Q * prob.mass(to_y(w)) ** (1.0 / prob.pc)
            keep &= (T > _DROP * T.sum())[prob.anc]
            keep |= ~keep.any(axis=1, keepdims=True)
            w = np.where(keep, _rows(w, shape), 0.0).ravel()
            w = run(lambda x: prob.ratio_objective(x, 0.0), w, to_y, Bounds(0.0, np.where(keep.ravel(), np.inf, 0.0)))
            if consider(to_y(w)):
                return True
        return False

    w = np.ones(prob.anc.size)
    bounds = Bounds(0.0, np.inf)
    done = False
    ladder = _FLOOR_LADDER if prob.rc == 1 else (0.0,)
    for eps in ladder:
        w = run(lambda x: prob.ratio_objective(x, eps), w, to_y, bounds)
        w = _rows(w, shape).ravel()
        if eps > 0:
            done = polish(w) or iters >= opts.max_iters
            if done:
                break
    done = done or consider(to_y(w)) or iters >= opts.max_iters
    if not done:
        for power in _start_powers(prob.e.r):
            z = run(prob.softmax_objective, prob.initial(power).ravel(), lambda x: prob.split(x.reshape(shape)))
            done = consider(prob.split(z.reshape(shape))) or iters >= opts.max_iters
            if done:
                break
    if not done:
        # the convex problem in y itself, projected onto the per-cell simplices
        scale = 1.0 / prob.value_grad(best_y)[0]
        y, it, _ = _spg(lambda y: prob.value_grad(y)[0] * scale,
                        lambda y: tuple(v * scale for v in prob.value_grad(y)),
                        lambda x: _project_rows(x, prob.a), best_y,
                        max(opts.max_iters - iters, 1), opts.tol * 1e-3, stop=lambda y: consider(y))
        iters += it
    return (best_y, best_up, best_lo, (best_up - best_lo) / best_up), iters


def _rows(w, shape):
    W = np.asarray(w).reshape(shape)
    tot = W.sum(axis=1, keepdims=True)
    return np.where(tot > 0, W / np.where(tot > 0, tot, 1.0), 1.0 / shape[1])


def block_norm(g: GridFunction, e: ExponentSet, opts: SolverOptions | None = None):
    """Block-space norm as a decomposition infimum.

    Returns ``(value, decomposition)``. ``value`` is the exact coefficient cost
    of the returned decomposition, hence always an upper bound; convergence is
    certified by a dual point whose pairing is within ``opts.tol`` (relative).
    Raises :class:`NotConverged` carrying the best feasible value otherwise.
    """
    opts = opts or SolverOptions()
    e.require_predual()
    if g.config.n != e.n:
        raise DomainError(f"exponent set is for n={e.n}, function lives in n={g.config.n}")
    a = g.cell_norms(e.q_conj)
    if not np.any(a > 0):
        return 0.0, BlockDecomposition([], e.r_conj, 0.0, 0.0)
    prob = _Splitting(a, g.config, e)
    (y_act, upper, lower, gap), iters = _solve_splitting(prob, opts)
    y = np.zeros((g.config.num_cells, g.config.levels))
    y[prob.active] = y_act
    dec = _decomposition_from_split(g, e, y * prob.amax, a)
    dec.lower_bound = lower * prob.amax
    value = upper * prob.amax
    if gap > opts.tol:
        raise NotConverged(f"block norm gap {gap:.2e} above tol {opts.tol:.1e} after {iters} iterations",
                           value, dec, gap)
    return value, dec


def _decomposition_from_split(g: GridFunction, e: ExponentSet, y: np.ndarray, a: np.ndarray):
    config = g.config
    tab = _tables(config)
    safe = np.where(a > 0, a, 1.0)
    frac = y / safe[:, None]
    entries = []
    alpha_exp = _inv(e.p) - _inv(e.t)
    for level in range(config.levels):
        ids = tab.anc[:, level]
        for Q in np.unique(ids[a > 0]):
            cells = np.flatnonzero(ids == Q)
            part = np.zeros_like(g.values)
            part[cells] = g.values[cells] * frac[cells, level][:, None]
            norm = _lp(_lp(np.abs(part[cells]), e.q_conj, axis=1), e.p_conj) * config.cell_volume ** (1 / e.p_conj)
            if norm <= 0:
                continue
            cube = tab.cubes[Q]
            lam = cube.volume_power(alpha_exp) * norm
            entries.append(BlockEntry(cube, float(lam), GridFunction(config, part / lam)))
    dec = BlockDecomposition(entries, e.r_conj)
    resid = g - dec.reconstruct(config, g.d)
    dec.residual_norm = _lp(resid.cell_norms(e.q_conj), e.p_conj) * config.cell_volume ** (1 / e.p_conj)
    return dec


def single_cell_block_norm(value, cell: int, config: LatticeConfig, e: ExponentSet) -> float:
    """Closed form for ``g`` supported on one finest cell with vector value ``value``.

    Minimizing ``|| (alpha_Q w_Q)_Q ||_{l^{r'}}`` over ``sum_Q w_Q = 1`` along the
    ancestor chain gives ``( sum_Q alpha_Q^{-r} )^{-1/r}``.
    """
    from .grid import value_norm
    e.require_predual()
    mag = value_norm(value, e.q_conj) if np.any(np.asarray(value) != 0) else 0.0
    alpha = np.array([Q.volume_power(_inv(e.p) - _inv(e.t)) for Q in ancestors_of_cell(cell, config)])
    if math.isinf(e.r):
        factor = alpha.min()
    else:
        factor = _lp(alpha ** -1.0, e.r) ** -1.0
    return mag * config.cell_volume ** (1.0 / e.p_conj) * factor


def block_norm_upper(g: GridFunction, e: ExponentSet) -> float:
    """``||g||_{L^{p'}} |Q|^{1/p-1/t}`` for the smallest cube ``Q`` covering the support."""
    supp = g.support()
    if supp.size == 0:
        return 0.0
    tab = _tables(g.config)
    level = 0
    for lv in range(g.config.levels):
        if np.all(tab.anc[supp, lv] == tab.anc[supp[0], lv]):
            level = lv
    cube = tab.cubes[tab.anc[supp[0], level]]
    mass = _lp(g.cell_norms(e.q_conj), e.p_conj) * g.config.cell_volume ** (1 / e.p_conj)
    return mass * cube.volume_power(_inv(e.p) - _inv(e.t))


# ---------------------------------------------------------------------------
# dual side


def _project_weighted_simplex(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{s >= 0, <w, s> = 1}`` for ``w > 0``."""
    ratio = x / w
    order = np.argsort(-ratio)
    wx = np.cumsum((w * x)[order])
    ww = np.cumsum((w * w)[order])
    taus = (wx - 1.0) / ww
    valid = taus < ratio[order]
    k = np.flatnonzero(valid)[-1]
    return np.maximum(x - taus[k] * w, 0.0)


class _DualProblem:
    def __init__(self, a: np.ndarray, config: LatticeConfig, e: ExponentSet):
        tab = _tables(config)
        self.config, self.e = config, e
        self.K = len(tab.cubes)
        self.active = np.flatnonzero(a > 0)
        self.amax = float(a.max(initial=0.0))
        self.a = a[self.active] / self.amax
        self.anc = tab.anc[self.active]
        self.v = config.cell_volume
        self.w = self.v * self.a
        self.beta_Q = np.exp2(-tab.scale * config.n * (_inv(e.t) - _inv(e.p)))

    def terms(self, s):
        P = np.bincount(self.anc.ravel(), weights=np.repeat(self.v * s ** self.e.p, self.anc.shape[1]),
                        minlength=self.K)
        return P, self.beta_Q * P ** (1.0 / self.e.p)

    def value(self, s, R):
        return _lp(self.terms(s)[1], R)

    def value_grad(self, s, R):
        p = self.e.p
        P, T = self.terms(s)
        N = _lp(T, R)
        used = P > 0
        coef = np.zeros(self.K)
        coef[used] = (T[used] / N) ** (R - 1.0) * self.beta_Q[used] * P[used] ** (1.0 / p - 1.0)
        grad = self.v * s ** (p - 1.0) * coef[self.anc].sum(axis=1)
        return N, grad


def _spg(fun, fun_grad, project, x, max_iters, rel_tol, memory=10, window=40, stop=None):
    """Nonmonotone spectral projected gradient (Barzilai-Borwein steps).

    Returns ``(x, iterations, converged)``; convergence means the best value
    over the last ``window`` iterations improved by at most ``rel_tol``.
    """
    N, g = fun_grad(x)
    step = 1.0 / max(np.abs(g).max(), 1e-300)
    hist = [N]
    it = 0
    for it in range(1, max_iters + 1):
        d = project(x - step * g) - x
        gd = float(np.sum(g * d))
        if gd >= 0 or not np.any(d):
            return x, it, True
        ref = max(hist[-memory:])
        theta = 1.0
        while True:
            x_new = x + theta * d
            N_new = fun(x_new)
            if N_new <= ref + 1e-4 * theta * gd or theta < 1e-12:
                break
            theta *= 0.5
        N_new, g_new = fun_grad(x_new)
        dx, dg = x_new - x, g_new - g
        sy = float(np.sum(dx * dg))
        step = float(np.sum(dx * dx)) / sy if sy > 0 else 10.0 * step
        step = min(max(step, 1e-12), 1e12)
        x, g, N = x_new, g_new, N_new
        hist.append(N)
        if stop is not None and it % 25 == 0 and stop(x):
            return x, it, True
        if len(hist) > window and (min(hist[:-window]) - min(hist[-window:])) <= rel_tol * N:
            return x, it, True
    return x, it, False


def dual_norm(g: GridFunction, e: ExponentSet, opts: SolverOptions | None = None):
    """Block-space norm as ``max { pairing(g, f) : bm_norm(f) <= 1 }``.

    Minimizes the Bourgain-Morrey norm on the slice ``pairing(g, f) = 1`` by
    spectral projected gradient, then normalizes radially. The returned value
    is the pairing of ``g`` with a certificate of norm exactly one, so it is
    always a valid lower bound. For ``r = inf`` the sup-norm is approached
    through a ladder of ``l^R`` surrogates.
    """
    opts = opts or SolverOptions()
    e.require_predual()
    if g.config.n != e.n:
        raise DomainError(f"exponent set is for n={e.n}, function lives in n={g.config.n}")
    a = g.cell_norms(e.q_conj)
    if not np.any(a > 0):
        return 0.0, DualCertificate(GridFunction.zeros(g.config, g.d), 0.0, 0.0)
    prob = _DualProblem(a, g.config, e)
    s = prob.a ** (e.p_conj - 1.0)
    s = s / np.dot(prob.w, s)
    ladder = [e.r] if not math.isinf(e.r) else [8.0 * 4.0 ** k for k in range(8)]
    rel_tol = min(opts.tol, 1e-6) * 1e-3
    converged, total = True, 0
    for R in ladder:
        budget = max(opts.max_iters - total, 1)
        s, it, ok = _spg(lambda x: prob.value(x, R), lambda x: prob.value_grad(x, R),
                         lambda x: _project_weighted_simplex(x, prob.w), s, budget, rel_tol)
        total += it
        converged = converged and ok
    scalar = np.zeros(g.config.num_cells)
    scalar[prob.active] = s * prob.amax ** 0  # profile is scale free
    f_vals = scalar[:, None] * _unit_directions(g, e.q)
    f_star = GridFunction(g.config, f_vals)
    nrm = bm_norm(f_star, e)
    f_star = f_star * (1.0 / nrm)
    from .grid import pairing
    value = pairing(g, f_star)
    cert = DualCertificate(f_star, value, bm_norm(f_star, e), converged, total)
    if not converged:
        warnings.warn(f"dual ascent stopped at the iteration cap ({total})", RuntimeWarning, stacklevel=2)
    return value, cert


# ---------------------------------------------------------------------------
# finite decompositions


def _merge_tail(g: GridFunction, e: ExponentSet, keep: list[BlockEntry], tail: list[BlockEntry]):
    if not tail:
        return BlockDecomposition(list(keep), e.r_conj)
    config = g.config
    part = np.zeros_like(g.values)
    for ent in tail:
        part += ent.lam * ent.block.values
    piece = GridFunction(config, part)
    supp = piece.support()
    if supp.size == 0:
        return BlockDecomposition(list(keep), e.r_conj)
    tab = _tables(config)
    level = 0
    for lv in range(config.levels):
        if np.all(tab.anc[supp, lv] == tab.anc[supp[0], lv]):
            level = lv
    cube = tab.cubes[tab.anc[supp[0], level]]
    lam = block_norm_upper(piece, e)
    merged = BlockEntry(cube, float(lam), piece * (1.0 / lam))
    return BlockDecomposition(list(keep) + [merged], e.r_conj)


def finite_decomposition(g: GridFunction, e: ExponentSet, tol: float = 1e-3,
                         opts: SolverOptions | None = None) -> BlockDecomposition:
    """A short decomposition whose cost is within ``(1 + tol)`` of the block norm.

    Entries of the optimal splitting with ``lambda < tol * max lambda`` are
    merged into one extra block on the smallest cube covering them. Among the
    candidates (thresholds ``tol``, ``tol/10``, ... and the single covering block)
    the one with the fewest entries meeting the cost bound is returned; if none
    does, the unpruned decomposition is returned.
    """
    value, full = block_norm(g, e, opts)
    if not full.entries:
        return full
    budget = (1.0 + tol) * value
    candidates = []
    single = block_norm_upper(g, e)
    if single <= budget:
        candidates.append(_merge_tail(g, e, [], full.entries))
    lam_max = max(ent.lam for ent in full.entries)
    thr = tol
    while thr > 1e-12:
        keep = [ent for ent in full.entries if ent.lam >= thr * lam_max]
        tail = [ent for ent in full.entries if ent.lam < thr * lam_max]
        cand = _merge_tail(g, e, keep, tail)
        if cand.cost <= budget and cand.capacity_ok(e):
            candidates.append(cand)
        thr /= 10.0
    if not candidates:
        return full
    best = min(candidates, key=len)
    resid = g - best.reconstruct(g.config, g.d)
    best.residual_norm = _lp(resid.cell_norms(e.q_conj), e.p_conj) * g.config.cell_volume ** (1 / e.p_conj)
    best.lower_bound = full.lower_bound
    return best
