"""Seeded, replayable verification of the norm inequalities and dualities.

Every check is a list of instances. Instance ``i`` of check ``name`` under
suite seed ``s`` draws all of its randomness from
``default_rng([s, crc32(name), i])``, so ``(s, name, i)`` is a complete
fingerprint and :func:`replay` recomputes any single instance in isolation.
The first ``crafted`` indices of a check are hand-built instances (zero
functions, identities, closed forms); the rest come from the random corpus.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .blocks import NotConverged, SolverOptions, block_norm, dual_norm, single_cell_block_norm
from .bm import bm_norm, per_scale_bm, slice_norm
from .grid import ExponentSet, GridFunction, pairing
from .lattice import CubeIndex, DomainError, LatticeConfig, cells_of
from .operators import (KernelSpec, average_Ek, convolve, ek_constant, maximal, translate_cells,
                        translation_constant)

SCHEMA = "bmkit.verification/1"

# exponent points (p, t, r, q) shared by the corpus checks
GRID = ((1.5, 2.0, 3.0, 2.0), (1.5, 2.0, 4.0, 1.5), (1.2, 2.0, 3.0, 3.0),
        (2.0, 3.0, 4.0, 2.0), (1.5, 3.0, 6.0, 4.0), (3.0, 4.0, 8.0, 2.0))
GRID_WITH_INF = GRID + ((1.5, 2.0, math.inf, 2.0),)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass(frozen=True)
class CheckSpec:
    name: str
    anchor: str
    relation: str  # "le": measured <= bound, "ge": measured >= bound, "drift": |measured - 1| <= bound
    exponents: tuple
    corpus_size: int
    lattice: LatticeConfig
    tolerance: float
    crafted: int = 0
    d: int = 3

    @property
    def instances(self) -> int:
        return self.crafted + self.corpus_size

    def exponent(self, index: int, n: int | None = None) -> ExponentSet:
        p, t, r, q = self.exponents[index % len(self.exponents)]
        return ExponentSet(p, t, r, q, n=self.lattice.n if n is None else n)

    def score(self, measured: float, bound: float, relation: str | None = None) -> float:
        """Normalized badness; a value above ``1 + tolerance`` is a violation."""
        relation = relation or self.relation
        if relation == "le":
            return measured / bound if bound > 0 else (0.0 if measured <= 0 else math.inf)
        if relation == "ge":
            return bound / measured if measured > 0 else math.inf
        return abs(measured - 1.0) / bound


@dataclass
class InstanceResult:
    index: int
    measured: float
    bound: float
    status: str
    note: str = ""
    extra: dict = field(default_factory=dict)
    relation: str | None = None  # overrides the check's relation for this instance


@dataclass
class CheckResult:
    spec: CheckSpec
    seed: int
    instances: list
    runtime: float = 0.0

    @property
    def status(self) -> str:
        states = {r.status for r in self.instances}
        if FAIL in states:
            return FAIL
        if INCONCLUSIVE in states:
            return INCONCLUSIVE
        return PASS

    def _scored(self):
        return [(self.spec.score(r.measured, r.bound, r.relation), r) for r in self.instances if r.status != INCONCLUSIVE]

    @property
    def worst(self) -> InstanceResult | None:
        scored = self._scored()
        if not scored:
            return None
        return max(scored, key=lambda sr: (sr[0], -sr[1].index))[1]

    def fingerprint(self, r: InstanceResult) -> dict:
        return {"seed": self.seed, "check": self.spec.name, "index": r.index}

    def to_dict(self) -> dict:
        w = self.worst
        diagnostics = {}
        for r in self.instances:
            for k, v in r.extra.items():
                diagnostics[k] = v if k not in diagnostics else max(diagnostics[k], v)
        return {
            "name": self.spec.name,
            "anchor": self.spec.anchor,
            "relation": self.spec.relation,
            "status": self.status,
            "tolerance": self.spec.tolerance,
            "instances": len(self.instances),
            "counts": {s: sum(r.status == s for r in self.instances) for s in (PASS, FAIL, INCONCLUSIVE)},
            "worst_score": None if w is None else _num(self.spec.score(w.measured, w.bound, w.relation)),
            "worst_measured": None if w is None else _num(w.measured),
            "constant": None if w is None else _num(w.bound),
            "worst_instance": None if w is None else self.fingerprint(w),
            "failures": [self.fingerprint(r) | {"measured": _num(r.measured), "bound": _num(r.bound), "note": r.note}
                         for r in self.instances if r.status == FAIL],
            "diagnostics": {k: _num(v) for k, v in sorted(diagnostics.items())},
        }


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


@dataclass
class VerificationReport:
    seed: int
    results: list

    @property
    def status(self) -> str:
        states = [r.status for r in self.results]
        if FAIL in states:
            return FAIL
        if INCONCLUSIVE in states:
            return INCONCLUSIVE
        return PASS

    @property
    def exit_code(self) -> int:
        return {PASS: 0, FAIL: 1, INCONCLUSIVE: 2}[self.status]

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "seed": self.seed, "status": self.status,
                "checks": [r.to_dict() for r in self.results]}

    def to_json(self) -> str:
        # runtimes are deliberately absent so equal seeds give equal bytes
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "instance", "ratio", "bound", "measured", "status"])
        for res in self.results:
            for r in res.instances:
                w.writerow([res.spec.name, r.index, repr(float(res.spec.score(r.measured, r.bound, r.relation))),
                            repr(float(r.bound)), repr(float(r.measured)), r.status])
        return buf.getvalue()

    def timings(self) -> dict:
        return {r.spec.name: r.runtime for r in self.results}

    def get(self, name: str) -> CheckResult:
        for r in self.results:
            if r.spec.name == name:
                return r
        raise KeyError(name)


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    checks: tuple | None = None
    corpus_size: int | None = None
    tol: float = 1e-6
    max_iters: int = 20000
    translation_constant: float | None = None  # debug override for the negative control
    threads: int | None = None

    @property
    def solver(self) -> SolverOptions:
        return SolverOptions(tol=self.tol, max_iters=self.max_iters, seed=self.seed)


# ---------------------------------------------------------------------------
# corpus


def instance_rng(seed: int, name: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode()), index])


def corpus_function(rng: np.random.Generator, config: LatticeConfig, d: int, kind: str) -> GridFunction:
    """One corpus member: ``dense`` Gaussian, a few ``spikes``, or a ``block`` on a random cube."""
    N = config.num_cells
    vals = rng.standard_normal((N, d))
    if kind == "spikes":
        keep = np.zeros(N, bool)
        keep[rng.choice(N, size=int(rng.integers(1, min(3, N) + 1)), replace=False)] = True
        vals[~keep] = 0.0
    elif kind == "block":
        j = int(rng.integers(config.j_min, config.J + 1))
        m = tuple(int(v) for v in rng.integers(0, 1 << (j - config.j_min), size=config.n))
        keep = np.zeros(N, bool)
        keep[cells_of(CubeIndex(j, m), config)] = True
        vals[~keep] = 0.0
    elif kind != "dense":
        raise DomainError(f"unknown corpus kind {kind!r}")
    return GridFunction(config, vals)


KINDS = ("dense", "spikes", "block")


def _draw(rng, spec: CheckSpec, index: int, config: LatticeConfig | None = None) -> GridFunction:
    return corpus_function(rng, config or spec.lattice, spec.d, KINDS[index % 3])


def _le(measured, bound, tol, note="") -> InstanceResult:
    return InstanceResult(-1, float(measured), float(bound), PASS if measured <= bound * (1 + tol) else FAIL, note)


def _bn(g, e, opts):
    return block_norm(g, e, opts)[0]


# ---------------------------------------------------------------------------
# single-instance checks (public: usable outside the suite)


def check_duality(g: GridFunction, e: ExponentSet, opts: SolverOptions | None = None,
                  gap_tol: float = 1e-4) -> InstanceResult:
    """``dual_norm <= block_norm`` and relative gap at most ``gap_tol``."""
    upper, _ = block_norm(g, e, opts)
    lower, cert = dual_norm(g, e, opts)
    if upper == 0.0:
        return InstanceResult(-1, 0.0, gap_tol, PASS if lower == 0.0 else FAIL)
    if not cert.converged:
        return InstanceResult(-1, (upper - lower) / upper, gap_tol, INCONCLUSIVE, "dual ascent hit its cap")
    gap = (upper - lower) / upper
    ok = lower <= upper * (1 + 1e-9) and gap <= gap_tol
    return InstanceResult(-1, gap, gap_tol, PASS if ok else FAIL, f"block={upper!r} dual={lower!r}")


def check_pairing(g: GridFunction, f: GridFunction, e: ExponentSet, opts=None, tol=1e-6) -> InstanceResult:
    """``|<g, f>| <= block_norm(g) bm_norm(f)``."""
    lhs = abs(pairing(g, f))
    rhs = _bn(g, e, opts) * bm_norm(f, e)
    if rhs == 0:
        return InstanceResult(-1, 0.0 if lhs == 0 else math.inf, 1.0, PASS if lhs == 0 else FAIL)
    return _le(lhs / rhs, 1.0, tol)


def check_translation(f: GridFunction, e: ExponentSet, opts=None, constant=None, tol=1e-4) -> InstanceResult:
    """Largest ``block_norm(f(. - y)) / block_norm(f)`` over all cell shifts."""
    base = _bn(f, e, opts)
    C = translation_constant(f.config.n, e.r_conj) if constant is None else constant
    if base == 0:
        return InstanceResult(-1, 0.0, C, PASS)
    side = f.config.side
    shifts = np.stack(np.unravel_index(np.arange(f.config.num_cells), (side,) * f.config.n), axis=1)
    worst = max(_bn(translate_cells(f, s), e, opts) for s in shifts) / base
    return _le(worst, C, tol)


def check_convolution(f: GridFunction, k: KernelSpec, e: ExponentSet, opts=None, constant=None,
                      tol=1e-4) -> InstanceResult:
    base = _bn(f, e, opts) * k.l1_norm
    C = translation_constant(f.config.n, e.r_conj) if constant is None else constant
    if base == 0:
        return InstanceResult(-1, 0.0, C, PASS)
    return _le(_bn(convolve(f, k), e, opts) / base, C, tol)


def check_ek_bound(f: GridFunction, e: ExponentSet) -> InstanceResult:
    C = ek_constant(f.config.n, e.r, e.t)
    base = bm_norm(f, e)
    if base == 0:
        return InstanceResult(-1, 0.0, C, PASS)
    c = f.config
    worst = max(bm_norm(average_Ek(f, k), e) for k in range(c.j_min, c.J + 1)) / base
    return _le(worst, C, 1e-12)


def ek_residuals(f: GridFunction, e: ExponentSet) -> list[float]:
    """``bm_norm(f - E_k f)`` for ``k = j_min .. J``."""
    c = f.config
    return [bm_norm(f - average_Ek(f, k), e) for k in range(c.j_min, c.J + 1)]


def check_ek_convergence(f: GridFunction, e: ExponentSet) -> InstanceResult:
    """Exact vanishing at the finest scale and quasi-monotone decay.

    Since ``f - E_k f = (I - E_k)(f - E_j f)`` for ``j <= k``, the residuals satisfy
    ``res_k <= (1 + C) res_j`` with ``C`` the averaging constant. The largest
    plain step ratio ``res_{k+1} / res_k`` is reported as ``monotone_ratio``.
    """
    res = ek_residuals(f, e)
    bound = 1.0 + ek_constant(f.config.n, e.r, e.t)
    step = max((res[k + 1] / res[k] for k in range(len(res) - 1) if res[k] > 0), default=0.0)
    quasi = max((res[k] / res[j] for j in range(len(res)) for k in range(j + 1, len(res)) if res[j] > 0),
                default=0.0)
    if res[-1] != 0.0:
        return InstanceResult(-1, math.inf, bound, FAIL, f"residual at finest scale {res[-1]!r}")
    out = _le(quasi, bound, 1e-12)
    out.extra = {"monotone_ratio": step}
    return out


def check_lattice(f: GridFunction, g: GridFunction, e: ExponentSet, opts=None, tol=1e-6) -> InstanceResult:
    """``|f_i| <= g_i`` cellwise implies ``block_norm(f) <= block_norm(g)``."""
    if np.any(np.abs(f.values) > g.values):
        raise DomainError("f is not dominated by g")
    bg = _bn(g, e, opts)
    bf = _bn(f, e, opts)
    if bg == 0:
        return InstanceResult(-1, 0.0, 1.0, PASS if bf == 0 else FAIL)
    return _le(bf / bg, 1.0, tol)


def check_fatou(f: GridFunction, e: ExponentSet, opts=None, tol=1e-6) -> InstanceResult:
    """Truncations ``f chi_{cells < l}`` have nondecreasing norms whose limit is ``block_norm(f)``."""
    N = f.config.num_cells
    seq = []
    for ell in range(1, N + 1):
        vals = np.array(f.values)
        vals[ell:] = 0.0
        seq.append(_bn(f.with_values(vals), e, opts))
    full = _bn(f, e, opts)
    ratios = [seq[i] / seq[i + 1] for i in range(N - 1) if seq[i + 1] > 0]
    ratios.append(full / seq[-1] if seq[-1] > 0 else (0.0 if full == 0 else math.inf))
    return _le(max(ratios), 1.0, tol)


def check_triangle(f: GridFunction, g: GridFunction, e: ExponentSet, opts=None, tol=1e-6) -> InstanceResult:
    rhs = _bn(f, e, opts) + _bn(g, e, opts)
    lhs = _bn(f + g, e, opts)
    if rhs == 0:
        return InstanceResult(-1, 0.0 if lhs == 0 else math.inf, 1.0, PASS if lhs == 0 else FAIL)
    return _le(lhs / rhs, 1.0, tol)


def triviality_series(e: ExponentSet, J_max: int, j_min: int = 0) -> dict:
    """Partial norms and per-scale contributions of the window indicator for ``J = j_min .. J_max``."""
    out = {"J": [], "partial": [], "per_scale": []}
    for J in range(j_min, J_max + 1):
        c = LatticeConfig(e.n, J, j_min)
        f = GridFunction.constant(c, 1.0)
        out["J"].append(J)
        out["partial"].append(bm_norm(f, e))
        out["per_scale"].append(per_scale_bm(f, e, J))
    return out


def coarse_series(e: ExponentSet, depth: int) -> list[float]:
    """Contribution of the coarsest cube for ``chi_[0,1)^n`` as the window grows."""
    out = []
    for j_min in range(0, -depth - 1, -1):
        c = LatticeConfig(e.n, 0, j_min)
        vals = np.zeros(c.num_cells)
        vals[cells_of(CubeIndex(0, (0,) * e.n), c)] = 1.0
        out.append(per_scale_bm(GridFunction(c, vals), e, j_min))
    return out


def check_triviality_trend(e: ExponentSet, J_max: int = 12, tol: float = 1e-3) -> InstanceResult:
    """Geometric decay of increments when ``r > t``; no decay of per-scale mass when ``r <= t``.

    The increment at ``J`` is ``(partial_J^r - partial_{J-1}^r)^{1/r}``, i.e. the
    per-scale contribution of scale ``J``.
    """
    series = triviality_series(e, J_max)
    ps = series["per_scale"]
    if e.r > e.t:
        target = 2.0 ** (e.n * (1.0 / e.r - 1.0 / e.t))
        ratios = [ps[k + 1] / ps[k] for k in range(len(ps) - 1)]
        dev = max(abs(x - target) for x in ratios[-3:])
        res = InstanceResult(-1, dev, tol, PASS if dev <= tol else FAIL, f"target ratio {target!r}")
        res.extra = {"last_ratio": ratios[-1]}
        return res
    low = min(ps) / ps[0]
    return InstanceResult(-1, low, 0.9, PASS if low >= 0.9 else FAIL, "per-scale floor relative to scale j_min",
                          relation="ge")


def maximal_ratios(fs: list, e: ExponentSet, etas, opts=None, parts=("bm", "slice", "block")) -> dict:
    """Operator-norm estimates over a corpus.

    ``bm``: per-scale Bourgain-Morrey ratios of the scalar maximal function.
    ``slice`` / ``block``: componentwise ``M_eta`` on slice spaces and on the block space.
    """
    out = {}
    if "bm" in parts:
        out["bm_per_scale"] = 0.0
        for f in fs:
            Mf = maximal(f, "scalar_X", q=e.q)
            for v in range(f.config.j_min, f.config.J + 1):
                den = per_scale_bm(f, e, v)
                if den > 0:
                    out["bm_per_scale"] = max(out["bm_per_scale"], per_scale_bm(Mf, e, v) / den)
    for eta in etas:
        ks, kb = f"slice_eta={eta:.4g}", f"block_eta={eta:.4g}"
        for f in fs:
            Mf = maximal(f, "componentwise", eta)
            if "slice" in parts:
                out.setdefault(ks, 0.0)
                for v in range(f.config.j_min, f.config.J + 1):
                    den = slice_norm(f, e, v)
                    if den > 0:
                        out[ks] = max(out[ks], slice_norm(Mf, e, v) / den)
            if "block" in parts:
                out.setdefault(kb, 0.0)
                den = _bn(f, e, opts)
                if den > 0:
                    out[kb] = max(out[kb], _bn(Mf, e, opts) / den)
    return out


def refinement_corpus(rng, base: LatticeConfig, extra: int, count: int, d: int) -> list:
    """``count`` corpus functions drawn on ``base`` and embedded ``extra`` scales finer,
    plus finest-cell spikes drawn on the refined lattice."""
    fine = base.refine(extra)
    fs = [corpus_function(rng, base, d, KINDS[i % 3]).refine(extra) for i in range(count)]
    spike_rng = np.random.default_rng(rng.integers(2 ** 32))
    for cell in (0, fine.num_cells // 2 - 1, fine.num_cells - 1):
        vals = np.zeros((fine.num_cells, d))
        vals[cell] = spike_rng.standard_normal(d)
        fs.append(GridFunction(fine, vals))
    return fs


def refinement_drift(rng_seed, e: ExponentSet, base: LatticeConfig, count: int, d: int, etas, opts=None,
                     parts=("bm", "slice", "block"), extra: int = 0):
    """Ratios at ``base`` refined ``extra`` and ``extra + 1`` scales, on corpora built from the same draws."""
    at = []
    for x in (extra, extra + 1):
        rng = np.random.default_rng(rng_seed)
        at.append(maximal_ratios(refinement_corpus(rng, base, x, count, d), e, etas, opts, parts))
    return at[0], at[1]


# ---------------------------------------------------------------------------
# suite wiring


def _inst_duality(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    c = spec.lattice
    if i == 0:
        return check_duality(GridFunction.zeros(c, spec.d), e, cfg.solver)
    if i == 1:
        vals = np.zeros((c.num_cells, spec.d))
        cell = int(rng.integers(c.num_cells))
        vals[cell] = rng.standard_normal(spec.d)
        g = GridFunction(c, vals)
        closed = single_cell_block_norm(vals[cell], cell, c, e)
        out = check_duality(g, e, cfg.solver, gap_tol=1e-6)
        up, _ = block_norm(g, e, cfg.solver)
        out.extra = {"closed_form_rel": abs(up - closed) / closed}
        if abs(up - closed) > 1e-6 * closed:
            out.status = FAIL
        return out
    d = int(rng.integers(1, spec.d + 1))
    return check_duality(corpus_function(rng, c, d, KINDS[i % 3]), e, cfg.solver)


def _inst_single_cell(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    c = spec.lattice
    cell = int(rng.integers(c.num_cells))
    vals = np.zeros((c.num_cells, spec.d))
    vals[cell] = rng.standard_normal(spec.d)
    closed = single_cell_block_norm(vals[cell], cell, c, e)
    value = _bn(GridFunction(c, vals), e, cfg.solver)
    rel = abs(value - closed) / closed
    return InstanceResult(-1, rel, spec.tolerance, PASS if rel <= spec.tolerance else FAIL)


def _inst_pairing(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    c = spec.lattice
    if i == 0:
        return check_pairing(GridFunction.zeros(c, spec.d), _draw(rng, spec, i), e, cfg.solver)
    if i == 1:
        g = corpus_function(rng, c, spec.d, "dense")
        _, cert = dual_norm(g, e, cfg.solver)
        out = check_pairing(g, cert.f_star, e, cfg.solver, spec.tolerance)
        out.extra = {"extremal_ratio": out.measured}
        if out.measured < 0.999:
            out.status, out.note = FAIL, "extremal pair far from equality"
        return out
    g = _draw(rng, spec, i)
    f = corpus_function(rng, c, spec.d, KINDS[(i // 3) % 3])
    return check_pairing(g, f, e, cfg.solver, spec.tolerance)


def _inst_translation(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    c = spec.lattice
    if i == 0:
        f = _draw(rng, spec, 0)
        base = _bn(f, e, cfg.solver)
        return _le(_bn(translate_cells(f, 0), e, cfg.solver) / base, 1.0, 1e-12, "identity shift")
    if i == 1:
        f = GridFunction.indicator(CubeIndex(c.j_min + 1, (0,) * c.n), c, rng.standard_normal(spec.d))
    else:
        f = _draw(rng, spec, i)
    return check_translation(f, e, cfg.solver, cfg.translation_constant, spec.tolerance)


def _random_kernel(rng, c: LatticeConfig) -> KernelSpec:
    vals = np.zeros(c.num_cells)
    k = int(rng.integers(1, 5))
    vals[rng.choice(c.num_cells, size=k, replace=False)] = rng.standard_normal(k) / c.cell_volume
    return KernelSpec(GridFunction(c, vals))


def _inst_convolution(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    c = spec.lattice
    f = _draw(rng, spec, i)
    if i == 0:
        cell = int(rng.integers(c.num_cells))
        k = KernelSpec.dirac(c, cell)
        out = check_convolution(f, k, e, cfg.solver, cfg.translation_constant, spec.tolerance)
        shifted = _bn(translate_cells(f, c.cell_coords(cell)), e, cfg.solver) / _bn(f, e, cfg.solver)
        out.extra = {"dirac_vs_translation": abs(out.measured - shifted)}
        if abs(out.measured - shifted) > 1e-9 * shifted:
            out.status, out.note = FAIL, "Dirac kernel does not reproduce the translation ratio"
        return out
    return check_convolution(f, _random_kernel(rng, c), e, cfg.solver, cfg.translation_constant, spec.tolerance)


def _inst_ek_bound(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    if i == 0:
        return check_ek_bound(GridFunction.constant(spec.lattice, np.ones(spec.d)), e)
    return check_ek_bound(_draw(rng, spec, i), e)


def _inst_ek_convergence(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    if i == 0:
        return check_ek_convergence(GridFunction.zeros(spec.lattice, spec.d), e)
    return check_ek_convergence(_draw(rng, spec, i), e)


def _drift_result(spec, r0: dict, r1: dict, keys) -> InstanceResult:
    drifts = {k: r1[k] / r0[k] for k in keys if r0[k] > 0}
    key = max(drifts, key=lambda k: (abs(drifts[k] - 1.0), k))
    m = drifts[key]
    out = InstanceResult(-1, m, spec.tolerance, PASS if abs(m - 1.0) <= spec.tolerance else FAIL, key)
    out.extra = {f"{k}@J": v for k, v in r0.items() if k in keys} | {f"{k}@J+1": v for k, v in r1.items() if k in keys}
    return out


# cheap per-scale ratios are measured this many scales below the check lattice
_FINE_EXTRA = 4


def _maximal_instance(spec, seed, i, cfg, plan):
    """``plan`` lists ``(parts, extra)`` pairs; each is measured at ``extra`` and ``extra + 1``."""
    e = spec.exponent(max(i - spec.crafted, 0))
    etas = (1.0, (1.0 + min(e.r_conj, e.q_conj)) / 2.0)
    r0, r1 = {}, {}
    for parts, extra in plan:
        if i < spec.crafted:
            a, b = (maximal_ratios([GridFunction.constant(spec.lattice.refine(x), np.ones(spec.d))],
                                   e, etas, cfg.solver, parts) for x in (extra, extra + 1))
        else:
            seed_seq = [seed, zlib.crc32(spec.name.encode()), i]
            a, b = refinement_drift(seed_seq, e, spec.lattice, 6, spec.d, etas, cfg.solver, parts, extra)
        r0.update(a)
        r1.update(b)
    return _drift_result(spec, r0, r1, sorted(r0))


def _inst_maximal_bm(spec, seed, i, cfg):
    return _maximal_instance(spec, seed, i, cfg, [(("bm",), _FINE_EXTRA)])


def _inst_maximal_block(spec, seed, i, cfg):
    return _maximal_instance(spec, seed, i, cfg, [(("slice",), _FINE_EXTRA), (("block",), 0)])


def _inst_lattice(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    g = _draw(rng, spec, i)
    g = g.with_values(np.abs(g.values))
    f = g.with_values(g.values * rng.uniform(-1.0, 1.0, size=g.values.shape))
    return check_lattice(f, g, e, cfg.solver, spec.tolerance)


def _inst_fatou(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    return check_fatou(_draw(rng, spec, i), spec.exponent(i), cfg.solver, spec.tolerance)


def _inst_triangle(spec, seed, i, cfg):
    rng = instance_rng(seed, spec.name, i)
    e = spec.exponent(i)
    f = _draw(rng, spec, i)
    g = corpus_function(rng, spec.lattice, spec.d, KINDS[(i // 3) % 3])
    return check_triangle(f, g, e, cfg.solver, spec.tolerance)


TRIVIALITY_CASES = (
    ((1.5, 2.0, 3.0, 2.0), 1, 12, "fine"),
    ((1.5, 2.0, 2.0, 2.0), 1, 12, "fine"),
    ((1.5, 2.0, 1.5, 2.0), 1, 12, "fine"),
    ((2.0, 3.0, 8.0, 2.0), 1, 12, "fine"),
    ((1.5, 2.0, math.inf, 2.0), 1, 12, "fine"),
    ((1.5, 2.0, 3.0, 2.0), 2, 6, "fine"),
    ((1.5, 2.0, 3.0, 2.0), 1, 12, "coarse"),
)


def _inst_triviality(spec, seed, i, cfg):
    (p, t, r, q), n, depth, side = TRIVIALITY_CASES[i]
    e = ExponentSet(p, t, r, q, n=n)
    if side == "fine":
        out = check_triviality_trend(e, depth, spec.tolerance)
        out.note = f"n={n} p={p} t={t} r={r}: " + out.note
        return out
    series = coarse_series(e, depth)
    target = 2.0 ** (n * (1.0 / t - 1.0 / p))
    dev = max(abs(series[k + 1] / series[k] - target) for k in range(len(series) - 1))
    ok = dev <= spec.tolerance and series[-1] < series[0]
    return InstanceResult(-1, dev, spec.tolerance, PASS if ok else FAIL, f"coarse side, target {target!r}")


_L1_8 = LatticeConfig(1, 3, 0, True)
_L1_16 = LatticeConfig(1, 4, 0, True)
_L1_32 = LatticeConfig(1, 5, 0, True)

# name -> (anchor, relation, exponents, default corpus size, lattice, tolerance, crafted, runner)
_REGISTRY = {
    "duality": ("predual duality: block norm equals the dual supremum over the Bourgain-Morrey unit ball",
                "le", GRID, 100, _L1_8, 1e-4, 2, _inst_duality),
    "single_cell": ("block norm of a one-cell function: optimal splitting along the ancestor chain",
                    "le", GRID_WITH_INF, 50, _L1_8, 1e-6, 0, _inst_single_cell),
    "pairing": ("Hoelder bound for the duality pairing of block and Bourgain-Morrey spaces",
                "le", GRID_WITH_INF, 100, _L1_8, 1e-6, 2, _inst_pairing),
    "translation": ("translation invariance of block spaces with constant 2^(n/r')",
                    "le", GRID_WITH_INF, 50, _L1_16, 1e-4, 2, _inst_translation),
    "convolution": ("convolution with an integrable scalar kernel on block spaces",
                    "le", GRID_WITH_INF, 50, _L1_16, 1e-4, 1, _inst_convolution),
    "ek_bound": ("boundedness of dyadic averaging on Bourgain-Morrey spaces with a constant depending on n, r, t",
                 "le", GRID_WITH_INF, 50, _L1_32, 1e-12, 1, _inst_ek_bound),
    "ek_convergence": ("dyadic averages converge back to the function in Bourgain-Morrey norm",
                       "le", GRID_WITH_INF, 50, _L1_32, 1e-12, 1, _inst_ek_convergence),
    "maximal_bm": ("per-scale boundedness of the Hardy-Littlewood maximal operator on Bourgain-Morrey spaces",
                   "drift", GRID, 6, _L1_16, 0.1, 1, _inst_maximal_bm),
    "maximal_block": ("boundedness of powered maximal operators on block spaces and their slices",
                      "drift", GRID, 6, _L1_16, 0.1, 1, _inst_maximal_block),
    "lattice": ("lattice property of block spaces with l^q' values",
                "le", GRID_WITH_INF, 50, _L1_8, 1e-6, 0, _inst_lattice),
    "fatou": ("Fatou property of block spaces",
              "le", GRID_WITH_INF, 25, _L1_8, 1e-6, 0, _inst_fatou),
    "triangle": ("triangle inequality for the block norm",
                 "le", GRID_WITH_INF, 50, _L1_8, 1e-6, 0, _inst_triangle),
    "triviality": ("Bourgain-Morrey spaces are nontrivial iff p < t < r < inf or p <= t < r = inf",
                   "le", (), 0, LatticeConfig(1, 0, 0), 1e-3, len(TRIVIALITY_CASES), _inst_triviality),
}

CHECK_NAMES = tuple(_REGISTRY)


def default_specs(corpus_size: int | None = None) -> dict:
    """Check specs keyed by name; ``corpus_size`` overrides every random-corpus count."""
    out = {}
    for name, (anchor, rel, exps, size, lat, tol, crafted, _) in _REGISTRY.items():
        if corpus_size is not None and name != "triviality":
            size = corpus_size
        out[name] = CheckSpec(name, anchor, rel, exps, size, lat, tol, crafted)
    return out


def _run_instance(spec: CheckSpec, seed: int, index: int, cfg: SuiteConfig) -> InstanceResult:
    runner = _REGISTRY[spec.name][-1]
    try:
        res = runner(spec, seed, index, cfg)
    except NotConverged as exc:
        res = InstanceResult(-1, math.nan, math.nan, INCONCLUSIVE, str(exc))
    res.index = index
    if res.status == INCONCLUSIVE:
        res.measured = res.measured if math.isfinite(res.measured) else 0.0
        res.bound = res.bound if math.isfinite(res.bound) else 0.0
    return res


def run_check(spec: CheckSpec, cfg: SuiteConfig) -> CheckResult:
    t0 = time.perf_counter()
    instances = [_run_instance(spec, cfg.seed, i, cfg) for i in range(spec.instances)]
    return CheckResult(spec, cfg.seed, instances, time.perf_counter() - t0)


def _threads(cfg: SuiteConfig) -> int:
    if cfg.threads is not None:
        return max(1, int(cfg.threads))
    try:
        return max(1, int(os.environ.get("BMKIT_THREADS", "1")))
    except ValueError:
        return 1


def run_suite(config: SuiteConfig | None = None, seed: int | None = None) -> VerificationReport:
    """Run the selected checks; the report lists them in registry order."""
    cfg = config or SuiteConfig()
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    specs = default_specs(cfg.corpus_size)
    names = CHECK_NAMES if cfg.checks is None else tuple(cfg.checks)
    unknown = [n for n in names if n not in specs]
    if unknown:
        raise DomainError(f"unknown checks {unknown}; available: {', '.join(CHECK_NAMES)}")
    chosen = [specs[n] for n in CHECK_NAMES if n in names]
    workers = _threads(cfg)
    if workers > 1 and len(chosen) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: run_check(s, cfg), chosen))
    else:
        results = [run_check(s, cfg) for s in chosen]
    return VerificationReport(cfg.seed, results)


def replay(name: str, seed: int, index: int, config: SuiteConfig | None = None) -> InstanceResult:
    """Recompute one instance from its fingerprint."""
    cfg = replace(config or SuiteConfig(), seed=seed)
    spec = default_specs(cfg.corpus_size)[name]
    return _run_instance(spec, seed, index, cfg)
