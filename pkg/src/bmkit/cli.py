"""Command-line front end: ``bmkit {norm,decompose,verify,experiment}``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .blocks import NotConverged, SolverOptions, block_norm, dual_norm, finite_decomposition
from .bm import bm_norm, continuous_char_estimate, slice_norm
from .experiments import (REFINEMENT_COLUMNS, TRIVIALITY_COLUMNS, refinement_table, to_csv,
                          triviality_table)
from .grid import TRIVIALITY_RULE, ExponentSet, GridFunction
from .lattice import DomainError, LatticeConfig
from .verify import CHECK_NAMES, SuiteConfig, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64
NORMS = ("bm", "block", "dual", "slice", "cont_char")
EXPERIMENTS = ("triviality", "refinement_stability")


@dataclass
class LatticeSection:
    n: int = 1
    J: int = 3
    j_min: int = 0
    periodic: bool = True


@dataclass
class ExponentSection:
    p: float = 1.5
    t: float = 2.0
    r: float = 3.0
    q: float = 2.0
    eta: float | None = None
    d: int = 1


@dataclass
class SolverSection:
    tol: float = 1e-6
    max_iters: int = 20000
    seed: int = 0


@dataclass
class CorpusSection:
    size: int | None = None
    distribution: str = "mixture"  # dense / spike / single-block mixture; the only supported value


@dataclass
class OutputSection:
    dir: str = "bmkit_out"


@dataclass
class RunConfig:
    lattice: LatticeSection = field(default_factory=LatticeSection)
    exponents: ExponentSection = field(default_factory=ExponentSection)
    solver: SolverSection = field(default_factory=SolverSection)
    corpus: CorpusSection = field(default_factory=CorpusSection)
    output: OutputSection = field(default_factory=OutputSection)
    lattice_given: bool = field(default=False, repr=False, compare=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        cfg = cls()
        unknown = set(doc) - set(_SECTIONS)
        if unknown:
            raise DomainError(f"unknown config sections: {sorted(unknown)}")
        for name in _SECTIONS:
            section = getattr(cfg, name)
            values = doc.get(name) or {}
            bad = set(values) - {g.name for g in fields(section)}
            if bad:
                raise DomainError(f"unknown keys in [{name}]: {sorted(bad)}")
            for k, v in values.items():
                setattr(section, k, _float_or_inf(v) if name == "exponents" and k in "ptrq" else v)
        if cfg.corpus.distribution != "mixture":
            raise DomainError(f"unsupported corpus distribution {cfg.corpus.distribution!r}; use 'mixture'")
        cfg.lattice_given = "lattice" in doc
        return cfg

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("lattice_given")
        doc["exponents"]["r"] = "inf" if math.isinf(self.exponents.r) else self.exponents.r
        return doc

    def lattice_config(self) -> LatticeConfig:
        s = self.lattice
        return LatticeConfig(int(s.n), int(s.J), int(s.j_min), bool(s.periodic))

    def exponent_set(self) -> ExponentSet:
        """Validated exponents; invalid regimes are rejected with the nontriviality rule."""
        s = self.exponents
        try:
            e = ExponentSet(s.p, s.t, s.r, s.q, s.eta, n=int(self.lattice.n))
        except DomainError as exc:
            raise DomainError(f"{exc}; note: {TRIVIALITY_RULE}") from exc
        if not e.nontrivial:
            raise DomainError(f"exponents (p={e.p}, t={e.t}, r={e.r}) give the zero space: {TRIVIALITY_RULE}")
        return e

    def solver_options(self) -> SolverOptions:
        s = self.solver
        return SolverOptions(tol=float(s.tol), max_iters=int(s.max_iters), seed=int(s.seed))


_SECTIONS = ("lattice", "exponents", "solver", "corpus", "output")


def _float_or_inf(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    return float(v)


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="RunConfig JSON file; flags override its fields")
    common.add_argument("--seed", type=int, help="seed for all randomness")
    common.add_argument("--out", type=Path, help="output directory")

    p = _Parser(prog="bmkit", description="Bourgain-Morrey and block-space norms on dyadic lattices.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    norm = sub.add_parser("norm", parents=[common], help="compute one norm of a grid function")
    norm.add_argument("--input", type=Path, required=True, help="GridFunction JSON")
    norm.add_argument("--which", choices=NORMS, default="bm")
    norm.add_argument("--scale", type=int, action="append", help="slice scale (repeatable; default all)")

    dec = sub.add_parser("decompose", parents=[common], help="export a finite block decomposition")
    dec.add_argument("--input", type=Path, required=True, help="GridFunction JSON")
    dec.add_argument("--tolerance", type=float, default=1e-3, help="allowed cost excess over the block norm")

    ver = sub.add_parser("verify", parents=[common], help="run the verification suite")
    ver.add_argument("--checks", help=f"comma-separated subset of: {','.join(CHECK_NAMES)}")
    ver.add_argument("--corpus-size", type=int, help="override every random corpus size")
    ver.add_argument("--debug-translation-constant", type=float, metavar="C",
                     help="replace 2^(n/r') by C in the translation and convolution checks (negative control)")

    exp = sub.add_parser("experiment", parents=[common], help="trend experiments written as CSV")
    exp.add_argument("kind", choices=EXPERIMENTS)
    exp.add_argument("--scale", type=int, help="finest scale J (triviality) or number of refinements")
    return p


def load_config(args) -> RunConfig:
    if args.config is None:
        cfg = RunConfig()
    else:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise DomainError("config must be a JSON object")
        cfg = RunConfig.from_dict(doc)
    if args.seed is not None:
        cfg.solver.seed = args.seed
    if args.out is not None:
        cfg.output.dir = str(args.out)
    return cfg


def _load_input(path: Path, cfg: RunConfig) -> GridFunction:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DomainError(f"cannot read input {path}: {exc}") from exc
    g = GridFunction.from_json(text)
    if cfg.lattice_given and g.config != cfg.lattice_config():
        raise DomainError(f"input lattice {g.config} does not match config lattice {cfg.lattice_config()}")
    return g


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_norm(args, cfg: RunConfig) -> int:
    g = _load_input(args.input, cfg)
    cfg.lattice = LatticeSection(g.config.n, g.config.J, g.config.j_min, g.config.periodic)
    e = cfg.exponent_set()
    out = Path(cfg.output.dir)
    result = {"which": args.which, "exponents": e.to_dict(), "input": str(args.input)}
    code = EXIT_PASS
    if args.which == "bm":
        result["value"] = bm_norm(g, e)
        print(f"bm_norm {_fmt(result['value'])}")
    elif args.which == "cont_char":
        result["value"] = continuous_char_estimate(g, e)
        print(f"cont_char {_fmt(result['value'])}")
    elif args.which == "slice":
        scales = args.scale or list(range(g.config.j_min, g.config.J + 1))
        result["values"] = {str(j): slice_norm(g, e, j) for j in scales}
        for j, v in result["values"].items():
            print(f"slice_norm[{j}] {_fmt(v)}")
    elif args.which == "block":
        try:
            value, dec = block_norm(g, e, cfg.solver_options())
            result["converged"] = True
        except NotConverged as exc:
            value, dec, code = exc.value, exc.decomposition, EXIT_INCONCLUSIVE
            result["converged"] = False
            print(f"warning: {exc}", file=sys.stderr)
        result.update(value=value, lower_bound=dec.lower_bound,
                      gap=(value - dec.lower_bound) / value if value > 0 else 0.0)
        write_atomic(out / "block_decomposition.json", dec.to_json())
        print(f"block_norm {_fmt(value)}")
        print(f"certified_lower {_fmt(dec.lower_bound)}")
        print(f"relative_gap {_fmt(result['gap'])}")
    else:
        value, cert = dual_norm(g, e, cfg.solver_options())
        result.update(value=value, converged=cert.converged, certificate_bm=cert.bm)
        write_atomic(out / "dual_certificate.json", cert.f_star.to_json())
        if not cert.converged:
            code = EXIT_INCONCLUSIVE
        print(f"dual_norm {_fmt(value)}")
    write_atomic(out / f"norm_{args.which}.json", json.dumps(result, indent=2, default=_json_default) + "\n")
    return code


def _json_default(x):
    return float(x)


def cmd_decompose(args, cfg: RunConfig) -> int:
    g = _load_input(args.input, cfg)
    cfg.lattice = LatticeSection(g.config.n, g.config.J, g.config.j_min, g.config.periodic)
    e = cfg.exponent_set()
    code = EXIT_PASS
    try:
        dec = finite_decomposition(g, e, args.tolerance, cfg.solver_options())
    except NotConverged as exc:
        dec, code = exc.decomposition, EXIT_INCONCLUSIVE
        print(f"warning: {exc}", file=sys.stderr)
    write_atomic(Path(cfg.output.dir) / "decomposition.json", dec.to_json())
    print(f"entries {len(dec)}")
    print(f"coefficient_norm {_fmt(dec.cost)}")
    return code


def cmd_verify(args, cfg: RunConfig) -> int:
    checks = None
    if args.checks:
        checks = tuple(c.strip() for c in args.checks.split(",") if c.strip())
        unknown = [c for c in checks if c not in CHECK_NAMES]
        if unknown:
            raise DomainError(f"unknown checks {unknown}; available: {', '.join(CHECK_NAMES)}")
    size = args.corpus_size if args.corpus_size is not None else cfg.corpus.size
    suite = SuiteConfig(seed=int(cfg.solver.seed), checks=checks, corpus_size=size, tol=float(cfg.solver.tol),
                        max_iters=int(cfg.solver.max_iters), translation_constant=args.debug_translation_constant)
    report = run_suite(suite)
    out = Path(cfg.output.dir)
    write_atomic(out / "report.json", report.to_json())
    write_atomic(out / "report.csv", report.to_csv())
    for res in report.results:
        d = res.to_dict()
        print(f"{d['name']:<16} {d['status']:<12} worst={d['worst_score']} ({res.runtime:.2f}s)")
    print(f"overall {report.status}")
    return report.exit_code


def cmd_experiment(args, cfg: RunConfig) -> int:
    out = Path(cfg.output.dir)
    if args.kind == "triviality":
        # the dichotomy itself is under study, so zero-space exponents are allowed here
        s = cfg.exponents
        e = ExponentSet(s.p, s.t, s.r, s.q, n=int(cfg.lattice.n))
        rows = triviality_table(e, args.scale if args.scale is not None else 12, int(cfg.lattice.j_min))
        text = to_csv(rows, TRIVIALITY_COLUMNS)
    else:
        e = cfg.exponent_set()
        e.require_predual()
        base = cfg.lattice_config()
        rows = refinement_table(e, base, args.scale if args.scale is not None else 3,
                                cfg.corpus.size if cfg.corpus.size is not None else 6,
                                int(cfg.exponents.d), int(cfg.solver.seed), opts=cfg.solver_options())
        text = to_csv(rows, REFINEMENT_COLUMNS)
    write_atomic(out / f"{args.kind}.csv", text)
    sys.stdout.write(text)
    return EXIT_PASS


COMMANDS = {"norm": cmd_norm, "decompose": cmd_decompose, "verify": cmd_verify, "experiment": cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except DomainError as exc:
        print(f"bmkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
