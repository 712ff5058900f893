import json
import math

import numpy as np
import pytest

from bmkit.grid import ExponentSet, GridFunction, random_function
from bmkit.lattice import DomainError, LatticeConfig
from bmkit.verify import (CHECK_NAMES, FAIL, INCONCLUSIVE, PASS, SCHEMA, SuiteConfig, check_duality,
                          check_ek_convergence, check_pairing, check_triviality_trend, default_specs,
                          ek_residuals, maximal_ratios, replay, run_suite)

QUICK = dict(corpus_size=2)


def test_specs_cover_all_results():
    specs = default_specs()
    assert set(specs) == set(CHECK_NAMES)
    expected = {"duality", "pairing", "translation", "convolution", "ek_bound", "ek_convergence", "maximal_bm",
                "maximal_block", "lattice", "fatou", "triangle", "triviality"}
    assert expected <= set(specs)
    for s in specs.values():
        assert s.anchor and s.relation in ("le", "ge", "drift")


def test_crafted_zero_instances():
    c = LatticeConfig(1, 3, 0)
    e = ExponentSet(1.5, 2.0, 3.0)
    z = GridFunction.zeros(c, 2)
    assert check_duality(z, e).status == PASS
    assert check_pairing(z, random_function(0, c, d=2), e).status == PASS


def test_determinism_and_threads(monkeypatch):
    cfg = SuiteConfig(seed=3, **QUICK)
    a = run_suite(cfg).to_json()
    b = run_suite(cfg).to_json()
    assert a == b
    monkeypatch.setenv("BMKIT_THREADS", "3")
    assert run_suite(cfg).to_json() == a
    doc = json.loads(a)
    assert doc["schema"] == SCHEMA and doc["status"] == PASS
    assert [ch["name"] for ch in doc["checks"]] == list(CHECK_NAMES)


def test_corpus_size_zero_runs_crafted_only():
    rep = run_suite(SuiteConfig(seed=0, corpus_size=0))
    specs = default_specs(0)
    for res in rep.results:
        assert len(res.instances) == specs[res.spec.name].crafted
    assert rep.status == PASS


def test_tampered_constant_fails_and_replays():
    cfg = SuiteConfig(seed=1, checks=("translation",), corpus_size=4, translation_constant=1.0)
    rep = run_suite(cfg)
    assert rep.status == FAIL and rep.exit_code == 1
    fails = rep.to_dict()["checks"][0]["failures"]
    assert fails
    for fp in fails:
        again = replay(fp["check"], fp["seed"], fp["index"], cfg)
        assert again.status == FAIL
        assert abs(again.measured - fp["measured"]) <= 1e-12 * abs(fp["measured"])


def test_worst_instance_replays():
    cfg = SuiteConfig(seed=5, checks=("duality", "lattice"), corpus_size=6)
    rep = run_suite(cfg)
    for ch in rep.to_dict()["checks"]:
        fp = ch["worst_instance"]
        again = replay(fp["check"], fp["seed"], fp["index"], cfg)
        assert abs(again.measured - ch["worst_measured"]) <= 1e-12 * max(abs(ch["worst_measured"]), 1e-300)


def test_non_convergence_is_inconclusive():
    rep = run_suite(SuiteConfig(seed=0, checks=("single_cell",), corpus_size=3, max_iters=1))
    states = {r.status for r in rep.results[0].instances}
    # single-cell inputs may still converge at once; anything else must be inconclusive, never a failure
    assert FAIL not in states
    rep = run_suite(SuiteConfig(seed=0, checks=("triangle",), corpus_size=3, max_iters=1))
    assert rep.status == INCONCLUSIVE and rep.exit_code == 2


def test_unknown_check():
    with pytest.raises(DomainError):
        run_suite(SuiteConfig(checks=("nope",)))


def test_csv_report():
    rep = run_suite(SuiteConfig(seed=0, checks=("ek_bound",), corpus_size=3))
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "check,instance,ratio,bound,measured,status"
    assert len(lines) == 1 + 4


def test_triviality_trend_regimes():
    assert check_triviality_trend(ExponentSet(1.5, 2.0, 3.0), 12).status == PASS
    res = check_triviality_trend(ExponentSet(1.5, 2.0, 2.0), 12)
    assert res.status == PASS and res.relation == "ge" and res.measured == pytest.approx(1.0)
    assert check_triviality_trend(ExponentSet(1.5, 2.0, math.inf), 12).status == PASS


def test_ek_literal_monotonicity_counterexample():
    c = LatticeConfig(1, 3, 0)
    f = GridFunction(c, [1, 1, 1, -2, 0, 0, 0, 2])
    e = ExponentSet(1.5, 2.0, 3.0, 2.0)
    res = ek_residuals(f, e)
    assert res[1] > res[0] * (1 + 1e-3)
    assert res[-1] == 0.0
    out = check_ek_convergence(f, e)
    assert out.status == PASS and out.extra["monotone_ratio"] > 1.0


def test_maximal_ratios_of_constant():
    c = LatticeConfig(1, 3, 0)
    e = ExponentSet(1.5, 2.0, 3.0, 2.0)
    r = maximal_ratios([GridFunction.constant(c, np.ones(2))], e, (1.0, 1.25))
    assert all(v == pytest.approx(1.0, rel=1e-6) for v in r.values())
