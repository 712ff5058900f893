import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from bmkit.grid import (ExponentSet, GridFunction, conjugate, lp_norm_on_cube, pairing, random_function,
                        value_norm)
from bmkit.lattice import CubeIndex, DomainError, LatticeConfig, enumerate_cubes

from conftest import exponents, lattice_functions

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_value_norm_examples():
    assert value_norm([0, 0, 0], 3.0) == 0.0
    assert value_norm([1, 0, 0, 0], 1.7) == 1.0
    assert value_norm([3, 4], 2.0) == pytest.approx(5.0, rel=1e-15)
    for bad in (1.0, 0.5, math.inf):
        with pytest.raises(DomainError):
            value_norm([1.0], bad)
    with pytest.raises(DomainError):
        value_norm([np.nan], 2.0)


def test_lp_norm_on_cube_examples():
    c = LatticeConfig(1, 1, 0)
    Q = CubeIndex(0, (0,))
    assert lp_norm_on_cube(GridFunction.zeros(c), Q, 2.0, 2.0) == 0.0
    f = GridFunction(c, [1.0, 0.0])
    assert lp_norm_on_cube(f, Q, 2.0, 2.0) == pytest.approx(0.5 ** 0.5, rel=1e-15)
    c3 = LatticeConfig(1, 3, 0)
    Q = CubeIndex(1, (1,))
    assert lp_norm_on_cube(GridFunction.constant(c3, 1.0), Q, 3.0, 2.0) == pytest.approx(Q.volume() ** (1 / 3))


def test_pairing_examples():
    c = LatticeConfig(1, 3, 0)
    f = random_function(1, c, d=2)
    assert pairing(GridFunction.zeros(c, 2), f) == 0.0
    one = GridFunction.constant(c, 1.0)
    assert pairing(one, one) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        pairing(one, f)


def test_random_function_contract():
    c = LatticeConfig(1, 4, 0)
    a, b = random_function(7, c, d=3, sparsity=0.3), random_function(7, c, d=3, sparsity=0.3)
    assert np.array_equal(a.values, b.values)
    assert not np.any(random_function(7, c, d=2, sparsity=1.0).values)
    assert np.all(random_function(7, c, d=1).values != 0)
    assert len(random_function(3, c, d=1, sparsity=0.25).support()) == 12


def test_exponent_set_regimes():
    assert ExponentSet(1.5, 2, 3).nontrivial
    assert ExponentSet(1.5, 1.5, math.inf).nontrivial
    assert not ExponentSet(1.5, 1.5, 3).nontrivial
    assert not ExponentSet(1.5, 2, 2).nontrivial
    assert not ExponentSet(1.5, 2, 1.8).nontrivial
    assert ExponentSet(1.5, 2, math.inf).r_conj == 1.0
    with pytest.raises(DomainError):
        ExponentSet(2.0, 1.5, 3)
    with pytest.raises(DomainError):
        ExponentSet(1.5, 2, 3, q=1.0)
    e = ExponentSet(1.5, 2, math.inf, 3, eta=1.2, n=2)
    assert ExponentSet.from_dict(json.loads(json.dumps(e.to_dict()))) == e


def test_grid_function_validation_and_json():
    c = LatticeConfig(2, 2, -1)
    f = random_function(0, c, d=2)
    g = GridFunction.from_json(f.to_json())
    assert g.config == c and np.array_equal(g.values, f.values)
    with pytest.raises(DomainError):
        GridFunction(c, np.zeros((3, 1)))
    with pytest.raises(DomainError):
        GridFunction(c, np.full((c.num_cells, 1), np.inf))
    with pytest.raises(DomainError):
        GridFunction.from_json("{not json")
    with pytest.raises(DomainError):
        GridFunction.from_json('{"n": 1, "J": 1, "j_min": 0, "d": 2, "values": [[1], [2]]}')


def test_refine_preserves_local_norms():
    c = LatticeConfig(1, 2, 0)
    f = random_function(2, c, d=2)
    fine = f.refine(2)
    for Q in enumerate_cubes(c):
        assert lp_norm_on_cube(fine, Q, 1.7, 2.5) == pytest.approx(lp_norm_on_cube(f, Q, 1.7, 2.5), rel=1e-13)


@given(exponents())
def test_conjugates(e):
    for s, sc in ((e.p, e.p_conj), (e.t, e.t_conj), (e.r, e.r_conj), (e.q, e.q_conj)):
        lhs = (0.0 if math.isinf(s) else 1.0 / s) + (0.0 if math.isinf(sc) else 1.0 / sc)
        assert lhs == pytest.approx(1.0, rel=1e-12)
    assert conjugate(conjugate(e.q)) == pytest.approx(e.q, rel=1e-12)


@given(arrays(float, 5, elements=finite), arrays(float, 5, elements=finite), st.floats(1.05, 8.0))
def test_per_cell_hoelder(v, w, q):
    assert abs(np.dot(v, w)) <= value_norm(v, q) * value_norm(w, conjugate(q)) * (1 + 1e-12) + 1e-300


@given(arrays(float, 4, elements=finite), st.floats(-50, 50), st.floats(1.05, 8.0))
def test_value_norm_homogeneous(v, lam, q):
    assert value_norm(lam * v, q) == pytest.approx(abs(lam) * value_norm(v, q), rel=1e-12, abs=1e-300)


@given(lattice_functions(d_max=2), st.data())
def test_pairing_linear(g, data):
    seed = data.draw(st.integers(0, 1000))
    lam = data.draw(st.floats(-10, 10))
    f = random_function(seed, g.config, d=g.d)
    h = random_function(seed + 1, g.config, d=g.d)
    lhs = pairing(g, f * lam + h)
    rhs = lam * pairing(g, f) + pairing(g, h)
    scale = abs(lam) * abs(pairing(g, f)) + abs(pairing(g, h)) + 1e-300
    assert abs(lhs - rhs) <= 1e-12 * max(scale, np.abs(g.values).sum() * 10)
    assert pairing(g, f) == pytest.approx(pairing(f, g), rel=1e-14, abs=1e-300)


@given(lattice_functions(), st.data())
def test_restriction_decreases_local_norm(f, data):
    cubes = enumerate_cubes(f.config)
    Q = data.draw(st.sampled_from(cubes))
    sub = data.draw(st.sampled_from([K for K in cubes if Q.contains(K)]))
    assert lp_norm_on_cube(f.restrict(sub), Q, 2.3, 1.7) <= lp_norm_on_cube(f, Q, 2.3, 1.7) * (1 + 1e-14)
    assert lp_norm_on_cube(f.restrict(Q), Q, 2.3, 1.7) == lp_norm_on_cube(f, Q, 2.3, 1.7)
