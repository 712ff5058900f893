import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmkit.blocks import block_norm
from bmkit.bm import bm_norm
from bmkit.grid import ExponentSet, GridFunction, lp_norm_on_cube, random_function
from bmkit.lattice import CubeIndex, DomainError, LatticeConfig
from bmkit.operators import (KernelSpec, average_Ek, convolve, ek_constant, maximal, translate, translate_cells,
                             translation_constant)

from conftest import exponents, grid_exponents, lattice_functions
from oracles import average_loop, dyadic_maximal_loop

L16 = LatticeConfig(1, 4, 0, True)


def test_average_examples():
    c = LatticeConfig(1, 1, 0)
    assert np.allclose(average_Ek(GridFunction(c, [1.0, 0.0]), 0).values[:, 0], [0.5, 0.5])
    f = random_function(0, L16, d=2)
    assert np.array_equal(average_Ek(f, 4).values, f.values)
    const = GridFunction.constant(L16, [2.0, -1.0])
    for k in range(5):
        assert np.allclose(average_Ek(const, k).values, const.values)
    with pytest.raises(DomainError):
        average_Ek(f, 5)


def test_average_matches_loop():
    c = LatticeConfig(1, 4, -1)
    f = random_function(1, c, d=3)
    for k in range(-1, 5):
        assert np.allclose(average_Ek(f, k).values, average_loop(f.values, 4, -1, k), rtol=1e-14, atol=1e-15)


def test_translate_examples():
    f = random_function(2, L16, d=2)
    assert np.array_equal(translate(f, 0.0).values, f.values)
    assert np.array_equal(translate(f, L16.window_size).values, f.values)
    assert np.array_equal(translate(f, 3 * L16.cell_size).values, np.roll(f.values, 3, axis=0))
    with pytest.raises(DomainError):
        translate(f, 0.3 * L16.cell_size)
    with pytest.raises(DomainError):
        translate_cells(GridFunction.zeros(LatticeConfig(1, 2, 0, False)), 1)


def test_translate_2d_and_isometry():
    c = LatticeConfig(2, 2, 0, True)
    f = random_function(3, c, d=2)
    g = translate_cells(f, (1, 3))
    grid = f.values.reshape(4, 4, 2)
    assert np.array_equal(g.values.reshape(4, 4, 2), np.roll(grid, (1, 3), axis=(0, 1)))
    Q = CubeIndex(0, (0, 0))
    assert lp_norm_on_cube(g, Q, 3.0, 1.5) == pytest.approx(lp_norm_on_cube(f, Q, 3.0, 1.5), rel=1e-14)


def test_convolution_examples():
    f = random_function(4, L16, d=2)
    k = KernelSpec.dirac(L16, 5)
    assert k.l1_norm == pytest.approx(1.0)
    assert np.allclose(convolve(f, k).values, translate_cells(f, 5).values, rtol=1e-14, atol=0)
    assert not np.any(convolve(GridFunction.zeros(L16, 2), k).values)
    with pytest.raises(DomainError):
        KernelSpec(random_function(0, L16, d=2))
    with pytest.raises(DomainError):
        convolve(f, KernelSpec.dirac(LatticeConfig(1, 3, 0), 0))


def test_convolution_direct_sum():
    rng = np.random.default_rng(5)
    kv = rng.standard_normal(16)
    f = random_function(6, L16, d=1)
    out = convolve(f, KernelSpec(GridFunction(L16, kv)))
    h = L16.cell_size
    expected = [sum(kv[c] * f.values[(x - c) % 16, 0] * h for c in range(16)) for x in range(16)]
    assert np.allclose(out.values[:, 0], expected, rtol=1e-12, atol=1e-14)


def test_maximal_examples():
    c = LatticeConfig(1, 1, 0)
    assert maximal(GridFunction(c, [1.0, 0.0]), "componentwise").values[0, 0] == 1.0
    const = GridFunction.constant(L16, 3.0)
    assert np.allclose(maximal(const, "scalar_X").values, 3.0)
    with pytest.raises(DomainError):
        maximal(const, "componentwise", eta=0.0)
    with pytest.raises(DomainError):
        maximal(const, "other")


def test_maximal_matches_loop():
    f = random_function(7, L16, d=2)
    for eta in (1.0, 1.5, 2.5):
        got = maximal(f, "componentwise", eta).values
        for i in range(2):
            assert np.allclose(got[:, i], dyadic_maximal_loop(f.values[:, i], 4, 0, eta), rtol=1e-13)
    sc = maximal(f, "scalar_X", q=3.0).values[:, 0]
    assert np.allclose(sc, dyadic_maximal_loop(f.cell_norms(3.0), 4, 0), rtol=1e-13)


def test_constants():
    assert ek_constant(1, math.inf, 2.0) == 1.0
    x = 2.0 ** (3 * (1 / 3 - 1 / 2))
    assert ek_constant(1, 3.0, 2.0) == pytest.approx((1 + sum(x ** i for i in range(1, 200))) ** (1 / 3), rel=1e-13)
    assert ek_constant(1, 2.0, 2.0) == math.inf
    assert translation_constant(2, 1.5) == 2.0 ** (2 / 1.5)


@given(lattice_functions(config=L16), st.integers(0, 4))
def test_average_idempotent(f, k):
    once = average_Ek(f, k)
    assert np.allclose(average_Ek(once, k).values, once.values, rtol=1e-13, atol=1e-15)


@given(lattice_functions(config=L16), exponents(allow_inf=True), st.integers(0, 4))
def test_average_bound(f, e, k):
    assert bm_norm(average_Ek(f, k), e) <= ek_constant(1, e.r, e.t) * bm_norm(f, e) * (1 + 1e-12) + 1e-300


@given(lattice_functions(config=L16), st.floats(0.3, 2.0), st.floats(0.0, 2.0))
def test_maximal_eta_monotone(f, eta0, extra):
    lo = maximal(f, "componentwise", eta0).values
    hi = maximal(f, "componentwise", eta0 + extra).values
    assert np.all(lo <= hi * (1 + 1e-12) + 1e-300)


@given(lattice_functions(config=L16), st.floats(1.0, 3.0))
def test_maximal_dominates(f, eta):
    assert np.all(maximal(f, "componentwise", eta).values >= np.abs(f.values) * (1 - 1e-12))
    assert np.all(maximal(f, "scalar_X", q=2.0).values[:, 0] >= f.cell_norms(2.0) * (1 - 1e-12))


@given(lattice_functions(config=L16, nonzero=True), st.integers(0, 15), grid_exponents)
def test_translation_bound(f, shift, e):
    base = block_norm(f, e)[0]
    moved = block_norm(translate_cells(f, shift), e)[0]
    assert moved <= translation_constant(1, e.r_conj) * base * (1 + 1e-4)
