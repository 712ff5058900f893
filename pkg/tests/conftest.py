import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from bmkit.grid import ExponentSet, GridFunction
from bmkit.lattice import LatticeConfig

settings.register_profile("bmkit", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("bmkit")

# the exponent grid shared with the verifier, plus r = inf
GRID = [(1.5, 2.0, 3.0, 2.0), (1.5, 2.0, 4.0, 1.5), (1.2, 2.0, 3.0, 3.0),
        (2.0, 3.0, 4.0, 2.0), (1.5, 3.0, 6.0, 4.0), (3.0, 4.0, 8.0, 2.0)]
GRID_INF = GRID + [(1.5, 2.0, math.inf, 2.0)]


@st.composite
def exponents(draw, allow_inf=True):
    p = draw(st.floats(1.1, 3.0))
    t = draw(st.floats(p + 0.2, p + 3.0))
    if allow_inf and draw(st.booleans()) and draw(st.booleans()):
        r = math.inf
    else:
        r = draw(st.floats(t + 0.3, t + 6.0))
    q = draw(st.floats(1.2, 5.0))
    return ExponentSet(p, t, r, q)


grid_exponents = st.sampled_from(GRID_INF).map(lambda x: ExponentSet(*x))


@st.composite
def lattice_functions(draw, config=LatticeConfig(1, 3, 0), d_max=3, nonzero=False):
    d = draw(st.integers(1, d_max))
    seed = draw(st.integers(0, 2 ** 31 - 1))
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((config.num_cells, d))
    kind = draw(st.sampled_from(["dense", "sparse", "spike"]))
    if kind == "sparse":
        vals[rng.random(config.num_cells) < 0.6] = 0.0
    elif kind == "spike":
        keep = rng.integers(config.num_cells)
        vals[np.arange(config.num_cells) != keep] = 0.0
    if nonzero and not np.any(vals):
        vals[0, 0] = 1.0
    return GridFunction(config, vals)


@pytest.fixture
def lat8():
    return LatticeConfig(1, 3, 0, True)
