"""Bourgain-Morrey norms, their block-space predual, and numerical checks."""

from .blocks import (BlockDecomposition, BlockEntry, DualCertificate, NotConverged, SolverOptions, block_norm,
                     block_norm_upper, dual_norm, finite_decomposition, single_cell_block_norm)
from .bm import (CubeTermTable, bm_norm, continuous_char_estimate, cube_terms, per_scale_bm, slice_norm)
from .grid import (INF, TRIVIALITY_RULE, ExponentSet, GridFunction, conjugate, lp_norm_on_cube, pairing,
                   random_function, value_norm)
from .lattice import (CubeIndex, DomainError, LatticeConfig, ancestors_of_cell, cells_of, cube_position,
                      enumerate_cubes)
from .operators import (KernelSpec, average_Ek, convolve, ek_constant, maximal, translate, translate_cells,
                        translation_constant)
from .verify import CheckSpec, SuiteConfig, VerificationReport, replay, run_suite

__version__ = "0.1.0"

__all__ = [
    "BlockDecomposition", "BlockEntry", "CheckSpec", "CubeIndex", "CubeTermTable", "DomainError",
    "DualCertificate", "ExponentSet", "GridFunction", "INF", "KernelSpec", "LatticeConfig", "NotConverged",
    "SolverOptions", "SuiteConfig", "TRIVIALITY_RULE", "VerificationReport", "ancestors_of_cell", "average_Ek",
    "block_norm", "block_norm_upper", "bm_norm", "cells_of", "conjugate", "continuous_char_estimate",
    "convolve", "cube_position", "cube_terms", "dual_norm", "ek_constant", "enumerate_cubes",
    "finite_decomposition", "lp_norm_on_cube", "maximal", "pairing", "per_scale_bm", "random_function",
    "replay", "run_suite", "single_cell_block_norm", "slice_norm", "translate", "translate_cells",
    "translation_constant", "value_norm",
]
