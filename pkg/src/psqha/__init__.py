"""Quantum harmonic analysis on phase space: Weyl transforms, quantum-classical
convolutions, zero sets of generators and covariant phase-space tomography."""

__version__ = "0.1.0"

from .finite import check_equivalences, finite_weyl, finite_weyl_transform
from .fock import Slit, coherent_state, number_state, projector, random_density, schatten_norm, weyl_operator
from .grid import PSFunction, PSGrid, default_grid, symplectic_fourier
from .qconv import (
    WeylTransformTable,
    convolve_fn_op,
    convolve_op_op,
    inverse_weyl_transform,
    transform_table,
    weyl_transform,
)
from .tomography import CovariantObservable, indistinguishable_pair, outcome_density, reconstruct, sample_outcomes
from .zeroset import dyadic_zero_measure, locate_zero_circle, wiener_construction, zero_set_report

__all__ = [
    "PSGrid",
    "PSFunction",
    "default_grid",
    "symplectic_fourier",
    "weyl_operator",
    "number_state",
    "coherent_state",
    "projector",
    "random_density",
    "schatten_norm",
    "Slit",
    "WeylTransformTable",
    "weyl_transform",
    "transform_table",
    "inverse_weyl_transform",
    "convolve_op_op",
    "convolve_fn_op",
    "zero_set_report",
    "locate_zero_circle",
    "dyadic_zero_measure",
    "wiener_construction",
    "CovariantObservable",
    "outcome_density",
    "sample_outcomes",
    "reconstruct",
    "indistinguishable_pair",
    "finite_weyl",
    "finite_weyl_transform",
    "check_equivalences",
]
