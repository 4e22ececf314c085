"""Chambolle-Pock primal-dual algorithm and its components."""

from .prox import (
    ProxVariant,
    f1_conjugate,
    project_positive,
    prox_f1_star,
    prox_f2_star,
)
from .state import SolverState
from .gap import GapVariant, gap_from_products, primal_dual_gap
from .chambolle_pock import (
    ChambollePock,
    SolverConfig,
    cp_solve,
    stacked_operator_norm,
)


__all__ = [
    "ProxVariant",
    "f1_conjugate",
    "project_positive",
    "prox_f1_star",
    "prox_f2_star",
    "SolverState",
    "GapVariant",
    "gap_from_products",
    "primal_dual_gap",
    "ChambollePock",
    "SolverConfig",
    "cp_solve",
    "stacked_operator_norm",
]
