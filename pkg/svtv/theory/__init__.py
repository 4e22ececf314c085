"""Numerical verification of the properties of the weighted TV model."""

from .checks import (
    MidpointReport,
    ObjectiveBoundReport,
    RegularizerAgreementReport,
    UniquenessReport,
    check_dhat_identity,
    check_midpoint_inequality,
    check_objective_bound,
    check_regularizer_agreement,
    check_uniqueness_conditions,
    gradient_norm_bounds,
)
from .experiments import (
    BaseProblem,
    ConvergenceRecord,
    is_nonincreasing,
    noise_convergence_experiment,
    reconstructor_convergence_experiment,
)


__all__ = [
    "MidpointReport",
    "ObjectiveBoundReport",
    "RegularizerAgreementReport",
    "UniquenessReport",
    "check_dhat_identity",
    "check_midpoint_inequality",
    "check_objective_bound",
    "check_regularizer_agreement",
    "check_uniqueness_conditions",
    "gradient_norm_bounds",
    "BaseProblem",
    "ConvergenceRecord",
    "is_nonincreasing",
    "noise_convergence_experiment",
    "reconstructor_convergence_experiment",
]
