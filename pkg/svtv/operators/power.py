"""Spectral norm estimation by the power method."""

import logging
from dataclasses import dataclass

import numpy as np

from .sparse import SparseOperator

logger = logging.getLogger(__name__)


@dataclass
class NormEstimate:
    """Result of the power method.

    Attributes
    ----------
    value : float
        Estimate of the largest singular value. Never above the true value.
    iterations : int
        Number of iterations performed.
    converged : bool
        Whether the relative change dropped below the tolerance.
    """

    value: float
    iterations: int
    converged: bool

    def __float__(self):
        return float(self.value)


def power_method_norm(
    op: SparseOperator, max_iter: int = 10000, tol: float = 1e-10, seed: int = 0
) -> NormEstimate:
    """Estimate ||op||_2 by power iterations on op^T op.

    The estimate at each iteration is ||op v|| for a unit vector v, which is
    a lower bound of the spectral norm.

    Parameters
    ----------
    op : SparseOperator
        The operator.
    max_iter : int, default=10000
        Maximum number of iterations.
    tol : float, default=1e-10
        Relative change of the estimate below which iterations stop.
    seed : int, default=0
        Seed of the random starting vector.

    Returns
    -------
    NormEstimate
        The estimate and its convergence flag.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.n_cols)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for it in range(1, max_iter + 1):
        u = op.forward(v)
        new_estimate = float(np.linalg.norm(u))
        if new_estimate == 0.0:
            return NormEstimate(0.0, it, True)
        w = op.adjoint(u)
        w_norm = np.linalg.norm(w)
        converged = abs(new_estimate - estimate) <= tol * new_estimate
        estimate = max(estimate, new_estimate)
        if converged:
            logger.debug("Power method converged in %d iterations", it)
            return NormEstimate(estimate, it, True)
        v = w / w_norm
    logger.warning(
        "Power method did not converge in %d iterations (estimate %.6e)",
        max_iter,
        estimate,
    )
    return NormEstimate(estimate, max_iter, False)
