"""Primal-dual gap of the weighted TV problem."""

from enum import Enum
from typing import Union

import numpy as np

from svtv.problem import WeightedTVProblem

from .prox import ProxVariant, f1_conjugate
from .state import SolverState


class GapVariant(Enum):
    """Sign of the argument of G* in the gap.

    TEXTBOOK evaluates G*(-M^T z), FLIPPED evaluates G*(M^T z).
    """

    FLIPPED = "flipped"
    TEXTBOOK = "textbook"


def gap_from_products(
    problem: WeightedTVProblem,
    Kx: np.ndarray,
    Dx: np.ndarray,
    x: np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    Mtz: np.ndarray,
    variant: Union[GapVariant, str] = GapVariant.TEXTBOOK,
    f1_variant: Union[ProxVariant, str] = ProxVariant.TEXTBOOK,
    feas_tol: float = 1e-9,
) -> float:
    """Gap F(Mx) + G(x) + F*(z) + G*(-/+ M^T z) from precomputed products.

    Indicator terms are zero when their argument is feasible up to
    `feas_tol` times one plus the largest magnitude involved, and infinite
    otherwise; the gap is then `inf`.
    """
    n = problem.n
    lam_w = problem.lam * problem.w

    # G(x)
    if np.any(x < -feas_tol * (1.0 + np.max(np.abs(x), initial=0.0))):
        return np.inf

    # F2*(q)
    radius = np.hypot(q[:n], q[n:])
    if np.any(radius > lam_w + feas_tol * (1.0 + np.max(lam_w, initial=0.0))):
        return np.inf

    # G*(s) with s = -/+ M^T z
    s = -Mtz if GapVariant(variant) == GapVariant.TEXTBOOK else Mtz
    if np.any(s > feas_tol * (1.0 + np.max(np.abs(s), initial=0.0))):
        return np.inf

    residual = Kx - problem.y_delta
    primal = 0.5 * float(residual @ residual) + problem.lam * float(
        problem.w @ np.hypot(Dx[:n], Dx[n:])
    )
    dual = f1_conjugate(p, problem.y_delta, f1_variant)
    return primal + dual


def primal_dual_gap(
    state: SolverState,
    problem: WeightedTVProblem,
    variant: Union[GapVariant, str] = GapVariant.TEXTBOOK,
    f1_variant: Union[ProxVariant, str] = ProxVariant.TEXTBOOK,
    feas_tol: float = 1e-9,
) -> float:
    """Primal-dual gap of a solver state.

    Parameters
    ----------
    state : SolverState
        The iterates (x, p, q).
    problem : WeightedTVProblem
        The problem.
    variant : Union[GapVariant, str], default=GapVariant.TEXTBOOK
        Sign convention of the G* term.
    f1_variant : Union[ProxVariant, str], default=ProxVariant.TEXTBOOK
        Constants of the data-fit conjugate.
    feas_tol : float, default=1e-9
        Relative tolerance of the indicator terms.

    Returns
    -------
    float
        The gap, or `inf` when a dual or primal indicator is violated.
    """
    K, D = problem.K, problem.D
    Mtz = K.adjoint(state.p) + D.adjoint(state.q)
    return gap_from_products(
        problem,
        K.forward(state.x),
        D.forward(state.x),
        state.x,
        state.p,
        state.q,
        Mtz,
        variant,
        f1_variant,
        feas_tol,
    )
