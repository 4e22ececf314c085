"""Numerical checks of the properties of the weighted TV model."""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from svtv.cp import ChambollePock, SolverConfig
from svtv.operators import (
    Boundary,
    Geometry,
    SparseOperator,
    dhat,
    gradient,
    gradient_magnitude,
    gradient_operator,
    norm21,
)
from svtv.problem import WeightedTVProblem, objective
from svtv.reconstructors import (
    Reconstructor,
    ReconstructorQuality,
    ReconstructorSpec,
    estimate_stability,
    reconstruct,
)
from svtv.weights import WeightParams, compute_weights, weight_lipschitz_constant

logger = logging.getLogger(__name__)

MAX_DENSE_PIXELS = 400


def _square(n: int) -> tuple:
    side = int(round(np.sqrt(n)))
    return (side, side)


@dataclass
class MidpointReport:
    """Outcome of the midpoint inequality check.

    Attributes
    ----------
    max_violation : float
        Largest J((x1 + x2)/2) - (J(x1) + J(x2))/2 + ||K(x1 - x2)||^2 / 8.
    max_scaled_violation : float
        Largest violation divided by 1 + |J((x1 + x2)/2)|.
    n_trials : int
        Number of pairs.
    """

    max_violation: float
    max_scaled_violation: float
    n_trials: int

    def holds(self, tol: float = 1e-10) -> bool:
        return self.max_scaled_violation <= tol


def check_midpoint_inequality(
    K: SparseOperator,
    y_delta: ArrayLike,
    lam: float,
    n_trials: int = 1000,
    seed: int = 0,
    shape: Union[tuple, None] = None,
    pairs: Union[list, None] = None,
) -> MidpointReport:
    """Midpoint inequality of the global TV objective J,

    J((x1 + x2)/2) <= (J(x1) + J(x2))/2 - ||K x1 - K x2||^2 / 8,

    on random nonnegative pairs, or on the given `pairs`.
    """
    if shape is None:
        shape = _square(K.n_cols)
    if pairs is None:
        if n_trials < 1:
            raise ValueError("n_trials must be at least 1.")
        rng = np.random.default_rng(seed)
        n = K.n_cols
        pairs = [(rng.random(n), rng.random(n)) for _ in range(n_trials)]
    w = np.ones(K.n_cols)

    def J(x):
        return objective(x, y_delta, K, w, lam, shape)[0]

    worst, worst_scaled = -np.inf, -np.inf
    for x1, x2 in pairs:
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        Kdiff = K.forward(x1 - x2)
        mid = J(0.5 * (x1 + x2))
        violation = mid - (0.5 * (J(x1) + J(x2)) - 0.125 * float(Kdiff @ Kdiff))
        worst = max(worst, violation)
        worst_scaled = max(worst_scaled, violation / (1.0 + abs(mid)))
    return MidpointReport(float(worst), float(worst_scaled), len(pairs))


def check_dhat_identity(
    images: list,
    shape: tuple,
    boundary: Boundary = Boundary.FORWARD,
) -> float:
    """Largest |TV(x) - <D_hat x, D x>| / (1 + TV(x)) over the images."""
    if len(images) == 0:
        raise ValueError("At least one image is required.")
    worst = 0.0
    for img in images:
        g = gradient(img, shape, boundary)
        tv = norm21(g)
        inner = float(dhat(img, shape, boundary).data @ g.data)
        worst = max(worst, abs(tv - inner) / (1.0 + tv))
    return worst


@dataclass
class UniquenessReport:
    """Status of the two sufficient conditions for a unique minimizer.

    Attributes
    ----------
    cond1_residual : float
        Relative least-squares residual of D^T D_hat x1 against range(K^T).
    cond2_min_sv : float
        Smallest singular value of K restricted to an orthonormal basis of
        S1, the images whose gradient vanishes on the zero set of D x1;
        `inf` when S1 = {0}.
    cond1_holds : bool
        Whether `cond1_residual` is within tolerance.
    cond2_holds : bool
        Whether `cond2_min_sv` is above tolerance.
    zero_set_size : int
        Number of pixels where |D x1| vanishes.
    """

    cond1_residual: float
    cond2_min_sv: float
    cond1_holds: bool
    cond2_holds: bool
    zero_set_size: int


def check_uniqueness_conditions(
    K: SparseOperator,
    x1: ArrayLike,
    tol: float = 1e-8,
    shape: Union[tuple, None] = None,
    boundary: Boundary = Boundary.FORWARD,
    zero_tol: float = 1e-10,
) -> UniquenessReport:
    """Dense evaluation of conditions (i) D^T D_hat x1 = K^T z for some z and
    (ii) ker(K) and S1 only share 0.

    Parameters
    ----------
    K : SparseOperator
        The projector, with at most 400 columns.
    x1 : ArrayLike
        A minimizer, typically a converged solver output.
    tol : float, default=1e-8
        Residual bound of (i) and singular value bound of (ii).
    shape : tuple, optional
        The image shape. Default is a square image.
    boundary : Boundary, default=Boundary.FORWARD
        The difference scheme.
    zero_tol : float, default=1e-10
        Gradient magnitudes at most `zero_tol` count as zero.

    Returns
    -------
    UniquenessReport
        The residual, the singular value and the derived booleans.
    """
    n = K.n_cols
    if n > MAX_DENSE_PIXELS:
        raise ValueError(
            f"Dense uniqueness check limited to {MAX_DENSE_PIXELS} pixels, got {n}."
        )
    if shape is None:
        shape = _square(n)
    x1 = np.asarray(x1, dtype=np.float64).ravel()
    Kd = K.to_dense()
    Dd = gradient_operator(tuple(shape), Boundary(boundary)).to_dense()

    # Condition (i)
    b = Dd.T @ dhat(x1, shape, boundary).data
    b_norm = np.linalg.norm(b)
    try:
        z = scipy.linalg.lstsq(Kd.T, b)[0]
    except (np.linalg.LinAlgError, ValueError) as e:
        raise np.linalg.LinAlgError(f"Least-squares solve failed: {e}") from e
    residual = np.linalg.norm(Kd.T @ z - b)
    cond1_residual = float(residual / b_norm) if b_norm > 0.0 else float(residual)

    # Condition (ii)
    magnitude = gradient_magnitude(gradient(x1, shape, boundary))
    zero_set = np.flatnonzero(magnitude <= zero_tol)
    if zero_set.size == 0:
        basis = np.eye(n)
    else:
        basis = scipy.linalg.null_space(Dd[np.concatenate([zero_set, zero_set + n])])
    if basis.shape[1] == 0:
        cond2_min_sv = np.inf
    elif Kd.shape[0] < basis.shape[1]:
        cond2_min_sv = 0.0
    else:
        cond2_min_sv = float(scipy.linalg.svdvals(Kd @ basis).min())

    return UniquenessReport(
        cond1_residual=cond1_residual,
        cond2_min_sv=cond2_min_sv,
        cond1_holds=bool(cond1_residual <= tol),
        cond2_holds=bool(cond2_min_sv > tol),
        zero_set_size=int(zero_set.size),
    )


def gradient_norm_bounds(
    shape: tuple,
    boundary: Boundary = Boundary.FORWARD,
    n_random: int = 100,
    seed: int = 0,
) -> tuple:
    """Bracket of the induced norm max ||Dx||_{2,1} / ||x||_1.

    Returns
    -------
    lower : float
        Maximum of the ratio over random images and canonical basis vectors.
    upper : float
        Largest column absolute sum of D.
    """
    D = gradient_operator(tuple(shape), Boundary(boundary))
    n = shape[0] * shape[1]
    columns = abs(D.matrix).sum(axis=0)
    upper = float(np.max(columns))

    # Canonical basis vectors: column-wise (2,1) norms
    dense_cols = D.matrix.tocsc()
    lower = 0.0
    for j in range(n):
        col = dense_cols[:, [j]].toarray().ravel()
        lower = max(lower, float(np.sum(np.hypot(col[:n], col[n:]))))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        x = rng.standard_normal(n)
        g = D.forward(x)
        lower = max(lower, float(np.sum(np.hypot(g[:n], g[n:]))) / np.abs(x).sum())
    return lower, upper


@dataclass
class ObjectiveBoundReport:
    """Comparison of |J_gt(x) - J_psi(x)| with its stability bound.

    Attributes
    ----------
    lhs : np.ndarray
        |J_gt(x) - J_psi(x)| per trial image.
    rhs : np.ndarray
        lam L ||D|| (eta_1 + C ||e||_1) ||Dx||_{2,1} per trial image.
    lipschitz : float
        Lipschitz constant L of the weight function.
    gradient_norm : float
        Upper bound of the induced norm of D.
    quality : ReconstructorQuality
        The 1-norm accuracy and stability constants used.
    noise_norm : float
        ||e||_1 = ||y_delta - K x_gt||_1.
    """

    lhs: np.ndarray
    rhs: np.ndarray
    lipschitz: float
    gradient_norm: float
    quality: ReconstructorQuality
    noise_norm: float

    @property
    def slack(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def n_violations(self) -> int:
        return int(np.sum(self.lhs > self.rhs))


def check_objective_bound(
    K: SparseOperator,
    y_delta: ArrayLike,
    psi: Union[ReconstructorSpec, Reconstructor],
    params: WeightParams,
    lam: float,
    trial_images: list,
    x_gt: ArrayLike,
    geom: Union[Geometry, None] = None,
    quality: Union[ReconstructorQuality, None] = None,
    samples: Union[list, None] = None,
    shape: Union[tuple, None] = None,
    boundary: Boundary = Boundary.FORWARD,
) -> ObjectiveBoundReport:
    """Check |J_gt(x) - J_psi(x)| <= lam L ||D|| (eta_1 + C ||e||_1) ||Dx||_{2,1}
    on trial images, J_gt and J_psi being the weighted objectives with weights
    from x_gt and from psi(y_delta).

    The constants eta_1 and C are estimated on `samples` (default: x_gt
    alone) with noise bounded by ||e||_1 unless `quality` is given.
    """
    if shape is None:
        shape = _square(K.n_cols)
    x_gt = np.asarray(x_gt, dtype=np.float64).ravel()
    y_delta = np.asarray(y_delta, dtype=np.float64)
    noise_norm = float(np.abs(y_delta - K.forward(x_gt)).sum())
    if quality is None:
        samples = [x_gt] if samples is None else samples
        quality = estimate_stability(
            psi,
            samples,
            K,
            p_norm=1.0,
            epsilon=max(noise_norm, 1e-12),
            seed=0,
            geom=geom,
        )

    if isinstance(psi, ReconstructorSpec):
        x_tilde = reconstruct(psi, y_delta, geom, x_gt=x_gt, K=K)
    else:
        psi.initialize(K, geom)
        x_tilde = psi.with_truth(x_gt).reconstruct(y_delta)
    w_gt = compute_weights(x_gt, shape, params, boundary, "gt")
    w_psi = compute_weights(x_tilde, shape, params, boundary, "psi")

    magnitudes = np.concatenate(
        [
            gradient_magnitude(gradient(x_gt, shape, boundary)),
            gradient_magnitude(gradient(x_tilde, shape, boundary)),
        ]
    )
    lipschitz = weight_lipschitz_constant(
        params, max(float(magnitudes.max()), 10.0 * params.eta)
    )
    gradient_norm = gradient_norm_bounds(shape, boundary)[1]
    factor = lipschitz * gradient_norm * quality.error_bound(noise_norm)

    lhs, rhs = [], []
    for x in trial_images:
        x = np.asarray(x, dtype=np.float64).ravel()
        reg_gt = objective(x, y_delta, K, w_gt, lam, shape, boundary)[2]
        reg_psi = objective(x, y_delta, K, w_psi, lam, shape, boundary)[2]
        lhs.append(abs(reg_gt - reg_psi))
        rhs.append(lam * factor * norm21(gradient(x, shape, boundary)))
    report = ObjectiveBoundReport(
        np.array(lhs), np.array(rhs), lipschitz, gradient_norm, quality, noise_norm
    )
    if report.n_violations > 0:
        logger.warning(
            "Objective bound violated on %d trial images", report.n_violations
        )
    return report


@dataclass
class RegularizerAgreementReport:
    """Regularizer values at two approximate minimizers.

    Attributes
    ----------
    reg_a, reg_b : float
        lam ||w * |Dx| ||_1 at both solver outputs.
    pdg_a, pdg_b : float
        Final primal-dual gaps, possibly infinite.
    difference : float
        |reg_a - reg_b|.
    """

    reg_a: float
    reg_b: float
    pdg_a: float
    pdg_b: float
    difference: float

    @property
    def tolerance(self) -> float:
        return 10.0 * max(self.pdg_a, self.pdg_b)

    @property
    def holds(self) -> bool:
        return self.difference <= self.tolerance


def check_regularizer_agreement(
    problem: WeightedTVProblem,
    x0_a: ArrayLike,
    x0_b: ArrayLike,
    config: Union[SolverConfig, None] = None,
) -> RegularizerAgreementReport:
    """Solve `problem` from two starting points and compare the regularizer
    values; all minimizers share the same regularizer value."""
    solver = ChambollePock(config)
    res_a = solver.solve(problem, x0=x0_a)
    res_b = solver.solve(problem, x0=x0_b)
    reg_a = problem.terms(res_a.solution)[2]
    reg_b = problem.terms(res_b.solution)[2]
    return RegularizerAgreementReport(
        reg_a,
        reg_b,
        res_a.trace.records[-1]["pdg"],
        res_b.trace.records[-1]["pdg"],
        abs(reg_a - reg_b),
    )
