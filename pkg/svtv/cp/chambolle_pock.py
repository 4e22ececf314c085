"""Chambolle-Pock solver for the weighted TV problem."""

import logging
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from svtv.errors import SolverError
from svtv.operators import Boundary, SparseOperator, power_method_norm
from svtv.problem import WeightedTVProblem
from svtv.solver import Result, Solver, SolverTrace, Status
from svtv.weights import WeightMap

from .gap import GapVariant, gap_from_products
from .prox import ProxVariant, project_positive, prox_f1_star, prox_f2_star
from .state import SolverState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the Chambolle-Pock iterations.

    Attributes
    ----------
    lam : float
        Regularization parameter, used when the problem is built from the
        configuration. Default is 1.
    beta : float
        Inertia parameter in [0, 1]. Default is 1.
    sigma : float, optional
        Dual step size. Default is None for 1 / ||M||_2.
    tau : float, optional
        Primal step size. Default is None for 1 / ||M||_2.
    max_iter : int
        Iteration limit. Default is 1000.
    eps_J : float
        Primal-dual gap tolerance; 0 disables the criterion. Default is 1e-5.
    eps_x : float
        Relative change tolerance; 0 disables the criterion. Default is 1e-5.
    f1_prox_variant : ProxVariant
        Constants of the data-fit conjugate. Default is TEXTBOOK.
    gap_sign_variant : GapVariant
        Sign of the G* argument in the gap. Default is TEXTBOOK.
    feas_tol : float
        Relative tolerance of the indicator terms of the gap. Default is 1e-9.
    norm_tol : float
        Relative tolerance of the power method for ||M||_2. Default is 1e-8.
    seed : int
        Seed of the power method. Default is 0.
    """

    lam: float = 1.0
    beta: float = 1.0
    sigma: Union[float, None] = None
    tau: Union[float, None] = None
    max_iter: int = 1000
    eps_J: float = 1e-5
    eps_x: float = 1e-5
    f1_prox_variant: ProxVariant = ProxVariant.TEXTBOOK
    gap_sign_variant: GapVariant = GapVariant.TEXTBOOK
    feas_tol: float = 1e-9
    norm_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "f1_prox_variant", ProxVariant(self.f1_prox_variant))
        object.__setattr__(
            self, "gap_sign_variant", GapVariant(self.gap_sign_variant)
        )
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative.")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1].")
        for name in ("sigma", "tau"):
            value = getattr(self, name)
            if value is not None and not value > 0.0:
                raise ValueError(f"{name} must be strictly positive.")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1.")
        if self.eps_J < 0.0 or self.eps_x < 0.0:
            raise ValueError("Tolerances must be nonnegative.")


@lru_cache(maxsize=16)
def stacked_operator_norm(
    K: SparseOperator, shape: tuple, boundary: Boundary, tol: float, seed: int
) -> float:
    """Power-method estimate of ||[K; D]||_2, cached per projector."""
    problem = WeightedTVProblem(
        K, np.zeros(K.n_rows), shape, boundary=boundary
    )
    return power_method_norm(problem.M, tol=tol, seed=seed).value


class ChambollePock(Solver):
    """Chambolle-Pock primal-dual solver with M = [K; D], F the data-fit
    plus weighted TV terms and G the indicator of x >= 0.

    Parameters
    ----------
    config : SolverConfig
        Iteration parameters. Default is SolverConfig().
    verbose : bool
        Toggle displays. Default is False.
    display_every : int
        Number of iterations between two displayed rows. Default is 100.
    """

    def __init__(
        self,
        config: Union[SolverConfig, None] = None,
        verbose: bool = False,
        display_every: int = 100,
    ) -> None:
        self.config = SolverConfig() if config is None else config
        self.verbose = verbose
        self.display_every = display_every

    def step_sizes(self, problem: WeightedTVProblem) -> tuple:
        """Step sizes (sigma, tau) and the operator norm they rely on."""
        cfg = self.config
        gamma = stacked_operator_norm(
            problem.K, problem.shape, problem.boundary, cfg.norm_tol, cfg.seed
        )
        sigma = cfg.sigma if cfg.sigma is not None else 1.0 / gamma
        tau = cfg.tau if cfg.tau is not None else 1.0 / gamma
        if sigma * tau * gamma**2 > 1.0 + 1e-9:
            logger.warning(
                "Step sizes violate sigma * tau * ||M||^2 <= 1 (%.6e)",
                sigma * tau * gamma**2,
            )
        return sigma, tau, gamma

    def _display_header(self) -> None:
        print("-" * 80)
        print(
            "{:>7} | {:>7} | {:>10} | {:>10} | {:>10} | {:>9} | {:>9}".format(
                "iter", "timer", "objective", "fit", "reg", "pdg", "rel_chg"
            )
        )
        print("-" * 80)

    def _display_inner(self, record: dict) -> None:
        print(
            "{:>7} | {:>7.2f} | {:>10.4e} | {:>10.4e} | {:>10.4e} | {:>9.2e} | {:>9.2e}".format(  # noqa: E501
                record["iter"],
                record["wall_ms"] / 1000.0,
                record["objective"],
                record["fit"],
                record["reg"],
                record["pdg"],
                record["rel_change"],
            )
        )

    def _display_footer(self, status: Status) -> None:
        print("-" * 80)
        print(f"termination: {status.value}")

    def solve(
        self,
        problem: WeightedTVProblem,
        x0: Union[ArrayLike, None] = None,
        reference: Union[ArrayLike, None] = None,
    ) -> Result:
        """Run the Chambolle-Pock iterations.

        Parameters
        ----------
        problem : WeightedTVProblem
            The problem to solve.
        x0 : ArrayLike, optional
            Starting point. Default is None for the zero image.
        reference : ArrayLike, optional
            Image against which the relative error of each iterate is
            recorded in the trace.

        Returns
        -------
        Result
            The solver result; `trace.termination` tells which criterion
            stopped the iterations.
        """
        cfg = self.config
        sigma, tau, _ = self.step_sizes(problem)
        K, D, y = problem.K, problem.D, problem.y_delta
        w, lam, beta = problem.w, problem.lam, cfg.beta
        if reference is not None:
            reference = np.asarray(reference, dtype=np.float64).ravel()
            ref_norm = np.linalg.norm(reference)

        start_time = time.perf_counter()
        state = SolverState.initial(problem, x0)
        trace = SolverTrace()
        status = Status.RUNNING

        Kx = K.forward(state.x)
        Dx = D.forward(state.x)
        Kx_bar, Dx_bar = Kx, Dx

        if self.verbose:
            self._display_header()

        # Main loop
        while status == Status.RUNNING:

            # Dual updates
            state.p = prox_f1_star(
                state.p + sigma * Kx_bar, y, sigma, cfg.f1_prox_variant
            )
            state.q = prox_f2_star(state.q + sigma * Dx_bar, w, lam)

            # Primal update
            Mtz = K.adjoint(state.p) + D.adjoint(state.q)
            x_prev = state.x
            state.x = project_positive(x_prev - tau * Mtz)
            Kx_new = K.forward(state.x)
            Dx_new = D.forward(state.x)

            # Inertia update
            state.x_bar = state.x + beta * (state.x - x_prev)
            Kx_bar = Kx_new + beta * (Kx_new - Kx)
            Dx_bar = Dx_new + beta * (Dx_new - Dx)
            Kx, Dx = Kx_new, Dx_new
            state.k += 1

            # Diagnostics
            residual = Kx - y
            fit = 0.5 * float(residual @ residual)
            reg = lam * float(w @ np.hypot(Dx[: problem.n], Dx[problem.n :]))
            pdg = gap_from_products(
                problem,
                Kx,
                Dx,
                state.x,
                state.p,
                state.q,
                Mtz,
                cfg.gap_sign_variant,
                cfg.f1_prox_variant,
                cfg.feas_tol,
            )
            step = np.linalg.norm(state.x - x_prev)
            prev_norm = np.linalg.norm(x_prev)
            if prev_norm > 0.0:
                rel_change = step / prev_norm
            else:
                rel_change = 0.0 if step == 0.0 else np.inf

            record = {
                "iter": state.k,
                "objective": fit + reg,
                "fit": fit,
                "reg": reg,
                "pdg": pdg,
                "rel_change": rel_change,
                "wall_ms": 1000.0 * (time.perf_counter() - start_time),
            }
            if reference is not None:
                record["re"] = float(np.linalg.norm(state.x - reference) / ref_norm)
            trace.records.append(record)

            # Displays
            if self.verbose and state.k % self.display_every == 0:
                self._display_inner(record)

            # Status update
            if not (
                np.all(np.isfinite(state.x))
                and np.all(np.isfinite(state.p))
                and np.all(np.isfinite(state.q))
            ):
                trace.termination = Status.ERROR
                raise SolverError(
                    f"Non-finite iterate at iteration {state.k}.", trace
                )
            if state.k >= cfg.max_iter:
                status = Status.ITER_LIMIT
            if cfg.eps_x > 0.0 and step <= cfg.eps_x * prev_norm:
                status = Status.REL_CHANGE
            if cfg.eps_J > 0.0 and pdg <= cfg.eps_J:
                status = Status.PDG

        trace.termination = status
        if self.verbose:
            self._display_footer(status)
        logger.debug(
            "Chambolle-Pock stopped after %d iterations (%s)", state.k, status.value
        )

        return Result(
            status,
            state.x,
            trace.records[-1]["objective"],
            time.perf_counter() - start_time,
            state.k,
            trace,
        )


def cp_solve(
    K: SparseOperator,
    y_delta: ArrayLike,
    w: Union[WeightMap, ArrayLike, None],
    cfg: SolverConfig,
    x0: Union[ArrayLike, None] = None,
    shape: Union[tuple, None] = None,
    boundary: Boundary = Boundary.FORWARD,
    reference: Union[ArrayLike, None] = None,
) -> tuple:
    """Solve the weighted TV problem with parameters `cfg`.

    Parameters
    ----------
    K : SparseOperator
        The projector.
    y_delta : ArrayLike
        The sinogram.
    w : Union[WeightMap, ArrayLike, None]
        Weights, or None for unit weights.
    cfg : SolverConfig
        Solver parameters, `cfg.lam` included.
    x0 : ArrayLike, optional
        Starting point.
    shape : tuple, optional
        Image shape. Default is a square image.
    boundary : Boundary, default=Boundary.FORWARD
        Difference scheme of D.
    reference : ArrayLike, optional
        Image used to record relative errors in the trace.

    Returns
    -------
    x : np.ndarray
        The final iterate.
    trace : SolverTrace
        Per-iteration diagnostics.
    """
    if shape is None:
        side = int(round(np.sqrt(K.n_cols)))
        shape = (side, side)
    problem = WeightedTVProblem(K, y_delta, shape, w, cfg.lam, boundary)
    result = ChambollePock(cfg).solve(problem, x0=x0, reference=reference)
    return result.solution, result.trace
