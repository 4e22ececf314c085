"""Exact solve of the weighted TV problem through cvxpy."""

import logging
import time

import cvxpy as cp
import numpy as np

from svtv.errors import SolverError
from svtv.problem import WeightedTVProblem
from svtv.solver import Result, Solver, SolverTrace, Status

logger = logging.getLogger(__name__)


class CvxpySolver(Solver):
    """Reference solver modeling the problem with cvxpy and solving it with
    a conic solver. Intended for small instances only.

    Parameters
    ----------
    solver : str, optional
        Name of the cvxpy solver backend. Default is None for the cvxpy
        default.
    solver_options : dict, optional
        Keyword options forwarded to the backend.
    """

    def __init__(self, solver: str = None, solver_options: dict = None):
        self.solver = solver
        self.solver_options = {} if solver_options is None else solver_options

    def solve(self, problem: WeightedTVProblem) -> Result:
        start_time = time.perf_counter()

        x = cp.Variable(problem.n)
        objective = cp.Minimize(problem.to_cvxpy_expr(x))
        constraints = [x >= 0.0]
        model = cp.Problem(objective, constraints)
        try:
            model.solve(solver=self.solver, **self.solver_options)
        except cp.error.SolverError as e:
            raise SolverError(f"cvxpy solve failed: {e}") from e

        if model.status not in {cp.OPTIMAL, cp.OPTIMAL_INACCURATE}:
            raise SolverError(f"cvxpy solve ended with status {model.status}.")
        if model.status == cp.OPTIMAL_INACCURATE:
            logger.warning("cvxpy reported an inaccurate optimum")

        solution = np.maximum(np.asarray(x.value, dtype=np.float64), 0.0)
        trace = SolverTrace(termination=Status.OPTIMAL)
        return Result(
            Status.OPTIMAL,
            solution,
            problem.value(solution),
            time.perf_counter() - start_time,
            0,
            trace,
        )


def oracle_solve(problem: WeightedTVProblem) -> tuple:
    """Minimizer and minimum of `problem` from the exact conic solve."""
    result = CvxpySolver().solve(problem)
    return result.solution, result.objective_value
