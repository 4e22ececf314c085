"""Iterates of the Chambolle-Pock algorithm."""

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from svtv.errors import ShapeError
from svtv.problem import WeightedTVProblem


@dataclass
class SolverState:
    """Primal and dual iterates.

    Attributes
    ----------
    x : np.ndarray
        Primal iterate, nonnegative after every primal update.
    x_bar : np.ndarray
        Extrapolated primal iterate.
    p : np.ndarray
        Dual variable of the data-fit term, sinogram sized.
    q : np.ndarray
        Dual variable of the regularizer, gradient-field sized.
    k : int
        Iteration counter.
    """

    x: np.ndarray
    x_bar: np.ndarray
    p: np.ndarray
    q: np.ndarray
    k: int = 0

    @classmethod
    def initial(
        cls, problem: WeightedTVProblem, x0: Union[ArrayLike, None] = None
    ) -> "SolverState":
        """Starting state: x0 projected onto x >= 0 (zero by default),
        x_bar = x0 and zero duals."""
        if x0 is None:
            x = np.zeros(problem.n)
        else:
            x = np.maximum(np.asarray(x0, dtype=np.float64).ravel(), 0.0)
            if x.size != problem.n:
                raise ShapeError(
                    f"Starting point has {x.size} pixels, expected {problem.n}."
                )
        return cls(
            x=x,
            x_bar=x.copy(),
            p=np.zeros(problem.K.n_rows),
            q=np.zeros(2 * problem.n),
        )
