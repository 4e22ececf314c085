"""Weighted TV reconstruction problem."""

from abc import ABC, abstractmethod
from functools import cached_property
from typing import Union

import cvxpy as cp
import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike

from svtv.errors import ShapeError
from svtv.operators import (
    Boundary,
    SparseOperator,
    gradient,
    gradient_magnitude,
    gradient_operator,
)
from svtv.weights import WeightMap


class Problem(ABC):
    """Base class for optimization problems."""

    @abstractmethod
    def value(self, x) -> float:
        """Value of the objective function at a given point x.

        Parameters
        ----------
        x : Any
            Point to evaluate.

        Returns
        -------
        value : float
            Value of the objective function at x.
        """
        pass

    @abstractmethod
    def is_feasible(self, x, feas_tol: float = 1e-12) -> bool:
        """Check if a given point x is feasible for the problem.

        Parameters
        ----------
        x : Any
            Point to check.
        feas_tol : float, default=1e-12
            Tolerance for the feasibility constraints.

        Returns
        -------
        feasible : bool
            Whether x is feasible for the problem.
        """
        pass


def objective(
    x: ArrayLike,
    y_delta: ArrayLike,
    K: SparseOperator,
    w: Union[WeightMap, ArrayLike],
    lam: float,
    shape: tuple,
    boundary: Boundary = Boundary.FORWARD,
) -> tuple:
    """Weighted TV objective 1/2 ||Kx - y||^2 + lam ||w * |Dx| ||_1.

    Returns
    -------
    total : float
        The objective value.
    fit : float
        The data-fit term.
    reg : float
        The regularization term, lam included.
    """
    x = np.asarray(x, dtype=np.float64)
    w = w.w if isinstance(w, WeightMap) else np.asarray(w, dtype=np.float64)
    residual = K.forward(x) - np.asarray(y_delta, dtype=np.float64)
    fit = 0.5 * float(residual @ residual)
    magnitude = gradient_magnitude(gradient(x, shape, boundary))
    reg = lam * float(w @ magnitude)
    return fit + reg, fit, reg


class WeightedTVProblem(Problem):
    """Problem of the form:

    min 1/2 ||Kx - y||_2^2 + lam ||w * |Dx| ||_1
    s.t x >= 0

    where `K` is the projector, `D` the discrete gradient, `w` frozen
    per-pixel weights and `lam` the regularization parameter.

    Parameters
    ----------
    K : SparseOperator
        The projector, of shape (m, n).
    y_delta : ArrayLike
        The measured sinogram, of length m.
    shape : tuple
        The image shape (h, w) with h * w = n.
    w : Union[WeightMap, ArrayLike, None]
        The weights. Default is None for unit weights (global TV).
    lam : float
        The regularization parameter.
    boundary : Boundary
        The difference scheme of D. Default is Boundary.FORWARD.
    """

    def __init__(
        self,
        K: SparseOperator,
        y_delta: ArrayLike,
        shape: tuple,
        w: Union[WeightMap, ArrayLike, None] = None,
        lam: float = 1.0,
        boundary: Boundary = Boundary.FORWARD,
    ):
        self.K = K
        self.y_delta = np.asarray(y_delta, dtype=np.float64)
        self.shape = tuple(shape)
        self.n = self.shape[0] * self.shape[1]
        if w is None:
            w = np.ones(self.n)
        self.w = w.w if isinstance(w, WeightMap) else np.asarray(w, dtype=np.float64)
        self.lam = float(lam)
        self.boundary = Boundary(boundary)

        if K.n_cols != self.n:
            raise ShapeError(f"Projector has {K.n_cols} columns, image has {self.n}.")
        if self.y_delta.shape != (K.n_rows,):
            raise ShapeError(
                f"Sinogram has shape {self.y_delta.shape}, projector has "
                f"{K.n_rows} rows."
            )
        if self.w.shape != (self.n,):
            raise ShapeError(
                f"Weights have shape {self.w.shape}, expected ({self.n},)."
            )
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative.")

    @cached_property
    def D(self) -> SparseOperator:
        return gradient_operator(self.shape, self.boundary)

    @cached_property
    def M(self) -> SparseOperator:
        """Stacked operator [K; D]."""
        return self.K.vstack(self.D)

    def terms(self, x: ArrayLike) -> tuple:
        """Objective value, data-fit term and regularization term."""
        return objective(
            x, self.y_delta, self.K, self.w, self.lam, self.shape, self.boundary
        )

    def value(self, x: ArrayLike) -> float:
        if self.is_feasible(x):
            return self.terms(x)[0]
        else:
            return np.inf

    def is_feasible(self, x: ArrayLike, feas_tol: float = 1e-12) -> bool:
        return bool(np.all(np.asarray(x) >= -feas_tol))

    def with_weights(self, w: Union[WeightMap, ArrayLike]) -> "WeightedTVProblem":
        return WeightedTVProblem(
            self.K, self.y_delta, self.shape, w, self.lam, self.boundary
        )

    def to_cvxpy_expr(self, x: cp.Variable) -> cp.Expression:
        """The objective as a cvxpy expression of x."""
        D = sp.csr_matrix(self.D.matrix)
        pairs = cp.vstack([D[: self.n] @ x, D[self.n :] @ x])
        magnitude = cp.norm(pairs, 2, axis=0)
        return 0.5 * cp.sum_squares(
            sp.csr_matrix(self.K.matrix) @ x - self.y_delta
        ) + self.lam * (self.w @ magnitude)
