"""Space-variant weights of the weighted TV regularizer."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from svtv.operators import Boundary, gradient, gradient_magnitude


@dataclass(frozen=True)
class WeightParams:
    """Parameters of the weight map.

    Attributes
    ----------
    eta : float
        Scale of the gradient magnitude, strictly positive.
    p_exp : float
        Exponent p of the Total p-Variation, in (0, 1).
    """

    eta: float = 2e-5
    p_exp: float = 0.5

    def __post_init__(self):
        if not self.eta > 0.0:
            raise ValueError("eta must be strictly positive.")
        if not 0.0 < self.p_exp < 1.0:
            raise ValueError("p_exp must lie in (0, 1).")


@dataclass
class WeightMap:
    """Per-pixel weights in (0, 1], frozen for a whole solve.

    Attributes
    ----------
    w : np.ndarray
        The weights, one per pixel.
    params : WeightParams
        The parameters used to compute them.
    source : str
        Provenance of the image the weights were computed from.
    """

    w: np.ndarray
    params: WeightParams
    source: str = "unknown"

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.w.setflags(write=False)


def weight_function(alpha: ArrayLike, params: WeightParams) -> np.ndarray:
    """Weight as a function of the gradient magnitude alpha."""
    ratio = 1.0 / np.hypot(1.0, np.asarray(alpha, dtype=np.float64) / params.eta)
    return ratio ** (1.0 - params.p_exp)


def weight_derivative(alpha: ArrayLike, params: WeightParams) -> np.ndarray:
    """Derivative of `weight_function` with respect to alpha."""
    alpha = np.asarray(alpha, dtype=np.float64)
    eta, p = params.eta, params.p_exp
    t = alpha / eta
    return (p - 1.0) * t * (1.0 + t**2) ** (-(3.0 - p) / 2.0) / eta


def compute_weights(
    x_tilde: ArrayLike,
    shape: tuple,
    params: WeightParams,
    boundary: Boundary = Boundary.FORWARD,
    source: str = "unknown",
) -> WeightMap:
    """Weights (eta / sqrt(eta^2 + |D x_tilde|^2))^(1 - p), pixelwise.

    Parameters
    ----------
    x_tilde : ArrayLike
        Flat image the weights are computed from.
    shape : tuple
        Image shape (h, w).
    params : WeightParams
        Weight parameters.
    boundary : Boundary, default=Boundary.FORWARD
        Difference scheme of the gradient.
    source : str, default="unknown"
        Provenance tag stored in the map.

    Returns
    -------
    WeightMap
        Weights equal to 1 exactly where |D x_tilde| vanishes.
    """
    magnitude = gradient_magnitude(gradient(x_tilde, shape, boundary))
    return WeightMap(weight_function(magnitude, params), params, source)


def unit_weights(n: int, source: str = "global") -> WeightMap:
    """All-ones weights, i.e. the global TV regularizer."""
    return WeightMap(np.ones(n), WeightParams(), source)


def weight_lipschitz_constant(
    params: WeightParams,
    grid_max: float,
    grid_points: int = 100001,
    margin: float = 0.01,
) -> float:
    """Lipschitz constant of the weight function on [0, grid_max].

    The constant is the maximum of |f'| over a uniform grid, inflated by
    `margin`.

    Parameters
    ----------
    params : WeightParams
        Weight parameters.
    grid_max : float
        Upper end of the grid; must cover the gradient magnitudes of the data.
    grid_points : int, default=100001
        Number of grid points.
    margin : float, default=0.01
        Relative inflation.

    Returns
    -------
    float
        The inflated constant.
    """
    alpha = np.linspace(0.0, grid_max, grid_points)
    return float(np.max(np.abs(weight_derivative(alpha, params))) * (1.0 + margin))
