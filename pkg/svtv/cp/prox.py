"""Proximal maps of the Chambolle-Pock splitting."""

from enum import Enum
from typing import Union

import numpy as np
from numpy.typing import ArrayLike


class ProxVariant(Enum):
    """Constants of the data-fit conjugate.

    TEXTBOOK is the exact conjugate of 1/2 ||. - y||^2, namely
    <p, y> + 1/2 ||p||^2. SCALED keeps the coefficient 3/2 in front of
    ||p||^2, which turns the proximal denominator into 1 + 3 sigma.
    """

    SCALED = "scaled"
    TEXTBOOK = "textbook"


def _quadratic_coefficient(variant: Union[ProxVariant, str]) -> float:
    return 3.0 if ProxVariant(variant) == ProxVariant.SCALED else 1.0


def prox_f1_star(
    p: ArrayLike,
    y_delta: ArrayLike,
    sigma: float,
    variant: Union[ProxVariant, str] = ProxVariant.TEXTBOOK,
) -> np.ndarray:
    """Proximal map of sigma F1*, i.e. (p - sigma y) / (1 + c sigma) with
    c = 1 (textbook) or c = 3 (scaled)."""
    c = _quadratic_coefficient(variant)
    return (np.asarray(p) - sigma * np.asarray(y_delta)) / (1.0 + c * sigma)


def f1_conjugate(
    p: ArrayLike,
    y_delta: ArrayLike,
    variant: Union[ProxVariant, str] = ProxVariant.TEXTBOOK,
) -> float:
    """Conjugate of the data-fit term, <p, y> + c/2 ||p||^2."""
    p = np.asarray(p)
    c = _quadratic_coefficient(variant)
    return float(p @ np.asarray(y_delta) + 0.5 * c * (p @ p))


def prox_f2_star(q: ArrayLike, w: ArrayLike, lam: float) -> np.ndarray:
    """Projection of each pixel pair (q_i, q_{i+n}) onto the disk of radius
    lam * w_i.

    Parameters
    ----------
    q : ArrayLike
        Dual variable of length 2n, horizontal block first.
    w : ArrayLike
        Weights of length n.
    lam : float
        Regularization parameter.

    Returns
    -------
    np.ndarray
        The projected dual variable.
    """
    q = np.asarray(q, dtype=np.float64)
    n = q.size // 2
    radius = lam * np.asarray(w, dtype=np.float64)
    norm = np.hypot(q[:n], q[n:])
    denom = np.maximum(radius, norm)
    scale = np.divide(radius, denom, out=np.ones_like(norm), where=denom > 0.0)
    return q * np.concatenate([scale, scale])


def project_positive(x: ArrayLike) -> np.ndarray:
    """Projection onto the nonnegative orthant."""
    return np.maximum(x, 0.0)
