"""Discrete gradient, its magnitude, its normalized companion and the
(2,1)-norm."""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike

from svtv.errors import ShapeError

from .sparse import SparseOperator


class Boundary(Enum):
    """Finite difference scheme of the gradient.

    FORWARD uses forward differences with a replicate (Neumann) boundary, so
    the last difference along each axis is zero. CENTRAL uses half central
    differences with the same replicate boundary.
    """

    FORWARD = "forward"
    CENTRAL = "central"


@dataclass
class GradientField:
    """Stacked gradient of an image.

    Attributes
    ----------
    data : np.ndarray
        Vector of length 2n: horizontal components first, vertical second.
    n : int
        Number of pixels.
    """

    data: np.ndarray
    n: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (2 * self.n,):
            raise ShapeError(
                f"Gradient field of {self.n} pixels must have length "
                f"{2 * self.n}, got shape {self.data.shape}."
            )

    @property
    def horizontal(self) -> np.ndarray:
        return self.data[: self.n]

    @property
    def vertical(self) -> np.ndarray:
        return self.data[self.n :]

    @classmethod
    def from_components(cls, horizontal: ArrayLike, vertical: ArrayLike):
        horizontal = np.ravel(horizontal)
        return cls(np.concatenate([horizontal, np.ravel(vertical)]), horizontal.size)


def difference_matrix(length: int, boundary: Union[Boundary, str]) -> sp.csr_array:
    """One-dimensional difference matrix with a replicate boundary."""
    boundary = Boundary(boundary)
    if length == 1:
        return sp.csr_array((1, 1))
    if boundary == Boundary.FORWARD:
        main = -np.ones(length)
        main[-1] = 0.0
        upper = np.ones(length - 1)
        return sp.csr_array(sp.diags([main, upper], [0, 1]))
    upper = 0.5 * np.ones(length - 1)
    lower = -0.5 * np.ones(length - 1)
    main = np.zeros(length)
    main[0] = -0.5
    main[-1] = 0.5
    return sp.csr_array(sp.diags([lower, main, upper], [-1, 0, 1]))


@lru_cache(maxsize=16)
def gradient_operator(
    shape: tuple, boundary: Union[Boundary, str] = Boundary.FORWARD
) -> SparseOperator:
    """Sparse matrix D of shape (2n, n) for an image of the given shape.

    Pixels are flattened row-major, so the horizontal derivative acts along
    the last axis.
    """
    h, w = shape
    boundary = Boundary(boundary)
    d_h = sp.kron(sp.identity(h), difference_matrix(w, boundary))
    d_v = sp.kron(difference_matrix(h, boundary), sp.identity(w))
    return SparseOperator(sp.vstack([d_h, d_v]))


def _check_image(img: ArrayLike, shape: tuple) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.shape == tuple(shape):
        img = img.ravel()
    if img.shape != (shape[0] * shape[1],):
        raise ShapeError(
            f"Image of shape {shape} must have {shape[0] * shape[1]} pixels, "
            f"got shape {img.shape}."
        )
    return img


def gradient(
    img: ArrayLike, shape: tuple, boundary: Union[Boundary, str] = Boundary.FORWARD
) -> GradientField:
    """Discrete gradient Dx of a flat image.

    Parameters
    ----------
    img : ArrayLike
        Flat image of h * w pixels (a (h, w) array is also accepted).
    shape : tuple
        The image shape (h, w).
    boundary : Union[Boundary, str], default=Boundary.FORWARD
        The difference scheme.

    Returns
    -------
    GradientField
        The stacked horizontal and vertical differences.
    """
    img = _check_image(img, shape)
    D = gradient_operator(tuple(shape), Boundary(boundary))
    return GradientField(D.forward(img), img.size)


def gradient_magnitude(g: GradientField) -> np.ndarray:
    """Per-pixel Euclidean norm of the gradient, i.e. |Dx|."""
    return np.hypot(g.horizontal, g.vertical)


def dhat(
    img: ArrayLike, shape: tuple, boundary: Union[Boundary, str] = Boundary.FORWARD
) -> GradientField:
    """Normalized gradient (Dx)_i / |Dx|_i, with both components set to 1/2
    on pixels of zero gradient magnitude."""
    g = gradient(img, shape, boundary)
    mag = gradient_magnitude(g)
    flat = mag == 0.0
    safe = np.where(flat, 1.0, mag)
    h = np.where(flat, 0.5, g.horizontal / safe)
    v = np.where(flat, 0.5, g.vertical / safe)
    return GradientField.from_components(h, v)


def norm21(g: GradientField) -> float:
    """Mixed (2,1)-norm of a gradient field. Equals TV(x) when g = Dx."""
    return float(np.sum(gradient_magnitude(g)))


def total_variation(
    img: ArrayLike, shape: tuple, boundary: Union[Boundary, str] = Boundary.FORWARD
) -> float:
    return norm21(gradient(img, shape, boundary))
