"""Tomographic projector built by exact ray-pixel intersection (Siddon)."""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np
import scipy.sparse as sp

from svtv.errors import GeometryError, ProjectorError

from .sparse import SparseOperator

logger = logging.getLogger(__name__)


class GeometryMode(Enum):
    """Acquisition geometry."""

    PARALLEL = "parallel"
    FAN = "fan"


@dataclass(frozen=True)
class Geometry:
    """Two-dimensional acquisition geometry.

    The image is a square grid of `image_side` unit pixels centred on the
    origin. Row 0 is the top row of the image and pixels are flattened in
    row-major order. At angle 0 the rays travel along the horizontal axis and
    the detector is vertical.

    Attributes
    ----------
    mode : GeometryMode
        Parallel or fan beam.
    angles_deg : tuple
        Strictly increasing projection angles in [0, 180).
    n_detectors : int
        Number of detector cells.
    detector_spacing : float
        Cell width, in pixel units.
    image_side : int
        Number of pixels along each side of the image.
    source_origin_dist : float
        Source to rotation centre distance (fan beam only).
    source_detector_dist : float
        Source to detector distance (fan beam only).
    """

    mode: GeometryMode
    angles_deg: tuple
    n_detectors: int
    detector_spacing: float
    image_side: int
    source_origin_dist: float = 0.0
    source_detector_dist: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", GeometryMode(self.mode))
        object.__setattr__(
            self, "angles_deg", tuple(float(a) for a in self.angles_deg)
        )
        self.validate()

    def validate(self) -> None:
        angles = np.asarray(self.angles_deg)
        if angles.size == 0:
            raise GeometryError("At least one projection angle is required.")
        if np.any(angles < 0.0) or np.any(angles >= 180.0):
            raise GeometryError("Projection angles must lie in [0, 180).")
        if np.any(np.diff(angles) <= 0.0):
            raise GeometryError("Projection angles must be strictly increasing.")
        if self.n_detectors < 1:
            raise GeometryError("At least one detector cell is required.")
        if self.detector_spacing <= 0.0:
            raise GeometryError("Detector spacing must be positive.")
        if self.image_side < 1:
            raise GeometryError("Image side must be at least one pixel.")
        if self.mode == GeometryMode.FAN:
            if self.source_origin_dist <= 0.0 or self.source_detector_dist <= 0.0:
                raise GeometryError("Fan beam distances must be positive.")
            if self.source_origin_dist <= self.image_side / np.sqrt(2.0):
                raise GeometryError("The source must lie outside the image.")

    @property
    def n_angles(self) -> int:
        return len(self.angles_deg)

    @property
    def n_rays(self) -> int:
        return self.n_angles * self.n_detectors

    @property
    def n_pixels(self) -> int:
        return self.image_side**2

    @property
    def image_shape(self) -> tuple:
        return (self.image_side, self.image_side)

    @property
    def sinogram_shape(self) -> tuple:
        return (self.n_angles, self.n_detectors)

    def detector_offsets(self) -> np.ndarray:
        """Signed offsets of the detector cell centres."""
        k = np.arange(self.n_detectors, dtype=np.float64)
        return (k - 0.5 * (self.n_detectors - 1)) * self.detector_spacing

    def rays(self) -> tuple:
        """Start points and unit directions of every ray, angle-major.

        Returns
        -------
        origins : np.ndarray
            Array of shape (n_rays, 2) with one point on each ray.
        directions : np.ndarray
            Array of shape (n_rays, 2) with the unit direction of each ray.
        """
        theta = np.deg2rad(np.asarray(self.angles_deg))
        d = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        u = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
        s = self.detector_offsets()
        if self.mode == GeometryMode.PARALLEL:
            origins = s[None, :, None] * u[:, None, :]
            directions = np.broadcast_to(d[:, None, :], origins.shape)
        else:
            source = -self.source_origin_dist * d
            centre = (self.source_detector_dist - self.source_origin_dist) * d
            cells = centre[:, None, :] + s[None, :, None] * u[:, None, :]
            origins = np.broadcast_to(source[:, None, :], cells.shape)
            directions = cells - origins
            directions = directions / np.linalg.norm(
                directions, axis=2, keepdims=True
            )
        return origins.reshape(-1, 2), np.ascontiguousarray(
            directions.reshape(-1, 2)
        )


def parallel_geometry(
    image_side: int,
    n_angles: int = 45,
    n_detectors: Union[int, None] = None,
    detector_spacing: float = 1.0,
) -> Geometry:
    """Parallel beam geometry with `n_angles` equispaced angles in [0, 180).

    By default the detector covers the image diagonal.
    """
    if n_detectors is None:
        n_detectors = int(np.ceil(image_side * np.sqrt(2.0) / detector_spacing))
    angles = np.arange(n_angles) * 180.0 / n_angles
    return Geometry(
        mode=GeometryMode.PARALLEL,
        angles_deg=tuple(angles),
        n_detectors=n_detectors,
        detector_spacing=detector_spacing,
        image_side=image_side,
    )


def fan_geometry(
    image_side: int,
    n_angles: int = 45,
    n_detectors: Union[int, None] = None,
    source_origin_dist: Union[float, None] = None,
    source_detector_dist: Union[float, None] = None,
) -> Geometry:
    """Fan beam geometry with `n_angles` equispaced source angles in [0, 180).

    By default the source sits at twice the image side from the rotation
    centre, the detector is as far on the other side, and its cells are sized
    so that the fan covers the image diagonal.
    """
    if source_origin_dist is None:
        source_origin_dist = 2.0 * image_side
    if source_detector_dist is None:
        source_detector_dist = 2.0 * source_origin_dist
    if n_detectors is None:
        n_detectors = int(np.ceil(image_side * np.sqrt(2.0)))
    magnification = source_detector_dist / source_origin_dist
    angles = np.arange(n_angles) * 180.0 / n_angles
    return Geometry(
        mode=GeometryMode.FAN,
        angles_deg=tuple(angles),
        n_detectors=n_detectors,
        detector_spacing=magnification * image_side * np.sqrt(2.0) / n_detectors,
        image_side=image_side,
        source_origin_dist=source_origin_dist,
        source_detector_dist=source_detector_dist,
    )


def siddon_ray(
    origin: np.ndarray, direction: np.ndarray, side: int, min_length: float = 1e-12
) -> tuple:
    """Exact intersection lengths of a line with the pixels of the grid.

    Parameters
    ----------
    origin : np.ndarray
        A point of the line.
    direction : np.ndarray
        Unit direction of the line.
    side : int
        Number of pixels along each side of the centred unit grid.
    min_length : float, default=1e-12
        Chords shorter than this are discarded.

    Returns
    -------
    cols : np.ndarray
        Flat row-major pixel indices crossed by the line.
    lengths : np.ndarray
        Chord length inside each crossed pixel.
    """
    half = 0.5 * side
    planes = np.arange(side + 1, dtype=np.float64) - half

    # Parametric interval where the line lies inside the grid
    t_min, t_max = -np.inf, np.inf
    crossings = []
    for axis in range(2):
        if direction[axis] == 0.0:
            if not (-half <= origin[axis] <= half):
                return np.empty(0, dtype=np.int64), np.empty(0)
            continue
        t = (planes - origin[axis]) / direction[axis]
        t_min = max(t_min, min(t[0], t[-1]))
        t_max = min(t_max, max(t[0], t[-1]))
        crossings.append(t)
    if not t_max > t_min:
        return np.empty(0, dtype=np.int64), np.empty(0)

    alphas = np.concatenate([[t_min, t_max]] + crossings)
    alphas = np.unique(alphas[(alphas >= t_min) & (alphas <= t_max)])
    lengths = np.diff(alphas)
    keep = lengths > min_length
    mids = 0.5 * (alphas[:-1] + alphas[1:])[keep]
    lengths = lengths[keep]

    px = origin[0] + mids * direction[0]
    py = origin[1] + mids * direction[1]
    j = np.clip(np.floor(px + half).astype(np.int64), 0, side - 1)
    i = np.clip(np.floor(half - py).astype(np.int64), 0, side - 1)
    return i * side + j, lengths


@lru_cache(maxsize=8)
def build_projector(geom: Geometry) -> SparseOperator:
    """Projection matrix of a geometry, one row per ray.

    Row `a * n_detectors + k` holds the exact intersection lengths of the ray
    through the centre of detector cell `k` at angle `a` with every pixel.

    Parameters
    ----------
    geom : Geometry
        The acquisition geometry.

    Returns
    -------
    SparseOperator
        Matrix of shape (n_angles * n_detectors, image_side ** 2).
    """
    side = geom.image_side
    origins, directions = geom.rays()
    indptr = [0]
    indices = []
    data = []
    for origin, direction in zip(origins, directions):
        cols, lengths = siddon_ray(origin, direction, side)
        indices.append(cols)
        data.append(lengths)
        indptr.append(indptr[-1] + cols.size)
    if indptr[-1] == 0:
        raise ProjectorError("empty projector")
    matrix = sp.csr_array(
        (np.concatenate(data), np.concatenate(indices), np.asarray(indptr)),
        shape=(geom.n_rays, geom.n_pixels),
    )
    logger.debug(
        "Projector built: %d rays, %d pixels, %d nonzeros",
        geom.n_rays,
        geom.n_pixels,
        matrix.nnz,
    )
    return SparseOperator(matrix)
