"""Synthetic phantoms and simulated noisy sinograms."""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from svtv.errors import ShapeError
from svtv.operators import SparseOperator

logger = logging.getLogger(__name__)


class ShapeKind(Enum):
    DISK = "disk"
    RECT = "rect"
    CROSS = "cross"
    RING = "ring"


@dataclass(frozen=True)
class Shape:
    """Geometric object of a phantom.

    Coordinates are relative to the image side: `center` is (row, col) in
    [0, 1]^2. For disks and rings `size` is (radius, inner radius); for
    rectangles it is (half height, half width); for crosses it is (half
    length, half thickness).
    """

    kind: ShapeKind
    center: tuple
    size: tuple
    intensity: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ShapeKind(self.kind))

    def mask(self, side: int) -> np.ndarray:
        rows, cols = np.mgrid[0:side, 0:side]
        # Pixel centres in relative coordinates
        r = (rows + 0.5) / side - self.center[0]
        c = (cols + 0.5) / side - self.center[1]
        if self.kind == ShapeKind.DISK:
            return r**2 + c**2 <= self.size[0] ** 2
        if self.kind == ShapeKind.RING:
            rho2 = r**2 + c**2
            return (rho2 <= self.size[0] ** 2) & (rho2 >= self.size[1] ** 2)
        if self.kind == ShapeKind.RECT:
            return (np.abs(r) <= self.size[0]) & (np.abs(c) <= self.size[1])
        length, thickness = self.size
        vertical = (np.abs(r) <= length) & (np.abs(c) <= thickness)
        horizontal = (np.abs(c) <= length) & (np.abs(r) <= thickness)
        return vertical | horizontal


@dataclass(frozen=True)
class PhantomSpec:
    """Phantom description. Later shapes overwrite earlier ones."""

    side: int
    shapes: tuple = ()
    background: float = 0.0

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("Phantom side must be at least one pixel.")
        if not 0.0 <= self.background <= 1.0:
            raise ValueError("Background intensity must lie in [0, 1].")
        for s in self.shapes:
            if not 0.0 <= s.intensity <= 1.0:
                raise ValueError("Shape intensities must lie in [0, 1].")
            if not all(0.0 <= x <= 1.0 for x in s.center):
                raise ValueError("Shape centres must lie inside the grid.")


def make_phantom(spec: PhantomSpec) -> np.ndarray:
    """Rasterize a phantom into a flat image of side ** 2 pixels."""
    img = np.full((spec.side, spec.side), float(spec.background))
    for shape in spec.shapes:
        img[shape.mask(spec.side)] = shape.intensity
    return img.ravel()


def synthetic_ct_spec(side: int = 64) -> PhantomSpec:
    """Preset with homogeneous masses, a high-density disk and objects with
    very thin edges."""
    thin = max(0.5 / side, 0.008)
    shapes = (
        Shape(ShapeKind.DISK, (0.5, 0.5), (0.42, 0.0), 0.2),
        Shape(ShapeKind.RECT, (0.32, 0.32), (0.08, 0.1), 0.45),
        Shape(ShapeKind.DISK, (0.65, 0.3), (0.09, 0.0), 0.55),
        Shape(ShapeKind.RING, (0.35, 0.68), (0.11, 0.07), 0.6),
        Shape(ShapeKind.DISK, (0.7, 0.7), (0.06, 0.0), 1.0),
        Shape(ShapeKind.CROSS, (0.5, 0.52), (0.09, thin), 0.8),
    )
    return PhantomSpec(side=side, shapes=shapes, background=0.0)


def point_spec(side: int, row: int, col: int, intensity: float = 1.0) -> PhantomSpec:
    """Single-pixel phantom."""
    centre = ((row + 0.5) / side, (col + 0.5) / side)
    return PhantomSpec(
        side=side,
        shapes=(Shape(ShapeKind.RECT, centre, (0.49 / side, 0.49 / side), intensity),),
    )


PRESETS = {
    "synthetic-ct": synthetic_ct_spec,
}


def preset(name: str, side: int) -> PhantomSpec:
    if name not in PRESETS:
        raise ValueError(
            f"Unknown phantom preset '{name}'. Available: {sorted(PRESETS)}."
        )
    return PRESETS[name](side)


@dataclass(frozen=True)
class NoiseSpec:
    """Relative noise level nu and RNG seed.

    The noise is drawn from numpy's PCG64 bit generator seeded with `seed`,
    using `Generator.standard_normal` (ziggurat sampler).
    """

    nu: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.nu < 0.0:
            raise ValueError("Noise level nu must be nonnegative.")


@dataclass
class SimulatedSinogram:
    """Output of `simulate_sinogram`.

    Attributes
    ----------
    y_delta : np.ndarray
        Noisy sinogram.
    delta : float
        Noise norm nu * ||y||_2.
    y : np.ndarray
        Noiseless sinogram.
    zero_signal : bool
        Whether the noiseless sinogram vanished while noise was requested.
    """

    y_delta: np.ndarray
    delta: float
    y: np.ndarray = field(repr=False)
    zero_signal: bool = False

    def __iter__(self):
        return iter((self.y_delta, self.delta))


def noise_direction(m: int, seed: int) -> np.ndarray:
    """Unit-norm standard normal direction z / ||z||_2."""
    z = np.random.default_rng(seed).standard_normal(m)
    return z / np.linalg.norm(z)


def simulate_sinogram(
    x_gt: np.ndarray, K: SparseOperator, noise: NoiseSpec
) -> SimulatedSinogram:
    """Simulate y = K x and y_delta = y + e with e = nu ||y|| z / ||z||.

    Parameters
    ----------
    x_gt : np.ndarray
        Flat ground truth image.
    K : SparseOperator
        The projector.
    noise : NoiseSpec
        Noise level and seed.

    Returns
    -------
    SimulatedSinogram
        Unpacks as (y_delta, delta).
    """
    x_gt = np.asarray(x_gt, dtype=np.float64).ravel()
    if x_gt.size != K.n_cols:
        raise ShapeError(
            f"Image has {x_gt.size} pixels, projector expects {K.n_cols}."
        )
    y = K.forward(x_gt)
    y_norm = float(np.linalg.norm(y))
    if noise.nu == 0.0:
        return SimulatedSinogram(y.copy(), 0.0, y)
    if y_norm == 0.0:
        logger.warning("Noiseless sinogram is zero: no noise added.")
        return SimulatedSinogram(y.copy(), 0.0, y, zero_signal=True)
    delta = noise.nu * y_norm
    e = delta * noise_direction(y.size, noise.seed)
    return SimulatedSinogram(y + e, delta, y)
