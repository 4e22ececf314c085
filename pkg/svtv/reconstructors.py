"""Coarse reconstructors mapping a sinogram to the image the weights are
computed from, and empirical estimates of their accuracy and stability."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from svtv.cp import SolverConfig, cp_solve
from svtv.errors import GeometryError, ShapeError
from svtv.io import read_image
from svtv.operators import Geometry, GeometryMode, SparseOperator, build_projector

logger = logging.getLogger(__name__)


class Reconstructor(ABC):
    """Base class for coarse reconstructors."""

    def initialize(
        self, operator: SparseOperator, geometry: Union[Geometry, None] = None
    ) -> None:
        """Initialize the reconstructor.

        Parameters
        ----------
        operator : SparseOperator
            The projector the sinograms were acquired with.
        geometry : Geometry, optional
            The acquisition geometry of `operator`.
        """
        self.operator = operator
        self.geometry = geometry
        side = int(round(np.sqrt(operator.n_cols)))
        self.shape = geometry.image_shape if geometry is not None else (side, side)

    def with_truth(self, x_gt: ArrayLike) -> "Reconstructor":
        """Attach the ground truth of the next sinograms. Reconstructors that
        do not use it ignore the call.

        Returns
        -------
        Reconstructor
            The reconstructor itself.
        """
        return self

    @abstractmethod
    def reconstruct(self, y: ArrayLike) -> np.ndarray:
        """Coarse image from a sinogram.

        Parameters
        ----------
        y : ArrayLike
            The sinogram, angle-major.

        Returns
        -------
        np.ndarray
            The flat coarse image.
        """
        pass

    def __call__(self, y: ArrayLike) -> np.ndarray:
        return self.reconstruct(y)


class GroundTruthReconstructor(Reconstructor):
    """Returns the attached ground truth, whatever the sinogram."""

    def __init__(self, x_gt: Union[ArrayLike, None] = None):
        self.x_gt = None
        if x_gt is not None:
            self.with_truth(x_gt)

    def with_truth(self, x_gt: ArrayLike) -> "GroundTruthReconstructor":
        self.x_gt = np.asarray(x_gt, dtype=np.float64).ravel().copy()
        return self

    def reconstruct(self, y: ArrayLike) -> np.ndarray:
        if self.x_gt is None:
            raise ValueError("No ground truth attached to the reconstructor.")
        return self.x_gt.copy()


def ramp_filter(n_detectors: int, cutoff: float = 1.0) -> tuple:
    """Frequency response of the Ram-Lak filter 2|f| on a zero-padded grid.

    Returns
    -------
    response : np.ndarray
        The filter on `n_pad` frequencies, zero above `cutoff` times the
        Nyquist frequency.
    n_pad : int
        The padded length, a power of two at least twice `n_detectors`.
    """
    n_pad = max(64, int(2 ** np.ceil(np.log2(2 * n_detectors))))
    f = np.fft.fftfreq(n_pad)
    response = 2.0 * np.abs(f)
    response[np.abs(f) > 0.5 * cutoff] = 0.0
    return response, n_pad


def filter_sinogram(sino: ArrayLike, cutoff: float = 1.0) -> np.ndarray:
    """Ramp filtering of every detector row of a (n_angles, n_detectors)
    sinogram in the frequency domain."""
    sino = np.asarray(sino, dtype=np.float64)
    n_det = sino.shape[1]
    response, n_pad = ramp_filter(n_det, cutoff)
    spectrum = np.fft.fft(sino, n=n_pad, axis=1) * response[None, :]
    return np.real(np.fft.ifft(spectrum, axis=1))[:, :n_det]


def rebin_fan(sino: ArrayLike, geom: Geometry) -> tuple:
    """Parallel-beam sinogram from fan-beam data.

    Each fan ray is a parallel ray of angle theta + gamma and signed offset t
    from the rotation centre. It is assigned to the nearest angle of `geom`
    (modulo 180 degrees, the offset changing sign across the wrap) and spread
    linearly over the two nearest cells of a detector whose spacing is the
    fan spacing divided by the magnification. Cells no ray reaches are
    interpolated along the detector, zero outside the covered range.

    Returns
    -------
    sino : np.ndarray
        The rebinned (n_angles, n_detectors) sinogram.
    geom : Geometry
        The parallel geometry of the rebinned sinogram.
    """
    magnification = geom.source_detector_dist / geom.source_origin_dist
    par = Geometry(
        mode=GeometryMode.PARALLEL,
        angles_deg=geom.angles_deg,
        n_detectors=geom.n_detectors,
        detector_spacing=geom.detector_spacing / magnification,
        image_side=geom.image_side,
    )
    values = np.asarray(sino, dtype=np.float64).ravel()
    origins, directions = geom.rays()
    theta = np.arctan2(directions[:, 1], directions[:, 0])
    t = -origins[:, 0] * np.sin(theta) + origins[:, 1] * np.cos(theta)

    phi = np.mod(theta, np.pi)
    flipped = np.mod(np.round((theta - phi) / np.pi).astype(int), 2) == 1
    t = np.where(flipped, -t, t)

    angles = np.deg2rad(np.asarray(par.angles_deg))
    extended = np.append(angles, angles[0] + np.pi)
    nearest = np.argmin(np.abs(phi[:, None] - extended[None, :]), axis=1)
    wrapped = nearest == par.n_angles
    nearest[wrapped] = 0
    t[wrapped] = -t[wrapped]

    n_det = par.n_detectors
    cell = t / par.detector_spacing + 0.5 * (n_det - 1)
    lo = np.floor(cell).astype(int)
    frac = cell - lo
    sums = np.zeros(par.sinogram_shape)
    weights = np.zeros(par.sinogram_shape)
    for index, weight in [(lo, 1.0 - frac), (lo + 1, frac)]:
        inside = (index >= 0) & (index < n_det)
        at = (nearest[inside], index[inside])
        np.add.at(sums, at, weight[inside] * values[inside])
        np.add.at(weights, at, weight[inside])

    rebinned = np.zeros(par.sinogram_shape)
    cells = np.arange(n_det)
    for j in range(par.n_angles):
        filled = weights[j] > 1e-12
        if np.any(filled):
            row = sums[j, filled] / weights[j, filled]
            rebinned[j] = np.interp(cells, cells[filled], row, left=0.0, right=0.0)
    return rebinned, par


def fbp(
    y: ArrayLike,
    geom: Geometry,
    cutoff: float = 1.0,
    K: Union[SparseOperator, None] = None,
) -> np.ndarray:
    """Filtered backprojection x = pi / (2 n_angles) K^T (ramp * y), clamped
    to x >= 0.

    Fan-beam data are first rebinned to parallel projections by nearest-angle
    assignment, see `rebin_fan`, and backprojected with the parallel
    projector.

    Parameters
    ----------
    y : ArrayLike
        The sinogram, angle-major.
    geom : Geometry
        The acquisition geometry.
    cutoff : float, default=1.0
        Filter cutoff as a fraction of the Nyquist frequency, in (0, 1].
    K : SparseOperator, optional
        The projector of `geom`. Default is None to build it. Unused for fan
        beam data.

    Returns
    -------
    np.ndarray
        The flat reconstruction.
    """
    if geom.n_detectors < 2:
        raise GeometryError("Filtered backprojection needs at least 2 detectors.")
    if not 0.0 < cutoff <= 1.0:
        raise ValueError("cutoff must lie in (0, 1].")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != geom.n_rays:
        raise ShapeError(f"Sinogram has {y.size} entries, expected {geom.n_rays}.")
    sino = y.reshape(geom.sinogram_shape)
    if geom.mode == GeometryMode.FAN:
        sino, geom = rebin_fan(sino, geom)
        K = build_projector(geom)
    elif K is None:
        K = build_projector(geom)
    filtered = filter_sinogram(sino, cutoff)
    x = np.pi / (2.0 * geom.n_angles) * K.adjoint(filtered.ravel())
    return np.maximum(x, 0.0)


class FBPReconstructor(Reconstructor):
    """Filtered backprojection with a ramp filter cut at `cutoff` times the
    Nyquist frequency."""

    def __init__(self, cutoff: float = 1.0):
        if not 0.0 < cutoff <= 1.0:
            raise ValueError("cutoff must lie in (0, 1].")
        self.cutoff = cutoff

    def reconstruct(self, y: ArrayLike) -> np.ndarray:
        if self.geometry is None:
            raise GeometryError("Filtered backprojection needs a geometry.")
        return fbp(y, self.geometry, self.cutoff, self.operator)


class EarlyTVReconstructor(Reconstructor):
    """Global TV solution after exactly `max_iter` Chambolle-Pock
    iterations."""

    def __init__(self, lam: float = 1.0, max_iter: int = 100):
        if max_iter < 1:
            raise ValueError("max_iter must be at least 1.")
        self.config = SolverConfig(lam=lam, max_iter=max_iter, eps_J=0.0, eps_x=0.0)

    def reconstruct(self, y: ArrayLike) -> np.ndarray:
        x, _ = cp_solve(self.operator, y, None, self.config, shape=self.shape)
        return x


class FileReconstructor(Reconstructor):
    """Reads the coarse image from a file, e.g. the output of an external
    network."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def reconstruct(self, y: ArrayLike) -> np.ndarray:
        img = read_image(self.path)
        if img.size != self.operator.n_cols:
            raise ShapeError(
                f"{self.path} holds {img.size} pixels, expected "
                f"{self.operator.n_cols}."
            )
        return img.ravel().astype(np.float64)


class BlendedReconstructor(Reconstructor):
    """Convex blend (1 - 1/k) x_gt + (1/k) base(y) of the ground truth and a
    base reconstructor. k = 1 gives the base reconstructor."""

    def __init__(self, base: Reconstructor, k: float):
        if k < 1.0:
            raise ValueError("k must be at least 1.")
        self.base = base
        self.k = k
        self.x_gt = None

    def initialize(
        self, operator: SparseOperator, geometry: Union[Geometry, None] = None
    ) -> None:
        super().initialize(operator, geometry)
        self.base.initialize(operator, geometry)

    def with_truth(self, x_gt: ArrayLike) -> "BlendedReconstructor":
        self.x_gt = np.asarray(x_gt, dtype=np.float64).ravel().copy()
        self.base.with_truth(x_gt)
        return self

    def reconstruct(self, y: ArrayLike) -> np.ndarray:
        x_base = self.base.reconstruct(y)
        if self.k == 1.0:
            return x_base
        if self.x_gt is None:
            raise ValueError("No ground truth attached to the reconstructor.")
        return (1.0 - 1.0 / self.k) * self.x_gt + x_base / self.k


class ReconstructorKind(Enum):
    GT = "gt"
    FBP = "fbp"
    EARLY_TV = "early_tv"
    FILE = "file"


_PARAMS = {
    ReconstructorKind.GT: set(),
    ReconstructorKind.FBP: {"cutoff"},
    ReconstructorKind.EARLY_TV: {"lam", "max_iter"},
    ReconstructorKind.FILE: {"path"},
}


@dataclass(frozen=True)
class ReconstructorSpec:
    """Kind of reconstructor and its kind-specific parameters.

    Attributes
    ----------
    kind : ReconstructorKind
        gt, fbp, early_tv or file.
    params : dict
        `cutoff` for fbp, `lam` and `max_iter` for early_tv, `path` for file.
    """

    kind: ReconstructorKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ReconstructorKind(self.kind))
        unknown = set(self.params) - _PARAMS[self.kind]
        if unknown:
            raise ValueError(
                f"Unknown parameters for {self.kind.value}: {sorted(unknown)}."
            )
        if self.kind == ReconstructorKind.EARLY_TV:
            if self.params.get("max_iter", 100) < 1:
                raise ValueError("max_iter must be at least 1.")
        if self.kind == ReconstructorKind.FILE and "path" not in self.params:
            raise ValueError("The file reconstructor needs a path.")

    def build(self) -> Reconstructor:
        if self.kind == ReconstructorKind.GT:
            return GroundTruthReconstructor()
        elif self.kind == ReconstructorKind.FBP:
            return FBPReconstructor(**self.params)
        elif self.kind == ReconstructorKind.EARLY_TV:
            return EarlyTVReconstructor(**self.params)
        else:
            return FileReconstructor(**self.params)


def _as_reconstructor(
    spec: Union[ReconstructorSpec, Reconstructor],
    K: SparseOperator,
    geom: Union[Geometry, None],
) -> Reconstructor:
    psi = spec.build() if isinstance(spec, ReconstructorSpec) else spec
    psi.initialize(K, geom)
    return psi


def reconstruct(
    spec: Union[ReconstructorSpec, Reconstructor],
    y: ArrayLike,
    geom: Geometry,
    x_gt: Union[ArrayLike, None] = None,
    K: Union[SparseOperator, None] = None,
) -> np.ndarray:
    """Coarse image x_tilde = psi(y).

    Parameters
    ----------
    spec : Union[ReconstructorSpec, Reconstructor]
        The reconstructor.
    y : ArrayLike
        The sinogram.
    geom : Geometry
        The acquisition geometry.
    x_gt : ArrayLike, optional
        Ground truth, required by the gt kind.
    K : SparseOperator, optional
        The projector of `geom`. Default is None to build it.

    Returns
    -------
    np.ndarray
        The flat coarse image.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != geom.n_rays:
        raise ShapeError(f"Sinogram has {y.size} entries, expected {geom.n_rays}.")
    if K is None:
        K = build_projector(geom)
    psi = _as_reconstructor(spec, K, geom)
    if x_gt is not None:
        psi.with_truth(x_gt)
    return psi.reconstruct(y)


def _pnorm(v: np.ndarray, p_norm: float) -> float:
    return float(np.linalg.norm(v, ord=p_norm))


def estimate_accuracy(
    spec: Union[ReconstructorSpec, Reconstructor],
    samples: list,
    K: SparseOperator,
    p_norm: float = 2.0,
    geom: Union[Geometry, None] = None,
) -> float:
    """Empirical accuracy max_x ||psi(Kx) - x||_p over the samples, a lower
    bound of the supremum over all images."""
    if len(samples) == 0:
        raise ValueError("At least one sample is required.")
    psi = _as_reconstructor(spec, K, geom)
    eta_p = 0.0
    for x in samples:
        x = np.asarray(x, dtype=np.float64).ravel()
        psi.with_truth(x)
        eta_p = max(eta_p, _pnorm(psi.reconstruct(K.forward(x)) - x, p_norm))
    return eta_p


@dataclass
class ReconstructorQuality:
    """Empirical accuracy and stability constant of a reconstructor.

    Attributes
    ----------
    eta_p : float
        Accuracy max ||psi(Kx) - x||_p over the samples.
    c_eps : float
        Stability constant, the max over samples and noise draws of
        (||psi(Kx + e) - x||_p - eta_p) / ||e||_p.
    p_norm : float
        The norm used.
    epsilon : float
        Bound on ||e||_p.
    n_samples : int
        Number of images.
    n_noise : int
        Number of noise draws per image.
    """

    eta_p: float
    c_eps: float
    p_norm: float
    epsilon: float
    n_samples: int
    n_noise: int

    def error_bound(self, e_norm: float) -> float:
        """Bound eta_p + c_eps ||e||_p on the reconstruction error."""
        return self.eta_p + self.c_eps * e_norm


def draw_noise(
    rng: np.random.Generator, m: int, p_norm: float, epsilon: float
) -> np.ndarray:
    """Gaussian direction rescaled to a p-norm uniform in (0, epsilon]."""
    z = rng.standard_normal(m)
    radius = epsilon * (1.0 - rng.random())
    return radius * z / _pnorm(z, p_norm)


def estimate_stability(
    spec: Union[ReconstructorSpec, Reconstructor],
    samples: list,
    K: SparseOperator,
    p_norm: float = 2.0,
    epsilon: float = 1.0,
    n_noise: int = 10,
    seed: int = 0,
    geom: Union[Geometry, None] = None,
) -> ReconstructorQuality:
    """Empirical accuracy and epsilon-stability constant of a reconstructor.

    Parameters
    ----------
    spec : Union[ReconstructorSpec, Reconstructor]
        The reconstructor.
    samples : list
        Flat images x.
    K : SparseOperator
        The projector.
    p_norm : float, default=2.0
        The norm.
    epsilon : float, default=1.0
        Noise bound, strictly positive.
    n_noise : int, default=10
        Noise draws per image.
    seed : int, default=0
        Seed of the noise draws.
    geom : Geometry, optional
        The acquisition geometry, required by FBP.

    Returns
    -------
    ReconstructorQuality
        Both constants, with the sample counts.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be strictly positive.")
    if n_noise < 1:
        raise ValueError("n_noise must be at least 1.")
    eta_p = estimate_accuracy(spec, samples, K, p_norm, geom)
    psi = _as_reconstructor(spec, K, geom)
    rng = np.random.default_rng(seed)
    c_eps = -np.inf
    for x in samples:
        x = np.asarray(x, dtype=np.float64).ravel()
        psi.with_truth(x)
        y = K.forward(x)
        for _ in range(n_noise):
            e = draw_noise(rng, y.size, p_norm, epsilon)
            error = _pnorm(psi.reconstruct(y + e) - x, p_norm)
            c_eps = max(c_eps, (error - eta_p) / _pnorm(e, p_norm))
    logger.debug("eta_p = %.6e, c_eps = %.6e", eta_p, c_eps)
    return ReconstructorQuality(
        eta_p, float(c_eps), p_norm, epsilon, len(samples), n_noise
    )
