"""Image quality metrics: relative error, PSNR, SSIM and the elastic loss."""

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.ndimage import gaussian_filter

from svtv.errors import ShapeError
from svtv.operators import Boundary, gradient, gradient_magnitude

PSNR_CAP = 100.0
SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5
SSIM_WINDOW = 11


def _pair(x: ArrayLike, gt: ArrayLike) -> tuple:
    x = np.asarray(x, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if x.size != gt.size:
        raise ShapeError(f"Images have {x.size} and {gt.size} pixels.")
    return x.ravel(), gt.ravel()


def relative_error(x: ArrayLike, gt: ArrayLike) -> float:
    """Relative error ||x - gt||_2 / ||gt||_2."""
    x, gt = _pair(x, gt)
    gt_norm = np.linalg.norm(gt)
    if gt_norm == 0.0:
        raise ValueError("Relative error is undefined for a zero reference.")
    return float(np.linalg.norm(x - gt) / gt_norm)


def psnr(x: ArrayLike, gt: ArrayLike, peak: float = 1.0) -> float:
    """Peak signal to noise ratio 10 log10(peak^2 / MSE), capped at 100."""
    x, gt = _pair(x, gt)
    mse = float(np.mean((x - gt) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(peak**2 / mse)))


def ssim(
    x: ArrayLike,
    gt: ArrayLike,
    shape: Union[tuple, None] = None,
    peak: float = 1.0,
) -> float:
    """Mean structural similarity with a 11x11 Gaussian window of standard
    deviation 1.5, C1 = (0.01 peak)^2 and C2 = (0.03 peak)^2.

    The local statistics are averaged over the pixels where the window fits
    inside the image.
    """
    x, gt = _pair(x, gt)
    if shape is None:
        side = int(round(np.sqrt(x.size)))
        shape = (side, side)
    if shape[0] * shape[1] != x.size:
        raise ShapeError(f"Shape {shape} does not match {x.size} pixels.")
    if min(shape) < SSIM_WINDOW:
        raise ShapeError(
            f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels."
        )
    x = x.reshape(shape)
    gt = gt.reshape(shape)

    def blur(img):
        return gaussian_filter(img, sigma=SSIM_SIGMA, truncate=SSIM_TRUNCATE)

    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    ux, uy = blur(x), blur(gt)
    vx = blur(x * x) - ux * ux
    vy = blur(gt * gt) - uy * uy
    vxy = blur(x * gt) - ux * uy
    num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2)
    den = (ux * ux + uy * uy + c1) * (vx + vy + c2)
    pad = SSIM_WINDOW // 2
    return float(np.mean((num / den)[pad:-pad, pad:-pad]))


def elastic_loss(
    x_tilde: ArrayLike,
    gt: ArrayLike,
    alpha: float,
    shape: tuple,
    boundary: Boundary = Boundary.FORWARD,
) -> float:
    """alpha || |D gt| - |D x_tilde| ||_2^2 + (1 - alpha) ||gt - x_tilde||_2^2."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1].")
    x_tilde, gt = _pair(x_tilde, gt)
    edges = gradient_magnitude(gradient(gt, shape, boundary)) - gradient_magnitude(
        gradient(x_tilde, shape, boundary)
    )
    diff = gt - x_tilde
    return float(alpha * (edges @ edges) + (1.0 - alpha) * (diff @ diff))


@dataclass
class MetricsReport:
    """Quality of an image against a reference.

    Attributes
    ----------
    re : float
        Relative error.
    psnr : float
        PSNR, capped at 100.
    ssim : float
        Mean SSIM.
    n : int
        Number of pixels.
    notes : list
        Free-form remarks.
    """

    re: float
    psnr: float
    ssim: float
    n: int
    notes: list = field(default_factory=list)

    def formatted(self) -> list:
        """The three metrics as strings, in the order re, psnr, ssim."""
        return [
            format_metric("re", self.re),
            format_metric("psnr", self.psnr),
            format_metric("ssim", self.ssim),
        ]


def format_metric(name: str, value: float) -> str:
    if name == "psnr" and value == PSNR_CAP:
        return f"{value:.2f}"
    return f"{value:.4f}"


def evaluate(
    x: ArrayLike, gt: ArrayLike, shape: Union[tuple, None] = None
) -> MetricsReport:
    """RE, PSNR and SSIM of x against gt."""
    x, gt = _pair(x, gt)
    notes = []
    if np.min(gt) < 0.0 or np.max(gt) > 1.0:
        notes.append("reference outside [0, 1]")
    return MetricsReport(
        re=relative_error(x, gt),
        psnr=psnr(x, gt),
        ssim=ssim(x, gt, shape),
        n=x.size,
        notes=notes,
    )
