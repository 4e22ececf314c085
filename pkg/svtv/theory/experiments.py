"""Convergence experiments of the weighted TV solutions with respect to the
noise level and to the coarse reconstructor."""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Union

import numpy as np

from svtv.cp import ChambollePock, SolverConfig
from svtv.operators import (
    Boundary,
    Geometry,
    SparseOperator,
    build_projector,
    gradient,
    gradient_magnitude,
    parallel_geometry,
)
from svtv.phantoms import NoiseSpec, make_phantom, simulate_sinogram, synthetic_ct_spec
from svtv.problem import WeightedTVProblem
from svtv.reconstructors import BlendedReconstructor, FBPReconstructor, Reconstructor
from svtv.weights import WeightParams, compute_weights

logger = logging.getLogger(__name__)


@dataclass
class BaseProblem:
    """Ground truth, acquisition and solver settings shared by the runs of an
    experiment.

    Attributes
    ----------
    x_gt : np.ndarray
        Flat ground truth image.
    geom : Geometry
        The acquisition geometry.
    noise : NoiseSpec
        Noise level and seed of the sinogram.
    lam : float
        Regularization parameter.
    params : WeightParams
        Weight parameters.
    config : SolverConfig
        Solver parameters; `config.lam` is overridden by `lam`.
    boundary : Boundary
        The difference scheme.
    """

    x_gt: np.ndarray
    geom: Geometry
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    lam: float = 5.0
    params: WeightParams = field(default_factory=WeightParams)
    config: SolverConfig = field(default_factory=SolverConfig)
    boundary: Boundary = Boundary.FORWARD

    @classmethod
    def preset(
        cls,
        side: int = 32,
        n_angles: int = 45,
        nu: float = 0.005,
        seed: int = 0,
        lam: float = 5.0,
        eta: float = 2e-5,
        max_iter: int = 2000,
    ) -> "BaseProblem":
        """Synthetic phantom problem with parallel beam acquisition."""
        return cls(
            x_gt=make_phantom(synthetic_ct_spec(side)),
            geom=parallel_geometry(side, n_angles),
            noise=NoiseSpec(nu, seed),
            lam=lam,
            params=WeightParams(eta=eta),
            config=SolverConfig(lam=lam, max_iter=max_iter, eps_J=0.0, eps_x=1e-7),
        )

    @cached_property
    def K(self) -> SparseOperator:
        return build_projector(self.geom)

    @property
    def shape(self) -> tuple:
        return self.geom.image_shape

    def sinogram(self, nu: Union[float, None] = None) -> np.ndarray:
        noise = self.noise if nu is None else replace(self.noise, nu=nu)
        return simulate_sinogram(self.x_gt, self.K, noise).y_delta

    def problem(self, y_delta: np.ndarray) -> WeightedTVProblem:
        """Unit weight problem of the sinogram y_delta."""
        return WeightedTVProblem(
            self.K, y_delta, self.shape, None, self.lam, self.boundary
        )

    def solve(self, y_delta: np.ndarray, x_tilde: np.ndarray) -> tuple:
        """Weighted TV solution with weights computed from x_tilde, and the
        number of iterations used."""
        w = compute_weights(x_tilde, self.shape, self.params, self.boundary)
        problem = self.problem(y_delta).with_weights(w)
        result = ChambollePock(replace(self.config, lam=self.lam)).solve(problem)
        return result.solution, result.iterations


@dataclass
class ConvergenceRecord:
    """One run of a convergence experiment.

    Attributes
    ----------
    parameter : float
        The sequence parameter (noise level or blend index).
    distance : float
        l1 distance between the run's solution and the reference solution.
    iterations : int
        Solver iterations of the run.
    hypothesis : float, optional
        l1 distance || |D x_tilde| - |D x_gt| ||_1 for reconstructor runs.
    """

    parameter: float
    distance: float
    iterations: int
    hypothesis: Union[float, None] = None


def noise_convergence_experiment(nus: list, base: BaseProblem) -> list:
    """Distances ||x*_nu - x*_0||_1 between the solutions with ground truth
    weights at relative noise levels `nus` and the noiseless solution.

    Parameters
    ----------
    nus : list
        Decreasing nonnegative relative noise levels.
    base : BaseProblem
        The problem; its noise seed is used for every level.

    Returns
    -------
    list
        One ConvergenceRecord per noise level.
    """
    if any(nu < 0.0 for nu in nus):
        raise ValueError("Noise levels must be nonnegative.")
    if any(b > a for a, b in zip(nus, nus[1:])):
        raise ValueError("Noise levels must be nonincreasing.")

    x_ref, _ = base.solve(base.sinogram(0.0), base.x_gt)
    records = []
    for nu in nus:
        x_nu, iterations = base.solve(base.sinogram(nu), base.x_gt)
        distance = float(np.abs(x_nu - x_ref).sum())
        logger.info("nu = %g: distance %.6e", nu, distance)
        records.append(ConvergenceRecord(nu, distance, iterations))
    return records


def reconstructor_convergence_experiment(
    blend_ks: list,
    base: BaseProblem,
    base_reconstructor: Union[Reconstructor, None] = None,
    nu: Union[float, None] = None,
) -> list:
    """Distances between the solutions with weights from the blended
    reconstructors (1 - 1/k) x_gt + (1/k) psi(y) and the solution with ground
    truth weights.

    Parameters
    ----------
    blend_ks : list
        Increasing blend indices, all at least 1.
    base : BaseProblem
        The problem.
    base_reconstructor : Reconstructor, optional
        The reconstructor psi. Default is None for FBP.
    nu : float, optional
        Relative noise level overriding the one of `base`; 0 gives the
        noiseless stability run.

    Returns
    -------
    list
        One ConvergenceRecord per k, with the hypothesis distance
        || |D psi_k(y)| - |D x_gt| ||_1.
    """
    if any(b <= a for a, b in zip(blend_ks, blend_ks[1:])):
        raise ValueError("Blend indices must be increasing.")
    if base_reconstructor is None:
        base_reconstructor = FBPReconstructor()

    y_delta = base.sinogram(nu)
    x_ref, _ = base.solve(y_delta, base.x_gt)
    gt_edges = gradient_magnitude(gradient(base.x_gt, base.shape, base.boundary))

    records = []
    for k in blend_ks:
        psi = BlendedReconstructor(base_reconstructor, k)
        psi.initialize(base.K, base.geom)
        x_tilde = psi.with_truth(base.x_gt).reconstruct(y_delta)
        edges = gradient_magnitude(gradient(x_tilde, base.shape, base.boundary))
        hypothesis = float(np.abs(edges - gt_edges).sum())
        x_k, iterations = base.solve(y_delta, x_tilde)
        distance = float(np.abs(x_k - x_ref).sum())
        logger.info("k = %g: hypothesis %.6e, distance %.6e", k, hypothesis, distance)
        records.append(ConvergenceRecord(k, distance, iterations, hypothesis))
    return records


def is_nonincreasing(values: list, slack: float = 0.05) -> bool:
    """Whether each value is at most (1 + slack) times the previous one."""
    return all(b <= (1.0 + slack) * a for a, b in zip(values, values[1:]))
