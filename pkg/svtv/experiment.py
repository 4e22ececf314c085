"""Comparison of the weighted TV reconstructions obtained with different
coarse reconstructors against the global TV reconstruction."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from svtv.config import RunConfig
from svtv.cp import ChambollePock
from svtv.io import read_image, write_image
from svtv.metrics import MetricsReport, evaluate
from svtv.operators import Geometry, SparseOperator, build_projector
from svtv.phantoms import make_phantom, preset, simulate_sinogram
from svtv.problem import WeightedTVProblem
from svtv.reconstructors import (
    EarlyTVReconstructor,
    FBPReconstructor,
    GroundTruthReconstructor,
    Reconstructor,
)
from svtv.solver import SolverTrace
from svtv.weights import WeightMap, WeightParams, compute_weights, unit_weights

logger = logging.getLogger(__name__)

METHODS = ["GT-Wl1", "FBP-Wl1", "TV-Wl1", "TV"]
TABLE_COLUMNS = [
    "method",
    "re_tilde",
    "psnr_tilde",
    "ssim_tilde",
    "re",
    "psnr",
    "ssim",
]


@dataclass
class Acquisition:
    """Ground truth and sinogram of a run."""

    x_gt: np.ndarray
    y_delta: np.ndarray
    geom: Geometry
    K: SparseOperator

    @property
    def shape(self) -> tuple:
        return self.geom.image_shape


def load_acquisition(config: RunConfig) -> Acquisition:
    """Ground truth from the input file or the phantom preset, sinogram from
    the input file or simulated with the configured noise."""
    geom = config.geometry.build()
    K = build_projector(geom)
    if config.input.ground_truth is not None:
        x_gt = read_image(config.input.ground_truth).ravel()
    else:
        x_gt = make_phantom(preset(config.phantom.preset, geom.image_side))
    if config.input.sinogram is not None:
        y_delta = read_image(config.input.sinogram).ravel()
    else:
        y_delta = simulate_sinogram(x_gt, K, config.noise.build()).y_delta
    return Acquisition(x_gt, y_delta, geom, K)


@dataclass
class MethodResult:
    """Outcome of one reconstruction method.

    Attributes
    ----------
    name : str
        Method label.
    x_tilde : np.ndarray, optional
        Coarse image; None for global TV.
    weights : WeightMap
        Weights of the regularizer.
    x_star : np.ndarray
        Solver output.
    tilde_report : MetricsReport, optional
        Metrics of the coarse image.
    star_report : MetricsReport
        Metrics of the solver output.
    trace : SolverTrace
        Solver trace, with relative errors against the ground truth.
    """

    name: str
    x_tilde: Union[np.ndarray, None]
    weights: WeightMap
    x_star: np.ndarray
    tilde_report: Union[MetricsReport, None]
    star_report: MetricsReport
    trace: SolverTrace

    def row(self) -> list:
        if self.tilde_report is None:
            tilde = ["", "", ""]
        else:
            tilde = self.tilde_report.formatted()
        return [self.name] + tilde + self.star_report.formatted()


def solve_weighted(
    config: RunConfig,
    acq: Acquisition,
    x_tilde: Union[np.ndarray, None],
    params: WeightParams,
    source: str,
) -> tuple:
    """Weights from x_tilde (unit weights if None) and the solver output."""
    if x_tilde is None:
        w = unit_weights(acq.K.n_cols, source)
    else:
        w = compute_weights(x_tilde, acq.shape, params, source=source)
    problem = WeightedTVProblem(acq.K, acq.y_delta, acq.shape, w, config.solver.lam)
    result = ChambollePock(config.solver.build()).solve(problem, reference=acq.x_gt)
    logger.info(
        "%s: %d iterations, termination %s",
        source,
        result.iterations,
        result.trace.termination.value,
    )
    return w, result


def run_method(
    name: str,
    psi: Union[Reconstructor, None],
    config: RunConfig,
    acq: Acquisition,
    params: WeightParams,
) -> MethodResult:
    x_tilde = None
    tilde_report = None
    if psi is not None:
        psi.initialize(acq.K, acq.geom)
        x_tilde = psi.with_truth(acq.x_gt).reconstruct(acq.y_delta)
        tilde_report = evaluate(x_tilde, acq.x_gt, acq.shape)
    w, result = solve_weighted(config, acq, x_tilde, params, name)
    return MethodResult(
        name,
        x_tilde,
        w,
        result.solution,
        tilde_report,
        evaluate(result.solution, acq.x_gt, acq.shape),
        result.trace,
    )


def compare_methods(config: RunConfig, acq: Acquisition) -> list:
    """Run the four methods in table order: ground truth, FBP and early
    stopped TV weights, then global TV."""
    params = config.weights.build()
    fbp_params = config.weights.build(config.experiment.fbp_eta)
    psis = {
        "GT-Wl1": (GroundTruthReconstructor(), params),
        "FBP-Wl1": (FBPReconstructor(config.reconstructor.cutoff), fbp_params),
        "TV-Wl1": (
            EarlyTVReconstructor(config.solver.lam, config.experiment.early_tv_iter),
            params,
        ),
        "TV": (None, params),
    }
    results = []
    for name in METHODS:
        psi, weight_params = psis[name]
        results.append(run_method(name, psi, config, acq, weight_params))
    return results


def eta_sweep(
    config: RunConfig,
    acq: Acquisition,
    psi: Reconstructor,
    etas: list,
) -> list:
    """Metrics of the weighted TV solution for each eta, the weights being
    computed from psi(y_delta).

    Returns
    -------
    list
        Pairs (eta, MetricsReport).
    """
    psi.initialize(acq.K, acq.geom)
    x_tilde = psi.with_truth(acq.x_gt).reconstruct(acq.y_delta)
    reports = []
    for eta in etas:
        params = config.weights.build(eta)
        _, result = solve_weighted(config, acq, x_tilde, params, f"eta={eta:g}")
        reports.append((eta, evaluate(result.solution, acq.x_gt, acq.shape)))
    return reports


def write_table(path: Path, results: list) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TABLE_COLUMNS)
        for result in results:
            writer.writerow(result.row())


def write_curves(path: Path, results: list) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["method", "iter", "objective", "re"])
        for result in results:
            for record in result.trace.records:
                writer.writerow(
                    [
                        result.name,
                        record["iter"],
                        repr(float(record["objective"])),
                        repr(float(record["re"])),
                    ]
                )


def write_eta_sweep(path: Path, reports: list) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["eta", "re", "psnr", "ssim"])
        for eta, report in reports:
            writer.writerow([repr(float(eta))] + report.formatted())


def _image_name(method: str) -> str:
    return method.lower().replace("-", "_")


def run_experiment(config: RunConfig) -> list:
    """Run the comparison and write its artifacts to `config.output.dir`:
    `table.csv`, `curves.csv`, the ground truth, and for every method the
    coarse image, the weight map and the reconstruction as PGM images, plus
    `eta_sweep.csv` when `experiment.eta_sweep` is set.

    Returns
    -------
    list
        One MethodResult per method, in table order.
    """
    out = Path(config.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    acq = load_acquisition(config)
    results = compare_methods(config, acq)

    write_table(out / "table.csv", results)
    write_curves(out / "curves.csv", results)
    write_image(out / "ground_truth.pgm", acq.x_gt, acq.shape)
    for result in results:
        stem = _image_name(result.name)
        if result.x_tilde is not None:
            write_image(out / f"{stem}_x_tilde.pgm", result.x_tilde, acq.shape)
        write_image(out / f"{stem}_weights.pgm", result.weights.w, acq.shape)
        write_image(out / f"{stem}_x_star.pgm", result.x_star, acq.shape)

    if config.experiment.eta_sweep:
        psi = config.reconstructor.build().build()
        reports = eta_sweep(config, acq, psi, config.experiment.eta_sweep)
        write_eta_sweep(out / "eta_sweep.csv", reports)

    for result in results:
        logger.info(
            "%-8s re %s psnr %s ssim %s",
            result.name,
            *result.star_report.formatted(),
        )
    return results
