"""Command-line interface.

Each subcommand reads its inputs from files, writes its outputs to the
output directory and returns an exit code: 0 on success, 1 on a runtime
error and 2 on an invalid configuration.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Union

import numpy as np

from svtv import __version__
from svtv.config import RunConfig, parse_config
from svtv.cp import ChambollePock, SolverConfig
from svtv.errors import ConfigError, SvtvError
from svtv.experiment import run_experiment
from svtv.io import read_image, write_image
from svtv.metrics import evaluate
from svtv.operators import build_projector, parallel_geometry
from svtv.phantoms import NoiseSpec, make_phantom, preset, simulate_sinogram
from svtv.problem import WeightedTVProblem
from svtv.reconstructors import FBPReconstructor, reconstruct
from svtv.theory import (
    BaseProblem,
    check_dhat_identity,
    check_midpoint_inequality,
    check_objective_bound,
    check_regularizer_agreement,
    check_uniqueness_conditions,
    is_nonincreasing,
    noise_convergence_experiment,
    reconstructor_convergence_experiment,
)
from svtv.weights import (
    WeightParams,
    compute_weights,
    weight_function,
    weight_lipschitz_constant,
)

logger = logging.getLogger("svtv")


def _load_config(args) -> RunConfig:
    config = parse_config(args.config) if args.config else RunConfig()
    return config.with_overrides(seed=args.seed, out=args.out)


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_phantom(args, config: RunConfig) -> None:
    side = config.geometry.image_side
    x = make_phantom(preset(config.phantom.preset, side))
    out = _out_dir(config)
    write_image(out / "phantom.raw", x, (side, side))
    write_image(out / "phantom.pgm", x, (side, side))


def cmd_sinogram(args, config: RunConfig) -> None:
    geom = config.geometry.build()
    x_gt = read_image(args.image).ravel()
    sino = simulate_sinogram(x_gt, build_projector(geom), config.noise.build())
    logger.info("noise norm delta = %.6e", sino.delta)
    write_image(_out_dir(config) / "sinogram.raw", sino.y_delta, geom.sinogram_shape)


def cmd_reconstruct(args, config: RunConfig) -> None:
    geom = config.geometry.build()
    y = read_image(args.sinogram).ravel()
    truth = args.ground_truth or config.input.ground_truth
    x_gt = read_image(truth).ravel() if truth is not None else None
    x_tilde = reconstruct(config.reconstructor.build(), y, geom, x_gt=x_gt)
    out = _out_dir(config)
    write_image(out / "x_tilde.raw", x_tilde, geom.image_shape)
    write_image(out / "x_tilde.pgm", x_tilde, geom.image_shape)


def cmd_weights(args, config: RunConfig) -> None:
    x_tilde = read_image(args.image)
    w = compute_weights(x_tilde.ravel(), x_tilde.shape, config.weights.build())
    out = _out_dir(config)
    write_image(out / "weights.raw", w.w, x_tilde.shape)
    write_image(out / "weights.pgm", w.w, x_tilde.shape)


def cmd_solve(args, config: RunConfig) -> None:
    geom = config.geometry.build()
    K = build_projector(geom)
    y = read_image(args.sinogram).ravel()
    w = read_image(args.weights).ravel() if args.weights else None
    problem = WeightedTVProblem(K, y, geom.image_shape, w, config.solver.lam)
    solver = ChambollePock(config.solver.build(), verbose=args.verbose)
    result = solver.solve(problem)
    logger.info(
        "%d iterations, termination %s, objective %.6e",
        result.iterations,
        result.trace.termination.value,
        result.objective_value,
    )
    out = _out_dir(config)
    write_image(out / "x_star.raw", result.solution, geom.image_shape)
    write_image(out / "x_star.pgm", result.solution, geom.image_shape)
    result.trace.write_csv(out / "trace.csv", with_time=not args.no_timing)


def cmd_metrics(args, config: RunConfig) -> None:
    x = read_image(args.image)
    gt = read_image(args.reference)
    report = evaluate(x.ravel(), gt.ravel(), gt.shape)
    print("re,psnr,ssim")
    print(",".join(report.formatted()))


def _finite_or_none(value: float) -> Union[float, None]:
    """JSON has no infinity; non-finite values are written as null."""
    return float(value) if np.isfinite(value) else None


def theory_suite(config: RunConfig) -> dict:
    """Verification suite on small instances; returns a JSON-ready dict."""
    rng = np.random.default_rng(config.noise.seed)
    report = {}

    # Midpoint inequality of the global TV objective
    geom = parallel_geometry(8, 12)
    K = build_projector(geom)
    y = K.forward(rng.random(K.n_cols))
    midpoint = check_midpoint_inequality(K, y, 1.0, 1000, config.noise.seed)
    report["midpoint"] = {
        "max_violation": midpoint.max_violation,
        "max_scaled_violation": midpoint.max_scaled_violation,
        "n_trials": midpoint.n_trials,
        "holds": midpoint.holds(),
    }

    # Normalized gradient identity
    images = [rng.random(256) for _ in range(100)]
    report["dhat_identity"] = {"max_error": check_dhat_identity(images, (16, 16))}

    # Weight range and Lipschitz constant
    params = config.weights.build()
    alpha = rng.random(100000) * 10.0 * params.eta
    w = weight_function(alpha, params)
    L = weight_lipschitz_constant(params, float(alpha.max()))
    a, b = alpha[:10000], alpha[10000:20000]
    ratios = np.abs(weight_function(a, params) - weight_function(b, params))
    excess = ratios - L * np.abs(a - b)
    report["weights"] = {
        "min": float(w.min()),
        "max": float(w.max()),
        "at_zero": float(weight_function(0.0, params)),
        "lipschitz": L,
        "lipschitz_violations": int(np.sum(excess > 0.0)),
    }

    # Uniqueness conditions at a solver output
    side = 8
    x_gt = make_phantom(preset(config.phantom.preset, side))
    y = K.forward(x_gt)
    problem = WeightedTVProblem(K, y, (side, side), lam=0.1)
    x1 = ChambollePock(config.solver.build()).solve(problem).solution
    uniqueness = check_uniqueness_conditions(K, x1)
    report["uniqueness"] = {
        "cond1_residual": uniqueness.cond1_residual,
        "cond2_min_sv": _finite_or_none(uniqueness.cond2_min_sv),
        "cond1_holds": uniqueness.cond1_holds,
        "cond2_holds": uniqueness.cond2_holds,
        "zero_set_size": uniqueness.zero_set_size,
    }

    # Objective distance bound with FBP weights
    sino = simulate_sinogram(x_gt, K, config.noise.build())
    trials = [rng.random(K.n_cols) for _ in range(10)]
    bound = check_objective_bound(
        K,
        sino.y_delta,
        FBPReconstructor(),
        WeightParams(eta=max(params.eta, 1e-3), p_exp=params.p_exp),
        config.solver.lam,
        trials,
        x_gt,
        geom=geom,
    )
    report["objective_bound"] = {
        "lhs": bound.lhs.tolist(),
        "rhs": bound.rhs.tolist(),
        "violations": bound.n_violations,
        "eta_1": _finite_or_none(bound.quality.eta_p),
        "c_eps": _finite_or_none(bound.quality.c_eps),
    }

    # Regularizer value shared by minimizers reached from two starting points
    small = parallel_geometry(5, 3)
    K_small = build_projector(small)
    x_small = make_phantom(preset(config.phantom.preset, 5))
    noise = NoiseSpec(0.01, config.noise.seed)
    y_small = simulate_sinogram(x_small, K_small, noise).y_delta
    problem = WeightedTVProblem(K_small, y_small, small.image_shape, lam=0.1)
    agreement = check_regularizer_agreement(
        problem,
        np.zeros(K_small.n_cols),
        2.0 * rng.random(K_small.n_cols),
        SolverConfig(lam=0.1, max_iter=20000, eps_J=0.0, eps_x=0.0),
    )
    report["regularizer_agreement"] = {
        "reg_a": agreement.reg_a,
        "reg_b": agreement.reg_b,
        "difference": agreement.difference,
        "tolerance": _finite_or_none(agreement.tolerance),
        "holds": agreement.holds,
    }

    # Convergence with the noise level and with the coarse reconstructor
    base = BaseProblem.preset(
        side=16,
        n_angles=20,
        seed=config.noise.seed,
        lam=config.solver.lam,
        eta=config.weights.eta,
        max_iter=500,
    )
    records = noise_convergence_experiment([0.02, 0.01, 0.005, 0.0025], base)
    distances = [record.distance for record in records]
    report["noise_convergence"] = {
        "nu": [record.parameter for record in records],
        "distance": distances,
        "nonincreasing": is_nonincreasing(distances),
    }
    records = reconstructor_convergence_experiment([1, 2, 4, 8, 16], base)
    distances = [record.distance for record in records]
    hypotheses = [record.hypothesis for record in records]
    report["reconstructor_convergence"] = {
        "k": [record.parameter for record in records],
        "distance": distances,
        "hypothesis": hypotheses,
        "nonincreasing": is_nonincreasing(distances)
        and is_nonincreasing(hypotheses),
    }
    return report


def cmd_theory(args, config: RunConfig) -> None:
    report = theory_suite(config)
    path = _out_dir(config) / "theory.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_experiment(args, config: RunConfig) -> None:
    run_experiment(config)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="configuration file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="noise seed")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="svtv",
        description="Sparse-view CT reconstruction with space-variant weighted TV.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", parents=[common], help="write the phantom preset")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("sinogram", parents=[common], help="simulate a sinogram")
    p.add_argument("image", type=Path)
    p.set_defaults(func=cmd_sinogram)

    p = sub.add_parser("reconstruct", parents=[common], help="coarse reconstruction")
    p.add_argument("sinogram", type=Path)
    p.add_argument("--ground-truth", type=Path, help="ground truth for kind=gt")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("weights", parents=[common], help="weights of a coarse image")
    p.add_argument("image", type=Path)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("solve", parents=[common], help="weighted TV reconstruction")
    p.add_argument("sinogram", type=Path)
    p.add_argument("--weights", type=Path, help="weight map (default: unit)")
    p.add_argument(
        "--no-timing", action="store_true", help="omit wall_ms from the trace"
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("metrics", parents=[common], help="compare two images")
    p.add_argument("image", type=Path)
    p.add_argument("reference", type=Path)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("theory", parents=[common], help="verification suite")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("experiment", parents=[common], help="method comparison")
    p.set_defaults(func=cmd_experiment)
    return parser


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv: Union[list, None] = None) -> int:
    """Run a subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        config = _load_config(args)
        args.func(args, config)
    except ConfigError as e:
        logger.error("invalid configuration: %s", e)
        return 2
    except (SvtvError, OSError, ValueError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1
    return 0


run_command = main


if __name__ == "__main__":
    sys.exit(main())
