import numpy as np
import pytest
import scipy.linalg

from svtv.cp import ChambollePock, SolverConfig
from svtv.operators import (
    SparseOperator,
    build_projector,
    identity,
    parallel_geometry,
)
from svtv.phantoms import NoiseSpec, make_phantom, preset, simulate_sinogram
from svtv.problem import WeightedTVProblem
from svtv.reconstructors import FBPReconstructor, ReconstructorSpec
from svtv.theory import (
    BaseProblem,
    check_dhat_identity,
    check_midpoint_inequality,
    check_objective_bound,
    check_regularizer_agreement,
    check_uniqueness_conditions,
    gradient_norm_bounds,
    is_nonincreasing,
    noise_convergence_experiment,
    reconstructor_convergence_experiment,
)
from svtv.weights import WeightParams


def generate_acquisition(side, n_angles, nu, seed=0):
    """Synthetic phantom, its projector and a noisy sinogram."""
    geom = parallel_geometry(side, n_angles)
    K = build_projector(geom)
    x_gt = make_phantom(preset("synthetic-ct", side))
    y_delta = simulate_sinogram(x_gt, K, NoiseSpec(nu, seed)).y_delta
    return geom, K, x_gt, y_delta


def test_midpoint_inequality():
    _, K, _, y = generate_acquisition(8, 12, 0.01)
    report = check_midpoint_inequality(K, y, 1.0, n_trials=1000, seed=0)
    assert report.n_trials == 1000
    assert report.holds(), report.max_scaled_violation


def test_midpoint_degenerate_pairs():
    _, K, _, y = generate_acquisition(8, 3, 0.0)
    rng = np.random.default_rng(0)
    x1 = rng.random(64)
    report = check_midpoint_inequality(K, y, 1.0, pairs=[(x1, x1)])
    assert report.max_violation == 0.0

    # Pair differing by a kernel vector of K
    kernel = scipy.linalg.null_space(K.to_dense())
    x2 = x1 + kernel @ rng.standard_normal(kernel.shape[1])
    report = check_midpoint_inequality(K, y, 1.0, pairs=[(x1, x2)])
    assert report.holds(), report.max_scaled_violation


def test_dhat_identity():
    rng = np.random.default_rng(0)
    images = [rng.random(256) for _ in range(1000)]
    assert check_dhat_identity(images, (16, 16)) <= 1e-12
    assert check_dhat_identity([np.full(256, 0.4)], (16, 16)) == 0.0

    # A single zero-gradient pixel, the forward scheme's bottom right corner
    ramp = np.arange(16.0) ** 2
    assert check_dhat_identity([ramp], (4, 4)) <= 1e-15


def test_uniqueness_identity():
    rng = np.random.default_rng(0)
    report = check_uniqueness_conditions(identity(9), rng.random(9))
    assert report.cond1_holds and report.cond2_holds
    assert report.cond2_min_sv > 0.0
    assert report.zero_set_size == 1


def test_uniqueness_two_pixels():
    x1 = np.ones(2)
    K = SparseOperator(np.array([[1.0, -1.0]]))
    report = check_uniqueness_conditions(K, x1, shape=(1, 2))
    assert report.zero_set_size == 2
    assert not report.cond2_holds, report.cond2_min_sv

    K = SparseOperator(np.array([[1.0, 0.0]]))
    report = check_uniqueness_conditions(K, x1, shape=(1, 2))
    assert report.cond2_holds
    assert abs(report.cond2_min_sv - 1.0 / np.sqrt(2.0)) < 1e-12


def test_uniqueness_solver_output():
    geom, K, x_gt, _ = generate_acquisition(8, 12, 0.0)
    problem = WeightedTVProblem(K, K.forward(x_gt), geom.image_shape, lam=0.1)
    config = SolverConfig(lam=0.1, max_iter=2000, eps_J=0.0, eps_x=1e-8)
    x1 = ChambollePock(config).solve(problem).solution
    report = check_uniqueness_conditions(K, x1)
    assert report.cond1_residual >= 0.0
    assert isinstance(report.cond2_holds, bool)

    with pytest.raises(ValueError):
        check_uniqueness_conditions(identity(441), np.zeros(441))


def test_gradient_norm_bounds():
    lower, upper = gradient_norm_bounds((4, 4))
    assert abs(lower - (2.0 + np.sqrt(2.0))) < 1e-12, lower
    assert upper == 4.0
    lower, upper = gradient_norm_bounds((6, 5), "central")
    assert 0.0 < lower <= upper


def test_objective_bound_ground_truth():
    geom, K, x_gt, y = generate_acquisition(12, 10, 0.01)
    rng = np.random.default_rng(0)
    trials = [rng.random(144) for _ in range(5)]
    psi = ReconstructorSpec("gt")
    params = WeightParams(eta=1e-3)
    report = check_objective_bound(K, y, psi, params, 5.0, trials, x_gt, geom)
    assert np.all(report.lhs == 0.0)
    assert report.n_violations == 0


def test_objective_bound_fbp():
    geom, K, x_gt, y = generate_acquisition(12, 10, 0.01)
    rng = np.random.default_rng(0)
    trials = [rng.random(144) for _ in range(10)]
    params = WeightParams(eta=1e-3)
    report = check_objective_bound(
        K, y, FBPReconstructor(), params, 5.0, trials, x_gt, geom
    )
    assert report.n_violations == 0
    assert np.all(report.lhs > 0.0)
    assert report.noise_norm > 0.0

    doubled = check_objective_bound(
        K, y, FBPReconstructor(), params, 10.0, trials, x_gt, geom
    )
    assert np.allclose(doubled.lhs, 2.0 * report.lhs, rtol=1e-14, atol=0.0)
    assert np.allclose(doubled.rhs, 2.0 * report.rhs, rtol=1e-14, atol=0.0)


def test_regularizer_agreement():
    geom, K, x_gt, y = generate_acquisition(5, 3, 0.01)
    problem = WeightedTVProblem(K, y, geom.image_shape, lam=0.1)
    config = SolverConfig(lam=0.1, max_iter=20000, eps_J=0.0, eps_x=0.0)
    rng = np.random.default_rng(0)
    report = check_regularizer_agreement(
        problem, np.zeros(25), 2.0 * rng.random(25), config
    )
    assert report.holds, (report.difference, report.tolerance)


def test_noise_experiment_reference():
    base = BaseProblem.preset(side=12, n_angles=10, max_iter=300)
    records = noise_convergence_experiment([0.0], base)
    assert records[0].distance == 0.0

    again = noise_convergence_experiment([0.0], base)
    assert again == records

    with pytest.raises(ValueError):
        noise_convergence_experiment([0.01, 0.02], base)
    with pytest.raises(ValueError):
        noise_convergence_experiment([-0.01], base)


def test_noise_experiment_trend():
    base = BaseProblem.preset(side=32)
    records = noise_convergence_experiment([0.02, 0.01, 0.005, 0.0025], base)
    distances = [record.distance for record in records]
    assert is_nonincreasing(distances, slack=0.05), distances
    assert distances[-1] < distances[0]


def test_reconstructor_experiment():
    base = BaseProblem.preset(side=32)
    records = reconstructor_convergence_experiment([1, 2, 4, 8, 16], base)
    assert [record.parameter for record in records] == [1, 2, 4, 8, 16]
    distances = [record.distance for record in records]
    hypotheses = [record.hypothesis for record in records]
    assert is_nonincreasing(distances, slack=0.05), distances
    assert is_nonincreasing(hypotheses, slack=0.05), hypotheses
    assert distances[-1] < 0.25 * distances[0], distances


def test_reconstructor_experiment_limits():
    base = BaseProblem.preset(side=16, n_angles=20, eta=0.05, max_iter=2000)
    records = reconstructor_convergence_experiment([1, 1e6], base)
    assert records[-1].hypothesis <= 1e-4 * 256
    assert records[-1].distance < records[0].distance

    noiseless = reconstructor_convergence_experiment([1, 1e6], base, nu=0.0)
    assert noiseless[-1].distance < noiseless[0].distance

    with pytest.raises(ValueError):
        reconstructor_convergence_experiment([4, 2], base)
