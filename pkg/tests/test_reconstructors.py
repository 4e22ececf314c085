import numpy as np
import pytest

from svtv.cp import SolverConfig, cp_solve
from svtv.errors import GeometryError, ShapeError
from svtv.io import write_image
from svtv.metrics import relative_error
from svtv.operators import build_projector, fan_geometry, identity, parallel_geometry
from svtv.phantoms import PhantomSpec, Shape, ShapeKind, make_phantom, point_spec
from svtv.reconstructors import (
    BlendedReconstructor,
    EarlyTVReconstructor,
    FBPReconstructor,
    FileReconstructor,
    GroundTruthReconstructor,
    ReconstructorKind,
    ReconstructorSpec,
    draw_noise,
    estimate_accuracy,
    estimate_stability,
    fbp,
    ramp_filter,
    rebin_fan,
    reconstruct,
)
from svtv.theory import BaseProblem, is_nonincreasing


def generate_phantoms(side, n_phantoms, seed=0):
    """Random phantoms made of two disks."""
    rng = np.random.default_rng(seed)
    phantoms = []
    for _ in range(n_phantoms):
        shapes = tuple(
            Shape(
                ShapeKind.DISK,
                tuple(0.3 + 0.4 * rng.random(2)),
                (0.1 + 0.1 * rng.random(), 0.0),
                0.2 + 0.8 * rng.random(),
            )
            for _ in range(2)
        )
        phantoms.append(make_phantom(PhantomSpec(side=side, shapes=shapes)))
    return phantoms


def test_ground_truth():
    geom = parallel_geometry(8, 6)
    x_gt = generate_phantoms(8, 1)[0]
    y = np.zeros(geom.n_rays)
    spec = ReconstructorSpec("gt")
    assert np.array_equal(reconstruct(spec, y, geom, x_gt=x_gt), x_gt)
    with pytest.raises(ValueError):
        GroundTruthReconstructor().reconstruct(y)


def test_file(tmp_path):
    geom = parallel_geometry(8, 6)
    x = np.random.default_rng(0).random(64)
    path = tmp_path / "x.raw"
    write_image(path, x, (8, 8))
    spec = ReconstructorSpec(ReconstructorKind.FILE, {"path": path})
    assert np.array_equal(reconstruct(spec, np.zeros(geom.n_rays), geom), x)

    small = tmp_path / "small.raw"
    write_image(small, np.zeros((4, 4)))
    with pytest.raises(ShapeError):
        reconstruct(FileReconstructor(small), np.zeros(geom.n_rays), geom)


def test_early_tv():
    geom = parallel_geometry(8, 6)
    K = build_projector(geom)
    y = K.forward(generate_phantoms(8, 1)[0])
    x_tilde = reconstruct(EarlyTVReconstructor(lam=0.5, max_iter=100), y, geom)
    cfg = SolverConfig(lam=0.5, max_iter=100, eps_J=0.0, eps_x=0.0)
    x_cp, trace = cp_solve(K, y, None, cfg)
    assert len(trace) == 100
    assert np.array_equal(x_tilde, x_cp)


def test_ramp_filter():
    response, n_pad = ramp_filter(45)
    assert n_pad == 128
    assert response[0] == 0.0
    assert abs(response.max() - 1.0) < 1e-15
    assert ramp_filter(10)[1] == 64

    half, _ = ramp_filter(45, cutoff=0.5)
    assert np.all(half[np.abs(np.fft.fftfreq(128)) > 0.25] == 0.0)


def test_fbp_zero():
    geom = parallel_geometry(16, 30)
    assert np.all(fbp(np.zeros(geom.n_rays), geom) == 0.0)


def test_fbp_point():
    side = 32
    geom = parallel_geometry(side, 90)
    K = build_projector(geom)
    x = make_phantom(point_spec(side, 10, 20))
    x_fbp = fbp(K.forward(x), geom, K=K)
    assert np.argmax(x_fbp) == 10 * side + 20
    assert x_fbp.min() >= 0.0


def test_rebin_fan_shape():
    geom = fan_geometry(16, 30)
    sino = np.ones(geom.sinogram_shape)
    rebinned, par = rebin_fan(sino, geom)
    assert par.mode == parallel_geometry(16, 30).mode
    assert par.angles_deg == geom.angles_deg
    assert rebinned.shape == par.sinogram_shape
    assert rebinned.min() >= 0.0 and rebinned.max() <= 1.0 + 1e-12


def test_fbp_fan_point():
    side = 32
    geom = fan_geometry(side, 90)
    K = build_projector(geom)
    row, col = 12, 19
    x = make_phantom(point_spec(side, row, col))
    x_fbp = fbp(K.forward(x), geom, K=K)
    peak = np.unravel_index(np.argmax(x_fbp), (side, side))
    distance = max(abs(peak[0] - row), abs(peak[1] - col))
    assert distance <= 1, peak
    assert x_fbp.min() >= 0.0


def test_fbp_phantom():
    side = 32
    geom = parallel_geometry(side, 90)
    K = build_projector(geom)
    x = generate_phantoms(side, 1)[0]
    x_fbp = fbp(K.forward(x), geom, K=K)
    error = np.linalg.norm(x_fbp - x) / np.linalg.norm(x)
    assert error < 0.5, error


def test_fbp_errors():
    geom = parallel_geometry(8, 6, n_detectors=1)
    with pytest.raises(GeometryError):
        fbp(np.zeros(geom.n_rays), geom)
    geom = parallel_geometry(8, 6)
    with pytest.raises(ValueError):
        fbp(np.zeros(geom.n_rays), geom, cutoff=0.0)
    with pytest.raises(ShapeError):
        fbp(np.zeros(geom.n_rays + 1), geom)
    psi = FBPReconstructor()
    psi.initialize(build_projector(geom))
    with pytest.raises(GeometryError):
        psi.reconstruct(np.zeros(geom.n_rays))


def test_spec_validation():
    with pytest.raises(ValueError):
        ReconstructorSpec("fbp", {"lam": 1.0})
    with pytest.raises(ValueError):
        ReconstructorSpec("early_tv", {"max_iter": 0})
    with pytest.raises(ValueError):
        ReconstructorSpec("file")
    with pytest.raises(ValueError):
        ReconstructorSpec("unknown")
    assert isinstance(ReconstructorSpec("fbp").build(), FBPReconstructor)


def test_blend():
    geom = parallel_geometry(8, 6)
    K = build_projector(geom)
    x_gt = generate_phantoms(8, 1)[0]
    y = K.forward(x_gt)
    x_fbp = fbp(y, geom, K=K)

    psi = BlendedReconstructor(FBPReconstructor(), 1)
    psi.initialize(K, geom)
    assert np.array_equal(psi.reconstruct(y), x_fbp)

    psi = BlendedReconstructor(FBPReconstructor(), 4)
    psi.initialize(K, geom)
    x_blend = psi.with_truth(x_gt).reconstruct(y)
    assert np.allclose(x_blend, 0.75 * x_gt + 0.25 * x_fbp, rtol=0.0, atol=1e-15)

    with pytest.raises(ValueError):
        BlendedReconstructor(FBPReconstructor(), 0.5)


def test_accuracy_ground_truth():
    K = build_projector(parallel_geometry(8, 6))
    samples = generate_phantoms(8, 3)
    assert estimate_accuracy(ReconstructorSpec("gt"), samples, K) == 0.0


def test_accuracy_identity_file(tmp_path):
    x = np.random.default_rng(0).random(16)
    path = tmp_path / "x.raw"
    write_image(path, x, (4, 4))
    spec = ReconstructorSpec("file", {"path": path})
    assert estimate_accuracy(spec, [x], identity(16)) == 0.0


def test_accuracy_fbp():
    geom = parallel_geometry(16, 20)
    K = build_projector(geom)
    samples = generate_phantoms(16, 3)
    for p_norm in [1.0, 2.0]:
        eta_p = estimate_accuracy(FBPReconstructor(), samples, K, p_norm, geom)
        errors = [
            np.linalg.norm(fbp(K.forward(x), geom, K=K) - x, ord=p_norm)
            for x in samples
        ]
        assert abs(eta_p - max(errors)) < 1e-12 * max(errors)


def test_stability_ground_truth():
    K = build_projector(parallel_geometry(8, 6))
    samples = generate_phantoms(8, 2)
    quality = estimate_stability(ReconstructorSpec("gt"), samples, K, n_noise=5)
    assert quality.eta_p == 0.0
    assert quality.c_eps <= 0.0
    assert quality.n_samples == 2 and quality.n_noise == 5


def test_stability_single_draw():
    geom = parallel_geometry(16, 20)
    K = build_projector(geom)
    x = generate_phantoms(16, 1)[0]
    quality = estimate_stability(
        FBPReconstructor(), [x], K, 2.0, epsilon=0.5, n_noise=1, seed=7, geom=geom
    )

    e = draw_noise(np.random.default_rng(7), K.n_rows, 2.0, 0.5)
    assert 0.0 < np.linalg.norm(e) <= 0.5
    eta = np.linalg.norm(fbp(K.forward(x), geom, K=K) - x)
    error = np.linalg.norm(fbp(K.forward(x) + e, geom, K=K) - x)
    expected = (error - eta) / np.linalg.norm(e)
    assert abs(quality.c_eps - expected) < 1e-10, (quality.c_eps, expected)
    assert quality.error_bound(0.0) == quality.eta_p


def test_stability_replay():
    geom = parallel_geometry(16, 20)
    K = build_projector(geom)
    x = generate_phantoms(16, 1)[0]
    y = K.forward(x)
    quality = estimate_stability(
        FBPReconstructor(), [x], K, 2.0, epsilon=0.5, n_noise=100, seed=3, geom=geom
    )

    # The same seed replays the 100 draws of the estimate
    rng = np.random.default_rng(3)
    for _ in range(100):
        e = draw_noise(rng, K.n_rows, 2.0, 0.5)
        error = np.linalg.norm(fbp(y + e, geom, K=K) - x)
        bound = quality.error_bound(np.linalg.norm(e))
        assert error <= bound + 1e-9, (error, bound)

    gt = estimate_stability(ReconstructorSpec("gt"), [x], K, epsilon=0.5)
    psi = GroundTruthReconstructor(x)
    rng = np.random.default_rng(11)
    for _ in range(100):
        e = draw_noise(rng, K.n_rows, 2.0, 0.5)
        error = np.linalg.norm(psi.reconstruct(y + e) - x)
        assert error <= gt.error_bound(np.linalg.norm(e)) + 1e-9


def test_quality_monotone():
    geom = parallel_geometry(16, 20)
    K = build_projector(geom)
    samples = generate_phantoms(16, 4)
    etas = [
        estimate_accuracy(FBPReconstructor(), samples[:k], K, 2.0, geom)
        for k in range(1, 5)
    ]
    assert all(b >= a for a, b in zip(etas, etas[1:])), etas

    constants = [
        estimate_stability(
            FBPReconstructor(), samples[:1], K, epsilon=0.5, n_noise=n, geom=geom
        ).c_eps
        for n in [1, 5, 20]
    ]
    assert all(b >= a for a, b in zip(constants, constants[1:])), constants


def test_early_tv_caps():
    problem = BaseProblem.preset(side=32)
    K, y = problem.K, problem.sinogram()
    errors = []
    for cap in [10, 100, 1000]:
        psi = EarlyTVReconstructor(problem.lam, cap)
        x_tilde = reconstruct(psi, y, problem.geom, K=K)
        errors.append(relative_error(x_tilde, problem.x_gt))
    assert is_nonincreasing(errors, slack=0.05), errors
    assert errors[-1] < errors[0], errors


def test_fbp_worse_than_early_tv():
    # 45 projections of the 64 x 64 phantom
    problem = BaseProblem.preset(side=64, n_angles=45)
    K, y = problem.K, problem.sinogram()
    x_fbp = reconstruct(FBPReconstructor(), y, problem.geom, K=K)
    x_tv = reconstruct(EarlyTVReconstructor(problem.lam, 100), y, problem.geom, K=K)
    re_fbp = relative_error(x_fbp, problem.x_gt)
    re_tv = relative_error(x_tv, problem.x_gt)
    assert re_fbp > re_tv, (re_fbp, re_tv)


def test_stability_validation():
    K = identity(4)
    with pytest.raises(ValueError):
        estimate_stability(ReconstructorSpec("gt"), [np.zeros(4)], K, epsilon=0.0)
    with pytest.raises(ValueError):
        estimate_accuracy(ReconstructorSpec("gt"), [], K)
