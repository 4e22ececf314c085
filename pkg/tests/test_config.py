from pathlib import Path

import pytest

from svtv.config import RunConfig, parse_config, parse_config_text
from svtv.cp import GapVariant, ProxVariant
from svtv.errors import ConfigError
from svtv.reconstructors import ReconstructorKind

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_defaults():
    config = parse_config_text("# nothing but a comment\n\n")
    assert config == RunConfig()
    assert config.solver.lam == 5.0
    assert config.weights.eta == 2e-5
    assert config.noise.nu == 0.005
    assert config.geometry.build().n_angles == 45


def test_values():
    text = "\n".join(
        [
            "geometry.mode = fan",
            "geometry.image_side = 32",
            "geometry.n_detectors = none",
            "solver.sigma = 0.1",
            "solver.f1_prox_variant = scaled",
            "experiment.eta_sweep = 1e-3, 1e-4",
            "reconstructor.kind = early_tv",
            "reconstructor.max_iter = 20",
        ]
    )
    config = parse_config_text(text)
    assert config.geometry.build().mode.value == "fan"
    assert config.geometry.n_detectors is None
    assert config.experiment.eta_sweep == [1e-3, 1e-4]

    solver = config.solver.build()
    assert solver.sigma == 0.1 and solver.tau is None
    assert solver.f1_prox_variant == ProxVariant.SCALED
    assert solver.gap_sign_variant == GapVariant.TEXTBOOK

    spec = config.reconstructor.build()
    assert spec.kind == ReconstructorKind.EARLY_TV
    assert spec.params == {"lam": 1.0, "max_iter": 20}


def test_invalid_value():
    with pytest.raises(ConfigError) as info:
        parse_config_text("noise.seed = 1\nweights.eta = -1\n")
    assert info.value.key == "weights.eta"
    assert info.value.line == 2

    with pytest.raises(ConfigError) as info:
        parse_config_text("solver.max_iter = many")
    assert info.value.key == "solver.max_iter"
    assert "line 1" in str(info.value)


def test_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError) as info:
        parse_config_text("solver.lam = 1\n\nsolver.lambda = 2\n")
    assert info.value.line == 3 and info.value.key == "solver.lambda"

    with pytest.raises(ConfigError):
        parse_config_text("unknown.key = 1")
    with pytest.raises(ConfigError):
        parse_config_text("solver.lam 1")
    with pytest.raises(ConfigError) as info:
        parse_config_text("noise.nu = 0.1\nnoise.nu = 0.2")
    assert info.value.line == 2


def test_paths(tmp_path):
    (tmp_path / "gt.raw").write_bytes(b"")
    config = parse_config_text("input.ground_truth = gt.raw", tmp_path)
    assert config.input.ground_truth == tmp_path / "gt.raw"

    with pytest.raises(ConfigError) as info:
        parse_config_text("input.sinogram = missing.raw", tmp_path)
    assert info.value.key == "input.sinogram"

    # The output directory need not exist
    config = parse_config_text("output.dir = results/run", tmp_path)
    assert config.output.dir == Path("results/run")


def test_overrides():
    config = RunConfig().with_overrides(seed=7, out="elsewhere")
    assert config.noise.seed == 7
    assert config.output.dir == Path("elsewhere")
    assert RunConfig().noise.seed == 0


def test_presets():
    low = parse_config(CONFIGS / "synthetic_low_noise.cfg")
    assert low.solver.lam == 5.0
    assert low.weights.eta == 2e-5
    assert low.noise.nu == 0.005
    assert low.experiment.fbp_eta is None

    medium = parse_config(CONFIGS / "synthetic_medium_noise.cfg")
    assert medium.solver.lam == 10.0
    assert medium.noise.nu == 0.02
    assert medium.experiment.fbp_eta == 2e-3
    assert medium.experiment.eta_sweep == [2e-3, 2e-4, 2e-5]

    with pytest.raises(ConfigError):
        parse_config(CONFIGS / "missing.cfg")
