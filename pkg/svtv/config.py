"""Run configuration files.

A configuration is a flat text file of `section.key = value` lines. Blank
lines and lines starting with `#` are ignored. Every key is optional and
defaults to the value documented in the section dataclasses below; unknown
keys are rejected.
"""

import logging
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

from svtv.cp import GapVariant, ProxVariant, SolverConfig
from svtv.errors import ConfigError
from svtv.operators import Geometry, GeometryMode, fan_geometry, parallel_geometry
from svtv.phantoms import PRESETS, NoiseSpec
from svtv.reconstructors import ReconstructorKind, ReconstructorSpec
from svtv.weights import WeightParams

logger = logging.getLogger(__name__)


def _check(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(message, key=key)


@dataclass
class GeometrySection:
    mode: str = "parallel"
    image_side: int = 64
    n_angles: int = 45
    n_detectors: Optional[int] = None
    detector_spacing: float = 1.0
    source_origin_dist: Optional[float] = None
    source_detector_dist: Optional[float] = None

    def __post_init__(self):
        _check(
            self.mode in {m.value for m in GeometryMode},
            "geometry.mode",
            "expected 'parallel' or 'fan'",
        )
        _check(self.image_side >= 1, "geometry.image_side", "must be at least 1")
        _check(self.n_angles >= 1, "geometry.n_angles", "must be at least 1")
        _check(
            self.n_detectors is None or self.n_detectors >= 1,
            "geometry.n_detectors",
            "must be at least 1",
        )
        _check(
            self.detector_spacing > 0.0,
            "geometry.detector_spacing",
            "must be strictly positive",
        )

    def build(self) -> Geometry:
        if GeometryMode(self.mode) == GeometryMode.PARALLEL:
            return parallel_geometry(
                self.image_side, self.n_angles, self.n_detectors, self.detector_spacing
            )
        return fan_geometry(
            self.image_side,
            self.n_angles,
            self.n_detectors,
            self.source_origin_dist,
            self.source_detector_dist,
        )


@dataclass
class PhantomSection:
    preset: str = "synthetic-ct"

    def __post_init__(self):
        _check(
            self.preset in PRESETS,
            "phantom.preset",
            f"unknown preset, expected one of {sorted(PRESETS)}",
        )


@dataclass
class InputSection:
    ground_truth: Optional[Path] = None
    sinogram: Optional[Path] = None
    x_tilde: Optional[Path] = None


@dataclass
class NoiseSection:
    nu: float = 0.005
    seed: int = 0

    def __post_init__(self):
        _check(self.nu >= 0.0, "noise.nu", "must be nonnegative")
        _check(self.seed >= 0, "noise.seed", "must be nonnegative")

    def build(self) -> NoiseSpec:
        return NoiseSpec(self.nu, self.seed)


@dataclass
class ReconstructorSection:
    kind: str = "fbp"
    cutoff: float = 1.0
    lam: float = 1.0
    max_iter: int = 100
    path: Optional[Path] = None

    def __post_init__(self):
        _check(
            self.kind in {k.value for k in ReconstructorKind},
            "reconstructor.kind",
            "expected one of gt, fbp, early_tv, file",
        )
        _check(
            0.0 < self.cutoff <= 1.0, "reconstructor.cutoff", "must lie in (0, 1]"
        )
        _check(self.lam > 0.0, "reconstructor.lam", "must be strictly positive")
        _check(self.max_iter >= 1, "reconstructor.max_iter", "must be at least 1")
        _check(
            self.kind != "file" or self.path is not None,
            "reconstructor.path",
            "required by the file reconstructor",
        )

    def build(self) -> ReconstructorSpec:
        kind = ReconstructorKind(self.kind)
        if kind == ReconstructorKind.FBP:
            return ReconstructorSpec(kind, {"cutoff": self.cutoff})
        elif kind == ReconstructorKind.EARLY_TV:
            return ReconstructorSpec(kind, {"lam": self.lam, "max_iter": self.max_iter})
        elif kind == ReconstructorKind.FILE:
            return ReconstructorSpec(kind, {"path": self.path})
        return ReconstructorSpec(kind)


@dataclass
class WeightsSection:
    eta: float = 2e-5
    p: float = 0.5

    def __post_init__(self):
        _check(self.eta > 0.0, "weights.eta", "must be strictly positive")
        _check(0.0 < self.p < 1.0, "weights.p", "must lie in (0, 1)")

    def build(self, eta: Union[float, None] = None) -> WeightParams:
        return WeightParams(eta=self.eta if eta is None else eta, p_exp=self.p)


@dataclass
class SolverSection:
    lam: float = 5.0
    beta: float = 1.0
    sigma: Optional[float] = None
    tau: Optional[float] = None
    max_iter: int = 1000
    eps_J: float = 1e-5
    eps_x: float = 1e-5
    f1_prox_variant: str = "textbook"
    gap_sign_variant: str = "textbook"
    feas_tol: float = 1e-9

    def __post_init__(self):
        _check(self.lam >= 0.0, "solver.lam", "must be nonnegative")
        _check(0.0 <= self.beta <= 1.0, "solver.beta", "must lie in [0, 1]")
        for name in ("sigma", "tau"):
            value = getattr(self, name)
            _check(
                value is None or value > 0.0,
                f"solver.{name}",
                "must be strictly positive",
            )
        _check(self.max_iter >= 1, "solver.max_iter", "must be at least 1")
        _check(self.eps_J >= 0.0, "solver.eps_J", "must be nonnegative")
        _check(self.eps_x >= 0.0, "solver.eps_x", "must be nonnegative")
        _check(
            self.f1_prox_variant in {v.value for v in ProxVariant},
            "solver.f1_prox_variant",
            "expected 'scaled' or 'textbook'",
        )
        _check(
            self.gap_sign_variant in {v.value for v in GapVariant},
            "solver.gap_sign_variant",
            "expected 'flipped' or 'textbook'",
        )
        _check(self.feas_tol >= 0.0, "solver.feas_tol", "must be nonnegative")

    def build(self) -> SolverConfig:
        return SolverConfig(
            lam=self.lam,
            beta=self.beta,
            sigma=self.sigma,
            tau=self.tau,
            max_iter=self.max_iter,
            eps_J=self.eps_J,
            eps_x=self.eps_x,
            f1_prox_variant=ProxVariant(self.f1_prox_variant),
            gap_sign_variant=GapVariant(self.gap_sign_variant),
            feas_tol=self.feas_tol,
        )


@dataclass
class ExperimentSection:
    fbp_eta: Optional[float] = None
    early_tv_iter: int = 100
    eta_sweep: list = field(default_factory=list)

    def __post_init__(self):
        _check(
            self.fbp_eta is None or self.fbp_eta > 0.0,
            "experiment.fbp_eta",
            "must be strictly positive",
        )
        _check(
            self.early_tv_iter >= 1, "experiment.early_tv_iter", "must be at least 1"
        )
        _check(
            all(eta > 0.0 for eta in self.eta_sweep),
            "experiment.eta_sweep",
            "values must be strictly positive",
        )


@dataclass
class OutputSection:
    dir: Path = Path("out")


@dataclass
class RunConfig:
    """Complete configuration of a run, one attribute per section."""

    geometry: GeometrySection = field(default_factory=GeometrySection)
    phantom: PhantomSection = field(default_factory=PhantomSection)
    input: InputSection = field(default_factory=InputSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    reconstructor: ReconstructorSection = field(default_factory=ReconstructorSection)
    weights: WeightsSection = field(default_factory=WeightsSection)
    solver: SolverSection = field(default_factory=SolverSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    output: OutputSection = field(default_factory=OutputSection)

    def with_overrides(
        self, seed: Union[int, None] = None, out: Union[str, Path, None] = None
    ) -> "RunConfig":
        """Copy with the command-line overrides applied."""
        config = self
        if seed is not None:
            config = replace(config, noise=replace(config.noise, seed=seed))
        if out is not None:
            config = replace(config, output=OutputSection(Path(out)))
        return config


def _convert(raw: str, hint, key: str):
    optional = typing.get_origin(hint) is Union and type(None) in typing.get_args(hint)
    if optional:
        if raw.lower() in {"", "none"}:
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    try:
        if hint is bool:
            if raw.lower() not in {"true", "false"}:
                raise ValueError(raw)
            return raw.lower() == "true"
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is list:
            return [float(v) for v in raw.replace(",", " ").split()]
        if hint is Path:
            return Path(raw)
        return raw
    except ValueError:
        name = getattr(hint, "__name__", str(hint))
        raise ConfigError(f"cannot convert {raw!r} to {name}", key=key) from None


def parse_config_text(text: str, base_dir: Union[str, Path] = ".") -> RunConfig:
    """Parse configuration text; relative paths are resolved against
    `base_dir` and must exist."""
    base_dir = Path(base_dir)
    sections = {f.name: f.type for f in fields(RunConfig)}
    hints = typing.get_type_hints(RunConfig)
    values = {name: {} for name in sections}
    lines = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("expected 'section.key = value'", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in sections or not name:
            raise ConfigError("unknown key", key=key, line=lineno)
        section_hints = typing.get_type_hints(hints[section])
        if name not in section_hints:
            raise ConfigError("unknown key", key=key, line=lineno)
        if name in values[section]:
            raise ConfigError("duplicate key", key=key, line=lineno)
        try:
            value = _convert(raw, section_hints[name], key)
        except ConfigError as e:
            raise ConfigError(e.message, key=key, line=lineno) from None
        if isinstance(value, Path) and section != "output":
            value = value if value.is_absolute() else base_dir / value
            if not value.exists():
                raise ConfigError(f"path {value} does not exist", key=key, line=lineno)
        values[section][name] = value
        lines[key] = lineno

    built = {}
    for section, cls in hints.items():
        try:
            built[section] = cls(**values[section])
        except ConfigError as e:
            raise ConfigError(
                e.message,
                key=e.key,
                line=lines.get(e.key),
            ) from None
    config = RunConfig(**built)
    logger.debug("Parsed configuration: %s", config)
    return config


def parse_config(path: Union[str, Path]) -> RunConfig:
    """Parse a configuration file.

    Parameters
    ----------
    path : Union[str, Path]
        The file. Relative paths inside it are resolved against its
        directory.

    Returns
    -------
    RunConfig
        The configuration, defaults filled in.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    return parse_config_text(path.read_text(), path.parent)
