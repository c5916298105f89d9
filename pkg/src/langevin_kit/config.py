"""Experiment configuration: JSON in, typed dataclasses out.

The accepted layout (and every output column order) is documented in the
JSON schema shipped as ``langevin_kit/schemas/config.schema.json``.  Parsing
validates against that schema, converts lists to tuples and computes the
step-size hypothesis flags of the configured sampler.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

import jsonschema
import numpy as np

from .exceptions import ConfigError

__all__ = [
    "TargetSpec",
    "NoiseSpec",
    "SamplerSpec",
    "BoundSpec",
    "Figure1Spec",
    "ValidateSpec",
    "OutputSpec",
    "ExperimentConfig",
    "load_schema",
    "load_config",
    "build_target",
    "build_noise",
]


def load_schema() -> dict:
    text = resources.files("langevin_kit").joinpath("schemas/config.schema.json").read_text()
    return json.loads(text)


def _tuple(x):
    return None if x is None else tuple(float(v) for v in x)


@dataclass(frozen=True)
class TargetSpec:
    kind: str = "isotropic_gaussian"
    m: float = 1.0
    p: int = 2
    curvatures: tuple | None = None
    mean: tuple | None = None
    data_path: str | None = None
    lam: float | None = None
    M2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "curvatures", _tuple(self.curvatures))
        object.__setattr__(self, "mean", _tuple(self.mean))


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    delta: float = 0.0
    sigma: float = 0.0
    batch_size: int = 1


@dataclass(frozen=True)
class SamplerSpec:
    algorithm: str = "lmc"
    schedule: str = "constant"
    h: float | None = None
    K: int = 100
    seed: int = 0
    theta0: tuple | None = None
    stride: int = 1
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        object.__setattr__(self, "theta0", _tuple(self.theta0))
        if isinstance(self.noise, dict):
            object.__setattr__(self, "noise", NoiseSpec(**self.noise))


@dataclass(frozen=True)
class BoundSpec:
    theorems: tuple = ("thm1",)
    epsilon: float | None = None
    W2_0: float | None = None
    constants: str = "statement"

    def __post_init__(self):
        object.__setattr__(self, "theorems", tuple(self.theorems))


@dataclass(frozen=True)
class Figure1Spec:
    m: float = 10.0
    M: float = 20.0
    epsilons: tuple = (0.001, 0.005, 0.02)
    p_min: int = 25
    p_max: int = 1000
    p_step: int = 25

    def __post_init__(self):
        object.__setattr__(self, "epsilons", _tuple(self.epsilons))

    @property
    def p_grid(self) -> list:
        return list(range(self.p_min, self.p_max + 1, self.p_step))


@dataclass(frozen=True)
class ValidateSpec:
    n_chains: int = 256


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"


_SECTIONS = {
    "target": TargetSpec,
    "sampler": SamplerSpec,
    "bound": BoundSpec,
    "figure1": Figure1Spec,
    "validate": ValidateSpec,
    "output": OutputSpec,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one run.

    ``hypotheses`` maps step-size conditions of the configured sampler to
    booleans.  It is derived at load time and excluded from equality and
    serialisation.
    """

    target: TargetSpec = field(default_factory=TargetSpec)
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    bound: BoundSpec = field(default_factory=BoundSpec)
    figure1: Figure1Spec = field(default_factory=Figure1Spec)
    validate: ValidateSpec = field(default_factory=ValidateSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    hypotheses: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, load_schema())
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{path}: {exc.message}") from None
        kwargs = {}
        for name, spec in _SECTIONS.items():
            section = dict(data.get(name, {}))
            if name == "sampler" and "noise" in section:
                section["noise"] = NoiseSpec(**section["noise"])
            kwargs[name] = spec(**section)
        cfg = cls(**kwargs)
        object.__setattr__(cfg, "hypotheses", _hypotheses(cfg))
        return cfg

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "hypotheses":
                continue
            out[f.name] = _listify(asdict(getattr(self, f.name)))
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        return cls.from_dict(data)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        from dataclasses import replace

        cfg = replace(self, sampler=replace(self.sampler, seed=int(seed)))
        object.__setattr__(cfg, "hypotheses", _hypotheses(cfg))
        return cfg


def _listify(obj):
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_listify(v) for v in obj]
    return obj


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return ExperimentConfig.from_json(text)


def build_target(spec: TargetSpec):
    """Instantiate the target described by ``spec``."""
    from .model import DiagonalGaussian, IsotropicGaussian, RidgeLogistic, TargetCertificate

    if spec.kind == "isotropic_gaussian":
        t = IsotropicGaussian(spec.m, spec.p, mu=spec.mean)
    elif spec.kind == "diagonal_gaussian":
        if spec.curvatures is None:
            raise ConfigError("diagonal_gaussian needs curvatures")
        t = DiagonalGaussian(spec.curvatures, spec.mean)
    elif spec.kind == "ridge_logistic":
        if spec.data_path is None or spec.lam is None:
            raise ConfigError("ridge_logistic needs data_path and lam")
        return RidgeLogistic.from_csv(spec.data_path, spec.lam, M2=spec.M2)
    else:  # pragma: no cover - rejected by the schema
        raise ConfigError(f"unknown target kind {spec.kind!r}")
    if spec.M2 is not None:
        c = t.certificate
        t.certificate = TargetCertificate(c.m, c.M, c.p, spec.M2)
    return t


def build_noise(spec: NoiseSpec, target):
    """Instantiate the gradient-noise model, or ``None`` for exact gradients."""
    from .noise import GaussianNoise, StateDependentBias, SubsampledGradient

    if spec.kind == "none":
        return None
    if spec.kind == "gaussian":
        return GaussianNoise.uniform_bias(target.p, spec.delta, spec.sigma)
    if spec.kind == "state_bias":
        return StateDependentBias(target.p, spec.delta, spec.sigma)
    if spec.kind == "subsampled":
        return SubsampledGradient(target, spec.batch_size)
    raise ConfigError(f"unknown noise kind {spec.kind!r}")  # pragma: no cover


def theta0_of(cfg: ExperimentConfig, target) -> np.ndarray:
    if cfg.sampler.theta0 is None:
        return np.zeros(target.p)
    theta0 = np.asarray(cfg.sampler.theta0, dtype=float)
    if theta0.shape != (target.p,):
        raise ConfigError(f"theta0 has length {theta0.size}, target dimension is {target.p}")
    return theta0


def step_size_of(cfg: ExperimentConfig, target) -> float:
    return 1.0 / target.M if cfg.sampler.h is None else cfg.sampler.h


def _hypotheses(cfg: ExperimentConfig) -> dict:
    try:
        target = build_target(cfg.target)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"cannot build target: {exc}") from None
    m, M = target.m, target.M
    s = cfg.sampler
    flags = {}
    if s.algorithm in ("lmc", "nlmc") and s.schedule == "constant":
        h = step_size_of(cfg, target)
        flags["h<2/M"] = h < 2.0 / M
        flags["h<=2/(m+M)"] = h <= 2.0 / (m + M)
    elif s.algorithm in ("lmco", "lmco_prime"):
        h = step_size_of(cfg, target)
        flags["h<=m/M^2"] = h <= m / M**2
        flags["h<=3m/(4M^2)"] = h <= 0.75 * m / M**2
        flags["has_M2"] = target.M2 is not None
    if s.schedule == "theorem2" and s.algorithm != "lmc":
        raise ConfigError("the theorem2 schedule is only available for lmc")
    return flags
