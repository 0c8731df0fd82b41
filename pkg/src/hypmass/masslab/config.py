"""Experiment configuration: YAML file -> validated :class:`ExperimentConfig`."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from ..mass.functional import AsymptoticData, sample_domain, working_chart
from ..mass.quadrature import QuadratureOrders
from ..models import DomainSpec, convert_coords
from ..tensors import hyperbolic_metric
from .families import FAMILIES, build_family

SUITES = ("models", "tensors", "spinors", "mass")
MUTATIONS = ("flip-normal", "flip-conormal", "flip-hemisphere-normal")
SWEEP_AXES = ("sigma", "amplitude", "radius-order")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class PerturbationConfig:
    family: str = "conformal-decay"
    amplitude: float = 0.01
    sigma: float = 5.0
    params: dict = field(default_factory=dict)

    def as_params(self) -> dict:
        out = dict(self.params)
        out["amplitude"] = self.amplitude
        out["sigma"] = self.sigma
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 4
    domain_kind: str = "equidistant"
    domain_parameter: float = 0.5
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    polar: int = 16
    azimuthal: int = 32
    grading: float = 0.25
    r0: float = 2.0
    levels: int = 5
    radii: Optional[tuple] = None
    seed: int = 0
    threads: int = 1
    out_dir: str = "masslab-out"
    out_format: str = "csv"
    suites: tuple = SUITES
    mutations: tuple = ()
    tags: tuple = ()
    sweep_axis: str = "sigma"
    sweep_values: Optional[tuple] = None

    @property
    def domain(self) -> DomainSpec:
        return DomainSpec(self.domain_kind, self.domain_parameter)

    @property
    def orders(self) -> QuadratureOrders:
        return QuadratureOrders(self.polar, self.azimuthal, self.grading)

    @property
    def radius_schedule(self) -> list[float]:
        if self.radii is not None:
            return [float(r) for r in self.radii]
        return [self.r0 * 2.0**k for k in range(self.levels + 1)]

    def data(self, perturbation: Optional[PerturbationConfig] = None) -> AsymptoticData:
        pc = perturbation or self.perturbation
        data = build_family(pc.family, self.domain, self.n, pc.as_params(), self.seed)
        return replace(data, r0=self.r0)

    def to_dict(self) -> dict:
        """Fully explicit record of every setting (written next to the outputs)."""
        dom_key = "s" if self.domain_kind == "equidistant" else "chi"
        return {
            "dimension": self.n,
            "seed": self.seed,
            "threads": self.threads,
            "domain": {"kind": self.domain_kind, dom_key: self.domain_parameter},
            "perturbation": {"family": self.perturbation.family, "amplitude": self.perturbation.amplitude,
                             "sigma": self.perturbation.sigma, **_plain(self.perturbation.params)},
            "quadrature": {"polar": self.polar, "azimuthal": self.azimuthal, "grading": self.grading},
            "radii": list(self.radii) if self.radii is not None else {"r0": self.r0, "levels": self.levels},
            "suites": list(self.suites),
            "mutations": list(self.mutations),
            "tags": list(self.tags),
            "sweep": {"axis": self.sweep_axis,
                      "values": list(self.sweep_values) if self.sweep_values is not None else None},
            "output": {"dir": self.out_dir, "format": self.out_format},
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _number(section: dict, key: str, default, kind=float):
    val = section.get(key, default)
    if val is None:
        return None
    try:
        out = kind(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must be a {kind.__name__}, got {val!r}") from None
    if kind is float and not math.isfinite(out):
        raise ConfigError(f"{key!r} must be finite")
    return out


_TOP_KEYS = {"dimension", "seed", "threads", "domain", "perturbation", "quadrature", "radii", "suites",
             "mutations", "tags", "sweep", "output"}


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    _expect(isinstance(raw, dict), "configuration must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    _expect(not unknown, f"unknown configuration keys: {sorted(unknown)}")
    n = _number(raw, "dimension", 4, int)

    dom = raw.get("domain", {}) or {}
    _expect(isinstance(dom, dict), "'domain' must be a mapping")
    kind = dom.get("kind", "equidistant")
    _expect(kind in ("equidistant", "horoball", "horoball-complement"), f"unknown domain kind {kind!r}")
    if kind == "equidistant":
        param = _number(dom, "s", 0.5)
    else:
        param = _number(dom, "chi", 1.0)

    pert = raw.get("perturbation", {}) or {}
    _expect(isinstance(pert, dict), "'perturbation' must be a mapping")
    family = pert.get("family", "conformal-decay")
    _expect(family in FAMILIES, f"unknown perturbation family {family!r}; expected one of {list(FAMILIES)}")
    extra = {k: v for k, v in pert.items() if k not in ("family", "amplitude", "sigma")}
    pc = PerturbationConfig(family, _number(pert, "amplitude", 0.01), _number(pert, "sigma", float(n + 1)), extra)

    quad = raw.get("quadrature", {}) or {}
    radii = raw.get("radii", {}) or {}
    explicit_radii = None
    if isinstance(radii, list):
        explicit_radii = tuple(float(r) for r in radii)
        r0, levels = explicit_radii[0] if explicit_radii else 2.0, max(len(explicit_radii) - 1, 0)
    else:
        _expect(isinstance(radii, dict), "'radii' must be a mapping or a list")
        r0, levels = _number(radii, "r0", 2.0), _number(radii, "levels", 5, int)

    sweep = raw.get("sweep", {}) or {}
    out = raw.get("output", {}) or {}
    values = sweep.get("values")
    cfg = ExperimentConfig(
        n=n, domain_kind=kind, domain_parameter=param, perturbation=pc,
        polar=_number(quad, "polar", 16, int), azimuthal=_number(quad, "azimuthal", 32, int),
        grading=_number(quad, "grading", 0.25),
        r0=r0, levels=levels, radii=explicit_radii,
        seed=_number(raw, "seed", 0, int), threads=_number(raw, "threads", 1, int),
        out_dir=str(out.get("dir", "masslab-out")), out_format=str(out.get("format", "csv")),
        suites=tuple(raw.get("suites", SUITES)), mutations=tuple(raw.get("mutations", ()) or ()),
        tags=tuple(raw.get("tags", ()) or ()),
        sweep_axis=str(sweep.get("axis", "sigma")),
        sweep_values=tuple(float(v) for v in values) if values is not None else None,
    )
    return cfg


def validate(cfg: ExperimentConfig, check_metric: bool = True) -> ExperimentConfig:
    """Schema and physics checks; raises :class:`ConfigError`."""
    _expect(cfg.n >= 2, "dimension must be at least 2")
    _expect(cfg.threads >= 1, "threads must be positive")
    _expect(cfg.out_format in FORMATS, f"output format must be one of {list(FORMATS)}")
    _expect(set(cfg.suites) <= set(SUITES), f"unknown suites {sorted(set(cfg.suites) - set(SUITES))}")
    _expect(set(cfg.mutations) <= set(MUTATIONS), f"unknown mutations {sorted(set(cfg.mutations) - set(MUTATIONS))}")
    _expect(cfg.sweep_axis in SWEEP_AXES, f"sweep axis must be one of {list(SWEEP_AXES)}")
    _expect(cfg.polar >= 2 and cfg.azimuthal >= 3, "quadrature orders too small")
    _expect(0.0 < cfg.grading < 1.0, "quadrature grading must lie in (0, 1)")
    try:
        cfg.domain
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    radii = cfg.radius_schedule
    _expect(len(radii) >= 3, "the radius schedule needs at least three radii")
    _expect(all(b > a for a, b in zip(radii, radii[1:])), "radii must increase")
    _expect(radii[0] > 0, "radii must be positive")
    pc = cfg.perturbation
    decaying = pc.family in ("conformal-decay", "transverse-traceless-decay") or (
        pc.family == "boundary-graph" and pc.params.get("profile_sigma") is not None)
    if decaying and cfg.domain_kind == "equidistant" and "divergence-demo" not in cfg.tags:
        sig = pc.params.get("profile_sigma", pc.sigma) if pc.family == "boundary-graph" else pc.sigma
        _expect(float(sig) > cfg.n / 2.0,
                f"decay rate sigma={sig} must exceed n/2={cfg.n / 2}; tag the experiment 'divergence-demo' to allow it")
    if pc.family == "boundary-graph":
        _expect(cfg.domain_kind == "equidistant", "the boundary-graph family deforms equidistant boundaries")
    if pc.family == "transverse-traceless-decay":
        _expect(cfg.n >= 3, "the transverse-traceless family needs n >= 3")
    if check_metric:
        check_positive_definite(cfg)
    return cfg


def check_positive_definite(cfg: ExperimentConfig, count: int = 200, rmax: float = 8.0) -> None:
    """``b + e`` must stay positive definite on a sample grid of the domain."""
    try:
        data = cfg.data()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rng = np.random.default_rng(cfg.seed)
    x = sample_domain(cfg.domain, cfg.n, count, rng, 0.0, rmax)
    chart = working_chart(cfg.domain)
    p = x[:, 1:] if chart == "hyperboloid" else convert_coords(x, "hyperboloid", chart)
    g = hyperbolic_metric(cfg.n, chart).g(p) + data.e(p)
    # scale-free test: eigenvalues of b^{-1} g
    ev = np.linalg.eigvals(np.linalg.solve(hyperbolic_metric(cfg.n, chart).g(p), g)).real
    _expect(bool(np.all(np.isfinite(ev)) and np.min(ev) > 0.05),
            "amplitude too large: b + e is not positive definite on the sample grid")


def load_config(path: Optional[str | Path]) -> ExperimentConfig:
    """Read and validate a YAML configuration; ``None`` gives the defaults."""
    if path is None:
        return config_from_dict({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    return config_from_dict(raw or {})


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Command-line flags win over file values; ``None`` means not given."""
    mapping = {"dim": "n", "seed": "seed", "threads": "threads", "out": "out_dir", "format": "out_format"}
    changes = {mapping[k]: v for k, v in overrides.items() if v is not None and k in mapping}
    return replace(cfg, **changes)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
