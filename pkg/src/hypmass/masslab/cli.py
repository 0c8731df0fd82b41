"""``masslab`` command line.

Exit codes: 0 pass, 1 invariant failure, 2 configuration error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from ..mass.energy import boundary_points, energy_scan
from ..mass.functional import MassVector, NonConvergenceError, lorentz_norm, radius_terms_many, richardson
from ..mass.quadrature import build_rule
from ..spinors import UnsupportedDimensionError
from ..tensors import MetricField, add_fields, hyperbolic_metric
from .config import ConfigError, ExperimentConfig, PerturbationConfig, apply_overrides, load_config, validate
from .report import Report
from .suites import conventions_for, run_suites, spinors_suite

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NONCONVERGENCE = 0, 1, 2, 3


def _potential_label(V, domain) -> str:
    c = V.coefficients
    if domain.is_horospherical and c[0] != 0 and c[0] == -c[1]:
        return "V_h"
    return f"V_{int(np.flatnonzero(c)[0])}"


def compute_mass(cfg: ExperimentConfig, report: Report, perturbation: Optional[PerturbationConfig] = None,
                 table: str = "radii", tag: Optional[dict] = None):
    """Per-radius terms and extrapolated limits for every admissible potential."""
    data = cfg.data(perturbation)
    conv = conventions_for(cfg)
    radii = cfg.radius_schedule
    pots = cfg.domain.admissible_potentials(cfg.n)
    rules = [build_rule(cfg.domain, cfg.n, r, cfg.orders, conv.complement_corner) for r in radii]
    results = []
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        for rule in rules:
            results.append(radius_terms_many(data, pots, rule, conv, pool if cfg.threads > 1 else None))
    limits = []
    for k, V in enumerate(pots):
        for res in (row[k] for row in results):
            report.add_row(table, {**(tag or {}), "potential": _potential_label(V, cfg.domain),
                                   "radius": res.radius, "hemisphere": res.hemisphere,
                                   "corner": res.corner, "total": res.total})
        limits.append(richardson(radii, [row[k].total for row in results]))
    kind = "equidistant" if cfg.domain.kind == "equidistant" else "horospherical"
    P = MassVector(np.array([m.value for m in limits]), np.array([m.error for m in limits]), kind)
    return data, P, limits


def _energy(cfg: ExperimentConfig, data) -> dict:
    b = hyperbolic_metric(cfg.n, data.chart)
    g = add_fields(b, MetricField(cfg.n, data.e, None, None, data.chart))
    rng = np.random.default_rng(cfg.seed)
    grid = rng.uniform(-3.0, 3.0, size=(300, cfg.n - 1))
    rep = energy_scan(g, cfg.domain, boundary=boundary_points(cfg.domain, cfg.n, grid), count=200, rmax=6.0,
                      seed=cfg.seed)
    return {"interior_margin": rep.interior_margin, "boundary_margin": rep.boundary_margin,
            "energy_conditions_hold": rep.holds}


def run_verify(cfg: ExperimentConfig) -> tuple[int, Report]:
    report = Report("verify", cfg.to_dict())
    report.add_checks(run_suites(cfg))
    report.summary = {"checks": len(report.checks), "failures": [c.name for c in report.failures]}
    return (EXIT_PASS if report.passed else EXIT_FAIL), report


def run_mass(cfg: ExperimentConfig) -> tuple[int, Report]:
    report = Report("mass", cfg.to_dict())
    data, P, limits = compute_mass(cfg, report)
    converged = all(m.converged for m in limits)
    summary = {
        "components": P.components, "errors": P.errors,
        "converged": [m.converged for m in limits],
        "potentials": [_potential_label(V, cfg.domain) for V in cfg.domain.admissible_potentials(cfg.n)],
        "classification": P.classification(),
        **_energy(cfg, data),
    }
    if P.kind == "equidistant":
        summary["lorentz_norm"] = lorentz_norm(P)
    else:
        summary["m_h"] = P.components[0]
        summary["center"] = P.components[1:]
    # a mass sign is only meaningful under the energy conditions; no positivity claim otherwise
    summary["positivity_claim"] = bool(summary["energy_conditions_hold"])
    report.summary = summary
    if not converged:
        report.errors.append("mass limit did not converge; extrapolated values are not reliable")
        return EXIT_NONCONVERGENCE, report
    return EXIT_PASS, report


def _sweep_values(cfg: ExperimentConfig) -> list[float]:
    if cfg.sweep_values is not None:
        return list(cfg.sweep_values)
    n, pc = cfg.n, cfg.perturbation
    if cfg.sweep_axis == "sigma":
        return [n / 2 + 0.1, float(n), n + 1.0]
    if cfg.sweep_axis == "amplitude":
        return [pc.amplitude, pc.amplitude / 2, pc.amplitude / 4]
    return [8.0, 12.0, 16.0, 24.0]


def run_sweep(cfg: ExperimentConfig) -> tuple[int, Report]:
    report = Report("sweep", cfg.to_dict())
    axis = cfg.sweep_axis
    nonconv = False
    for value in _sweep_values(cfg):
        pc, run_cfg = cfg.perturbation, cfg
        if axis == "sigma":
            key = "profile_sigma" if pc.family == "boundary-graph" else None
            pc = replace(pc, params={**pc.params, key: value}) if key else replace(pc, sigma=value)
        elif axis == "amplitude":
            pc = replace(pc, amplitude=value)
        else:
            run_cfg = replace(cfg, polar=int(value))
        _, P, limits = compute_mass(run_cfg, report, pc, table="radii", tag={axis: value})
        nonconv |= not all(m.converged for m in limits)
        row = {axis: value, "norm": float(np.linalg.norm(P.components)),
               "converged": all(m.converged for m in limits),
               "max_error": float(np.max(P.errors))}
        for k, c in enumerate(P.components):
            row[f"component_{k}"] = c
        report.add_row("sweep", row)
    report.summary = {"axis": axis, "rows": report.tables.get("sweep", [])}
    if nonconv:
        report.errors.append("at least one sweep point did not converge")
        return EXIT_NONCONVERGENCE, report
    return EXIT_PASS, report


def run_spinor_check(cfg: ExperimentConfig) -> tuple[int, Report]:
    report = Report("spinor-check", cfg.to_dict())
    report.add_checks(spinors_suite(cfg))
    report.summary = {"checks": len(report.checks), "failures": [c.name for c in report.failures]}
    return (EXIT_PASS if report.passed else EXIT_FAIL), report


COMMANDS = {"verify": run_verify, "mass": run_mass, "sweep": run_sweep, "spinor-check": run_spinor_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment configuration")
    common.add_argument("--dim", type=int, help="dimension n")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--threads", type=int, help="worker threads for the quadrature")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), help="table format")
    parser = argparse.ArgumentParser(prog="masslab", description="Mass functionals of asymptotically hyperbolic "
                                     "manifolds with non-compact boundary.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the invariant catalogue")
    sub.add_parser("mass", parents=[common], help="compute the mass vector of the configured perturbation")
    sub.add_parser("sweep", parents=[common], help="sweep sigma, amplitude or the quadrature order")
    sub.add_parser("spinor-check", parents=[common], help="run the spinor suite only")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, dim=args.dim, seed=args.seed, threads=args.threads, out=args.out,
                              format=args.format)
        needs_spinors = args.command == "spinor-check" or (args.command == "verify" and "spinors" in cfg.suites)
        if needs_spinors and cfg.n % 2:
            raise ConfigError("spinors require even n")
        validate(cfg, check_metric=args.command in ("mass", "sweep"))
    except ConfigError as exc:
        print(f"masslab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, report = COMMANDS[args.command](cfg)
    except UnsupportedDimensionError as exc:
        print(f"masslab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"masslab: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    paths = report.write(cfg.out_dir, cfg.out_format)
    text = report.text()
    if text:
        print(text)
    for p in paths:
        print(f"wrote {p}")
    return code


if __name__ == "__main__":
    sys.exit(main())
