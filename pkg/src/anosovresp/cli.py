"""Command-line driver.

Four subcommands: `srb` estimates the invariant density, `optimal` computes
the norm-one response maximizer, `validate` probes it with finite
differences and random competitors, `perturbed-srb` rebuilds the density
after applying the field at a finite delta.  Exit codes: 0 on success, 2
for configuration problems, 3 for a degenerate objective, 4 for numerical
failures and other pipeline errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time

import numpy as np

from .config import RunConfig, default_config, load_config
from .errors import ConfigError, DegenerateObjective, PipelineError
from .response import (
    evaluate_field,
    field_grids,
    mean_field_norm,
    objective_value,
    optimal_field,
    write_optimal_field_csv,
)
from .spectral import format_float, write_field_csv, write_grid_csv
from .transfer import build_resolvent, build_transfer_matrix, leading_eigenpair
from .validate import finite_difference_response, optimality_spot_check, srb_of_perturbed


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    overrides = {}
    for name in ("delta", "trials", "seed", "quiver", "out"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _out_dir(cfg: RunConfig) -> str:
    out = cfg.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_summary(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")


def _density_report(estimate, cfg: RunConfig) -> tuple[np.ndarray, list[str]]:
    """Real density grid plus summary lines about spectrum and positivity."""
    from .response import _real_grid

    grid = _real_grid(estimate.density.symmetrized().coeffs, cfg.spectral.n, cfg.spectral.N)
    positive = float(np.count_nonzero(grid > 0.0)) / grid.size
    lines = [
        f"eigenvalue_re = {format_float(estimate.eigenvalue.real)}",
        f"eigenvalue_im = {format_float(estimate.eigenvalue.imag)}",
        f"power_iterations = {estimate.iterations}",
        f"residual = {format_float(estimate.residual)}",
        f"positive_fraction = {format_float(positive)}",
        f"min_density = {format_float(float(grid.min()))}",
    ]
    return grid, lines


def _header(cfg: RunConfig) -> list[str]:
    return [
        f"map = {cfg.map_spec.name}",
        f"observable = {cfg.objective.label}",
        f"n = {cfg.spectral.n}",
        f"N = {cfg.spectral.N}",
        f"gamma = {format_float(cfg.spectral.gamma)}",
    ]


def cmd_srb(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    started = time.perf_counter()
    tm = build_transfer_matrix(cfg.map_spec, cfg.spectral)
    estimate = leading_eigenpair(tm)
    grid, report = _density_report(estimate, cfg)
    write_field_csv(os.path.join(out, "srb_coeffs.csv"), estimate.density)
    write_grid_csv(os.path.join(out, "srb_grid.csv"), grid)
    lines = _header(cfg) + report
    lines.append(f"wall_seconds = {time.perf_counter() - started:.3f}")
    _write_summary(os.path.join(out, "summary.txt"), lines)


def _build_field(cfg: RunConfig):
    tm = build_transfer_matrix(cfg.map_spec, cfg.spectral)
    estimate = leading_eigenpair(tm)
    solver = build_resolvent(tm)
    field = optimal_field(cfg.objective, tm, solver, estimate, cfg.map_spec)
    return tm, estimate, solver, field


def _write_quiver(path: str, field, points_per_axis: int) -> None:
    axis = np.arange(points_per_axis) / points_per_axis
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    points = np.stack([x1, x2], axis=-1)
    vectors = evaluate_field(field, points)
    lines = ["x1,x2,v1,v2"]
    for i in range(points_per_axis):
        for j in range(points_per_axis):
            lines.append(
                f"{format_float(axis[i])},{format_float(axis[j])},"
                f"{format_float(vectors[i, j, 0])},{format_float(vectors[i, j, 1])}"
            )
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")


def cmd_optimal(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    started = time.perf_counter()
    _, _, _, field = _build_field(cfg)
    value = objective_value(field, field.raw_numerators)
    norm = mean_field_norm(field, cfg.spectral.N)
    write_optimal_field_csv(os.path.join(out, "field_coeffs.csv"), field)
    _write_quiver(os.path.join(out, "field_quiver.csv"), field, cfg.quiver)
    lines = _header(cfg) + [
        f"nu = {format_float(field.nu)}",
        f"J = {format_float(value)}",
        f"mean_field_norm = {format_float(norm)}",
        f"hermitian_defect = {format_float(field.hermitian_defect)}",
        f"max_divergence_mean = {format_float(field.max_divergence_mean)}",
        f"per_coefficient_ms = {field.per_coefficient_seconds * 1e3:.3f}",
        f"wall_seconds = {time.perf_counter() - started:.3f}",
    ]
    _write_summary(os.path.join(out, "summary.txt"), lines)


def cmd_validate(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    started = time.perf_counter()
    _, _, _, field = _build_field(cfg)
    value = objective_value(field, field.raw_numerators)
    probe = finite_difference_response(
        cfg.map_spec, field, cfg.objective, cfg.deltas, cfg.spectral
    )
    ratio = optimality_spot_check(field, trials=cfg.trials, seed=cfg.seed)
    rel_err = abs(probe.slope - value) / abs(value)
    probe_lines = ["delta,expectation"]
    for delta, expect in zip(probe.deltas, probe.expectations):
        probe_lines.append(f"{format_float(delta)},{format_float(expect)}")
    with open(os.path.join(out, "probe.csv"), "w", encoding="ascii") as handle:
        handle.write("\n".join(probe_lines) + "\n")
    lines = _header(cfg) + [
        f"slope={format_float(probe.slope)},stderr={format_float(probe.slope_stderr)},"
        f"J={format_float(value)},rel_err={format_float(rel_err)}",
        f"spot_check_trials = {cfg.trials}",
        f"spot_check_max_ratio = {format_float(ratio)}",
        f"wall_seconds = {time.perf_counter() - started:.3f}",
    ]
    _write_summary(os.path.join(out, "summary.txt"), lines)


def cmd_perturbed_srb(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    started = time.perf_counter()
    _, _, _, field = _build_field(cfg)
    estimate = srb_of_perturbed(cfg.map_spec, field, cfg.delta, cfg.spectral)
    grid, report = _density_report(estimate, cfg)
    norm = mean_field_norm(field, cfg.spectral.N)
    write_field_csv(os.path.join(out, "srb_coeffs.csv"), estimate.density)
    write_grid_csv(os.path.join(out, "srb_grid.csv"), grid)
    lines = _header(cfg) + [
        f"delta = {format_float(cfg.delta)}",
        f"delta_mean_norm = {format_float(cfg.delta * norm)}",
    ] + report
    lines.append(f"wall_seconds = {time.perf_counter() - started:.3f}")
    _write_summary(os.path.join(out, "summary.txt"), lines)


_COMMANDS = {
    "srb": cmd_srb,
    "optimal": cmd_optimal,
    "validate": cmd_validate,
    "perturbed-srb": cmd_perturbed_srb,
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="run configuration file")
    shared.add_argument("--out", help="output directory (default: current)")
    shared.add_argument("--delta", type=float, help="perturbation size for perturbed-srb")
    shared.add_argument("--trials", type=int, help="random competitor count for validate")
    shared.add_argument("--seed", type=int, help="random seed for validate")
    shared.add_argument("--quiver", type=int, help="quiver points per axis (default 24)")
    parser = argparse.ArgumentParser(
        prog="anosovresp",
        description="SRB densities and optimal response fields for Anosov torus maps",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("srb", parents=[shared], help="estimate the invariant density")
    commands.add_parser("optimal", parents=[shared], help="compute the optimal field")
    commands.add_parser("validate", parents=[shared],
                        help="finite-difference and spot checks of the optimum")
    commands.add_parser("perturbed-srb", parents=[shared],
                        help="density of the perturbed map at a finite delta")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateObjective as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
