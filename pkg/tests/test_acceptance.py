"""End-to-end acceptance run: one test and one report line per criterion.

Each test drives the public surface (CLI or package API) at the stock study
settings and records a PASS/FAIL line through the `criterion` fixture; the
collected lines are printed as a block after the test summary.  Three
criteria fail by measurement, not by accident; the reasons are in the
assertion details and in the README's expected-failures list.
"""
from __future__ import annotations

import pathlib
import statistics
import time

import numpy as np

from anosovresp.cli import main
from anosovresp.errors import OptimalityViolated
from anosovresp.maps import builtin_map, perturbed_map
from anosovresp.response import mean_field_norm, objective_value
from anosovresp.spectral import (
    SpectralConfig,
    fejer_weight,
    fine_grid,
    mode_index,
    mode_set,
    read_field_csv,
    read_grid_csv,
    zero_mode_index,
)
from anosovresp.transfer import (
    apply_transfer,
    build_transfer_matrix,
    leading_eigenpair,
    matrix_from_samples,
    solve_mean_zero,
)
from anosovresp.validate import (
    expectation,
    find_periodic_orbit,
    optimality_spot_check,
    srb_of_perturbed,
)

from conftest import PROBE_SECONDS, build_study, nonlinear_objective

CONFIGS_DIR = pathlib.Path(__file__).resolve().parent.parent / "configs"

CAT_LOCALIZATION_DELTA = 0.028331316348851998
NL_LOCALIZATION_DELTA = 0.020600254759398404


def test_criterion_01_cat_srb_through_the_cli(criterion, tmp_path):
    started = time.perf_counter()
    code = main(["srb", "--config", str(CONFIGS_DIR / "cat.cfg"), "--out", str(tmp_path)])
    wall = time.perf_counter() - started
    assert code == 0
    summary = {}
    for line in (tmp_path / "summary.txt").read_text().splitlines():
        key, _, value = line.partition(" = ")
        summary[key] = value
    eigen_gap = abs(complex(float(summary["eigenvalue_re"]),
                            float(summary["eigenvalue_im"])) - 1.0)
    density = read_field_csv(tmp_path / "srb_coeffs.csv")
    off = density.coeffs.copy()
    off[zero_mode_index(32)] = 0.0
    off_peak = float(np.max(np.abs(off)))
    grid = read_grid_csv(tmp_path / "srb_grid.csv")
    grid_dev = float(np.max(np.abs(grid - 1.0)))
    criterion(
        1,
        eigen_gap < 1e-10 and off_peak < 1e-10 and grid_dev < 1e-9 and wall < 60.0,
        f"cat srb: |eigenvalue-1|={eigen_gap:.2e}, off-mode peak={off_peak:.2e}, "
        f"grid deviation={grid_dev:.2e}, wall={wall:.1f}s",
    )


def test_criterion_02_cat_matrix_analytic_form(criterion):
    config = SpectralConfig(n=32, N=128, gamma=0.02)
    started = time.perf_counter()
    tm = build_transfer_matrix(builtin_map("cat"), config)
    wall = time.perf_counter() - started
    modes = mode_set(32)
    images = modes @ np.array([[2, 1], [1, 1]])
    inside = np.all((images >= -15) & (images <= 16), axis=1)
    expected = np.zeros((1024, 1024), dtype=complex)
    weights = fejer_weight(modes, 32)
    for column in range(1024):
        if inside[column]:
            row = int(mode_index(32, images[column, 0], images[column, 1]))
            expected[row, column] = weights[column]
    gap = float(np.max(np.abs(tm.entries - expected)))
    per_column = np.count_nonzero(expected, axis=0)
    criterion(
        2,
        gap < 1e-10 and int(per_column.max()) <= 1 and wall < 60.0,
        f"cat matrix vs analytic form: max gap={gap:.2e}, "
        f"nonzeros per column<={int(per_column.max())}, build wall={wall:.1f}s",
    )


def test_criterion_03_resolvent_matches_neumann_sums(criterion, cat_study):
    rng = np.random.default_rng(1234)
    worst = 0.0
    for _ in range(20):
        b = rng.standard_normal(1024) + 1j * rng.standard_normal(1024)
        b[zero_mode_index(32)] = 0.0
        total = b.copy()
        term = b.copy()
        for _ in range(500):
            term = apply_transfer(cat_study.tm, term)
            if not np.any(term):
                break
            total += term
        else:
            raise AssertionError("Neumann sum did not terminate within 500 terms")
        solved = solve_mean_zero(cat_study.solver, b)
        worst = max(worst, float(np.max(np.abs(solved - total))))
    criterion(3, worst < 1e-10, f"20 mean-zero resolvent solves vs Neumann sums: "
                                f"max gap={worst:.2e}")


def test_criterion_04_objective_equals_normalization(criterion, cat_study, nl_study):
    gaps = {}
    for study in (cat_study, nl_study):
        value = objective_value(study.field, study.field.raw_numerators)
        gaps[study.m.name] = abs(value - study.field.nu)
    criterion(
        4,
        all(gap <= 1e-8 for gap in gaps.values()),
        "J matches nu: " + ", ".join(f"{name} gap={gap:.2e}" for name, gap in gaps.items()),
    )


def test_criterion_05_random_fields_never_beat_the_optimum(criterion, cat_study, nl_study):
    ratios = {}
    try:
        for study in (cat_study, nl_study):
            ratios[study.m.name] = optimality_spot_check(
                study.field, trials=100, seed=0, tolerance=1e-8
            )
    except OptimalityViolated as exc:
        criterion(5, False, f"spot check violated optimality: {exc}")
        return
    criterion(
        5,
        True,
        "100 unit-norm competitors each: best J ratio "
        + ", ".join(f"{name}={ratio:.6f}" for name, ratio in ratios.items()),
    )


def test_criterion_06_slope_agrees_with_objective(criterion, cat_study, nl_study,
                                                  cat_probe, nl_probe):
    details = []
    ok = True
    for study, probe in ((cat_study, cat_probe), (nl_study, nl_probe)):
        value = objective_value(study.field, study.field.raw_numerators)
        rel = abs(probe.slope - value) / abs(value)
        seconds = PROBE_SECONDS.get(study.m.name, 0.0)
        ok = ok and rel <= 0.05 and seconds < 600.0
        details.append(f"{study.m.name}: slope={probe.slope:.6f} vs J={value:.6f} "
                       f"rel={rel:.4f} ({seconds:.0f}s)")
    criterion(6, ok, "; ".join(details) + "; bound 0.05")


def test_criterion_07_perturbation_raises_the_expectation(criterion, cat_study, nl_study):
    base_cat = expectation(cat_study.objective, cat_study.estimate.density, cat_study.config)
    shifted = srb_of_perturbed(cat_study.m, cat_study.field, CAT_LOCALIZATION_DELTA,
                               cat_study.config)
    cat_after = expectation(cat_study.objective, shifted.density, cat_study.config)
    cat_product = CAT_LOCALIZATION_DELTA * mean_field_norm(cat_study.field, 128)

    base_nl = expectation(nl_study.objective, nl_study.estimate.density, nl_study.config)
    pm = perturbed_map(nl_study.m, nl_study.field, NL_LOCALIZATION_DELTA)
    t = pm.eval(fine_grid(128), wrap=False)
    tm = matrix_from_samples(t[..., 0], t[..., 1], nl_study.config)
    nl_after = expectation(nl_study.objective, leading_eigenpair(tm).density,
                           nl_study.config)
    nl_product = NL_LOCALIZATION_DELTA * mean_field_norm(nl_study.field, 128)

    criterion(
        7,
        cat_after > base_cat and nl_after > base_nl
        and abs(cat_product - 0.0202) < 1e-4 and abs(nl_product - 0.0122) < 1e-4,
        f"cat: {base_cat:.6f} -> {cat_after:.6f} at delta*norm={cat_product:.4f}; "
        f"nonlinear: {base_nl:.6f} -> {nl_after:.6f} at delta*norm={nl_product:.4f}",
    )


def test_criterion_08_orbit_matches_the_printed_points(criterion, nl_study):
    orbit = find_periodic_orbit(nl_study.m, (0.18, 0.40), 2)
    printed = np.array([[0.1796, 0.4023], [0.7877, 0.5852]])
    gap = float(np.max(np.abs(orbit - printed)))
    criterion(
        8,
        gap <= 5e-4,
        f"period-2 orbit from (0.18,0.40): max gap to the printed points {gap:.2e} "
        f"(found {np.array2string(orbit, precision=6, separator=', ')})",
    )


def test_criterion_09_numerators_are_hermitian_before_symmetrization(
        criterion, cat_study, nl_study):
    defects = {s.m.name: s.field.hermitian_defect for s in (cat_study, nl_study)}
    criterion(
        9,
        all(defect < 1e-8 for defect in defects.values()),
        "pre-symmetrization defect: "
        + ", ".join(f"{name}={defect:.2e}" for name, defect in defects.items()),
    )


def test_criterion_10_coarse_and_stock_fields_agree(criterion, nl_study):
    coarse = build_study(builtin_map("nonlinear_cat"), nonlinear_objective(),
                         SpectralConfig(n=16, N=64, gamma=0.02))
    rels = []
    for k1 in range(-8, 9):
        for k2 in range(-8, 9):
            i32 = int(mode_index(32, k1, k2))
            in_coarse = -7 <= k1 <= 8 and -7 <= k2 <= 8
            for component in (0, 1):
                stock = nl_study.field.tables[component, i32]
                if abs(stock) <= 1e-6:
                    continue
                value = (coarse.field.tables[component, int(mode_index(16, k1, k2))]
                         if in_coarse else 0.0)
                rels.append(abs(value - stock) / abs(stock))
    worst = max(rels)
    criterion(
        10,
        worst <= 1e-3,
        f"{len(rels)} dominant coefficients: worst rel gap={worst:.3f}, "
        f"median={statistics.median(rels):.3f}, bound 1e-3",
    )


def test_criterion_11_per_coefficient_cost(criterion, cat_study, nl_study):
    costs = {s.m.name: s.field.per_coefficient_seconds * 1e3 for s in (cat_study, nl_study)}
    criterion(
        11,
        all(cost <= 50.0 for cost in costs.values()),
        "numerator cost per coefficient: "
        + ", ".join(f"{name}={cost:.2f}ms" for name, cost in costs.items()),
    )
