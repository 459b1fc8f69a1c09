"""Finite-difference and periodic-orbit checks of the response pipeline.

Everything here treats the spectral machinery as a black box and probes it
from the outside: rebuild the SRB density for perturbed maps and difference
the expectations, hunt periodic orbits with Newton, and try to beat the
optimizer with random unit-norm fields.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DetSignFlip, MissingNumerator, NewtonDiverged, OptimalityViolated
from .maps import TorusMapSpec, eval_map, jacobian, perturbed_map
from .response import ObjectiveSpec, OptimalField, objective_value, observable_coefficients
from .spectral import SpectralConfig, SpectralField, fine_grid, mode_set, sobolev_weight, symmetrize_table
from .transfer import SRBEstimate, leading_eigenpair, matrix_from_samples

NEWTON_TOL = 1e-12

NEWTON_CAP = 100


def expectation(c: ObjectiveSpec, density: SpectralField, config: SpectralConfig) -> float:
    """Integral of the observable against a density, through coefficients."""
    chat = observable_coefficients(c, config).coeffs
    value = complex(np.sum(chat * np.conj(density.coeffs)))
    return float(value.real)


def srb_of_perturbed(m: TorusMapSpec, field: OptimalField, delta: float,
                     config: SpectralConfig) -> SRBEstimate:
    """SRB density of the map perturbed by delta times the field.

    Before building the matrix, the Jacobian determinant of the perturbed
    map is sampled on the fine grid and compared in sign against the base
    map's; a flip means delta left the perturbative regime and the density
    machinery would silently produce garbage, so it is an error instead.
    """
    x = fine_grid(config.N)
    base_det = np.linalg.det(jacobian(m, x))
    pm = perturbed_map(m, field, delta)
    pert_det = np.linalg.det(pm.jacobian(x))
    flipped = np.sign(pert_det) != np.sign(base_det)
    if np.any(flipped):
        worst = float(pert_det[flipped][np.argmin(np.abs(pert_det[flipped]))])
        raise DetSignFlip(
            f"delta={delta:g} flips the Jacobian determinant sign at "
            f"{int(np.count_nonzero(flipped))} of {flipped.size} grid points "
            f"(sample value {worst:.3e})"
        )
    t = pm.eval(x, wrap=False)
    tm = matrix_from_samples(t[..., 0], t[..., 1], config,
                             map_label=f"{m.name}+{delta:g}*field")
    return leading_eigenpair(tm)


@dataclasses.dataclass
class ResponseProbe:
    """Expectations along a delta sweep and the fitted slope at zero."""

    deltas: np.ndarray
    expectations: np.ndarray
    slope: float
    slope_stderr: float


def finite_difference_response(m: TorusMapSpec, field: OptimalField, c: ObjectiveSpec,
                               deltas, config: SpectralConfig) -> ResponseProbe:
    """Least-squares slope of delta -> E_delta(c) through {0} union deltas.

    The fit is an unweighted straight line through every probe point
    including delta = 0, so curvature of the true response curve biases the
    slope at the level of the largest delta squared.
    """
    sweep = np.concatenate([[0.0], np.asarray(deltas, dtype=float)])
    if np.any(np.diff(sweep) <= 0.0):
        raise ValueError(f"probe deltas must be positive and strictly increasing, got {list(deltas)}")
    values = []
    for delta in sweep:
        estimate = srb_of_perturbed(m, field, float(delta), config)
        values.append(expectation(c, estimate.density, config))
    expectations = np.array(values)
    design = np.column_stack([np.ones_like(sweep), sweep])
    beta, *_ = np.linalg.lstsq(design, expectations, rcond=None)
    intercept, slope = beta
    residuals = expectations - (intercept + slope * sweep)
    dof = len(sweep) - 2
    if dof > 0:
        sigma2 = float(np.sum(residuals**2)) / dof
        stderr = float(np.sqrt(sigma2 / np.sum((sweep - sweep.mean()) ** 2)))
    else:
        stderr = 0.0
    return ResponseProbe(
        deltas=sweep,
        expectations=expectations,
        slope=float(slope),
        slope_stderr=stderr,
    )


def find_periodic_orbit(m: TorusMapSpec, x0, period: int) -> np.ndarray:
    """Newton refinement of a period-p orbit from a starting guess.

    Solves wrap(T^p(x) - x) = 0 with the chain-rule Jacobian DT^p - I,
    keeping iterates on the torus.  Returns the orbit points
    (x, T(x), ..., T^{p-1}(x)), each wrapped into [0, 1)^2.
    """
    if period < 1:
        raise ValueError(f"period must be at least 1, got {period}")
    x = np.asarray(x0, dtype=float).copy() % 1.0
    for _ in range(NEWTON_CAP):
        y = x.copy()
        total = np.eye(2)
        for _ in range(period):
            total = jacobian(m, y) @ total
            y = eval_map(m, y)
        residual = (y - x + 0.5) % 1.0 - 0.5
        if float(np.max(np.abs(residual))) < NEWTON_TOL:
            orbit = np.empty((period, 2))
            point = x
            for step in range(period):
                orbit[step] = point
                point = eval_map(m, point)
            orbit %= 1.0
            orbit[orbit > 1.0 - 1e-12] = 0.0
            return orbit
        step_vec = np.linalg.solve(total - np.eye(2), residual)
        x = (x - step_vec) % 1.0
    raise NewtonDiverged(
        f"no period-{period} orbit of {m.name} within {NEWTON_CAP} Newton steps "
        f"from {tuple(float(v) for v in np.asarray(x0, dtype=float))}"
    )


def optimality_spot_check(field: OptimalField, trials: int = 100, seed: int = 0,
                          tolerance: float = 1e-8) -> float:
    """Try to beat the optimizer with random unit-norm symmetric fields.

    Each trial draws complex Gaussian coefficient tables, symmetrizes them,
    normalizes to weighted norm one, and evaluates J through the stored
    numerators.  Raises OptimalityViolated if any trial exceeds the
    optimum by more than the tolerance; returns the largest ratio
    J(trial) / J(optimum) observed, or 0.0 when no trials are run.
    """
    if field.raw_numerators is None:
        raise MissingNumerator("the field carries no raw numerators to evaluate J with")
    if trials <= 0:
        return 0.0
    count = field.n * field.n
    weights = sobolev_weight(mode_set(field.n), field.gamma)
    best = objective_value(field, field.raw_numerators)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for trial in range(trials):
        draw = rng.standard_normal((2, count)) + 1j * rng.standard_normal((2, count))
        tables = np.stack([symmetrize_table(draw[0], field.n),
                           symmetrize_table(draw[1], field.n)])
        norm = float(np.sqrt(np.sum(weights * (np.abs(tables) ** 2))))
        tables /= norm
        value = objective_value(tables, field.raw_numerators)
        if value > best + tolerance:
            raise OptimalityViolated(
                f"trial {trial} reached J = {value:.12g} above the optimum {best:.12g}"
            )
        worst = max(worst, value / best)
    return worst
