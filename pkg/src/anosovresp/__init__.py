"""Optimal linear response for Anosov maps of the two-torus.

The pipeline: build a mollified Fourier transfer matrix for a hyperbolic
toral map, power-iterate to its SRB density, solve mean-zero resolvent
systems, and assemble the Sobolev-norm-one perturbing vector field that
maximally increases the expectation of a chosen observable.  Finite
difference probes and periodic-orbit checks live in `validate`, a small
CLI in `cli`.
"""
from __future__ import annotations

from .config import RunConfig, default_config, load_config, parse_config
from .errors import (
    BadOrder,
    ConfigError,
    DegenerateObjective,
    DetSignFlip,
    GridTooCoarse,
    MissingNumerator,
    NewtonDiverged,
    NoConvergence,
    NonUniqueLeading,
    NotMeanZero,
    NumericalError,
    OptimalityViolated,
    PipelineError,
    SingularJacobian,
    SingularResolvent,
)
from .maps import (
    DualScalar,
    PerturbedMap,
    TorusMapSpec,
    TrigTerm,
    builtin_map,
    div_inverse_jacobian,
    eval_map,
    inverse_jacobian,
    jacobian,
    perturbed_map,
    wrapped_difference,
)
from .response import (
    ObjectiveSpec,
    OptimalField,
    RawNumerators,
    divergence_term,
    evaluate_field,
    mean_field_norm,
    objective_value,
    observable_coefficients,
    optimal_field,
    raw_numerator,
    raw_numerators,
    read_optimal_field_csv,
    write_optimal_field_csv,
)
from .spectral import (
    SpectralConfig,
    SpectralField,
    analyze,
    fejer_weight,
    fine_grid,
    mode_index,
    mode_set,
    negation_table,
    sobolev_weight,
    symmetrize_table,
    synthesize,
    synthesize_table,
)
from .transfer import (
    ResolventSolver,
    SRBEstimate,
    TransferMatrix,
    apply_resolvent,
    apply_transfer,
    build_resolvent,
    build_transfer_matrix,
    leading_eigenpair,
    matrix_from_samples,
    read_matrix,
    solve_mean_zero,
    write_matrix,
)
from .validate import (
    ResponseProbe,
    expectation,
    find_periodic_orbit,
    finite_difference_response,
    optimality_spot_check,
    srb_of_perturbed,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
