"""Exception types raised across the pipeline.

The hierarchy mirrors how failures surface at the command line: configuration
problems (exit code 2), a degenerate objective (exit code 3), and numerical
failures (exit code 4). Contract violations between modules (NotMeanZero,
MissingNumerator) indicate bugs in calling code and are left outside the
numerical group on purpose.
"""
from __future__ import annotations


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PipelineError):
    """Malformed or inconsistent run configuration."""


class BadOrder(ConfigError):
    """Fourier order n is odd or smaller than 4."""


class GridTooCoarse(ConfigError):
    """Fine grid size N violates N >= 4n."""


class DegenerateObjective(PipelineError):
    """All raw numerators vanish; the objective is identically zero."""


class NumericalError(PipelineError):
    """Base class for failures of the numerical machinery."""


class NoConvergence(NumericalError):
    """Power iteration failed to converge within the iteration cap."""


class NonUniqueLeading(NumericalError):
    """Second Rayleigh estimate indistinguishable from the first."""


class SingularResolvent(NumericalError):
    """A pivot of the factored I - L collapsed below the floor."""


class SingularJacobian(NumericalError):
    """Map Jacobian determinant below the invertibility floor."""


class DetSignFlip(NumericalError):
    """Perturbed Jacobian determinant changed sign on the fine grid."""


class NewtonDiverged(NumericalError):
    """Newton iteration for a periodic orbit failed to converge."""


class OptimalityViolated(NumericalError):
    """A random trial field beat the optimal field's objective value."""


class NotMeanZero(PipelineError):
    """Resolvent input carries a nonzero (0,0) coefficient."""


class MissingNumerator(PipelineError):
    """Objective evaluation requested for modes without stored numerators."""
