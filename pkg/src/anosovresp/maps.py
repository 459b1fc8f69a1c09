"""Torus maps in integer-linear-plus-trigonometric form.

Contents: the TrigTerm / TorusMapSpec description of a map, vectorized
evaluation and exact Jacobians, the adjugate inverse Jacobian, forward-mode
DualScalar numbers and the divergence of the inverse Jacobian built from
them, the bundled case-study maps, and point-evaluable perturbed maps
T_0 + delta * field.

A map is x -> A x + sum of trig waves, taken modulo 1 per coordinate.  The
integer linear part keeps the map well defined on the torus, and the trig
terms have exact closed-form derivatives, so every derived quantity here is
computed to machine precision rather than by numerical differencing.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import ConfigError, SingularJacobian

TWO_PI = 2.0 * math.pi

DET_FLOOR = 1e-12


@dataclasses.dataclass(frozen=True)
class TrigTerm:
    """One wave amplitude * kind(2 pi (j1 x1 + j2 x2) + phase) feeding one component."""

    component: int
    kind: str
    amplitude: float
    j1: int
    j2: int
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.component not in (1, 2):
            raise ConfigError(f"trig component must be 1 or 2, got {self.component}")
        if self.kind not in ("sin", "cos"):
            raise ConfigError(f"trig kind must be 'sin' or 'cos', got '{self.kind}'")
        if self.j1 != int(self.j1) or self.j2 != int(self.j2):
            raise ConfigError(
                f"trig frequency must be an integer pair, got ({self.j1}, {self.j2})"
            )


@dataclasses.dataclass(frozen=True)
class TorusMapSpec:
    """Integer matrix plus trig terms; immutable and hashable."""

    linear: tuple[tuple[int, int], tuple[int, int]]
    terms: tuple[TrigTerm, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        flat = [entry for row in self.linear for entry in row]
        if len(self.linear) != 2 or any(len(row) != 2 for row in self.linear):
            raise ConfigError(f"linear part must be 2x2, got {self.linear}")
        if any(entry != int(entry) for entry in flat):
            raise ConfigError(f"linear part must have integer entries, got {self.linear}")
        det = flat[0] * flat[3] - flat[1] * flat[2]
        if abs(det) < 1:
            raise ConfigError(f"|det A| must be >= 1 for a torus endomorphism, got det={det}")


def builtin_map(name: str, delta_param: float = 0.01) -> TorusMapSpec:
    """The bundled case-study maps.

    `cat` is the area-preserving map with A = [[2,1],[1,1]] and no trig
    terms.  `nonlinear_cat` adds 2*delta_param*cos(2 pi x1) to the first
    component and delta_param*sin(4 pi x2 + 1) to the second.
    """
    if name == "cat":
        return TorusMapSpec(linear=((2, 1), (1, 1)), name="cat")
    if name == "nonlinear_cat":
        terms = (
            TrigTerm(component=1, kind="cos", amplitude=2.0 * delta_param, j1=1, j2=0),
            TrigTerm(component=2, kind="sin", amplitude=delta_param, j1=0, j2=2, phase=1.0),
        )
        return TorusMapSpec(linear=((2, 1), (1, 1)), terms=terms, name="nonlinear_cat")
    raise ConfigError(f"unknown builtin map '{name}'")


def wrapped_difference(a, b):
    """Componentwise displacement a - b reduced to [-1/2, 1/2) on the torus."""
    return np.mod(np.asarray(a) - np.asarray(b) + 0.5, 1.0) - 0.5


def eval_map(m: TorusMapSpec, x, wrap: bool = True) -> np.ndarray:
    """Map points of shape (..., 2); wrap=False evaluates the lift to R^2."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    a = m.linear
    y1 = a[0][0] * x1 + a[0][1] * x2
    y2 = a[1][0] * x1 + a[1][1] * x2
    for term in m.terms:
        angle = TWO_PI * (term.j1 * x1 + term.j2 * x2) + term.phase
        wave = term.amplitude * (np.sin(angle) if term.kind == "sin" else np.cos(angle))
        if term.component == 1:
            y1 = y1 + wave
        else:
            y2 = y2 + wave
    out = np.stack([y1, y2], axis=-1)
    return np.mod(out, 1.0) if wrap else out


def jacobian(m: TorusMapSpec, x) -> np.ndarray:
    """Exact Jacobian D_x T with shape (..., 2, 2)."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    out = np.zeros(x.shape[:-1] + (2, 2))
    for r in range(2):
        for c in range(2):
            out[..., r, c] = m.linear[r][c]
    for term in m.terms:
        angle = TWO_PI * (term.j1 * x1 + term.j2 * x2) + term.phase
        slope = term.amplitude * TWO_PI * (
            np.cos(angle) if term.kind == "sin" else -np.sin(angle)
        )
        row = term.component - 1
        out[..., row, 0] += slope * term.j1
        out[..., row, 1] += slope * term.j2
    return out


def inverse_jacobian(J: np.ndarray, floor: float = DET_FLOOR) -> np.ndarray:
    """Adjugate-over-determinant inverse of 2x2 Jacobians."""
    J = np.asarray(J, dtype=float)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    smallest = float(np.min(np.abs(det)))
    if smallest < floor:
        raise SingularJacobian(
            f"Jacobian determinant magnitude {smallest:.3e} below floor {floor:g}"
        )
    inv = np.empty_like(J)
    inv[..., 0, 0] = J[..., 1, 1] / det
    inv[..., 0, 1] = -J[..., 0, 1] / det
    inv[..., 1, 0] = -J[..., 1, 0] / det
    inv[..., 1, 1] = J[..., 0, 0] / det
    return inv


@dataclasses.dataclass
class DualScalar:
    """Forward-mode number: value plus partial derivatives w.r.t. x1 and x2.

    The payloads may be numpy arrays, in which case every operation acts
    pointwise; the chain rule then differentiates a whole grid at once.
    """

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __add__(self, other):
        other = _as_dual(other)
        return DualScalar(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)

    __radd__ = __add__

    def __neg__(self):
        return DualScalar(-self.value, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-_as_dual(other))

    def __rsub__(self, other):
        return _as_dual(other) + (-self)

    def __mul__(self, other):
        other = _as_dual(other)
        return DualScalar(
            self.value * other.value,
            self.d1 * other.value + self.value * other.d1,
            self.d2 * other.value + self.value * other.d2,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_dual(other)
        if np.any(other.value == 0):
            raise ZeroDivisionError("dual division by a zero value")
        quotient = self.value / other.value
        return DualScalar(
            quotient,
            (self.d1 - quotient * other.d1) / other.value,
            (self.d2 - quotient * other.d2) / other.value,
        )

    def __rtruediv__(self, other):
        return _as_dual(other) / self


def _as_dual(x) -> DualScalar:
    if isinstance(x, DualScalar):
        return x
    x = np.asarray(x, dtype=float)
    return DualScalar(x, np.zeros_like(x), np.zeros_like(x))


def dual_sin(d: DualScalar) -> DualScalar:
    c = np.cos(d.value)
    return DualScalar(np.sin(d.value), c * d.d1, c * d.d2)


def dual_cos(d: DualScalar) -> DualScalar:
    s = np.sin(d.value)
    return DualScalar(np.cos(d.value), -s * d.d1, -s * d.d2)


def dual_seed(x) -> tuple[DualScalar, DualScalar]:
    """Coordinates of points (..., 2) as dual numbers seeded with d(x_i)/d(x_j)."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    one, zero = np.ones_like(x1), np.zeros_like(x1)
    return DualScalar(x1, one, zero), DualScalar(x2, zero, one)


def _jacobian_dual(m: TorusMapSpec, x1: DualScalar, x2: DualScalar):
    """Jacobian entries of the map as dual numbers (nested 2x2 list)."""
    zero = np.zeros_like(x1.value)
    entries = [
        [DualScalar(np.full_like(x1.value, m.linear[r][c]), zero, zero) for c in range(2)]
        for r in range(2)
    ]
    for term in m.terms:
        angle = TWO_PI * (term.j1 * x1 + term.j2 * x2) + term.phase
        if term.kind == "sin":
            slope = term.amplitude * TWO_PI * dual_cos(angle)
        else:
            slope = -term.amplitude * TWO_PI * dual_sin(angle)
        row = term.component - 1
        entries[row][0] = entries[row][0] + slope * term.j1
        entries[row][1] = entries[row][1] + slope * term.j2
    return entries


def div_inverse_jacobian(m: TorusMapSpec, x, floor: float = DET_FLOOR) -> np.ndarray:
    """Divergence of x -> (D_x T)^{-1}, one component per column.

    Component i is d/dx1 [(DT)^{-1}][0,i] + d/dx2 [(DT)^{-1}][1,i], i.e. the
    divergence of the column that the inverse Jacobian applies to the i-th
    basis vector.  Computed by running the closed-form adjugate inverse
    through DualScalar arithmetic, so the result is exact up to rounding.
    """
    x1, x2 = dual_seed(x)
    e = _jacobian_dual(m, x1, x2)
    det = e[0][0] * e[1][1] - e[0][1] * e[1][0]
    smallest = float(np.min(np.abs(det.value)))
    if smallest < floor:
        raise SingularJacobian(
            f"Jacobian determinant magnitude {smallest:.3e} below floor {floor:g}"
        )
    b00 = e[1][1] / det
    b01 = -e[0][1] / det
    b10 = -e[1][0] / det
    b11 = e[0][0] / det
    return np.stack([b00.d1 + b10.d2, b01.d1 + b11.d2], axis=-1)


def _mode_phases(modes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """exp(2 pi i k.x) for points (..., 2) against modes (M, 2), chunk-safe."""
    angle = x[..., 0, None] * modes[:, 0] + x[..., 1, None] * modes[:, 1]
    return np.exp(TWO_PI * 1j * angle)


def _field_values(modes: np.ndarray, a1: np.ndarray, a2: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Real values of the two coefficient tables at points, imag residue checked."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    out = np.empty((flat.shape[0], 2), dtype=complex)
    step = max(1, 2_000_000 // max(1, modes.shape[0]))
    for start in range(0, flat.shape[0], step):
        phases = _mode_phases(modes, flat[start:start + step])
        out[start:start + step, 0] = phases @ a1
        out[start:start + step, 1] = phases @ a2
    residue = float(np.max(np.abs(out.imag), initial=0.0))
    if residue > 1e-9:
        raise ValueError(f"field evaluation imaginary residue {residue:.3e} exceeds 1e-9")
    return out.real.reshape(x.shape)


@dataclasses.dataclass
class PerturbedMap:
    """Point-evaluable T_0 + delta * field together with its Jacobian.

    `field` is an optimal-perturbation field (tables a1, a2 over F_n); the
    perturbation and its derivatives are evaluated by direct mode summation,
    so the map works at arbitrary points, not just on sampling grids.
    """

    base: TorusMapSpec
    delta: float
    modes: np.ndarray
    a1: np.ndarray
    a2: np.ndarray

    def eval(self, x, wrap: bool = True) -> np.ndarray:
        lift = eval_map(self.base, x, wrap=False)
        out = lift + self.delta * _field_values(self.modes, self.a1, self.a2, x)
        return np.mod(out, 1.0) if wrap else out

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = jacobian(self.base, x)
        factor = TWO_PI * 1j
        for col in range(2):
            deriv = _field_values(
                self.modes,
                factor * self.modes[:, col] * self.a1,
                factor * self.modes[:, col] * self.a2,
                x,
            )
            out[..., 0, col] += self.delta * deriv[..., 0]
            out[..., 1, col] += self.delta * deriv[..., 1]
        return out


def perturbed_map(m: TorusMapSpec, field, delta: float) -> PerturbedMap:
    """Evaluable T_0 + delta * field for a Hermitian-symmetric field."""
    from .spectral import mode_set

    return PerturbedMap(
        base=m,
        delta=float(delta),
        modes=mode_set(field.n),
        a1=np.asarray(field.a1, dtype=complex),
        a2=np.asarray(field.a2, dtype=complex),
    )
