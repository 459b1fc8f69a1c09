"""Mollified transfer operator in Fourier form.

Contents: column-by-column construction of the operator matrix from fine-grid
samples, a binary dump/load of that matrix, the pushforward action on
coefficient vectors, the SRB eigenpair by power iteration, and the mean-zero
resolvent backed by a reusable LU factorization.

Storage convention.  entry[k, j] = fejer(j) * coefficient at -k of e_{-j}
composed with the map; columns are generated by sampling one product grid
and taking one transform.  Under this storage the coefficient vector of the
mollified pushforward is entries.T @ f_hat, so the column index j plays the
output-mode role and carries the Fejér factor.  The (0,0) column of the
stored matrix is the elementary vector for every map (e_0 composed with T is
the constant 1), which makes the action preserve the (0,0) coefficient: the
operator conserves total mass by construction.
"""
from __future__ import annotations

import dataclasses
import struct

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ConfigError, NoConvergence, NonUniqueLeading, NotMeanZero, SingularResolvent
from .maps import TWO_PI, TorusMapSpec, eval_map
from .spectral import SpectralConfig, SpectralField, fejer_weight, fine_grid, mode_set, zero_mode_index

MATRIX_MAGIC = b"ANRSPMAT"

RAYLEIGH_TOL = 1e-13
MAX_POWER_ITERATIONS = 5000
DEGENERACY_GAP = 1e-8
PIVOT_FLOOR = 1e-14


@dataclasses.dataclass
class TransferMatrix:
    """Dense operator matrix over F_n with its discretization parameters."""

    entries: np.ndarray
    config: SpectralConfig
    map_label: str = ""


@dataclasses.dataclass
class SRBEstimate:
    """Leading eigenpair: unit-mass density coefficients and eigenvalue."""

    density: SpectralField
    eigenvalue: complex
    iterations: int
    residual: float


@dataclasses.dataclass
class ResolventSolver:
    """LU factorization of I - L restricted to the mean-zero modes."""

    n: int
    lu: np.ndarray
    piv: np.ndarray
    keep: np.ndarray
    zero_index: int


def _integer_powers(base: np.ndarray, half: int) -> dict[int, np.ndarray]:
    """base**j for j in {-half+1, ..., half}, using conjugates for j < 0.

    Valid because |base| = 1 pointwise (base is a unit phase grid).
    """
    powers = {0: np.ones_like(base)}
    for j in range(1, half + 1):
        powers[j] = powers[j - 1] * base
    for j in range(1, half):
        powers[-j] = np.conj(powers[j])
    return powers


def matrix_from_samples(t1: np.ndarray, t2: np.ndarray, config: SpectralConfig,
                        map_label: str = "") -> TransferMatrix:
    """Operator matrix from fine-grid samples of the map's two coordinates.

    The samples may be lifted (unwrapped) values; only their phases
    exp(-2 pi i t) enter, which are wrap-invariant.
    """
    n, N = config.n, config.N
    for grid in (t1, t2):
        if np.shape(grid) != (N, N):
            raise ValueError(f"expected ({N}, {N}) sample grids, got {np.shape(grid)}")
    modes = mode_set(n)
    half = n // 2
    phase1 = _integer_powers(np.exp(-TWO_PI * 1j * np.asarray(t1)), half)
    phase2 = _integer_powers(np.exp(-TWO_PI * 1j * np.asarray(t2)), half)
    fejer = fejer_weight(modes, n)
    row1 = (-modes[:, 0]) % N
    row2 = (-modes[:, 1]) % N
    entries = np.empty((n * n, n * n), dtype=complex)
    for col, (j1, j2) in enumerate(modes):
        sampled = phase1[j1] * phase2[j2]
        spectrum = np.fft.fft2(sampled) / (N * N)
        entries[:, col] = fejer[col] * spectrum[row1, row2]
    return TransferMatrix(entries=entries, config=config, map_label=map_label)


def build_transfer_matrix(m: TorusMapSpec, config: SpectralConfig) -> TransferMatrix:
    """Sample the map on the fine grid and assemble the operator matrix."""
    image = eval_map(m, fine_grid(config.N), wrap=False)
    return matrix_from_samples(image[..., 0], image[..., 1], config, map_label=m.name)


def apply_transfer(tm: TransferMatrix, coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of the mollified pushforward; accepts (n^2,) or (n^2, b)."""
    return tm.entries.T @ coeffs


def write_matrix(path, tm: TransferMatrix) -> None:
    """Binary dump: 16-byte header, then column-major little-endian doubles."""
    header = struct.pack("<8sII", MATRIX_MAGIC, tm.config.n, 0)
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(np.ravel(tm.entries, order="F").astype("<c16").tobytes())


def read_matrix(path) -> tuple[int, np.ndarray]:
    """Inverse of write_matrix; returns (n, entries)."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < 16:
        raise ConfigError(f"{path}: truncated matrix file")
    magic, n, _reserved = struct.unpack("<8sII", blob[:16])
    if magic != MATRIX_MAGIC:
        raise ConfigError(f"{path}: bad magic {magic!r}")
    count = n * n * n * n
    if len(blob) != 16 + 16 * count:
        raise ConfigError(
            f"{path}: expected {count} entries ({16 + 16 * count} bytes), got {len(blob)} bytes"
        )
    data = np.frombuffer(blob, dtype="<c16", count=count, offset=16)
    return n, np.reshape(data, (n * n, n * n), order="F").astype(complex)


def leading_eigenpair(tm: TransferMatrix, tol: float = RAYLEIGH_TOL,
                      max_iterations: int = MAX_POWER_ITERATIONS) -> SRBEstimate:
    """Power iteration for the SRB density, started from the mass mode.

    Iterates until successive Rayleigh quotients differ by less than `tol`,
    then screens for a second eigenvalue within DEGENERACY_GAP of the first
    (deflated iteration) and normalizes the eigenvector so the (0,0)
    coefficient is exactly 1.
    """
    action = tm.entries.T
    size = action.shape[0]
    n = tm.config.n
    zero_idx = zero_mode_index(n)
    v = np.zeros(size, dtype=complex)
    v[zero_idx] = 1.0
    rayleigh = None
    for iteration in range(1, max_iterations + 1):
        w = action @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            raise NoConvergence("power iteration: operator annihilated the iterate")
        current = complex(np.vdot(v, w))
        v = w / norm
        if rayleigh is not None and abs(current - rayleigh) < tol:
            rayleigh = current
            break
        rayleigh = current
    else:
        raise NoConvergence(
            f"power iteration: Rayleigh increments stayed above {tol:g} "
            f"after {max_iterations} iterations"
        )

    second = _second_rayleigh(action, v)
    if second is not None and abs(second - rayleigh) < DEGENERACY_GAP:
        raise NonUniqueLeading(
            f"second Rayleigh estimate {second:.6g} within {DEGENERACY_GAP:g} "
            f"of the leading eigenvalue {rayleigh:.6g}"
        )

    mass = v[zero_idx]
    if abs(mass) < 1e-13:
        raise NoConvergence("leading eigenvector carries no mass in the (0,0) mode")
    v = v / mass
    residual = float(np.max(np.abs(action @ v - rayleigh * v)))
    density = SpectralField(n=n, coeffs=v, real=True)
    return SRBEstimate(
        density=density,
        eigenvalue=complex(rayleigh),
        iterations=iteration,
        residual=residual,
    )


def _second_rayleigh(action: np.ndarray, v: np.ndarray, iterations: int = 300,
                     tol: float = 1e-10) -> complex | None:
    """Dominant Rayleigh estimate with the direction v projected out each step.

    Returns None when the deflated iterate decays to numerical zero (the
    operator is nilpotent off the leading direction, as for the cat map).
    """
    rng = np.random.default_rng(0)
    u = rng.standard_normal(v.size) + 1j * rng.standard_normal(v.size)
    u = u - v * np.vdot(v, u)
    norm = float(np.linalg.norm(u))
    if norm < 1e-14:
        return None
    u = u / norm
    estimate = None
    for _ in range(iterations):
        raw = action @ u
        current = complex(np.vdot(u, raw))
        raw = raw - v * np.vdot(v, raw)
        norm = float(np.linalg.norm(raw))
        if norm < 1e-14:
            return None
        u = raw / norm
        if estimate is not None and abs(current - estimate) < tol:
            return current
        estimate = current
    return estimate


def build_resolvent(tm: TransferMatrix, pivot_floor: float = PIVOT_FLOOR) -> ResolventSolver:
    """Factor I - L with the (0,0) row and column deleted, for reuse."""
    n = tm.config.n
    size = n * n
    zero_idx = zero_mode_index(n)
    system = np.eye(size, dtype=complex) - tm.entries.T
    keep = np.delete(np.arange(size), zero_idx)
    lu, piv = lu_factor(system[np.ix_(keep, keep)])
    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest < pivot_floor:
        raise SingularResolvent(
            f"pivot magnitude {smallest:.3e} below {pivot_floor:g}; "
            "the truncated operator has an eigenvalue near 1 on the mean-zero modes"
        )
    return ResolventSolver(n=n, lu=lu, piv=piv, keep=keep, zero_index=zero_idx)


def solve_mean_zero(solver: ResolventSolver, table: np.ndarray) -> np.ndarray:
    """(I - L)^{-1} applied to mean-zero coefficient columns.

    `table` has shape (n^2,) or (n^2, b); the (0,0) slot must vanish within
    1e-10 and is exactly zero in the result.
    """
    worst = float(np.max(np.abs(np.atleast_1d(table[solver.zero_index]))))
    if worst > 1e-10:
        raise NotMeanZero(f"(0,0) coefficient magnitude {worst:.3e} exceeds 1e-10")
    out = np.zeros_like(np.asarray(table, dtype=complex))
    out[solver.keep] = lu_solve((solver.lu, solver.piv), table[solver.keep])
    return out


def apply_resolvent(solver: ResolventSolver, b: SpectralField) -> SpectralField:
    """Field-level wrapper around solve_mean_zero."""
    if b.n != solver.n:
        raise ValueError(f"field order n={b.n} does not match solver order n={solver.n}")
    return SpectralField(n=solver.n, coeffs=solve_mean_zero(solver, b.coeffs))
