"""Optimal-perturbation coefficients and the response objective.

Contents: observables and their pairing coefficients, the divergence terms
of the derivative operator evaluated on elementary vector fields, the raw
numerator loop (vectorized in batches, optionally threaded), assembly and
normalization of the optimal field, objective evaluation through stored
numerators, and field evaluation plus CSV serialization.

The numerator for (component i, mode k) is built in four moves: sample the
divergence of f0 * (DT)^{-1} applied to the elementary field e_k along
component i, push the mean-zeroed coefficients through the transfer matrix,
solve the mean-zero resolvent system, and pair the solution against the
observable's mean-zeroed coefficients.  Dividing by the Sobolev weight and
normalizing onto the weighted unit sphere yields the optimizer, whose
objective value equals the normalization constant nu; that identity is the
main self-check and is asserted in the tests rather than assumed.

The density grid used here comes from a pair-symmetrized, Nyquist-zeroed
copy of the SRB coefficients.  The unpaired modes stay in the eigenvector
(the operator algebra needs them) but would leak an imaginary residue into
every numerator if synthesized, which is exactly the Hermitian defect the
diagnostics would then report.
"""
from __future__ import annotations

import concurrent.futures
import dataclasses
import os
import time

import numpy as np

from .errors import ConfigError, DegenerateObjective, MissingNumerator
from .maps import (
    TWO_PI,
    TorusMapSpec,
    _field_values,
    div_inverse_jacobian,
    inverse_jacobian,
    jacobian,
    wrapped_difference,
)
from .spectral import (
    SpectralConfig,
    SpectralField,
    analyze_table,
    fine_grid,
    format_float,
    mode_index,
    mode_set,
    negation_table,
    read_grid_csv,
    sobolev_weight,
    symmetrize_table,
    synthesize_table,
    zero_mode_index,
)
from .transfer import ResolventSolver, SRBEstimate, TransferMatrix, apply_transfer, solve_mean_zero

DEGENERACY_FLOOR = 1e-14

DEFAULT_BATCH = 128


@dataclasses.dataclass(frozen=True)
class ObjectiveSpec:
    """Observable c: a cosine sum, a pair of wrapped Gaussians, or a grid file.

    gaussian_pair evaluates exp(-|d(x,p)|^2 / sigma^2) summed over the two
    centers, with d the minimum-image displacement per coordinate.
    """

    kind: str
    p1: tuple[float, float] | None = None
    p2: tuple[float, float] | None = None
    sigma: float = 0.1
    path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("cosine_sum", "gaussian_pair", "grid_file"):
            raise ConfigError(f"unknown observable kind '{self.kind}'")
        if self.kind == "gaussian_pair":
            if self.p1 is None or self.p2 is None:
                raise ConfigError("gaussian_pair needs both centers p1 and p2")
            if self.sigma <= 0.0:
                raise ConfigError(f"gaussian width must be positive, got {self.sigma}")
        if self.kind == "grid_file" and not self.path:
            raise ConfigError("grid_file observable needs a path")

    @property
    def label(self) -> str:
        return self.kind


def observable_coefficients(spec: ObjectiveSpec, config: SpectralConfig) -> SpectralField:
    """Fourier coefficients of the observable over F_n, mean included."""
    n, N = config.n, config.N
    if spec.kind == "cosine_sum":
        coeffs = np.zeros(n * n, dtype=complex)
        for k1, k2 in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            coeffs[int(mode_index(n, k1, k2))] = 0.5
        return SpectralField(n=n, coeffs=coeffs, real=True)
    if spec.kind == "gaussian_pair":
        x = fine_grid(N)
        values = np.zeros((N, N))
        for center in (spec.p1, spec.p2):
            d = wrapped_difference(x, np.asarray(center))
            values += np.exp(-(d[..., 0] ** 2 + d[..., 1] ** 2) / spec.sigma**2)
        return SpectralField(n=n, coeffs=analyze_table(values, n), real=True)
    samples = read_grid_csv(spec.path)
    if samples.shape[0] < 4 * n:
        raise ConfigError(
            f"{spec.path}: grid size {samples.shape[0]} too coarse for n={n} (need >= 4n)"
        )
    return SpectralField(n=n, coeffs=analyze_table(samples, n), real=True)


def pairing_coefficients(spec: ObjectiveSpec, config: SpectralConfig) -> np.ndarray:
    """Observable coefficients with the (0,0) entry removed, for pairings."""
    table = observable_coefficients(spec, config).coeffs.copy()
    table[zero_mode_index(config.n)] = 0.0
    return table


@dataclasses.dataclass
class _DivergenceData:
    """Fine-grid factors shared by every divergence term of one study.

    For component i, the term at mode k is (p[i] + 2 pi i (k1 q1[i] +
    k2 q2[i])) * e_k: `p` collects the f0-gradient and inverse-Jacobian
    divergence pieces, `q1`/`q2` the factors that the mode's own derivative
    multiplies.
    """

    p: np.ndarray
    q1: np.ndarray
    q2: np.ndarray


def _real_grid(coeffs: np.ndarray, n: int, N: int) -> np.ndarray:
    values = synthesize_table(coeffs, n, N)
    residue = float(np.max(np.abs(values.imag), initial=0.0))
    if residue > 1e-8:
        raise ValueError(f"synthesis of a symmetric table left imaginary residue {residue:.3e}")
    return values.real


def _divergence_data(f0: SRBEstimate, m: TorusMapSpec, config: SpectralConfig) -> _DivergenceData:
    n, N = config.n, config.N
    density = f0.density.symmetrized()
    modes = mode_set(n)
    f0_grid = _real_grid(density.coeffs, n, N)
    grad1 = _real_grid(TWO_PI * 1j * modes[:, 0] * density.coeffs, n, N)
    grad2 = _real_grid(TWO_PI * 1j * modes[:, 1] * density.coeffs, n, N)
    x = fine_grid(N)
    inv = inverse_jacobian(jacobian(m, x))
    div = div_inverse_jacobian(m, x)
    p = np.empty((2, N, N))
    q1 = np.empty((2, N, N))
    q2 = np.empty((2, N, N))
    for i in range(2):
        p[i] = grad1 * inv[..., 0, i] + grad2 * inv[..., 1, i] + f0_grid * div[..., i]
        q1[i] = f0_grid * inv[..., 0, i]
        q2[i] = f0_grid * inv[..., 1, i]
    return _DivergenceData(p=p, q1=q1, q2=q2)


def divergence_term(f0: SRBEstimate, m: TorusMapSpec, mode, component: int,
                    config: SpectralConfig) -> SpectralField:
    """Mean-zeroed coefficients of div(f0 (DT)^{-1} E) for one elementary field.

    E is (e_k, 0) for component 1 and (0, e_k) for component 2.  The raw
    (0,0) coefficient is pure quadrature residue (the divergence integrates
    to zero) and is zeroed so resolvent inputs are exactly mean-free.  Bins
    at unpaired Nyquist modes are zeroed as well: the terms for k and -k
    are pointwise conjugate functions, so their exact coefficient tables
    are Hermitian images of each other except at modes whose negation falls
    outside F_n, and keeping that unpairable content would break the
    Hermitian symmetry of the numerator table downstream.
    """
    if component not in (1, 2):
        raise ValueError(f"component must be 1 or 2, got {component}")
    data = _divergence_data(f0, m, config)
    k1, k2 = int(mode[0]), int(mode[1])
    x = fine_grid(config.N)
    wave = np.exp(TWO_PI * 1j * (k1 * x[..., 0] + k2 * x[..., 1]))
    i = component - 1
    g = (data.p[i] + TWO_PI * 1j * (k1 * data.q1[i] + k2 * data.q2[i])) * wave
    table = analyze_table(g, config.n)
    table[zero_mode_index(config.n)] = 0.0
    table[negation_table(config.n) < 0] = 0.0
    return SpectralField(n=config.n, coeffs=table)


def raw_numerator(c: ObjectiveSpec, tm: TransferMatrix, solver: ResolventSolver,
                  f0: SRBEstimate, m: TorusMapSpec, mode, component: int) -> complex:
    """One pre-division numerator: -<c, resolvent(L(divergence term))>."""
    g = divergence_term(f0, m, mode, component, tm.config)
    h = apply_transfer(tm, g.coeffs)
    r = solve_mean_zero(solver, h)
    chat = pairing_coefficients(c, tm.config)
    return complex(-np.sum(chat * np.conj(r)))


@dataclasses.dataclass
class RawNumerators:
    """Numerator table for all (component, mode) pairs plus loop diagnostics."""

    values: np.ndarray
    max_divergence_mean: float
    per_coefficient_seconds: float


def raw_numerators(c: ObjectiveSpec, tm: TransferMatrix, solver: ResolventSolver,
                   f0: SRBEstimate, m: TorusMapSpec, batch_size: int = DEFAULT_BATCH,
                   workers: int | None = None) -> RawNumerators:
    """All raw numerators, computed in vectorized batches of modes.

    Each batch stacks its divergence-term grids, runs one batched transform,
    one matrix product, and one multi-right-hand-side resolvent solve.
    Batches execute on a small thread pool (numpy releases the lock in the
    transforms and BLAS calls); every task writes disjoint output slots and
    the diagnostics are reduced in canonical order afterwards, so the result
    is deterministic for any worker count.
    """
    config = tm.config
    n, N = config.n, config.N
    started = time.perf_counter()
    data = _divergence_data(f0, m, config)
    chat = pairing_coefficients(c, config)
    modes = mode_set(n)
    zero_idx = zero_mode_index(n)
    unpaired = negation_table(n) < 0
    axis = np.arange(N) / N
    mode_range = np.arange(-n // 2 + 1, n // 2 + 1)
    wave1 = np.exp(TWO_PI * 1j * np.outer(mode_range, axis))
    wave2 = wave1
    offset = n // 2 - 1
    values = np.empty((2, n * n), dtype=complex)
    batch_means = {}

    def run_batch(component: int, start: int) -> None:
        stop = min(start + batch_size, n * n)
        k1 = modes[start:stop, 0]
        k2 = modes[start:stop, 1]
        waves = wave1[k1 + offset][:, :, None] * wave2[k2 + offset][:, None, :]
        i = component - 1
        linear = data.p[i] + TWO_PI * 1j * (
            k1[:, None, None] * data.q1[i] + k2[:, None, None] * data.q2[i]
        )
        tables = analyze_table(linear * waves, n)
        means = tables[:, zero_idx].copy()
        tables[:, zero_idx] = 0.0
        tables[:, unpaired] = 0.0
        h = apply_transfer(tm, tables.T)
        r = solve_mean_zero(solver, h)
        values[i, start:stop] = -(chat @ np.conj(r))
        batch_means[(component, start)] = float(np.max(np.abs(means)))

    tasks = [(component, start) for component in (1, 2)
             for start in range(0, n * n, batch_size)]
    if workers is None:
        workers = min(4, os.cpu_count() or 1)
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_batch, component, start) for component, start in tasks]
            for future in futures:
                future.result()
    else:
        for component, start in tasks:
            run_batch(component, start)

    max_mean = max(batch_means[key] for key in sorted(batch_means))
    elapsed = time.perf_counter() - started
    return RawNumerators(
        values=values,
        max_divergence_mean=max_mean,
        per_coefficient_seconds=elapsed / (2 * n * n),
    )


@dataclasses.dataclass
class OptimalField:
    """Unit-norm optimal perturbation coefficients with their numerators.

    a1/a2 are the two component tables over F_n; nu is the normalization
    constant (equal to the optimal objective value); raw_numerators keeps the
    pre-division integrals so J can be evaluated on any coefficient table by
    linearity.  hermitian_defect records max |a(k) - conj(a(-k))| measured
    before the forced symmetrization.
    """

    n: int
    gamma: float
    a1: np.ndarray
    a2: np.ndarray
    nu: float
    raw_numerators: np.ndarray | None = None
    hermitian_defect: float = 0.0
    per_coefficient_seconds: float = 0.0
    max_divergence_mean: float = 0.0

    def __post_init__(self) -> None:
        for name in ("a1", "a2"):
            table = np.asarray(getattr(self, name), dtype=complex)
            if table.shape != (self.n * self.n,):
                raise ValueError(
                    f"{name} must have {self.n * self.n} entries for n={self.n}, "
                    f"got shape {table.shape}"
                )
            setattr(self, name, table)

    @property
    def tables(self) -> np.ndarray:
        return np.stack([self.a1, self.a2])


def _pre_symmetrization_defect(tables: np.ndarray, n: int) -> float:
    neg = negation_table(n)
    paired = neg >= 0
    worst = 0.0
    for table in tables:
        gaps = np.abs(table[paired] - np.conj(table[neg[paired]]))
        worst = max(worst, float(np.max(gaps, initial=0.0)))
    return worst


def optimal_field(c: ObjectiveSpec, tm: TransferMatrix, solver: ResolventSolver,
                  f0: SRBEstimate, m: TorusMapSpec, config: SpectralConfig | None = None,
                  batch_size: int = DEFAULT_BATCH, workers: int | None = None) -> OptimalField:
    """The norm-one maximizer of the response objective.

    Raw numerators are divided by the Sobolev weights, pair-symmetrized
    (unpaired Nyquist modes zeroed), and scaled onto the weighted unit
    sphere; the scale factor is returned as nu.
    """
    if config is not None and config != tm.config:
        raise ValueError("config disagrees with the transfer matrix's config")
    config = tm.config
    n = config.n
    numerators = raw_numerators(c, tm, solver, f0, m, batch_size=batch_size, workers=workers)
    peak = float(np.max(np.abs(numerators.values)))
    if peak < DEGENERACY_FLOOR:
        raise DegenerateObjective(
            f"all raw numerators below {DEGENERACY_FLOOR:g} (max {peak:.3e}); "
            "the objective vanishes on the whole mode span"
        )
    weights = sobolev_weight(mode_set(n), config.gamma)
    a_raw = numerators.values / weights
    defect = _pre_symmetrization_defect(a_raw, n)
    a_sym = np.stack([symmetrize_table(a_raw[0], n), symmetrize_table(a_raw[1], n)])
    nu = float(np.sqrt(np.sum(weights * (np.abs(a_sym) ** 2))))
    if nu < DEGENERACY_FLOOR:
        raise DegenerateObjective(f"normalization collapsed: nu = {nu:.3e}")
    a = a_sym / nu
    return OptimalField(
        n=n,
        gamma=config.gamma,
        a1=a[0],
        a2=a[1],
        nu=nu,
        raw_numerators=numerators.values,
        hermitian_defect=defect,
        per_coefficient_seconds=numerators.per_coefficient_seconds,
        max_divergence_mean=numerators.max_divergence_mean,
    )


def objective_value(field, raw_numerators) -> float:
    """J of a coefficient field, evaluated through stored raw numerators.

    `field` may be an OptimalField or a plain (2, n^2) coefficient array.
    The pairing is sesquilinear, sum of conj(a) times numerator, and the
    imaginary residue is checked against 1e-8 before being discarded.
    """
    if isinstance(raw_numerators, RawNumerators):
        raw_numerators = raw_numerators.values
    if raw_numerators is None:
        raise MissingNumerator("no raw numerators supplied")
    numerators = np.asarray(raw_numerators)
    tables = field.tables if isinstance(field, OptimalField) else np.asarray(field, dtype=complex)
    if tables.shape != numerators.shape:
        raise MissingNumerator(
            f"field carries modes with no stored numerator: field shape {tables.shape}, "
            f"numerator shape {numerators.shape}"
        )
    j = complex(np.sum(np.conj(tables) * numerators))
    if abs(j.imag) > 1e-8:
        raise ValueError(f"objective imaginary residue {j.imag:.3e} exceeds 1e-8")
    return float(j.real)


def evaluate_field(field: OptimalField, points) -> np.ndarray:
    """Real field vectors at arbitrary points (..., 2)."""
    return _field_values(mode_set(field.n), field.a1, field.a2, np.asarray(points, dtype=float))


def field_grids(field: OptimalField, N: int) -> np.ndarray:
    """Both components synthesized on the N x N grid, shape (2, N, N)."""
    return np.stack([
        _real_grid(field.a1, field.n, N),
        _real_grid(field.a2, field.n, N),
    ])


def mean_field_norm(field: OptimalField, N: int) -> float:
    """Fine-grid average of the pointwise Euclidean norm of the field."""
    grids = field_grids(field, N)
    return float(np.mean(np.hypot(grids[0], grids[1])))


def write_optimal_field_csv(path, field: OptimalField) -> None:
    """Write `component,k1,k2,re,im` rows, component 1 then 2, canonical order."""
    modes = mode_set(field.n)
    lines = ["component,k1,k2,re,im"]
    for component, table in ((1, field.a1), (2, field.a2)):
        for (k1, k2), value in zip(modes, table):
            lines.append(
                f"{component},{k1},{k2},{format_float(value.real)},{format_float(value.imag)}"
            )
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")


def read_optimal_field_csv(path) -> tuple[int, np.ndarray, np.ndarray]:
    """Inverse of write_optimal_field_csv; returns (n, a1, a2)."""
    with open(path, encoding="ascii") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0] != "component,k1,k2,re,im":
        raise ConfigError(f"{path}: expected header 'component,k1,k2,re,im'")
    rows = lines[1:]
    if len(rows) % 2 != 0:
        raise ConfigError(f"{path}: odd row count {len(rows)}")
    count = len(rows) // 2
    n = int(round(count**0.5))
    if n * n != count:
        raise ConfigError(f"{path}: {count} rows per component is not a square mode count")
    modes = mode_set(n)
    tables = np.empty((2, count), dtype=complex)
    for idx, line in enumerate(rows):
        parts = line.split(",")
        if len(parts) != 5:
            raise ConfigError(f"{path}: row {idx + 2} has {len(parts)} fields, expected 5")
        component = int(parts[0])
        slot = idx % count
        expected_component = 1 if idx < count else 2
        if component != expected_component:
            raise ConfigError(f"{path}: row {idx + 2} breaks the component ordering")
        if int(parts[1]) != modes[slot, 0] or int(parts[2]) != modes[slot, 1]:
            raise ConfigError(f"{path}: row {idx + 2} breaks canonical mode order")
        tables[component - 1, slot] = complex(float(parts[3]), float(parts[4]))
    return n, tables[0], tables[1]
