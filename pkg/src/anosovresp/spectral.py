"""Fourier bookkeeping on the two-torus.

Contents: the retained mode set F_n, Fejér and scaled-Sobolev weights, the
fine sampling grid, forward/backward transforms between grid samples and
coefficient tables, and the SpectralField container with its CSV form.

Conventions fixed here and relied on everywhere else:

* coefficients follow f_hat(k) = integral of f(x) conj(e_k(x)) dx with basis
  e_k(x) = exp(2 pi i k.x), so analyze divides the DFT by N^2;
* the mode set is F_n = {-n/2+1, ..., n/2} x {-n/2+1, ..., n/2}, enumerated
  row-major by k1 then k2, and that enumeration orders every coefficient
  vector and matrix axis in the package;
* modes with k1 = n/2 or k2 = n/2 have no negation partner inside F_n; they
  participate in operator algebra but are zeroed when a field is forced real
  (symmetrized), since a lone Nyquist mode cannot be conjugate-paired.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .errors import BadOrder, ConfigError, GridTooCoarse

SOBOLEV_ORDER = 7

_MODE_CACHE: dict[int, np.ndarray] = {}
_NEGATION_CACHE: dict[int, np.ndarray] = {}


def _require_order(n: int) -> None:
    if n % 2 != 0 or n < 4:
        raise BadOrder(f"Fourier order must be even and >= 4, got n={n}")


@dataclasses.dataclass(frozen=True)
class SpectralConfig:
    """Discretization parameters: coarse order n, fine grid size N, Sobolev scale gamma."""

    n: int
    N: int
    gamma: float

    def __post_init__(self) -> None:
        _require_order(self.n)
        if self.N < 4 * self.n:
            raise GridTooCoarse(f"need N >= 4n, got N={self.N} with n={self.n}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")

    @property
    def mode_count(self) -> int:
        return self.n * self.n


def mode_set(n: int) -> np.ndarray:
    """All n^2 modes of F_n as an (n^2, 2) integer array in canonical order."""
    _require_order(n)
    cached = _MODE_CACHE.get(n)
    if cached is None:
        r = np.arange(-n // 2 + 1, n // 2 + 1)
        k1, k2 = np.meshgrid(r, r, indexing="ij")
        cached = np.stack([k1.ravel(), k2.ravel()], axis=1)
        cached.setflags(write=False)
        _MODE_CACHE[n] = cached
    return cached


def mode_index(n: int, k1, k2):
    """Position of mode (k1, k2) in the canonical enumeration."""
    return (np.asarray(k1) + n // 2 - 1) * n + (np.asarray(k2) + n // 2 - 1)


def zero_mode_index(n: int) -> int:
    return int(mode_index(n, 0, 0))


def negation_table(n: int) -> np.ndarray:
    """Index of -k per mode, or -1 for the unpaired Nyquist modes."""
    cached = _NEGATION_CACHE.get(n)
    if cached is None:
        modes = mode_set(n)
        half = n // 2
        paired = (modes[:, 0] != half) & (modes[:, 1] != half)
        cached = np.full(n * n, -1, dtype=np.int64)
        cached[paired] = mode_index(n, -modes[paired, 0], -modes[paired, 1])
        cached.setflags(write=False)
        _NEGATION_CACHE[n] = cached
    return cached


def fejer_weight(k, n: int):
    """Fejér multiplier prod_i max(0, 1 - |k_i| / (n + 1)).

    Strictly positive on all of F_n because |k_i| <= n/2 < n + 1.
    """
    k = np.asarray(k, dtype=float)
    factors = np.maximum(0.0, 1.0 - np.abs(k) / (n + 1.0))
    return factors[..., 0] * factors[..., 1]


def sobolev_weight(k, gamma: float):
    """Squared gamma-scaled H^7 norm of the basis mode e_k.

    Evaluates sum_{m=0}^{7} ((2 pi gamma)^2 |k|_2^2)^m with running powers;
    a direct eight-term summation reproduces it to the last bit.
    """
    if gamma <= 0.0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    k = np.asarray(k, dtype=float)
    s = (2.0 * np.pi * gamma) ** 2 * (k[..., 0] ** 2 + k[..., 1] ** 2)
    total = np.ones_like(s)
    power = np.ones_like(s)
    for _ in range(SOBOLEV_ORDER):
        power = power * s
        total = total + power
    return total


def fine_grid(N: int) -> np.ndarray:
    """The N^2 points (i/N, j/N) as an (N, N, 2) array, row-major."""
    if N < 1:
        raise ConfigError(f"fine grid size must be >= 1, got {N}")
    g = np.arange(N) / N
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    return np.stack([x1, x2], axis=-1)


@dataclasses.dataclass
class SpectralField:
    """Coefficient table of a scalar field over F_n, canonical mode order.

    The `real` flag asserts conjugate symmetry coeff(-k) = conj(coeff(k)) on
    paired modes; it is a statement about the data, not an enforcement.  Use
    symmetrized() to force exact symmetry and drop the unpaired modes.
    """

    n: int
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self) -> None:
        _require_order(self.n)
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (self.n * self.n,):
            raise ValueError(
                f"expected {self.n * self.n} coefficients for n={self.n}, "
                f"got shape {coeffs.shape}"
            )
        self.coeffs = coeffs

    @property
    def mean(self) -> complex:
        """The (0,0) coefficient, equal to the integral of the field."""
        return complex(self.coeffs[zero_mode_index(self.n)])

    def hermitian_defect(self) -> float:
        """max |coeff(k) - conj(coeff(-k))| over modes with -k in F_n."""
        neg = negation_table(self.n)
        paired = neg >= 0
        gaps = np.abs(self.coeffs[paired] - np.conj(self.coeffs[neg[paired]]))
        return float(np.max(gaps, initial=0.0))

    def symmetrized(self) -> "SpectralField":
        """Pair-averaged copy with the unpaired Nyquist modes zeroed."""
        return SpectralField(n=self.n, coeffs=symmetrize_table(self.coeffs, self.n), real=True)


def symmetrize_table(coeffs: np.ndarray, n: int) -> np.ndarray:
    """(c(k) + conj(c(-k))) / 2 on paired modes, zero on unpaired ones.

    Works on the last axis, so stacked tables symmetrize in one call.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    neg = negation_table(n)
    paired = neg >= 0
    out = np.zeros_like(coeffs)
    out[..., paired] = 0.5 * (coeffs[..., paired] + np.conj(coeffs[..., neg[paired]]))
    return out


def analyze(samples: np.ndarray, n: int) -> SpectralField:
    """Coefficients <f, e_k> of fine-grid samples, restricted to F_n."""
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] != samples.shape[1]:
        raise ValueError(f"expected a square sample grid, got shape {samples.shape}")
    _require_order(n)
    if samples.shape[0] < 4 * n:
        raise GridTooCoarse(
            f"need N >= 4n to analyze, got N={samples.shape[0]} with n={n}"
        )
    return SpectralField(n=n, coeffs=analyze_table(samples, n))


def analyze_table(samples: np.ndarray, n: int) -> np.ndarray:
    """Raw coefficient array of analyze; samples may be batched (..., N, N)."""
    N = samples.shape[-1]
    spectrum = np.fft.fft2(samples) / (N * N)
    modes = mode_set(n)
    return spectrum[..., modes[:, 0] % N, modes[:, 1] % N]


def synthesize(field: SpectralField, N: int) -> np.ndarray:
    """Evaluate sum_k coeff(k) e^{2 pi i k.x} on the N x N grid."""
    return synthesize_table(field.coeffs, field.n, N)


def synthesize_table(coeffs: np.ndarray, n: int, N: int) -> np.ndarray:
    if N < n:
        raise ValueError(f"synthesis grid N={N} cannot hold {n} distinct bins per axis")
    modes = mode_set(n)
    spectrum = np.zeros((N, N), dtype=complex)
    spectrum[modes[:, 0] % N, modes[:, 1] % N] = coeffs
    return np.fft.ifft2(spectrum) * (N * N)


def format_float(value: float) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(value))


def write_field_csv(path, field: SpectralField) -> None:
    """Write `k1,k2,re,im` rows in canonical mode order."""
    modes = mode_set(field.n)
    lines = ["k1,k2,re,im"]
    for (k1, k2), c in zip(modes, field.coeffs):
        lines.append(f"{k1},{k2},{format_float(c.real)},{format_float(c.imag)}")
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")


def read_field_csv(path) -> SpectralField:
    """Inverse of write_field_csv; checks the mode column against F_n."""
    with open(path, encoding="ascii") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0] != "k1,k2,re,im":
        raise ConfigError(f"{path}: expected header 'k1,k2,re,im'")
    rows = [line.split(",") for line in lines[1:]]
    n = int(round(len(rows) ** 0.5))
    if n * n != len(rows):
        raise ConfigError(f"{path}: {len(rows)} rows is not a square mode count")
    modes = mode_set(n)
    coeffs = np.empty(n * n, dtype=complex)
    for idx, row in enumerate(rows):
        if len(row) != 4:
            raise ConfigError(f"{path}: row {idx + 2} has {len(row)} fields, expected 4")
        k1, k2 = int(row[0]), int(row[1])
        if k1 != modes[idx, 0] or k2 != modes[idx, 1]:
            raise ConfigError(
                f"{path}: row {idx + 2} mode ({k1},{k2}) breaks canonical order"
            )
        coeffs[idx] = complex(float(row[2]), float(row[3]))
    return SpectralField(n=n, coeffs=coeffs)


def write_grid_csv(path, values: np.ndarray) -> None:
    """Write `x1,x2,value` rows for an N x N grid of real samples, row-major."""
    values = np.asarray(values)
    N = values.shape[0]
    if values.shape != (N, N):
        raise ValueError(f"expected a square grid, got shape {values.shape}")
    lines = ["x1,x2,value"]
    for i in range(N):
        x1 = format_float(i / N)
        for j in range(N):
            lines.append(f"{x1},{format_float(j / N)},{format_float(values[i, j])}")
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")


def read_grid_csv(path) -> np.ndarray:
    """Inverse of write_grid_csv; returns the (N, N) value grid."""
    with open(path, encoding="ascii") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0] != "x1,x2,value":
        raise ConfigError(f"{path}: expected header 'x1,x2,value'")
    count = len(lines) - 1
    N = int(round(count**0.5))
    if N * N != count:
        raise ConfigError(f"{path}: {count} rows is not a square grid")
    values = np.empty((N, N))
    for idx in range(count):
        row = lines[idx + 1].split(",")
        if len(row) != 3:
            raise ConfigError(f"{path}: row {idx + 2} has {len(row)} fields, expected 3")
        values[idx // N, idx % N] = float(row[2])
    return values
