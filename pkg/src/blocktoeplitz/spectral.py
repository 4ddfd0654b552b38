"""Spectra of dense matrices and comparison against sampled symbols."""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .blocks import symbol_matrices
from .symbols import midpoint_grid

MAX_ORDER = 8192
# the Gaussian tail beyond this many widths is below 1e-12
BUMP_RADIUS = 7.5


class ConvergenceError(np.linalg.LinAlgError):
    pass


def lexsort_complex(values):
    """Indices sorting ``values`` by real part, ties by imaginary part."""
    values = np.asarray(values)
    return np.lexsort((np.imag(values), np.real(values)))


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    kind: str = "eigenvalues"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("eigenvalues", "singular_values"):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")

    def __len__(self):
        return len(self.values)

    def sorted(self):
        return np.asarray(self.values)[lexsort_complex(self.values)]

    @property
    def real(self):
        return np.sort(np.real(self.values))

    def max_abs_imag(self):
        return float(np.max(np.abs(np.imag(self.values)), initial=0.0))


def _check_square(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_ORDER:
        raise ValueError(f"order {A.shape[0]} exceeds the dense limit {MAX_ORDER}")
    return A


def eig_general(A, **meta) -> Spectrum:
    """All eigenvalues of a general square matrix (LAPACK geev: balancing,
    Hessenberg reduction, shifted QR)."""
    A = _check_square(A)
    try:
        w = scipy.linalg.eigvals(A, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    return Spectrum(w, "eigenvalues", dict(meta, order=A.shape[0]))


def eig_hermitian(A, **meta) -> Spectrum:
    A = _check_square(A)
    scale = float(np.max(np.abs(A), initial=0.0))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-10 * max(scale, 1e-300):
        raise ValueError("matrix is not Hermitian")
    try:
        w = scipy.linalg.eigvalsh((A + A.conj().T) / 2)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    return Spectrum(w, "eigenvalues", dict(meta, order=A.shape[0]))


def singular_values(A, **meta) -> Spectrum:
    A = _check_square(A)
    return Spectrum(scipy.linalg.svdvals(A), "singular_values", dict(meta, order=A.shape[0]))


def sample_symbol_spectrum(blocksym, gridsize: int, variant="plain") -> Spectrum:
    """Eigenvalues of the k x k symbol at ``gridsize`` midpoints of [-pi, pi]."""
    if gridsize < 1:
        raise ValueError("gridsize must be >= 1")
    mats = symbol_matrices(blocksym, midpoint_grid(gridsize), variant)
    if variant == "symmetrized":
        vals = np.linalg.eigvalsh(mats).ravel().astype(complex)
    else:
        vals = np.linalg.eigvals(mats).ravel()
    vals = vals[lexsort_complex(vals)]
    if np.all(np.imag(vals) == 0):
        vals = np.real(vals)
    return Spectrum(vals, "eigenvalues", {"role": "symbol", "gridsize": gridsize, "variant": variant})


def _resample_sorted(values, size):
    if len(values) == size:
        return values
    pos = np.linspace(0, len(values) - 1, size)
    return np.interp(pos, np.arange(len(values)), values)


def compare_distributions(empirical, reference) -> dict:
    """Sorted-quantile comparison of the real parts of two spectra.

    Returns ``sup_sorted_gap`` (max gap between order statistics) and
    ``wasserstein1`` (mean gap), plus the discarded imaginary magnitudes.
    The reference is resampled by sorted-index interpolation when the
    sizes differ.
    """
    a = np.sort(np.real(empirical.values))
    b = np.sort(np.real(reference.values))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("cannot compare empty spectra")
    b = _resample_sorted(b, len(a))
    gap = np.abs(a - b)
    return {
        "sup_sorted_gap": float(gap.max()),
        "wasserstein1": float(gap.mean()),
        "max_abs_imag_empirical": empirical.max_abs_imag(),
        "max_abs_imag_reference": reference.max_abs_imag(),
    }


@dataclass(frozen=True)
class TestFunction:
    """Continuous compactly supported test function on the real line.

    ``gaussian_bump``: Gaussian ``exp(-r^2/2)`` with ``r = (x - center)/width``,
    cut at ``|r| = BUMP_RADIUS`` and shifted down by its value there so that
    it stays continuous; peak value 1 at ``center``.
    ``poly_window``: ``(4 (x - lo)(hi - x) / (hi - lo)^2)^degree`` on
    ``[lo, hi]``, zero outside.
    """

    __test__ = False  # not a pytest class

    family: str
    params: tuple

    @classmethod
    def gaussian_bump(cls, center, width):
        if width <= 0:
            raise ValueError("width must be positive")
        return cls("gaussian_bump", (float(center), float(width)))

    @classmethod
    def poly_window(cls, degree, lo, hi):
        if hi <= lo or degree < 1:
            raise ValueError("poly_window needs lo < hi and degree >= 1")
        return cls("poly_window", (int(degree), float(lo), float(hi)))

    @property
    def support(self):
        if self.family == "gaussian_bump":
            c, w = self.params
            return c - BUMP_RADIUS * w, c + BUMP_RADIUS * w
        _, lo, hi = self.params
        return lo, hi

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "gaussian_bump":
            c, w = self.params
            edge = math.exp(-BUMP_RADIUS**2 / 2)
            g = (np.exp(-(((x - c) / w) ** 2) / 2) - edge) / (1 - edge)
            return np.maximum(g, 0.0)
        if self.family == "poly_window":
            d, lo, hi = self.params
            inside = (x > lo) & (x < hi)
            base = 4 * (x - lo) * (hi - x) / (hi - lo) ** 2
            return np.where(inside, np.abs(base) ** d, 0.0)
        raise ValueError(f"unknown test function family {self.family!r}")


def distribution_residual(spectrum, blocksym, testfn, quadrature_points=4096,
                          variant="plain") -> float:
    """Gap between both sides of the eigenvalue-distribution identity for one
    test function: the normalized sum of F over Re(spectrum) versus the
    average over [-pi, pi] of the mean of F over the symbol's eigenvalues."""
    lhs = float(np.mean(testfn(np.real(spectrum.values))))
    sym = sample_symbol_spectrum(blocksym, quadrature_points, variant)
    rhs = float(np.mean(testfn(np.real(sym.values))))
    return abs(lhs - rhs)


@dataclass(frozen=True)
class ZeroTrend:
    orders: tuple
    scaled_norms: tuple
    verdict: str


def monotonicity(values, rtol=1e-12):
    """'decreasing' (strict), 'non-decreasing', 'non-increasing' or 'mixed'."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    slack = rtol * np.maximum(np.abs(v[:-1]), np.abs(v[1:]))
    if np.all(d < 0):
        return "decreasing"
    if np.all(d >= -slack):
        return "non-decreasing"
    if np.all(d <= slack):
        return "non-increasing"
    return "mixed"


def zero_distribution_trend(matrices) -> ZeroTrend:
    """``||Z||_F / sqrt(d)`` for matrices of increasing order ``d``."""
    if len(matrices) < 2:
        raise ValueError("need at least two matrices")
    orders = [np.asarray(M).shape[0] for M in matrices]
    if any(b <= a for a, b in zip(orders, orders[1:])):
        raise ValueError("matrix orders must be strictly increasing")
    scaled = tuple(float(np.linalg.norm(M, "fro") / math.sqrt(d)) for M, d in zip(matrices, orders))
    return ZeroTrend(tuple(orders), scaled, monotonicity(scaled))
