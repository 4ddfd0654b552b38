"""Toeplitz matrices T_n(f) and circulant approximations C_n(f)."""

import math

import numpy as np
import scipy.linalg

from .symbols import evaluate, fourier_coefficients, parse_symbol, DEFAULT_RESOLUTION

CIRCULANT_STRATEGIES = ("optimal", "symbol_sampled")

_IMAG_TRUNCATE = 1e-12


def _maybe_real(M):
    if np.iscomplexobj(M) and np.max(np.abs(M.imag), initial=0.0) <= _IMAG_TRUNCATE:
        return np.ascontiguousarray(M.real)
    return M


def build_toeplitz(series, n: int) -> np.ndarray:
    """Dense ``T`` with ``T[i, j] = series[i - j]``."""
    if n < 1:
        raise ValueError("n must be positive")
    if series.maxlag < n - 1 and not series.exact:
        raise ValueError(
            f"series has maxlag={series.maxlag} but order {n} needs {n - 1} (quadrature series)"
        )
    col = series.lags(0, n - 1)
    row = series.lags(-(n - 1), 0)[::-1]
    return _maybe_real(scipy.linalg.toeplitz(col, row))


def toeplitz_from_symbol(expr, n, resolution=DEFAULT_RESOLUTION):
    return build_toeplitz(fourier_coefficients(expr, n - 1, resolution), n)


def _wrapped_diagonals(T):
    n = T.shape[0]
    cols = np.arange(n)
    rows = (cols[None, :] + cols[:, None]) % n
    # row j of the result collects the entries T[(i + j) % n, i]
    return T[rows, cols[None, :]]


def optimal_circulant(T) -> np.ndarray:
    """Circulant minimizing the Frobenius distance to ``T``.

    Each wrapped diagonal of the result is the mean of the matching wrapped
    diagonal of ``T``; for Toeplitz input this is
    ``c_j = ((n - j) t_j + j t_{j-n}) / n``.
    """
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {T.shape}")
    first_col = _wrapped_diagonals(T).mean(axis=1)
    return _maybe_real(scipy.linalg.circulant(first_col))


def symbol_circulant(expr, n: int) -> np.ndarray:
    """Circulant whose eigenvalues are the samples ``f(2 pi j / n)``.

    Orientation matches ``T_n(f)``: the first column approximates the
    Fourier coefficients ``t_0, t_1, ...``.
    """
    if isinstance(expr, str):
        expr = parse_symbol(expr)
    angles = -2 * math.pi * np.arange(n) / n
    angles = np.where(angles < -math.pi, angles + 2 * math.pi, angles)
    first_col = np.fft.ifft(evaluate(expr, angles))
    return _maybe_real(scipy.linalg.circulant(first_col))


def circulant_approximation(T, expr=None, strategy="optimal"):
    if strategy == "optimal":
        return optimal_circulant(T)
    if strategy in ("symbol_sampled", "symbol-sampled"):
        if expr is None:
            raise ValueError("symbol_sampled circulant needs the generating symbol")
        return symbol_circulant(expr, T.shape[0])
    raise ValueError(f"unknown circulant strategy {strategy!r}")


def is_circulant(C, tol=1e-12):
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(C), initial=0.0)))
    return bool(np.max(np.abs(C - scipy.linalg.circulant(C[:, 0])), initial=0.0) <= tol * scale)


def circulant_spectrum(C):
    """Eigenvalues of a circulant matrix as the DFT of its first column."""
    from .spectral import Spectrum

    C = np.asarray(C)
    if not is_circulant(C):
        raise ValueError("matrix is not circulant")
    return Spectrum(np.fft.fft(C[:, 0]), kind="eigenvalues", meta={"role": "circulant"})
