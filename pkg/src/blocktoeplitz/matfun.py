"""Functions of Hermitian positive definite matrices and the geometric mean.

Everything goes through a full Hermitian eigendecomposition. Eigenvalues
that are slightly negative or tiny (barely positive definite Toeplitz
matrices of symbols with a zero) are lifted to a floor instead of failing;
see ``CLAMP_NEGATIVE`` and ``CLAMP_FLOOR``.
"""

import contextlib
import contextvars
from dataclasses import dataclass

import numpy as np
import scipy.linalg

CLAMP_NEGATIVE = 1e-10
CLAMP_FLOOR = 1e-12
HERMITIAN_TOL = 1e-10


class NotHPDError(np.linalg.LinAlgError):
    def __init__(self, message, where=None):
        super().__init__(message if where is None else f"{message} [{where}]")
        self.where = where


_clamp_counter = contextvars.ContextVar("clamp_counter", default=None)


@contextlib.contextmanager
def clamp_tracking():
    """Count clamped eigenvalues in this context.

    Yields a dict with keys ``matrices`` (factorizations touched by the
    clamp) and ``eigenvalues`` (eigenvalues lifted in total).
    """
    counts = {"matrices": 0, "eigenvalues": 0}
    token = _clamp_counter.set(counts)
    try:
        yield counts
    finally:
        _clamp_counter.reset(token)


def hermitize(M):
    return (M + M.conj().T) / 2


@dataclass(frozen=True)
class HpdFactorization:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def order(self):
        return len(self.eigenvalues)

    def power(self, p):
        Q = self.eigenvectors
        return hermitize((Q * self.eigenvalues**p) @ Q.conj().T)


def hpd_factor(A) -> HpdFactorization:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = float(np.max(np.abs(A), initial=0.0))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > HERMITIAN_TOL * max(scale, 1e-300):
        raise NotHPDError("matrix is not Hermitian")
    w, Q = scipy.linalg.eigh(hermitize(A))
    norm = float(np.max(np.abs(w), initial=0.0))
    if norm == 0.0:
        raise NotHPDError("matrix is zero")
    if w[0] < -CLAMP_NEGATIVE * norm:
        raise NotHPDError(f"minimum eigenvalue {w[0]:.3e} below -{CLAMP_NEGATIVE:g}*||A||")
    floor = CLAMP_FLOOR * norm
    low = w < floor
    if np.any(low):
        w = np.where(low, floor, w)
        counts = _clamp_counter.get()
        if counts is not None:
            counts["matrices"] += 1
            counts["eigenvalues"] += int(low.sum())
    return HpdFactorization(w, Q)


def hpd_power(A, p: float) -> np.ndarray:
    """``A**p`` for Hermitian positive definite ``A`` (clamp policy applies)."""
    return hpd_factor(A).power(p)


def geometric_mean(A, B) -> np.ndarray:
    """``A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}``."""
    fa = hpd_factor(A)
    hpd_factor(B)  # validates B
    root = fa.power(0.5)
    inv_root = fa.power(-0.5)
    inner = hpd_power(hermitize(inv_root @ B @ inv_root), 0.5)
    return hermitize(root @ inner @ root)


def norm(A, kind="frobenius", p=None) -> float:
    """Frobenius, spectral or Schatten-p norm.

    ``kind`` may be ``"schatten_p"`` with ``p`` given, or e.g. ``"schatten_1"``.
    """
    A = np.asarray(A)
    if kind == "frobenius":
        return float(np.linalg.norm(A, "fro"))
    if kind == "spectral":
        return float(scipy.linalg.svdvals(A)[0]) if A.size else 0.0
    if kind.startswith("schatten"):
        if p is None:
            p = float(kind.split("_", 1)[1])
        if p < 1:
            raise ValueError("Schatten norm needs p >= 1")
        s = scipy.linalg.svdvals(A)
        if np.isinf(p):
            return float(s[0])
        return float(np.sum(s**p) ** (1.0 / p))
    raise ValueError(f"unknown norm kind {kind!r}")
