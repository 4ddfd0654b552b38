"""Block Toeplitz assembly, the block-diagonal symmetrizer and the k x k symbols."""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .matfun import NotHPDError, geometric_mean, hermitize, hpd_power
from .structured import build_toeplitz
from .symbols import (
    DEFAULT_RESOLUTION, evaluate, fourier_coefficients, midpoint_grid, parse_symbol, to_text,
)

LAYOUTS = ("tridiagonal", "full")
MAX_CYCLE_K = 6


@dataclass(frozen=True)
class BlockSymbol:
    """k x k grid of scalar symbols, keyed by 1-based ``(i, j)``.

    Missing keys are structurally zero blocks. ``texts`` keeps the source
    strings when built via :meth:`from_strings`.
    """

    k: int
    entries: dict
    layout: str = "tridiagonal"
    texts: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        for (i, j) in self.entries:
            if not (1 <= i <= self.k and 1 <= j <= self.k):
                raise ValueError(f"block key ({i},{j}) outside 1..{self.k}")
            if self.layout == "tridiagonal" and abs(i - j) > 1:
                raise ValueError(f"tridiagonal layout cannot hold block ({i},{j})")

    @classmethod
    def from_strings(cls, k, blocks, layout="tridiagonal"):
        """``blocks`` maps ``"i,j"`` strings or ``(i, j)`` tuples to symbol text."""
        entries, texts = {}, {}
        for key, text in blocks.items():
            if isinstance(key, str):
                i, j = (int(s) for s in key.split(","))
            else:
                i, j = key
            entries[(i, j)] = parse_symbol(text) if isinstance(text, str) else text
            texts[(i, j)] = text if isinstance(text, str) else to_text(text)
        return cls(k, entries, layout, texts)

    def get(self, i, j):
        return self.entries.get((i, j))

    def text(self, i, j):
        if (i, j) in self.texts:
            return self.texts[(i, j)]
        e = self.entries.get((i, j))
        return None if e is None else to_text(e)

    def off_diagonal_pairs(self):
        """``(lower, upper)`` symbols for j = 1..k-1: ``(f_{j+1,j}, f_{j,j+1})``."""
        return [(self.get(j + 1, j), self.get(j, j + 1)) for j in range(1, self.k)]


@dataclass
class AssemblyBundle:
    n: int
    A: np.ndarray
    E: np.ndarray | None = None
    Einv: np.ndarray | None = None
    Ahat: np.ndarray | None = None
    Pi: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def toeplitz_blocks(blocksym, n, resolution=DEFAULT_RESOLUTION):
    """Dict ``(i, j) -> T_n(f_ij)`` for every present block."""
    out = {}
    for key, expr in sorted(blocksym.entries.items()):
        out[key] = build_toeplitz(fourier_coefficients(expr, n - 1, resolution), n)
    return out


def _place(blocks, k, n):
    dtype = np.result_type(float, *[b.dtype for b in blocks.values()])
    M = np.zeros((k * n, k * n), dtype=dtype)
    for (i, j), B in blocks.items():
        M[(i - 1) * n:i * n, (j - 1) * n:j * n] = B
    return M


def assemble(blocksym, n: int, resolution=DEFAULT_RESOLUTION, blocks=None) -> np.ndarray:
    """The kn x kn matrix whose (i, j) block is ``T_n(f_ij)``."""
    if blocks is None:
        blocks = toeplitz_blocks(blocksym, n, resolution)
    return _place(blocks, blocksym.k, n)


def _require_tridiagonal_pairs(blocksym):
    if blocksym.layout != "tridiagonal":
        raise ValueError("the symmetrizer needs a tridiagonal layout")
    for j, (low, up) in enumerate(blocksym.off_diagonal_pairs(), start=1):
        if low is None or up is None:
            raise ValueError(f"off-diagonal pair ({j},{j + 1}) must be present on both sides")


def _symmetrizer_factors(blocksym, blocks):
    """Per pair j: (G(B_j^{-1}, C_j), its inverse, G(B_j, C_j))."""
    factors = []
    for j in range(1, blocksym.k):
        B = blocks[(j + 1, j)]
        C = blocks[(j, j + 1)]
        try:
            step = geometric_mean(hpd_power(B, -1.0), C)
            step_inv = hpd_power(step, -1.0)
            mean = geometric_mean(B, C)
        except NotHPDError as exc:
            raise NotHPDError(str(exc), where=(j, j + 1)) from exc
        factors.append((step, step_inv, mean))
    return factors


def _chain(factors, n):
    E, Einv = [np.eye(n)], [np.eye(n)]
    for step, step_inv, _ in factors:
        E.append(E[-1] @ step)
        Einv.append(step_inv @ Einv[-1])
    return E, Einv


def _block_diag(mats):
    n = mats[0].shape[0]
    k = len(mats)
    dtype = np.result_type(*[m.dtype for m in mats])
    out = np.zeros((k * n, k * n), dtype=dtype)
    for j, m in enumerate(mats):
        out[j * n:(j + 1) * n, j * n:(j + 1) * n] = m
    return out


def build_symmetrizer(blocksym, n: int, resolution=DEFAULT_RESOLUTION, blocks=None):
    """Block-diagonal ``E`` with ``E_1 = I`` and ``E_j = E_{j-1} G(B_{j-1}^{-1}, C_{j-1})``.

    ``B_j = T_n(f_{j+1,j})`` and ``C_j = T_n(f_{j,j+1})``. Returns ``(E, Einv)``;
    the inverse is assembled from the inverted geometric-mean factors.
    """
    _require_tridiagonal_pairs(blocksym)
    if blocks is None:
        blocks = toeplitz_blocks(blocksym, n, resolution)
    E, Einv = _chain(_symmetrizer_factors(blocksym, blocks), n)
    return _block_diag(E), _block_diag(Einv)


def _target_from(blocksym, blocks, factors, n):
    k = blocksym.k
    target = {}
    for j in range(1, k + 1):
        diag = blocks.get((j, j))
        if diag is not None:
            target[(j, j)] = hermitize(diag)
    for j, (_, _, mean) in enumerate(factors, start=1):
        target[(j + 1, j)] = mean
        target[(j, j + 1)] = mean
    M = _place(target, k, n) if target else np.zeros((k * n, k * n))
    return hermitize(M)


def build_target(blocksym, n: int, resolution=DEFAULT_RESOLUTION, blocks=None):
    """Hermitian block-tridiagonal matrix with diagonal ``T_n(f_jj)`` and
    off-diagonal blocks ``G(B_j, C_j)`` on both sides."""
    _require_tridiagonal_pairs(blocksym)
    if blocks is None:
        blocks = toeplitz_blocks(blocksym, n, resolution)
    return _target_from(blocksym, blocks, _symmetrizer_factors(blocksym, blocks), n)


def build_bundle(blocksym, n, resolution=DEFAULT_RESOLUTION, symmetrize=True):
    """Assemble ``A`` and, for tridiagonal layouts, ``E``, ``Einv``, the
    Hermitian target and the shuffle permutation, sharing all factorizations."""
    blocks = toeplitz_blocks(blocksym, n, resolution)
    bundle = AssemblyBundle(n=n, A=_place(blocks, blocksym.k, n))
    bundle.meta = {
        "symbols": {f"{i},{j}": blocksym.text(i, j) for (i, j) in sorted(blocksym.entries)},
        "quadrature_resolution": resolution,
    }
    if symmetrize:
        _require_tridiagonal_pairs(blocksym)
        factors = _symmetrizer_factors(blocksym, blocks)
        E, Einv = _chain(factors, n)
        bundle.E = _block_diag(E)
        bundle.Einv = _block_diag(Einv)
        bundle.Ahat = _target_from(blocksym, blocks, factors, n)
        bundle.Pi = shuffle_permutation(n, blocksym.k)
        bundle.meta["blocks_E"] = E
        bundle.meta["blocks_Einv"] = Einv
    return bundle


def symmetrized_matrix(bundle):
    """``E A E^{-1}`` computed blockwise (E is block diagonal)."""
    n = bundle.n
    k = bundle.A.shape[0] // n
    E, Einv = bundle.meta["blocks_E"], bundle.meta["blocks_Einv"]
    dtype = np.result_type(bundle.A.dtype, E[-1].dtype)
    out = np.zeros_like(bundle.A, dtype=dtype)
    for i in range(k):
        for j in range(k):
            blk = bundle.A[i * n:(i + 1) * n, j * n:(j + 1) * n]
            if not np.any(blk):
                continue
            out[i * n:(i + 1) * n, j * n:(j + 1) * n] = E[i] @ blk @ Einv[j]
    return out


def shuffle_permutation(n: int, k: int) -> np.ndarray:
    """Permutation matrix sending index ``(j-1) n + i`` to ``(i-1) k + j``."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    return np.eye(n * k)[shuffle_indices(n, k)]


def shuffle_indices(n, k):
    """``perm[new] = old`` for the block-to-interleaved reordering."""
    return np.arange(n * k).reshape(k, n).T.ravel()


def symbol_matrices(blocksym, thetas, variant="plain"):
    """Stack of k x k symbol matrices, shape ``(len(thetas), k, k)``."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    k = blocksym.k
    out = np.zeros((len(thetas), k, k))
    vals = {key: evaluate(expr, thetas) for key, expr in blocksym.entries.items()}
    if variant == "plain":
        for (i, j), v in vals.items():
            out[:, i - 1, j - 1] = v
        return out
    if variant != "symmetrized":
        raise ValueError(f"unknown variant {variant!r}")
    if blocksym.layout != "tridiagonal":
        raise ValueError("symmetrized symbol needs a tridiagonal layout")
    zero = np.zeros(len(thetas))
    for j in range(1, k + 1):
        out[:, j - 1, j - 1] = vals.get((j, j), zero)
    for j in range(1, k):
        prod = vals.get((j, j + 1), zero) * vals.get((j + 1, j), zero)
        if np.any(prod < 0):
            bad = thetas[np.argmax(prod < 0)]
            raise ValueError(
                f"f_{j},{j + 1} * f_{j + 1},{j} is negative at theta={bad:.6g}; "
                "symmetrized symbol undefined"
            )
        root = np.sqrt(prod)
        out[:, j - 1, j] = root
        out[:, j, j - 1] = root
    return out


def symbol_matrix(blocksym, theta: float, variant="plain") -> np.ndarray:
    return symbol_matrices(blocksym, [theta], variant)[0]


@dataclass(frozen=True)
class CycleReport:
    holds: bool
    worst_theta: float | None
    worst_gap: float
    cycles: tuple = ()
    reason: str = ""


def _simple_cycles(k, edges):
    """Undirected simple cycles of length >= 3, each listed once."""
    cycles = []
    for length in range(3, k + 1):
        for combo in itertools.permutations(range(1, k + 1), length):
            if combo[0] != min(combo) or combo[1] > combo[-1]:
                continue
            ring = combo + (combo[0],)
            if all((a, b) in edges for a, b in zip(ring, ring[1:])):
                cycles.append(combo)
    return cycles


def check_cycle_condition(blocksym, gridsize=1024, tol=1e-10) -> CycleReport:
    """Check that along every cycle of the block graph the forward and backward
    products of symbols agree on a midpoint grid."""
    if blocksym.k > MAX_CYCLE_K:
        raise ValueError(f"cycle enumeration limited to k <= {MAX_CYCLE_K}")
    if gridsize < 2:
        raise ValueError("gridsize must be >= 2")
    present = {key for key in blocksym.entries if key[0] != key[1]}
    for (i, j) in sorted(present):
        if (j, i) not in present:
            return CycleReport(False, None, math.inf, (),
                               f"block ({i},{j}) present but ({j},{i}) absent")
    cycles = _simple_cycles(blocksym.k, present)
    if not cycles:
        return CycleReport(True, None, 0.0, ())
    thetas = midpoint_grid(gridsize)
    vals = {key: evaluate(blocksym.entries[key], thetas) for key in present}
    gaps = np.zeros(gridsize)
    for cyc in cycles:
        ring = cyc + (cyc[0],)
        fwd = np.ones(gridsize)
        bwd = np.ones(gridsize)
        for a, b in zip(ring, ring[1:]):
            fwd = fwd * vals[(a, b)]
            bwd = bwd * vals[(b, a)]
        gaps = np.maximum(gaps, np.abs(fwd - bwd))
    m = int(np.argmax(gaps))
    worst = float(gaps[m])
    return CycleReport(worst <= tol, float(thetas[m]), worst, tuple(cycles))
