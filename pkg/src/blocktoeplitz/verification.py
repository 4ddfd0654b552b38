"""Residual sweeps over n for the circulant / geometric-mean approximation
claims, the symmetrization claim, and the experiment cases.

Vanishing relative to sqrt(n) cannot be observed from finitely many n.
The proxy used throughout: the sqrt(n)-scaled residual must strictly drop
at every step of the sweep, and a least-squares log-log slope of the raw
residual against n is reported alongside.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockSymbol, build_bundle, symmetrized_matrix
from .matfun import clamp_tracking, geometric_mean, hpd_power, norm
from .spectral import (
    TestFunction, compare_distributions, distribution_residual, eig_general,
    sample_symbol_spectrum,
)
from .structured import circulant_approximation, toeplitz_from_symbol
from .symbols import DEFAULT_RESOLUTION, essinf_probe, parse_symbol

ESSINF_GRID = 4096
EXACT_TOL = 1e-12
IMAG_EXACT_TOL = 1e-10
# a grid minimum this small relative to max|f| is read as a zero of the symbol;
# midpoint grids never sample the zero itself
POSITIVITY_RTOL = 1e-3


class HypothesisError(ValueError):
    """The positivity hypothesis of the claim fails for the given symbols."""


@dataclass
class TrendReport:
    claim: str
    n_values: list
    residuals: list
    scaled: list
    verdict: str
    slope: float | None
    exact: bool = False
    label: str = "within-hypothesis"
    breakdown: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.n_values, self.residuals, self.scaled))


def loglog_slope(xs, ys):
    """Least-squares slope of log(y) against log(x); None with < 3 usable points."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ok = ys > 0
    if ok.sum() < 3:
        return None
    slope, _ = np.polyfit(np.log(xs[ok]), np.log(ys[ok]), 1)
    return float(slope)


def trend_verdict(scaled):
    d = np.diff(np.asarray(scaled, dtype=float))
    if np.all(d < 0):
        return "decreasing"
    if np.all(d <= 0):
        return "non-increasing"
    return "violated"


def _report(claim, n_list, residuals, scale_ref=1.0, **extra):
    # residuals at roundoff level relative to the compared matrices count as exact
    scaled = [r / math.sqrt(n) for r, n in zip(residuals, n_list)]
    exact = all(r <= EXACT_TOL * max(scale_ref, 1.0) for r in residuals)
    verdict = "decreasing" if exact else trend_verdict(scaled)
    slope = None if exact else loglog_slope(n_list, residuals)
    return TrendReport(claim, list(n_list), [float(r) for r in residuals],
                       [float(s) for s in scaled], verdict, slope, exact, **extra)


def _check_n_list(n_list):
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3:
        raise ValueError("a trend needs at least three values of n")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n values must be strictly ascending")
    return n_list


def _as_expr(s):
    return parse_symbol(s) if isinstance(s, str) else s


def probably_positive(expr, gridsize=ESSINF_GRID):
    """Grid-probed test for a strictly positive essential infimum."""
    lo, hi = essinf_probe(expr, gridsize)
    return lo > POSITIVITY_RTOL * max(abs(lo), abs(hi))


def _require_positive(*symbols):
    for s in symbols:
        if not probably_positive(s):
            lo, _ = essinf_probe(s, ESSINF_GRID)
            raise HypothesisError(
                f"symbol has grid minimum {lo:.3g}, not bounded away from 0; the "
                "approximation claim assumes a strictly positive essential infimum"
            )


def verify_circulant_approx(symbol, n_list, circulant="optimal",
                            resolution=DEFAULT_RESOLUTION) -> TrendReport:
    """``||T_n(f) - C_n(f)||_F`` over ``n_list``."""
    f = _as_expr(symbol)
    n_list = _check_n_list(n_list)
    res, scales = [], []
    for n in n_list:
        T = toeplitz_from_symbol(f, n, resolution)
        res.append(norm(T - circulant_approximation(T, f, circulant)))
        scales.append(norm(T))
    return _report("circ", n_list, res, scale_ref=min(scales))


def _pair_matrices(f, g, n, circulant, resolution):
    Tf = toeplitz_from_symbol(f, n, resolution)
    Tg = toeplitz_from_symbol(g, n, resolution)
    return Tf, Tg, circulant_approximation(Tf, f, circulant), circulant_approximation(Tg, g, circulant)


def _pair_means(Tf, Tg, Cf, Cg, mode):
    if mode == "plain":
        return geometric_mean(Tf, Tg), geometric_mean(Cf, Cg)
    if mode == "inverse_first":
        return (geometric_mean(hpd_power(Tf, -1.0), Tg),
                geometric_mean(hpd_power(Cf, -1.0), Cg))
    raise ValueError(f"unknown mode {mode!r}")


def verify_geomean_circulant(f, g, n_list, mode="plain", circulant="optimal",
                             resolution=DEFAULT_RESOLUTION) -> TrendReport:
    """``||G(T(f), T(g)) - G(C(f), C(g))||_F``; with ``mode="inverse_first"``
    the first arguments are inverted."""
    f, g = _as_expr(f), _as_expr(g)
    _require_positive(f, g)
    n_list = _check_n_list(n_list)
    res, scales = [], []
    for n in n_list:
        G, Gc = _pair_means(*_pair_matrices(f, g, n, circulant, resolution), mode)
        res.append(norm(G - Gc))
        scales.append(norm(G))
    return _report("lemma2" if mode == "plain" else "lemma2_inv", n_list, res,
                   scale_ref=min(scales))


def verify_geomean_product(pairs, n_list, mode="plain", circulant="optimal",
                           resolution=DEFAULT_RESOLUTION) -> TrendReport:
    """Frobenius gap between the ordered products of Toeplitz and circulant
    geometric means."""
    if not 1 <= len(pairs) <= 4:
        raise ValueError("between one and four pairs are supported")
    pairs = [(_as_expr(f), _as_expr(g)) for f, g in pairs]
    _require_positive(*[s for p in pairs for s in p])
    n_list = _check_n_list(n_list)
    res, scales = [], []
    for n in n_list:
        P = Pc = np.eye(n)
        for f, g in pairs:
            G, Gc = _pair_means(*_pair_matrices(f, g, n, circulant, resolution), mode)
            P = P @ G
            Pc = Pc @ Gc
        res.append(norm(P - Pc))
        scales.append(norm(P))
    return _report("cor1", n_list, res, scale_ref=min(scales))


def verify_mixed_mean_identity(f, g, n_list, resolution=DEFAULT_RESOLUTION) -> TrendReport:
    """``||G(T(f), T(g)^{-1}) T(g) - G(T(f), T(g))||_F``."""
    f, g = _as_expr(f), _as_expr(g)
    _require_positive(f, g)
    n_list = _check_n_list(n_list)
    res, scales = [], []
    for n in n_list:
        A = toeplitz_from_symbol(f, n, resolution)
        B = toeplitz_from_symbol(g, n, resolution)
        G = geometric_mean(A, B)
        res.append(norm(geometric_mean(A, hpd_power(B, -1.0)) @ B - G))
        scales.append(norm(G))
    return _report("lemma3", n_list, res, scale_ref=min(scales))


def off_diagonal_hypothesis(blocksym, gridsize=ESSINF_GRID):
    """True when every off-diagonal symbol has a positive grid minimum."""
    for low, up in blocksym.off_diagonal_pairs():
        for s in (low, up):
            if s is None or not probably_positive(s, gridsize):
                return False
    return True


def verify_symmetrization(blocksym, n_list, resolution=DEFAULT_RESOLUTION) -> TrendReport:
    """``||E A E^{-1} - Ahat||_F`` with a diagonal / sub / super breakdown.

    Symbols violating the positivity hypothesis are still run (clamp policy
    applies) but labeled ``outside-hypothesis``.
    """
    n_list = _check_n_list(n_list)
    label = "within-hypothesis" if off_diagonal_hypothesis(blocksym) else "outside-hypothesis"
    res, breakdown, scales = [], [], []
    with clamp_tracking() as clamps:
        for n in n_list:
            b = build_bundle(blocksym, n, resolution)
            D = symmetrized_matrix(b) - b.Ahat
            res.append(norm(D))
            scales.append(norm(b.A))
            breakdown.append(_block_breakdown(D, n, blocksym.k))
    rep = _report("thm1", n_list, res, scale_ref=min(scales), label=label, breakdown=breakdown)
    rep.breakdown.append({"clamped_eigenvalues": clamps["eigenvalues"]})
    return rep


def _block_breakdown(D, n, k):
    parts = {"diagonal": 0.0, "sub": 0.0, "super": 0.0}
    for i in range(k):
        for j in range(k):
            key = "diagonal" if i == j else ("sub" if i > j else "super")
            parts[key] += float(np.sum(np.abs(D[i * n:(i + 1) * n, j * n:(j + 1) * n]) ** 2))
    return {key: math.sqrt(v) for key, v in parts.items()}


def geomean_norm_bounds(f, g, gridsize=ESSINF_GRID):
    """Explicit bounds on the spectral norms of ``G(T(f), T(g))`` and
    ``G(T(f)^{-1}, T(g))`` from grid-probed extrema of the symbols."""
    if not (probably_positive(f, gridsize) and probably_positive(g, gridsize)):
        raise HypothesisError("norm bounds need strictly positive symbols")
    flo, fhi = essinf_probe(f, gridsize)
    glo, ghi = essinf_probe(g, gridsize)
    fsup = max(abs(flo), abs(fhi))
    gsup = max(abs(glo), abs(ghi))
    return fsup * math.sqrt(gsup) / math.sqrt(flo), math.sqrt(fsup * gsup) / flo


@dataclass
class CaseResult:
    n: int
    spectrum: object
    symbol_sample: object
    metrics: dict


def run_case(blocksym, n_list, gridsize=None, resolution=DEFAULT_RESOLUTION,
             testfn=None, variant="plain"):
    """Spectrum of ``A_n`` against the sampled symbol for each ``n``.

    ``gridsize=None`` samples the symbol at ``n`` points so that both
    spectra have ``k n`` values.
    """
    if not n_list:
        raise ValueError("n_list is empty")
    out = []
    for n in n_list:
        A = build_bundle(blocksym, n, resolution, symmetrize=False).A
        spectrum = eig_general(A, n=n, k=blocksym.k, role="A")
        ref = sample_symbol_spectrum(blocksym, gridsize or n, variant)
        metrics = compare_distributions(spectrum, ref)
        metrics["n"] = n
        metrics["max_abs_imag"] = spectrum.max_abs_imag()
        if testfn is not None:
            metrics["distribution_residual"] = distribution_residual(spectrum, blocksym, testfn)
        out.append(CaseResult(n, spectrum, ref, metrics))
    return out


@dataclass
class ImagTable:
    rows: list
    slope: float | None
    exact_zero: bool


def table_imaginary_decay(blocksym, n_list, resolution=DEFAULT_RESOLUTION) -> ImagTable:
    """``max |Im lambda(A_n)|`` per ``n`` with the log-log slope."""
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n values must be strictly ascending")
    rows = []
    for n in n_list:
        A = build_bundle(blocksym, n, resolution, symmetrize=False).A
        rows.append((int(n), eig_general(A).max_abs_imag()))
    imag = [r[1] for r in rows]
    if all(v <= IMAG_EXACT_TOL for v in imag):
        return ImagTable(rows, None, True)
    return ImagTable(rows, loglog_slope(n_list, imag), False)


__all__ = [
    "TrendReport", "HypothesisError", "verify_circulant_approx", "verify_geomean_circulant",
    "verify_geomean_product", "verify_mixed_mean_identity", "verify_symmetrization",
    "geomean_norm_bounds", "run_case", "table_imaginary_decay", "loglog_slope",
    "trend_verdict", "off_diagonal_hypothesis", "probably_positive",
]
