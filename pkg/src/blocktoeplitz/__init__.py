"""Non-Hermitian block Toeplitz matrix-sequences: assembly, symmetrization
via matrix geometric means, and spectral-distribution checks."""

from .blocks import (
    AssemblyBundle, BlockSymbol, assemble, build_bundle, build_symmetrizer, build_target,
    check_cycle_condition, shuffle_permutation, symbol_matrix, symmetrized_matrix,
)
from .matfun import NotHPDError, clamp_tracking, geometric_mean, hpd_power, norm
from .spectral import (
    Spectrum, TestFunction, compare_distributions, distribution_residual, eig_general,
    eig_hermitian, sample_symbol_spectrum, singular_values, zero_distribution_trend,
)
from .structured import (
    build_toeplitz, circulant_spectrum, optimal_circulant, symbol_circulant,
)
from .symbols import (
    FourierSeries, SymbolDomainError, SymbolSyntaxError, essinf_probe, eval_symbol,
    fourier_coefficients, parse_symbol, to_text,
)
from .verification import (
    HypothesisError, TrendReport, run_case, table_imaginary_decay, verify_circulant_approx,
    verify_geomean_circulant, verify_geomean_product, verify_mixed_mean_identity,
    verify_symmetrization,
)

__version__ = "0.1.0"
