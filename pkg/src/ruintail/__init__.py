"""ruintail: tail probabilities of discounted loss sums, their maxima, and
the closed-form asymptotics that approximate them.

The package simulates the discrete-time risk model

    S_0 = 0,  S_n = sum_{i<=n} X_i prod_{j<=i} Y_j,  M_n = max_{k<=n} S_k,

estimates ruin and aggregate-loss tail probabilities by Monte Carlo and
quadrature, computes the linear-combination asymptotic coefficients for
finite and infinite horizons (independent and FGM-coupled pairs), and
numerically verifies the supporting tail expansions.
"""

from .asymptotics import (
    Case,
    CoefficientSet,
    ScenarioClass,
    asymptotic_tail,
    asymptotic_weights,
    classify,
    coeff_fgm_finite,
    coeff_finite,
    coeff_infinite,
)
from .distributions import (
    FgmPairSpec,
    Lognormal,
    Pareto,
    RVStar,
    Shifted,
    TailDistribution,
    checked_upper_moment,
    fgm_conditional_inverse,
    sample_fgm,
)
from .estimate import (
    Method,
    RatioDiagnostic,
    TailEstimate,
    Target,
    default_x_grid,
    estimate_tail,
    quadrature_tail_n1,
    ratio_table,
    tail_n1,
)
from .model import (
    Fgm,
    Finite,
    Independent,
    Infinite,
    ModelSpec,
    PathSample,
    simulate_M_recursive,
    simulate_path,
    simulate_T,
    simulate_truncated_infinite,
    truncation_level,
)
from .rng import stream
from .tailcalc import (
    DirectLaw,
    LogTransformTail,
    VerificationReport,
    convolve_tail_oracle,
    product_tail_expansion,
    sum_tail_expansion,
    v_hat,
    verify_kesten,
    verify_pakes,
    verify_potter,
    verify_remainder,
)

__version__ = "0.1.0"

__all__ = [
    "Case", "CoefficientSet", "ScenarioClass", "asymptotic_tail",
    "asymptotic_weights", "classify", "coeff_fgm_finite", "coeff_finite",
    "coeff_infinite",
    "FgmPairSpec", "Lognormal", "Pareto", "RVStar", "Shifted",
    "TailDistribution", "checked_upper_moment", "fgm_conditional_inverse",
    "sample_fgm",
    "Method", "RatioDiagnostic", "TailEstimate", "Target", "default_x_grid",
    "estimate_tail", "quadrature_tail_n1", "ratio_table", "tail_n1",
    "Fgm", "Finite", "Independent", "Infinite", "ModelSpec", "PathSample",
    "simulate_M_recursive", "simulate_path", "simulate_T",
    "simulate_truncated_infinite", "truncation_level",
    "stream",
    "DirectLaw", "LogTransformTail", "VerificationReport",
    "convolve_tail_oracle", "product_tail_expansion", "sum_tail_expansion",
    "v_hat", "verify_kesten", "verify_pakes", "verify_potter",
    "verify_remainder",
]
