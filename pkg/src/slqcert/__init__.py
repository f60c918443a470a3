"""slqcert: matrix-free spectral CDF estimation via stochastic Lanczos
quadrature, with certified a priori and a posteriori error bounds in
Wasserstein and Kolmogorov-Smirnov distance."""

__version__ = "0.1.0"

from .distribution import (
    StepDistribution,
    average,
    exact_cesm,
    kolmogorov_smirnov,
    moment,
    spectral_sum,
    wasserstein,
    weighted_cesm,
)
from .lanczos import LanczosOptions, TridiagonalMatrix, krylov_basis_orthogonality, lanczos
from .operators import (
    CsrOperator,
    DenseOperator,
    DiagonalOperator,
    SymmetricOperator,
    load_matrix_market,
    spectral_interval,
    write_matrix_market,
)
from .problems import (
    SpectrumSpec,
    generate,
    min_wasserstein_to_uniform,
    parse_spectrum_spec,
    uniform_hard_instance,
    verify_lower_bound,
)
from .quadrature import (
    EnvelopePair,
    QuadratureRule,
    apost_ks_bound,
    apost_wasserstein_bound,
    envelopes,
    gaussian_quadrature,
    stagnation_level,
)
from .slq import (
    BetaLaw,
    SlqPlan,
    SlqReport,
    beta_law,
    bracket_cesm,
    ks_tail,
    plan,
    pointwise_tail,
    run,
    run_with_added_node,
    sample_unit_sphere,
    tail_accuracy,
)
from .tridiag import EigenFirstRow, eig_first_row

__all__ = [
    "__version__",
    "StepDistribution", "average", "exact_cesm", "kolmogorov_smirnov",
    "moment", "spectral_sum", "wasserstein", "weighted_cesm",
    "LanczosOptions", "TridiagonalMatrix", "krylov_basis_orthogonality", "lanczos",
    "CsrOperator", "DenseOperator", "DiagonalOperator", "SymmetricOperator",
    "load_matrix_market", "spectral_interval", "write_matrix_market",
    "SpectrumSpec", "generate", "min_wasserstein_to_uniform",
    "parse_spectrum_spec", "uniform_hard_instance", "verify_lower_bound",
    "EnvelopePair", "QuadratureRule", "apost_ks_bound", "apost_wasserstein_bound",
    "envelopes", "gaussian_quadrature", "stagnation_level",
    "BetaLaw", "SlqPlan", "SlqReport", "beta_law", "bracket_cesm", "ks_tail",
    "plan", "pointwise_tail", "run", "run_with_added_node", "sample_unit_sphere",
    "tail_accuracy",
    "EigenFirstRow", "eig_first_row",
]
