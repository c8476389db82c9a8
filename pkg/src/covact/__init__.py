"""Structured covariance estimation for sparse activity detection.

Covers deterministic and Gaussian codebook construction, the rank-one-sum
measurement operator, non-negative least squares and relaxed maximum
likelihood estimation by coordinate descent, signed-kernel-condition
verification through an exactly computed robustness constant, the closed-form
robustness radii and antenna-count thresholds, and a reproducible experiment
harness.
"""

from .channel import (
    ChannelRealization,
    FadingVector,
    PerturbedObservation,
    draw_sparse_fading,
    perturb_hermitian,
    sample_complex_gaussian,
    sample_covariance,
    simulate_measurements,
    stream,
)
from .codebook import (
    Codebook,
    MeasurementOperator,
    StackedRealMatrix,
    build_deterministic_codebook,
    build_gaussian_codebook,
    nth_prime,
)
from .config import ExperimentConfig, parse_config
from .errors import (
    CovactError,
    DomainError,
    EmptyLevelSet,
    InvalidInput,
    NoAdversary,
    NotConverged,
    NotPositiveDefinite,
    SetupFailed,
    StepRejected,
    TooLarge,
)
from .estimators import (
    DetectionResult,
    MlOptions,
    MlTrace,
    NnlsOptions,
    NnlsResult,
    coordinate_step,
    kkt_residual,
    ml_coordinate_descent,
    ml_objective,
    nnls_estimate,
    sherman_morrison_update,
    threshold_detect,
)
from .gtuple import (
    PenaltyCheckReport,
    PenaltyTuple,
    check_sufficiently_convex,
    gsum_objective,
    level_set_bound_check,
    trace_logdet_tuple,
)
from .hermitian import (
    EigenDecomposition,
    HermitianMatrix,
    HpdMatrix,
    eig_hermitian,
    hpd_inverse,
    hpd_sqrt,
    operator_norm,
)
from .lambertw import lambert_w
from .robustness import BoundInputs, delta_radius, empirical_concentration, k0_antennas
from .skc import SkcReport, adversarial_fading, skc_holds, tau_prime, tau_prime_curve

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "ChannelRealization",
    "Codebook",
    "CovactError",
    "DetectionResult",
    "DomainError",
    "EigenDecomposition",
    "EmptyLevelSet",
    "ExperimentConfig",
    "FadingVector",
    "HermitianMatrix",
    "HpdMatrix",
    "InvalidInput",
    "MeasurementOperator",
    "MlOptions",
    "MlTrace",
    "NnlsOptions",
    "NnlsResult",
    "NoAdversary",
    "NotConverged",
    "NotPositiveDefinite",
    "PenaltyCheckReport",
    "PenaltyTuple",
    "PerturbedObservation",
    "SetupFailed",
    "SkcReport",
    "StackedRealMatrix",
    "StepRejected",
    "TooLarge",
    "adversarial_fading",
    "build_deterministic_codebook",
    "build_gaussian_codebook",
    "check_sufficiently_convex",
    "coordinate_step",
    "delta_radius",
    "draw_sparse_fading",
    "eig_hermitian",
    "empirical_concentration",
    "gsum_objective",
    "hpd_inverse",
    "hpd_sqrt",
    "k0_antennas",
    "kkt_residual",
    "lambert_w",
    "level_set_bound_check",
    "ml_coordinate_descent",
    "ml_objective",
    "nnls_estimate",
    "nth_prime",
    "operator_norm",
    "parse_config",
    "perturb_hermitian",
    "sample_complex_gaussian",
    "sample_covariance",
    "sherman_morrison_update",
    "simulate_measurements",
    "skc_holds",
    "stream",
    "tau_prime",
    "tau_prime_curve",
    "threshold_detect",
    "trace_logdet_tuple",
]
