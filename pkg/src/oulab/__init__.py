"""Numerical laboratory for degenerate Ornstein-Uhlenbeck operators.

Operators L = (1/2) tr(Q D^2) + <Ax, D> are analyzed through their
controllability structure, noise Gramian, transition semigroup, real
Jordan taxonomy, and exact path simulation; harmonic-function candidates
are verified or refuted against the constancy (Liouville-type) theorems
that govern them.
"""

from .candidates import (
    HarmonicCandidate,
    affine_candidate,
    constant_candidate,
    counterexample_1d,
    quadratic_candidate,
    self_check,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import (
    AmbiguousStructureError,
    ArgumentError,
    EvaluationError,
    IllConditionedWarning,
    InvalidOperatorError,
    NumericalFailureError,
    OULabError,
    PreconditionError,
    RangeOverflowError,
    SpecFileError,
    UnsupportedEngineError,
)
from .harmonic import (
    LiouvilleVerdict,
    affine_exclusions,
    convexity_check,
    gradient_growth_check,
    harmonic_catalog,
    liouville_verdict,
    residual,
    semigroup_invariance,
)
from .jordan import (
    JordanBlock,
    JordanDecomposition,
    block_exponential,
    jordan_real_form,
    quasi_constancy_check,
    resonance_times,
)
from .operators import (
    GrowthCertificate,
    KalmanReport,
    OperatorSpec,
    SpectralReport,
    conjugate_operator,
    kalman_rank,
    matrix_exp,
    scale_diffusion,
    spectral_bound,
)
from .reports import RunManifest, VerificationReport
from .sampling import ball_points, probe_grid
from .sde import (
    PathSample,
    exp_sup_moment,
    sample_endpoint,
    sample_path,
    sample_path_ensemble,
    stopped_expectation,
)
from .semigroup import (
    GaussianMeasure,
    GramianResult,
    MonteCarlo,
    Quadrature,
    decay_norm,
    exp_moment_bound_check,
    gaussian_measure,
    gramian,
    gramian_measure,
    kwapien_check,
    semigroup_apply,
    whitened_drift,
)
from .specio import load_candidates, load_operator, save_candidates, save_operator

__version__ = "0.1.0"
