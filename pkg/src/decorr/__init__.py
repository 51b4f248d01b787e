"""Decorrelation of a linear SDE from its initial condition in the small-noise limit."""

from .errors import (
    DecorrError,
    IllConditionedError,
    IntegrationError,
    ModelFormatError,
    ModelValidationError,
    NonConvergenceError,
    NonFiniteError,
    NotPSDError,
    PreconditionError,
    StabilityError,
    UnsupportedMethodError,
)
from .gaussian import GaussianLaw, TVEstimate, kl_divergence, tv_distance, wasserstein2, whiten_pair
from .modelio import load_model, model_from_dict
from .ou import (
    DistanceValue,
    JointLawPair,
    OUModel,
    check_controllability,
    check_hurwitz,
    covariance,
    finite_eps_distance,
    joint_pair,
    varsigma,
)
from .scalar import (
    ExpDecay,
    PowerDecay,
    ProfilePoint,
    ScalarLSDEModel,
    TableDrift,
    ZeroDrift,
    abruptness_check,
    phi,
    profile,
    scalar_finite_distance,
    variance_integral,
)
from .simulate import SampleBatch, empirical_covariance_check, sample_euler, sample_exact
from .spectral import (
    DecorrelationReport,
    SpectralSummary,
    classify,
    gamma_estimate,
    profile_kl,
    profile_tv,
    scaled_propagator,
    spectral_summary,
    t_epsilon,
)

__version__ = "0.1.0"
