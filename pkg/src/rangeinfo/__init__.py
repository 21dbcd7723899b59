"""Information-theoretic range estimation for a single point target.

Simulates sinc-pulse radar echoes in complex white Gaussian noise, builds the
a posteriori density of the normalized range on a grid, and measures range
information, entropy error, estimator MSE and reference bounds.
"""

from rangeinfo.errors import (
    CacheError,
    ConfigError,
    DegeneratePosteriorError,
    RangeInfoError,
    SchemaError,
)
from rangeinfo.signal_model import (
    ReceivedSignal,
    ScatterCoefficient,
    Swerling,
    SystemConfig,
    generate_echo,
    sample_scattering,
    sinc_pulse,
    steering_vector,
    trial_rng,
)
from rangeinfo.posterior import (
    BETA_SQ,
    GaussianApprox,
    PosteriorGrid,
    gaussian_approx,
    log_bessel_i0,
    matched_filter,
    posterior_grid,
)

__version__ = "0.1.0"

__all__ = [
    "BETA_SQ",
    "CacheError",
    "ConfigError",
    "DegeneratePosteriorError",
    "GaussianApprox",
    "PosteriorGrid",
    "RangeInfoError",
    "ReceivedSignal",
    "ScatterCoefficient",
    "SchemaError",
    "Swerling",
    "SystemConfig",
    "gaussian_approx",
    "generate_echo",
    "log_bessel_i0",
    "matched_filter",
    "posterior_grid",
    "sample_scattering",
    "sinc_pulse",
    "steering_vector",
    "trial_rng",
]
