"""Discrete baseband echo of a point target in complex white Gaussian noise.

Ranges are normalized (x = B * tau), so the observation interval is
[-N/2, N/2) and the N Nyquist samples sit at the integers n = -N/2 .. N/2-1.
The noise has variance ``n0`` per complex sample and the SNR is
rho^2 = 2 alpha^2 / n0.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# stream tags for trial_rng; keep stable, they are part of the reproducibility contract
STREAM_SWEEP = 0
STREAM_SAP = 1
STREAM_REFERENCE = 2
STREAM_THEOREM = 3
STREAM_DEMO = 4


class Swerling(str, Enum):
    SWERLING0 = "swerling0"
    SWERLING1 = "swerling1"

    @classmethod
    def parse(cls, value: "Swerling | str | int") -> "Swerling":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace(" ", "").replace("_", "")
        aliases = {"0": cls.SWERLING0, "sw0": cls.SWERLING0, "swerling0": cls.SWERLING0,
                   "1": cls.SWERLING1, "sw1": cls.SWERLING1, "swerling1": cls.SWERLING1}
        try:
            return aliases[text]
        except KeyError:
            raise ValueError(f"unknown Swerling model {value!r}") from None


@dataclass(frozen=True)
class SystemConfig:
    """Experiment parametrization shared by every subcommand.

    ``snr_db = -inf`` is accepted as the explicit no-signal case (alpha = 0).
    ``range_fraction`` is the centred fraction of the interval over which the
    true range is drawn.
    """

    tbp: int = 16
    snr_db: float = 10.0
    swerling: Swerling = Swerling.SWERLING0
    grid_points_per_sample: int = 64
    n0: float = 1.0
    trials: int = 1500
    seed: int = 42
    range_fraction: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "swerling", Swerling.parse(self.swerling))
        if int(self.tbp) != self.tbp or self.tbp < 4 or self.tbp % 2:
            raise ValueError(f"tbp must be an even integer >= 4, got {self.tbp}")
        if int(self.grid_points_per_sample) != self.grid_points_per_sample or self.grid_points_per_sample < 8:
            raise ValueError(f"grid_points_per_sample must be an integer >= 8, got {self.grid_points_per_sample}")
        if math.isnan(self.snr_db) or self.snr_db == math.inf:
            raise ValueError(f"snr_db must be finite (or -inf for no signal), got {self.snr_db}")
        if not (self.n0 > 0 and math.isfinite(self.n0)):
            raise ValueError(f"n0 must be positive, got {self.n0}")
        if self.trials < 1:
            raise ValueError(f"trials must be positive, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0.0 <= self.range_fraction <= 1.0:
            raise ValueError(f"range_fraction must lie in [0, 1], got {self.range_fraction}")

    @property
    def rho_sq(self) -> float:
        return 0.0 if self.snr_db == -math.inf else 10.0 ** (self.snr_db / 10.0)

    @property
    def alpha(self) -> float:
        """Scattering amplitude (Swerling 0) or its rms value (Swerling 1)."""
        return math.sqrt(self.rho_sq * self.n0 / 2.0)

    @property
    def cell_width(self) -> float:
        return 1.0 / self.grid_points_per_sample

    @property
    def interval(self) -> tuple[float, float]:
        return -self.tbp / 2, self.tbp / 2

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["swerling"] = self.swerling.value
        return d

    def digest(self) -> str:
        """Stable short hash of every field."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=repr).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class ScatterCoefficient:
    amplitude: float
    phase: float

    @property
    def value(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True, eq=False)
class ReceivedSignal:
    samples: np.ndarray
    truth_range: float
    truth_scatter: ScatterCoefficient

    def __post_init__(self):
        if self.samples.ndim != 1:
            raise ValueError("samples must be a 1-D complex vector")

    @property
    def tbp(self) -> int:
        return self.samples.shape[0]


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial, derived from (seed, keys)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


def sample_indices(n: int) -> np.ndarray:
    return np.arange(-(n // 2), n // 2)


def sinc_pulse(t):
    """Ideal low-pass pulse sin(pi t)/(pi t), equal to 1 at t = 0."""
    return np.sinc(t)


def _check_in_interval(x, n: int):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < -n / 2) or np.any(x >= n / 2):
        raise ValueError(f"range outside the observation interval [{-n / 2}, {n / 2})")
    return x


def steering_vector(x: float, n: int) -> np.ndarray:
    """Noise-free unit-amplitude echo u(x) = [sinc(k - x)] over the N samples."""
    x = float(_check_in_interval(x, n))
    return np.sinc(sample_indices(n) - x)


def steering_matrix(xs, n: int) -> np.ndarray:
    """Columns are u(x) for every x in ``xs``; shape (N, len(xs))."""
    xs = _check_in_interval(xs, n)
    return np.sinc(sample_indices(n)[:, None] - xs[None, :])


def sample_scattering(model: Swerling | str, snr: float, n0: float,
                      rng: np.random.Generator) -> ScatterCoefficient:
    """Draw the complex reflection coefficient for one snapshot.

    Swerling 0 has the fixed amplitude sqrt(snr * n0 / 2); Swerling 1 has a
    Rayleigh amplitude with E[alpha^2] = snr * n0 / 2. Phase is uniform on
    [0, 2 pi) for both.
    """
    model = Swerling.parse(model)
    if not snr >= 0 or not n0 > 0:
        raise ValueError("snr must be nonnegative and n0 positive")
    mean_power = snr * n0 / 2.0
    phase = rng.uniform(0.0, 2.0 * math.pi)
    if model is Swerling.SWERLING0:
        amplitude = math.sqrt(mean_power)
    else:
        # Rayleigh with sigma_alpha^2 = mean_power / 2, i.e. alpha^2 ~ Exp(mean_power)
        amplitude = math.sqrt(mean_power * rng.standard_exponential())
    return ScatterCoefficient(amplitude, phase)


def draw_range(cfg: SystemConfig, rng: np.random.Generator, fraction: float | None = None) -> float:
    half = cfg.tbp / 2 * (cfg.range_fraction if fraction is None else fraction)
    x0 = rng.uniform(-half, half)
    # uniform() can return the open upper end after rounding
    return min(x0, np.nextafter(cfg.tbp / 2, -np.inf))


def generate_echo(cfg: SystemConfig, x0: float, rng: np.random.Generator,
                  noiseless: bool = False) -> ReceivedSignal:
    """y = s u(x0) + w with w ~ CN(0, n0 I).

    The scattering coefficient is drawn before the noise, so trials that share
    a generator seed see the same standardized noise at every SNR.
    """
    u = steering_vector(x0, cfg.tbp)
    scatter = sample_scattering(cfg.swerling, cfg.rho_sq, cfg.n0, rng)
    samples = scatter.value * u
    if not noiseless:
        w = rng.standard_normal((2, cfg.tbp))
        samples = samples + math.sqrt(cfg.n0 / 2.0) * (w[0] + 1j * w[1])
    return ReceivedSignal(np.asarray(samples, dtype=complex), float(x0), scatter)
