"""Posterior entropy, range information and entropy error.

Entropies are computed in nats and reported in both nats and bits. The
observation length T is identified with N (unit bandwidth).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rangeinfo.posterior import BETA_SQ, PosteriorGrid, posterior_grid
from rangeinfo.signal_model import (
    STREAM_SWEEP,
    Swerling,
    SystemConfig,
    draw_range,
    generate_echo,
    trial_rng,
)

LN2 = math.log(2.0)
EULER_GAMMA = 0.5772156649015329
BETA = math.sqrt(BETA_SQ)


@dataclass(frozen=True)
class EntropyEstimate:
    value_nats: float
    value_bits: float
    std_error: float
    trials: int

    @classmethod
    def from_nats(cls, value: float, std_error: float = 0.0, trials: int = 0) -> "EntropyEstimate":
        return cls(float(value), float(value) / LN2, float(std_error), int(trials))

    @property
    def std_error_bits(self) -> float:
        return self.std_error / LN2


@dataclass(frozen=True)
class EEBreakdown:
    """Closed-form entropy error and its mixture components (entropies in nats)."""

    h_s: float
    h_w: float
    h_ps: float
    p_s: float
    ee_closed: float
    rho_sq: float
    ee_mc: float = math.nan

    @property
    def entropy_nats(self) -> float:
        """Posterior entropy reassembled as p_s H_s + (1 - p_s) H_w + H(p_s)."""
        return self.p_s * self.h_s + (1.0 - self.p_s) * self.h_w + self.h_ps

    @property
    def entropy_closed_nats(self) -> float:
        """ln sqrt(2 pi e) + ln(1 / (rho beta p_s)); equals ``entropy_nats`` identically."""
        return 0.5 * math.log(2 * math.pi * math.e) - math.log(math.sqrt(self.rho_sq) * BETA * self.p_s)


def grid_entropy(p: PosteriorGrid) -> np.ndarray | float:
    """Differential entropy -sum p ln p dx in nats, with 0 ln 0 = 0."""
    mass = p.mass()
    if np.any(np.abs(mass - 1.0) > 1e-6):
        raise ValueError("posterior grid is not normalized")
    pos = p.density > 0
    plogp = np.zeros_like(p.density)
    plogp[pos] = p.density[pos] * p.log_density[pos]
    h = -np.sum(plogp, axis=-1) * p.cell_width
    return h if np.ndim(h) else float(h)


def simulate_posteriors(cfg: SystemConfig, trials: int | None = None, stream: int = STREAM_SWEEP,
                        exact_energy: bool = False, range_fraction: float | None = None):
    """Draw ``trials`` independent snapshots and return (truths, samples, posterior batch).

    Trial t uses ``trial_rng(cfg.seed, stream, t)``, so the same trial index
    sees the same standardized noise whatever the SNR.
    """
    trials = cfg.trials if trials is None else trials
    truths = np.empty(trials)
    samples = np.empty((trials, cfg.tbp), dtype=complex)
    for t in range(trials):
        rng = trial_rng(cfg.seed, stream, t)
        x0 = draw_range(cfg, rng, range_fraction)
        echo = generate_echo(cfg, x0, rng)
        truths[t] = x0
        samples[t] = echo.samples
    return truths, samples, posterior_grid(samples, cfg, exact_energy=exact_energy)


def conditional_entropy(cfg: SystemConfig, exact_energy: bool = False) -> EntropyEstimate:
    """Monte Carlo h(X|Y): average posterior entropy over snapshots."""
    _, _, post = simulate_posteriors(cfg, exact_energy=exact_energy)
    h = grid_entropy(post)
    se = h.std(ddof=1) / math.sqrt(h.size) if h.size > 1 else 0.0
    return EntropyEstimate.from_nats(h.mean(), se, h.size)


def range_information(cfg: SystemConfig) -> EntropyEstimate:
    """RI = h(X) - h(X|Y) with h(X) = ln N, by Monte Carlo over ``cfg.trials``."""
    if cfg.trials < 100:
        raise ValueError("range_information needs at least 100 trials")
    h = conditional_entropy(cfg)
    return EntropyEstimate.from_nats(math.log(cfg.tbp) - h.value_nats, h.std_error, h.trials)


def entropy_error(h_bits):
    """Entropy power 2^(2h) / (2 pi e) of a range distribution with entropy ``h_bits``."""
    ee = np.exp2(2.0 * np.asarray(h_bits, dtype=float)) / (2 * math.pi * math.e)
    return ee if ee.ndim else float(ee)


def ambiguity_ps(rho_sq: float, t: float) -> float:
    """Probability that the posterior mass sits around the true range."""
    if not (rho_sq > 0 and t > 0):
        raise ValueError("rho_sq and t must be positive")
    # e/(T rho^2 beta + e) rewritten as 1/(1 + T rho^2 beta e^-(rho^2/2+1)) to avoid overflow
    return 1.0 / (1.0 + t * rho_sq * BETA * math.exp(-(rho_sq / 2.0 + 1.0)))


def _binary_entropy_nats(p: float) -> float:
    return -sum(q * math.log(q) for q in (p, 1.0 - p) if q > 0)


def ee_closed_form(rho_sq: float, t: float, ee_mc: float = math.nan) -> EEBreakdown:
    """Closed-form entropy error 1 / (rho^2 beta^2 p_s^2) with its components."""
    p_s = ambiguity_ps(rho_sq, t)
    rho = math.sqrt(rho_sq)
    h_s = math.log(math.sqrt(2 * math.pi * math.e) / (rho * BETA))
    h_w = math.log(t * rho * math.sqrt(2 * math.pi)) - (rho_sq + 1.0) / 2.0
    return EEBreakdown(
        h_s=h_s,
        h_w=h_w,
        h_ps=_binary_entropy_nats(p_s),
        p_s=p_s,
        ee_closed=1.0 / (rho_sq * BETA_SQ * p_s**2),
        rho_sq=rho_sq,
        ee_mc=ee_mc,
    )


def ri_upper_bound(model: Swerling | str, t: float, rho_sq: float) -> float:
    """Upper bound on RI in bits; Swerling 1 loses gamma / (2 ln 2)."""
    if not (rho_sq > 0 and t > 0):
        raise ValueError("rho_sq and t must be positive")
    bound = math.log2(t * BETA * math.sqrt(rho_sq) / math.sqrt(2 * math.pi * math.e))
    if Swerling.parse(model) is Swerling.SWERLING1:
        bound -= EULER_GAMMA / (2 * LN2)
    return bound


def theorem1_ratio(ri_bits: float) -> float:
    """Predicted entropy-deviation ratio sigma_EE(X|Y) / sigma_EE(X) = 2^-RI."""
    return 2.0 ** (-ri_bits)


def entropy_deviation_ratio(h_post_bits: float, h_prior_bits: float) -> float:
    """sqrt(EE(h_post)) / sqrt(EE(h_prior)) computed from the two entropy powers."""
    return math.sqrt(entropy_error(h_post_bits)) / math.sqrt(entropy_error(h_prior_bits))
