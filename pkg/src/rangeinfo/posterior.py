"""A posteriori density of the normalized range on a uniform grid.

The grid has ``N * grid_points_per_sample`` cells tiling [-N/2, N/2); the
abscissae are the cell centres and every integral over x is the cell sum
``sum(f) * dx``. All density arithmetic is done on log values.

Arrays may carry leading batch axes: a ``(T, N)`` stack of received samples
gives ``(T, M)`` log-likelihoods and a batched :class:`PosteriorGrid`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import i0e, logsumexp

from rangeinfo.errors import DegeneratePosteriorError
from rangeinfo.signal_model import (
    ReceivedSignal,
    Swerling,
    SystemConfig,
    sample_indices,
    steering_matrix,
)

BETA_SQ = math.pi**2 / 3.0

_SERIES_CUTOFF = 1.0


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    """Normalized posterior on the range grid.

    ``log_density`` and ``density`` have shape ``(..., M)``; ``xs`` is shared.
    """

    xs: np.ndarray
    log_density: np.ndarray
    density: np.ndarray
    cell_width: float

    def __len__(self):
        return self.xs.shape[0]

    def mass(self) -> np.ndarray:
        return self.density.sum(axis=-1) * self.cell_width

    def __getitem__(self, index) -> "PosteriorGrid":
        """Select snapshots along the batch axes."""
        return PosteriorGrid(self.xs, self.log_density[index], self.density[index], self.cell_width)

    def to_csv(self, path: str | Path) -> Path:
        """Debug dump of a single posterior as (x, density) rows."""
        if self.density.ndim != 1:
            raise ValueError("to_csv writes one posterior at a time")
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "density"])
            for x, p in zip(self.xs, self.density):
                writer.writerow([f"{x:.10g}", f"{p:.12g}"])
        return path


@dataclass(frozen=True)
class GaussianApprox:
    mean: float
    variance: float
    beta_sq: float = BETA_SQ

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * np.log(2 * np.pi * self.variance) - (x - self.mean) ** 2 / (2 * self.variance)


def log_bessel_i0(z):
    """ln I0(z) for z >= 0 without overflow.

    Small arguments use log1p of the power series so that the result keeps full
    relative precision near zero; larger ones use the exponentially scaled
    Bessel function, ln I0(z) = z + ln(i0e(z)), which behaves like the
    asymptotic expansion z - ln(2 pi z)/2 for large z.
    """
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z < 0):
        raise ValueError("log_bessel_i0 needs finite, nonnegative arguments")
    out = np.empty_like(z)
    small = z < _SERIES_CUTOFF
    if np.any(small):
        q = (z[small] / 2.0) ** 2
        # sum_{k>=1} q^k / (k!)^2; 12 terms reach 1e-17 for q < 0.25
        term = q.copy()
        acc = q.copy()
        for k in range(2, 13):
            term = term * q / (k * k)
            acc += term
        out[small] = np.log1p(acc)
    big = ~small
    if np.any(big):
        zb = z[big]
        out[big] = zb + np.log(i0e(zb))
    return out if out.ndim else float(out)


def _samples(y) -> np.ndarray:
    if isinstance(y, ReceivedSignal):
        return y.samples
    return np.asarray(y, dtype=complex)


def range_grid(cfg: SystemConfig) -> np.ndarray:
    """Cell centres -N/2 + (i + 1/2) dx, i = 0 .. N*G - 1."""
    m = cfg.tbp * cfg.grid_points_per_sample
    return -cfg.tbp / 2 + (np.arange(m) + 0.5) * cfg.cell_width


def matched_filter(y, xs) -> np.ndarray:
    """u(x)^H y for every x in ``xs`` (u is real, so this is sum_n y(n) sinc(n - x))."""
    samples = _samples(y)
    scalar = np.ndim(xs) == 0
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    n = samples.shape[-1]
    out = samples @ steering_matrix(xs, n)
    return out[..., 0] if scalar else out


def _energy(xs, n: int) -> np.ndarray:
    """||u(x)||^2, which drops below 1 only near the interval edges."""
    xs = np.asarray(xs, dtype=float)
    return np.sum(np.sinc(sample_indices(n)[:, None] - np.atleast_1d(xs)[None, :]) ** 2, axis=0).reshape(xs.shape)


def _sw0_from_mf(mf, y_energy, u_energy, alpha, n0, n, keep_constants):
    ll = log_bessel_i0(2.0 * alpha / n0 * np.abs(mf))
    if keep_constants:
        ll = ll - n * math.log(math.pi * n0) - (y_energy + alpha**2 * u_energy) / n0
    return ll


def _sw1_from_mf(mf, y_energy, u_energy, n0, rho_sq, n, keep_constants):
    if rho_sq == 0:
        ll = np.zeros(np.shape(mf))
        if keep_constants:
            ll = ll - n * math.log(math.pi * n0) - y_energy / n0
        return ll
    if not rho_sq > 0:
        raise ValueError("rho_sq must be positive")
    if not keep_constants:
        return np.abs(mf) ** 2 / (n0 * (1.0 + 2.0 / rho_sq))
    power = rho_sq * n0 / 2.0
    return (-n * math.log(math.pi * n0) - np.log1p(power * u_energy / n0) - y_energy / n0
            + power * np.abs(mf) ** 2 / (n0 * (n0 + power * u_energy)))


def _broadcast_energy(samples, mf):
    y_energy = np.sum(np.abs(samples) ** 2, axis=-1)
    if np.ndim(mf) > np.ndim(y_energy):
        y_energy = y_energy[..., None]
    return y_energy


def log_likelihood_sw0(y, x, alpha: float, n0: float, keep_constants: bool = False):
    """Swerling 0 log-likelihood of the range after averaging out the phase.

    Without constants this is ln I0(2 alpha |u^H y| / n0), the only
    x-dependent factor under ||u(x)|| = 1. With ``keep_constants`` the full
    density is returned, including -N ln(pi n0) and the energy term
    -(||y||^2 + alpha^2 ||u(x)||^2) / n0 evaluated with the exact ||u(x)||^2.
    """
    samples = _samples(y)
    mf = matched_filter(samples, x)
    n = samples.shape[-1]
    if not keep_constants:
        return _sw0_from_mf(mf, None, None, alpha, n0, n, False)
    return _sw0_from_mf(mf, _broadcast_energy(samples, mf), _energy(x, n), alpha, n0, n, True)


def log_likelihood_sw1(y, x, n0: float, rho_sq: float, keep_constants: bool = False):
    """Swerling 1 log-likelihood; the scattering coefficient is CN(0, rho^2 n0 / 2).

    Without constants this is |u^H y|^2 / (n0 (1 + 2/rho^2)). The full form is
    the exact complex Gaussian density with covariance n0 I + P u u^H.
    """
    samples = _samples(y)
    mf = matched_filter(samples, x)
    n = samples.shape[-1]
    if not keep_constants:
        return _sw1_from_mf(mf, None, None, n0, rho_sq, n, False)
    return _sw1_from_mf(mf, _broadcast_energy(samples, mf), _energy(x, n), n0, rho_sq, n, True)


def log_likelihood(y, xs, cfg: SystemConfig, keep_constants: bool = False):
    if cfg.swerling is Swerling.SWERLING0:
        return log_likelihood_sw0(y, xs, cfg.alpha, cfg.n0, keep_constants)
    return log_likelihood_sw1(y, xs, cfg.n0, cfg.rho_sq, keep_constants)


def log_likelihood_paired(samples, xs, cfg: SystemConfig, keep_constants: bool = True) -> np.ndarray:
    """ln p(y_i | x_i) for matching rows of ``samples`` (m, N) and entries of ``xs`` (m,)."""
    samples = np.asarray(samples, dtype=complex)
    xs = np.asarray(xs, dtype=float)
    n = samples.shape[-1]
    u = steering_matrix(xs, n).T
    mf = np.einsum("...n,...n->...", samples, u)
    y_energy = np.sum(np.abs(samples) ** 2, axis=-1)
    u_energy = np.sum(u**2, axis=-1)
    if cfg.swerling is Swerling.SWERLING0:
        return _sw0_from_mf(mf, y_energy, u_energy, cfg.alpha, cfg.n0, n, keep_constants)
    return _sw1_from_mf(mf, y_energy, u_energy, cfg.n0, cfg.rho_sq, n, keep_constants)


def posterior_from_loglik(xs: np.ndarray, loglik: np.ndarray, cell_width: float) -> PosteriorGrid:
    """Normalize log-likelihood values on the grid under a uniform prior."""
    loglik = np.asarray(loglik, dtype=float)
    norm = logsumexp(loglik, axis=-1, keepdims=True)
    if not np.all(np.isfinite(norm)):
        raise DegeneratePosteriorError("log-likelihood is -inf (or nan) on the whole grid")
    log_density = loglik - norm - math.log(cell_width)
    return PosteriorGrid(xs, log_density, np.exp(log_density), cell_width)


def posterior_grid(y, cfg: SystemConfig, exact_energy: bool = False) -> PosteriorGrid:
    """p(x | y) on the range grid with the uniform prior 1/N.

    ``exact_energy`` keeps the x-dependent -alpha^2 ||u(x)||^2 / n0 term of
    the full likelihood, which matters only within about one sample of the
    interval edges.
    """
    samples = _samples(y)
    if samples.shape[-1] != cfg.tbp:
        raise ValueError(f"received vector has {samples.shape[-1]} samples, config says N={cfg.tbp}")
    xs = range_grid(cfg)
    ll = log_likelihood(samples, xs, cfg, keep_constants=exact_energy)
    return posterior_from_loglik(xs, ll, cfg.cell_width)


def gaussian_approx(x0: float, rho_sq: float) -> GaussianApprox:
    """High-SNR Gaussian posterior with variance 1 / (rho^2 beta^2)."""
    if not rho_sq > 0:
        raise ValueError("rho_sq must be positive")
    return GaussianApprox(float(x0), 1.0 / (rho_sq * BETA_SQ))
