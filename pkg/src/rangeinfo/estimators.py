"""MAP, MLE and sampling-a-posteriori (SAP) range estimators.

All three work on batched inputs: a posterior with shape ``(..., M)`` gives
estimates with shape ``(...)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from rangeinfo.posterior import PosteriorGrid, log_likelihood, range_grid
from rangeinfo.signal_model import SystemConfig

# log-density spread below which a posterior counts as flat
_FLAT_TOL = 1e-12


class Estimator(str, Enum):
    MAP = "map"
    MLE = "mle"
    SAP = "sap"


@dataclass(frozen=True)
class EstimateRecord:
    estimator: Estimator
    x_hat: float
    x_true: float

    @property
    def sq_err(self) -> float:
        return (self.x_hat - self.x_true) ** 2


class Peak(NamedTuple):
    x: np.ndarray | float
    degenerate: np.ndarray | bool


def _refined_peak(xs: np.ndarray, values: np.ndarray) -> Peak:
    """Grid argmax (first one on ties) refined by a 3-point parabola on ``values``."""
    values = np.asarray(values, dtype=float)
    m = xs.shape[0]
    idx = np.argmax(values, axis=-1)
    flat = (values.max(axis=-1) - values.min(axis=-1)) < _FLAT_TOL
    inner = np.clip(idx, 1, m - 2)
    take = lambda k: np.take_along_axis(values, np.expand_dims(k, -1), axis=-1)[..., 0]
    left, mid, right = take(inner - 1), take(inner), take(inner + 1)
    curv = left - 2.0 * mid + right
    usable = (idx == inner) & (curv < 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(usable, 0.5 * (left - right) / np.where(usable, curv, 1.0), 0.0)
    dx = xs[1] - xs[0]
    x = xs[idx] + shift * dx
    x = np.where(flat, 0.5 * (xs[0] + xs[-1]), x)
    if x.ndim == 0:
        return Peak(float(x), bool(flat))
    return Peak(x, flat)


def map_estimate(p: PosteriorGrid) -> Peak:
    """Maximum a posteriori range; flat posteriors return the interval centre flagged degenerate."""
    return _refined_peak(p.xs, p.log_density)


def mle_estimate(y, cfg: SystemConfig) -> Peak:
    """Maximum likelihood range over the same grid and refinement as :func:`map_estimate`."""
    xs = range_grid(cfg)
    samples = y.samples if hasattr(y, "samples") else np.asarray(y, dtype=complex)
    return _refined_peak(xs, log_likelihood(samples, xs, cfg))


def sap_estimate(p: PosteriorGrid, rng: np.random.Generator, size: int | None = None):
    """Draw from the grid posterior: inverse CDF over cells, then uniform jitter inside the cell.

    For a batched posterior one draw is made per snapshot; ``size`` adds
    trailing draws per snapshot.
    """
    mass = p.mass()
    if np.any(np.abs(mass - 1.0) > 1e-6):
        raise ValueError("posterior grid is not normalized")
    cdf = np.cumsum(p.density, axis=-1) * p.cell_width
    batch = cdf.shape[:-1]
    shape = batch + (() if size is None else (size,))
    u = rng.uniform(size=shape)
    jitter = rng.uniform(-0.5, 0.5, size=shape)
    flat_cdf = cdf.reshape(-1, cdf.shape[-1])
    flat_u = u.reshape(flat_cdf.shape[0], -1)
    idx = np.empty(flat_u.shape, dtype=np.intp)
    for row in range(flat_cdf.shape[0]):
        c = flat_cdf[row]
        idx[row] = np.searchsorted(c, flat_u[row] * c[-1], side="right")
    idx = np.minimum(idx, len(p.xs) - 1).reshape(shape)
    x = p.xs[idx] + jitter * p.cell_width
    return float(x) if np.ndim(x) == 0 else x
