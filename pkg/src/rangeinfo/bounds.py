"""Reference bounds (CRB, ZZB), MSE aggregation and threshold-shape analysis.

Variances are in normalized range units squared; dB values are
10 log10(variance).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from rangeinfo.estimators import EstimateRecord
from rangeinfo.info_metrics import ee_closed_form
from rangeinfo.posterior import BETA_SQ


class BoundKind(str, Enum):
    CRB = "crb"
    ZZB = "zzb"
    EE_CLOSED = "ee_closed"
    EE_MC = "ee_mc"


@dataclass(frozen=True, eq=False)
class BoundCurve:
    snr_db: np.ndarray
    value: np.ndarray
    kind: BoundKind

    def __post_init__(self):
        if self.snr_db.shape != self.value.shape:
            raise ValueError("snr_db and value must have equal lengths")
        if np.any(~(self.value > 0)):
            raise ValueError("bound values must be positive")

    @property
    def value_db(self) -> np.ndarray:
        return to_db(self.value)


def to_db(v):
    return 10.0 * np.log10(v)


def crb(rho_sq: float) -> float:
    """Cramer-Rao bound 1 / (rho^2 beta^2) for the delay with unknown phase."""
    if not rho_sq > 0:
        raise ValueError("rho_sq must be positive")
    return 1.0 / (rho_sq * BETA_SQ)


def zzb(rho_sq: float, n: int) -> float:
    """Single-pulse Ziv-Zakai bound for a range uniform on an interval of length N.

    (1/N) int_0^N (N - h) h Pmin(h) dh, where Pmin(h) = Q(sqrt(rho^2 (1 - sinc h) / 2))
    is the error probability of the coherent binary test between ranges h
    apart (distance alpha^2 ||u(x) - u(x+h)||^2 = 2 alpha^2 (1 - sinc h), noise n0/2
    per real dimension). Valley filling is not applied.
    """
    if not rho_sq > 0:
        raise ValueError("rho_sq must be positive")
    if n < 4:
        raise ValueError("n must be at least 4")

    def integrand(h):
        return (n - h) * h * ndtr(-math.sqrt(max(rho_sq * (1.0 - np.sinc(h)) / 2.0, 0.0)))

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            # break at every sidelobe and, at high SNR, near the main lobe where Pmin decays
            knots = sorted(set([k for k in range(1, n)] + [min(10.0 / math.sqrt(rho_sq), n / 2)]))
            value, err = integrate.quad(integrand, 0.0, n, points=knots, limit=800,
                                        epsabs=0.0, epsrel=1e-10)
        except integrate.IntegrationWarning as exc:
            raise ArithmeticError(f"ZZB quadrature did not converge at rho^2={rho_sq}: {exc}") from None
    if not (err <= 1e-6 * abs(value) and value > 0):
        raise ArithmeticError(f"ZZB quadrature did not converge at rho^2={rho_sq}")
    return value / n


def bound_curve(kind: BoundKind | str, snr_db: Sequence[float], n: int) -> BoundCurve:
    """CRB, ZZB or closed-form EE evaluated over an SNR grid in dB."""
    kind = BoundKind(kind)
    snr_db = np.asarray(snr_db, dtype=float)
    rho_sq = 10.0 ** (snr_db / 10.0)
    if kind is BoundKind.CRB:
        value = np.array([crb(r) for r in rho_sq])
    elif kind is BoundKind.ZZB:
        value = np.array([zzb(r, n) for r in rho_sq])
    elif kind is BoundKind.EE_CLOSED:
        value = np.array([ee_closed_form(r, n).ee_closed for r in rho_sq])
    else:
        raise ValueError("EE_mc curves come from a simulation sweep, not from a formula")
    return BoundCurve(snr_db, value, kind)


def empirical_mse(records: Sequence[EstimateRecord] | np.ndarray) -> tuple[float, float]:
    """Mean squared error and its Monte Carlo standard error.

    Accepts EstimateRecords or a plain array of squared errors.
    """
    if len(records) == 0:
        raise ValueError("empirical_mse needs at least one record")
    if isinstance(records, np.ndarray):
        sq = records.astype(float)
    else:
        sq = np.array([r.sq_err for r in records], dtype=float)
    se = sq.std(ddof=1) / math.sqrt(sq.size) if sq.size > 1 else 0.0
    return float(sq.mean()), float(se)


@dataclass(frozen=True)
class ThresholdShape:
    """Region analysis of a log-variance curve on a uniform SNR grid."""

    signs: tuple[int, ...]
    start_slope: float
    end_slope: float
    steepest_slope: float

    @property
    def pattern(self) -> str:
        """Run-length collapsed signs, e.g. '0-+0'."""
        sym = {-1: "-", 0: "0", 1: "+"}
        out = []
        for s in self.signs:
            c = sym[s]
            if not out or out[-1] != c:
                out.append(c)
        return "".join(out)

    @property
    def has_three_regions(self) -> bool:
        """Plateau, threshold drop, CRB-parallel decay.

        The second differences must read flat, concave, convex, flat, with a
        level start, an end slope of -1 decade per 10 dB (within 20 %), and a
        threshold drop steeper than that end slope.
        """
        return (
            self.pattern == "0-+0"
            and abs(self.start_slope) < 0.02
            and abs(self.end_slope + 0.1) < 0.02
            and self.steepest_slope < self.end_slope
        )


def threshold_shape(snr_db: Sequence[float], values: Sequence[float], tol: float = 2e-3) -> ThresholdShape:
    """Classify a variance-vs-SNR curve by the signs of second differences of log10(value).

    ``tol`` is in decades per dB^2; second differences smaller in magnitude
    count as zero.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    step = np.diff(snr_db)
    if snr_db.size < 5 or not np.allclose(step, step[0]):
        raise ValueError("threshold_shape needs at least 5 points on a uniform SNR grid")
    log_v = np.log10(np.asarray(values, dtype=float))
    slope = np.diff(log_v) / step[0]
    d2 = np.diff(log_v, 2) / step[0] ** 2
    signs = tuple(int(s) for s in np.where(np.abs(d2) < tol, 0, np.sign(d2)))
    return ThresholdShape(signs, float(slope[0]), float(slope[-1]), float(slope.min()))
