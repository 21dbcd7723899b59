"""Desk-scale checks of the parameter estimation theorem on the m-extension channel.

The m-extension is the memoryless product channel: m independent ranges
x_i, each uniform on the full interval [-N/2, N/2), observed through m
independent snapshots y_i. Every density here is a proper one: the
likelihood keeps all constants and the exact ||u(x)||^2, and

    ln p(y) = ln( (1/N) * sum_cells p(y | x) dx ).

All entropies and the tolerance epsilon are in nats.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from rangeinfo.errors import CacheError
from rangeinfo.estimators import sap_estimate
from rangeinfo.info_metrics import grid_entropy
from rangeinfo.posterior import (
    log_likelihood,
    log_likelihood_paired,
    posterior_from_loglik,
    range_grid,
)
from rangeinfo.signal_model import (
    STREAM_REFERENCE,
    STREAM_THEOREM,
    ReceivedSignal,
    SystemConfig,
    draw_range,
    generate_echo,
    trial_rng,
)

CACHE_FORMAT = "rangeinfo.entropy-references"
CACHE_VERSION = 1
MAX_M = 256
MAX_TRIALS = 2000
_CHUNK = 500


def typicality_config(cfg: SystemConfig) -> SystemConfig:
    """The configuration the extension channel actually uses: x over the whole interval."""
    return cfg.replace(range_fraction=1.0)


@dataclass(frozen=True)
class EntropyReferences:
    """True entropies of the single-snapshot channel, in nats, with MC standard errors."""

    h_x: float
    h_y: float
    h_y_se: float
    h_xy: float
    h_xy_se: float
    h_x_given_y: float
    h_x_given_y_se: float
    i_xy: float
    i_xy_se: float
    ref_trials: int
    tbp: int

    def __post_init__(self):
        values = [v for v in asdict(self).values() if isinstance(v, float)]
        if not all(math.isfinite(v) for v in values):
            raise ArithmeticError("nonfinite reference entropy")

    @property
    def i_xy_bits(self) -> float:
        return self.i_xy / math.log(2.0)


@dataclass(frozen=True, eq=False)
class ExtensionTrial:
    """One draw of the m-extension with its SAP sequence estimate.

    ``log_p_xy`` and ``log_p_xhat_y`` are sums of ln pi(x_i) + ln p(y_i | x_i)
    with the true and the estimated ranges; ``log_p_y`` sums ln p(y_i).
    """

    m: int
    x_seq: np.ndarray
    y_seq: list[ReceivedSignal]
    xhat_seq: np.ndarray
    log_pi_x: float
    log_p_y: float
    log_p_xy: float
    log_p_xhat_y: float = math.nan

    def __post_init__(self):
        if not (len(self.x_seq) == len(self.y_seq) == len(self.xhat_seq) == self.m):
            raise ValueError("x_seq, y_seq and xhat_seq must all have length m")
        if not all(math.isfinite(v) for v in (self.log_pi_x, self.log_p_y, self.log_p_xy)):
            raise ArithmeticError("nonfinite log-density in extension trial")

    @property
    def log_post_xhat(self) -> float:
        """ln p(xhat_seq | y_seq) of the product posterior."""
        return self.log_p_xhat_y - self.log_p_y


@dataclass(frozen=True)
class TypicalityReport:
    m: int
    epsilon: float
    trials: int
    successes: int
    p_fail: float
    p_fail_se: float
    empirical_entropy: float
    empirical_entropy_se: float
    empirical_info: float
    fano_lhs: float
    fano_rhs: float
    i_xy: float
    i_xy_se: float
    flagged: bool = field(default=False)

    def __post_init__(self):
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")

    @property
    def valid(self) -> bool:
        return not self.flagged

    @property
    def info_se(self) -> float:
        """Combined standard error of empirical_info - i_xy."""
        return math.hypot(self.empirical_entropy_se, self.i_xy_se)


def _snapshot_logs(samples: np.ndarray, x: np.ndarray, cfg: SystemConfig):
    """Per-snapshot ln p(y), ln p(y | x) and the grid posterior for a (k, N) stack."""
    xs = range_grid(cfg)
    ll = log_likelihood(samples, xs, cfg, keep_constants=True)
    log_p_y = logsumexp(ll, axis=-1) + math.log(cfg.cell_width) - math.log(cfg.tbp)
    log_p_y_given_x = log_likelihood_paired(samples, x, cfg, keep_constants=True)
    return log_p_y, log_p_y_given_x, posterior_from_loglik(xs, ll, cfg.cell_width)


def _reference_values(cfg: SystemConfig, ref_trials: int) -> EntropyReferences:
    neg_log_p_y = np.empty(ref_trials)
    h_post = np.empty(ref_trials)
    for start in range(0, ref_trials, _CHUNK):
        stop = min(start + _CHUNK, ref_trials)
        truths = np.empty(stop - start)
        samples = np.empty((stop - start, cfg.tbp), dtype=complex)
        for k, t in enumerate(range(start, stop)):
            rng = trial_rng(cfg.seed, STREAM_REFERENCE, t)
            truths[k] = draw_range(cfg, rng)
            samples[k] = generate_echo(cfg, truths[k], rng).samples
        log_p_y, _, post = _snapshot_logs(samples, truths, cfg)
        neg_log_p_y[start:stop] = -log_p_y
        h_post[start:stop] = grid_entropy(post)

    def mean_se(v):
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size))

    h_x = math.log(cfg.tbp)
    h_y, h_y_se = mean_se(neg_log_p_y)
    h_xgy, h_xgy_se = mean_se(h_post)
    # h(X,Y) = h(Y) + h(X|Y); the per-trial sum keeps the correlation in the standard error
    _, h_xy_se = mean_se(neg_log_p_y + h_post)
    return EntropyReferences(
        h_x=h_x, h_y=h_y, h_y_se=h_y_se, h_xy=h_y + h_xgy, h_xy_se=h_xy_se,
        h_x_given_y=h_xgy, h_x_given_y_se=h_xgy_se, i_xy=h_x - h_xgy, i_xy_se=h_xgy_se,
        ref_trials=ref_trials, tbp=cfg.tbp,
    )


def _cache_path(cache_dir: Path, cfg: SystemConfig, ref_trials: int) -> Path:
    return cache_dir / f"refs-{cfg.digest()}-{ref_trials}.json"


def _load_cache(path: Path, cfg: SystemConfig, ref_trials: int) -> EntropyReferences:
    try:
        record = json.loads(path.read_text())
        if record.get("format") != CACHE_FORMAT or record.get("version") != CACHE_VERSION:
            raise CacheError(f"{path}: unknown cache format or version")
        if record.get("config") != cfg.to_dict() or record.get("ref_trials") != ref_trials:
            raise CacheError(f"{path}: cache key does not match the configuration")
        return EntropyReferences(**record["values"])
    except CacheError:
        raise
    except (OSError, ValueError, KeyError, TypeError, ArithmeticError) as exc:
        raise CacheError(f"{path}: corrupt reference cache ({exc})") from None


def _store_cache(path: Path, cfg: SystemConfig, refs: EntropyReferences) -> None:
    record = {"format": CACHE_FORMAT, "version": CACHE_VERSION, "config": cfg.to_dict(),
              "ref_trials": refs.ref_trials, "values": asdict(refs)}
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(record, fh, indent=1, sort_keys=True)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def entropy_references(cfg: SystemConfig, ref_trials: int = 10_000,
                       cache_dir: str | Path | None = None) -> EntropyReferences:
    """Reference entropies h(X), h(Y), h(X,Y), h(X|Y) and I(X;Y) of one snapshot.

    h(X|Y) is the mean grid entropy of the exact posterior, h(Y) the mean of
    -ln p(y) with p(y) from the full-constants likelihood integrated over the
    grid, and h(X,Y) = h(Y) + h(X|Y). With ``cache_dir`` the result is stored
    as JSON keyed by the configuration digest and ``ref_trials``; a cache
    file that cannot be read or does not match raises :class:`CacheError`.
    """
    if ref_trials < 10_000:
        raise ValueError("entropy_references needs ref_trials >= 10000")
    cfg = typicality_config(cfg)
    if cache_dir is None:
        return _reference_values(cfg, ref_trials)
    path = _cache_path(Path(cache_dir), cfg, ref_trials)
    if path.exists():
        return _load_cache(path, cfg, ref_trials)
    refs = _reference_values(cfg, ref_trials)
    _store_cache(path, cfg, refs)
    return refs


def is_typical_x(x_seq, epsilon: float, refs: EntropyReferences) -> bool:
    """|-(1/m) ln pi(x_seq) - h(X)| < epsilon under the uniform prior.

    Every in-interval sequence has -(1/m) ln pi = ln N exactly, so the test
    only fails for epsilon <= 0.
    """
    x_seq = np.atleast_1d(np.asarray(x_seq, dtype=float))
    if x_seq.size < 1:
        raise ValueError("x_seq must have at least one element")
    half = refs.tbp / 2
    if np.any(~np.isfinite(x_seq)) or np.any(x_seq < -half) or np.any(x_seq >= half):
        raise ValueError("x_seq has components outside the observation interval")
    per_symbol = math.log(refs.tbp)
    return abs(per_symbol - refs.h_x) < epsilon


def is_jointly_typical(trial: ExtensionTrial, epsilon: float, refs: EntropyReferences,
                       use_estimate: bool = False) -> bool:
    """All three joint-typicality conditions: on x, on y and on the pair (x, y).

    ``use_estimate`` tests the pair (xhat_seq, y_seq) instead of (x_seq, y_seq).
    """
    log_joint = trial.log_p_xhat_y if use_estimate else trial.log_p_xy
    if not math.isfinite(log_joint):
        raise ArithmeticError("nonfinite joint log-density")
    m = trial.m
    x = trial.xhat_seq if use_estimate else trial.x_seq
    return (
        is_typical_x(x, epsilon, refs)
        and abs(-trial.log_p_y / m - refs.h_y) < epsilon
        and abs(-log_joint / m - refs.h_xy) < epsilon
    )


def sap_sequence_estimate(y_seq, cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """One SAP draw per snapshot from its own posterior (the product posterior of the extension)."""
    samples = np.array([y.samples if isinstance(y, ReceivedSignal) else np.asarray(y, dtype=complex)
                        for y in y_seq])
    if samples.ndim != 2 or samples.shape[0] < 1:
        raise ValueError("y_seq must hold at least one snapshot")
    cfg = typicality_config(cfg)
    xs = range_grid(cfg)
    post = posterior_from_loglik(xs, log_likelihood(samples, xs, cfg, keep_constants=True), cfg.cell_width)
    return _clip_to_interval(np.atleast_1d(sap_estimate(post, rng)), cfg.tbp)


def _clip_to_interval(x: np.ndarray, n: int) -> np.ndarray:
    return np.minimum(x, np.nextafter(n / 2, -np.inf))


def extension_trial(cfg: SystemConfig, m: int, rng: np.random.Generator) -> ExtensionTrial:
    """Draw (x_seq, y_seq) from the m-extension and the SAP estimate xhat_seq."""
    if not 1 <= m <= MAX_M:
        raise ValueError(f"m must lie in [1, {MAX_M}]")
    cfg = typicality_config(cfg)
    x_seq = np.empty(m)
    y_seq = []
    for i in range(m):
        x_seq[i] = draw_range(cfg, rng)
        y_seq.append(generate_echo(cfg, x_seq[i], rng))
    samples = np.array([y.samples for y in y_seq])
    log_p_y, log_p_y_given_x, post = _snapshot_logs(samples, x_seq, cfg)
    xhat = _clip_to_interval(np.atleast_1d(sap_estimate(post, rng)), cfg.tbp)
    log_p_y_given_xhat = log_likelihood_paired(samples, xhat, cfg, keep_constants=True)
    log_prior = -math.log(cfg.tbp)
    return ExtensionTrial(
        m=m, x_seq=x_seq, y_seq=y_seq, xhat_seq=xhat,
        log_pi_x=m * log_prior,
        log_p_y=math.fsum(log_p_y),
        log_p_xy=m * log_prior + math.fsum(log_p_y_given_x),
        log_p_xhat_y=m * log_prior + math.fsum(log_p_y_given_xhat),
    )


def run_theorem_trial(cfg: SystemConfig, m: int, epsilon: float, trials: int,
                      refs: EntropyReferences) -> TypicalityReport:
    """Failure probability, empirical entropy/information and the Fano check at one (m, epsilon).

    A trial fails when either (x_seq, y_seq) or (xhat_seq, y_seq) is not
    jointly typical. The empirical entropy is the mean of
    -(1/m) ln p(xhat_seq | y_seq) over successful trials. The Fano check
    compares h(X|Y) with ln 2 / m + (1 - P_f) h_emp + P_f (h(X) + epsilon).
    Trial t at extension length m uses ``trial_rng(seed, STREAM_THEOREM, m, t)``,
    so different epsilons see the same draws.
    """
    if not 1 <= trials <= MAX_TRIALS:
        raise ValueError(f"trials must lie in [1, {MAX_TRIALS}]")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if refs.tbp != cfg.tbp:
        raise ValueError("references were computed for a different N")
    fail = np.zeros(trials, dtype=bool)
    ent = np.full(trials, np.nan)
    for t in range(trials):
        trial = extension_trial(cfg, m, trial_rng(cfg.seed, STREAM_THEOREM, m, t))
        fail[t] = not (is_jointly_typical(trial, epsilon, refs)
                       and is_jointly_typical(trial, epsilon, refs, use_estimate=True))
        ent[t] = -trial.log_post_xhat / m
    successes = int((~fail).sum())
    p_fail = float(fail.mean())
    p_fail_se = math.sqrt(p_fail * (1.0 - p_fail) / trials)
    if successes == 0:
        h_emp, h_emp_se = math.nan, math.nan
    else:
        ok = ent[~fail]
        h_emp = float(ok.mean())
        h_emp_se = float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0
    fano_rhs = math.log(2.0) / m + (1.0 - p_fail) * h_emp + p_fail * (refs.h_x + epsilon)
    return TypicalityReport(
        m=m, epsilon=float(epsilon), trials=trials, successes=successes,
        p_fail=p_fail, p_fail_se=p_fail_se,
        empirical_entropy=h_emp, empirical_entropy_se=h_emp_se,
        empirical_info=refs.h_x - h_emp,
        fano_lhs=refs.h_x_given_y, fano_rhs=fano_rhs,
        i_xy=refs.i_xy, i_xy_se=refs.i_xy_se,
        flagged=successes == 0,
    )
