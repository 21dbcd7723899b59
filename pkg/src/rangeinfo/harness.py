"""Experiment drivers behind the CLI: SNR sweep, posterior demo and theorem suite."""

from __future__ import annotations

import logging
import math
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from rangeinfo.bounds import crb, empirical_mse, zzb
from rangeinfo.config import ExperimentConfig, load_config
from rangeinfo.csvio import DEMO_SCHEMA, SWEEP_SCHEMA, THEOREM_SCHEMA, write_table
from rangeinfo.estimators import map_estimate, mle_estimate, sap_estimate
from rangeinfo.info_metrics import (
    LN2,
    ee_closed_form,
    entropy_error,
    grid_entropy,
    ri_upper_bound,
    simulate_posteriors,
)
from rangeinfo.posterior import posterior_grid
from rangeinfo.signal_model import (
    STREAM_DEMO,
    STREAM_SAP,
    SystemConfig,
    draw_range,
    generate_echo,
    trial_rng,
)
from rangeinfo.typicality import entropy_references, run_theorem_trial

log = logging.getLogger("rangeinfo")

DB_NOTE = "variances in normalized range units^2; dB = 10 log10(variance)"

SWEEP_COLUMNS = (
    "snr_db", "ri_bits", "ri_se_bits", "ri_bound_bits", "ee_mc", "ee_closed", "crb", "zzb",
    "mse_mle", "mse_mle_se", "mse_map", "mse_map_se", "mse_sap", "mse_sap_se", "trials", "seed",
)
THEOREM_COLUMNS = (
    "m", "epsilon", "trials", "successes", "p_fail", "p_fail_se", "empirical_entropy",
    "empirical_entropy_se", "empirical_info", "i_xy", "i_xy_se", "fano_lhs", "fano_rhs", "flagged",
)


@dataclass(frozen=True)
class SweepRecord:
    snr_db: float
    ri_bits: float
    ri_se_bits: float
    ri_bound_bits: float
    ee_mc: float
    ee_closed: float
    crb: float
    zzb: float
    mse_mle: float
    mse_mle_se: float
    mse_map: float
    mse_map_se: float
    mse_sap: float
    mse_sap_se: float
    trials: int
    seed: int

    def __post_init__(self):
        for name in ("ee_mc", "ee_closed", "crb", "zzb", "mse_mle", "mse_map", "mse_sap"):
            if not getattr(self, name) > 0:
                raise ArithmeticError(f"{name} must be positive at {self.snr_db} dB")
        for name in ("ri_se_bits", "mse_mle_se", "mse_map_se", "mse_sap_se"):
            if not getattr(self, name) >= 0:
                raise ArithmeticError(f"{name} must be nonnegative at {self.snr_db} dB")


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def _log_run(kind: str, exp: ExperimentConfig) -> None:
    log.info("%s: seed=%d config_hash=%s git=%s source=%s", kind, exp.system.seed,
             exp.system.digest(), git_describe(), exp.source)


def _resolve(config: ExperimentConfig | str | Path | None, seed: int | None) -> ExperimentConfig:
    exp = config if isinstance(config, ExperimentConfig) else load_config(config)
    return exp.with_seed(seed)


def sweep_point(cfg: SystemConfig) -> SweepRecord:
    """Every sweep column at one SNR. Snapshot t uses the same generator at every SNR."""
    truths, samples, post = simulate_posteriors(cfg)
    h = grid_entropy(post)
    h_bits = h / LN2
    ri = math.log2(cfg.tbp) - h_bits
    mse_map = empirical_mse((map_estimate(post).x - truths) ** 2)
    mse_mle = empirical_mse((mle_estimate(samples, cfg).x - truths) ** 2)
    x_sap = np.array([sap_estimate(post[t], trial_rng(cfg.seed, STREAM_SAP, t)) for t in range(len(truths))])
    mse_sap = empirical_mse((x_sap - truths) ** 2)
    rho_sq = cfg.rho_sq
    return SweepRecord(
        snr_db=float(cfg.snr_db),
        ri_bits=float(ri.mean()),
        ri_se_bits=float(h_bits.std(ddof=1) / math.sqrt(h_bits.size)),
        ri_bound_bits=ri_upper_bound(cfg.swerling, cfg.tbp, rho_sq),
        ee_mc=entropy_error(float(h_bits.mean())),
        ee_closed=ee_closed_form(rho_sq, cfg.tbp).ee_closed,
        crb=crb(rho_sq),
        zzb=zzb(rho_sq, cfg.tbp),
        mse_mle=mse_mle[0], mse_mle_se=mse_mle[1],
        mse_map=mse_map[0], mse_map_se=mse_map[1],
        mse_sap=mse_sap[0], mse_sap_se=mse_sap[1],
        trials=cfg.trials, seed=cfg.seed,
    )


def sweep_records(exp: ExperimentConfig, threads: int = 1) -> list[SweepRecord]:
    """One record per SNR point, in SNR order whatever the completion order."""
    cfgs = [exp.system.replace(snr_db=float(s)) for s in exp.sweep.snr_db]
    if threads <= 1:
        return [sweep_point(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(sweep_point, cfgs))


def run_sweep(config: ExperimentConfig | str | Path | None, out_dir: str | Path,
              seed: int | None = None, threads: int = 1) -> Path:
    """Run the SNR sweep and write ``sweep.csv`` into ``out_dir``."""
    exp = _resolve(config, seed)
    _log_run("sweep", exp)
    records = sweep_records(exp, threads)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    comments = {
        "config_hash": exp.system.digest(), "seed": exp.system.seed, "tbp": exp.system.tbp,
        "swerling": exp.system.swerling.value, "units": DB_NOTE,
        "ri_units": "bits", "ee_closed_zzb_model": "swerling0",
    }
    return write_table(out / "sweep.csv", SWEEP_SCHEMA, SWEEP_COLUMNS, [asdict(r) for r in records], comments)


@dataclass(frozen=True)
class DemoResult:
    csv_path: Path
    plot_path: Path | None
    x_true: float
    x_map: float
    n_peaks: int
    main_lobe_mass: float


def count_peaks(density: np.ndarray, rel_height: float = 0.05) -> int:
    """Local maxima of a posterior that reach ``rel_height`` of its maximum."""
    peaks, _ = find_peaks(density, height=rel_height * density.max())
    return int(len(peaks))


def run_posterior_demo(snr_db: float, seed: int | None, out_dir: str | Path,
                       config: ExperimentConfig | str | Path | None = None,
                       plot: bool = True) -> DemoResult:
    """Posterior of one snapshot plus RI, EE and MSE annotations at the same SNR."""
    exp = _resolve(config, seed)
    cfg = exp.system.replace(snr_db=float(snr_db))
    _log_run("posterior-demo", exp)
    rng = trial_rng(cfg.seed, STREAM_DEMO, 0)
    x0 = draw_range(cfg, rng)
    post = posterior_grid(generate_echo(cfg, x0, rng), cfg)
    x_map = float(map_estimate(post).x)
    lobe = np.abs(post.xs - x_map) <= 1.0
    main_lobe_mass = float(post.density[lobe].sum() * post.cell_width)
    summary = sweep_point(cfg) if cfg.rho_sq > 0 else None

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    comments = {
        "config_hash": cfg.digest(), "seed": cfg.seed, "snr_db": cfg.snr_db, "x_true": x0,
        "x_map": x_map, "n_peaks": count_peaks(post.density), "main_lobe_mass": main_lobe_mass,
        "posterior_entropy_bits": grid_entropy(post) / LN2,
    }
    if summary is not None:
        comments.update({"ri_bits": summary.ri_bits, "ee_mc": summary.ee_mc,
                         "ee_closed": summary.ee_closed, "mse_map": summary.mse_map,
                         "crb": summary.crb, "trials": summary.trials})
    rows = ({"x": float(x), "density": float(p)} for x, p in zip(post.xs, post.density))
    csv_path = write_table(out / "posterior_demo.csv", DEMO_SCHEMA, ("x", "density"), rows, comments)
    plot_path = None
    if plot:
        from rangeinfo.plotting import plot_posterior_demo
        plot_path = plot_posterior_demo(csv_path, out / "posterior_demo.svg")
    return DemoResult(csv_path, plot_path, x0, x_map, comments["n_peaks"], main_lobe_mass)


def run_theorem_suite(config: ExperimentConfig | str | Path | None, out_dir: str | Path,
                      seed: int | None = None, cache_dir: str | Path | None = None) -> Path:
    """TypicalityReport rows over the (m, epsilon) lattice, written to ``theorem.csv``."""
    exp = _resolve(config, seed)
    th = exp.theorem
    cfg = exp.system.replace(snr_db=th.snr_db)
    _log_run("theorem", exp)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    refs = entropy_references(cfg, th.ref_trials, cache_dir if cache_dir is not None else out / "cache")
    rows = []
    for m in th.m_values:
        for eps in th.epsilons:
            rep = run_theorem_trial(cfg, m, eps, th.trials, refs)
            if rep.flagged:
                log.warning("m=%d epsilon=%g: no successful trials, empirical entropy undefined", m, eps)
            rows.append({k: getattr(rep, k) for k in THEOREM_COLUMNS})
    comments = {
        "config_hash": cfg.digest(), "seed": cfg.seed, "snr_db": cfg.snr_db, "units": "nats",
        "h_x": refs.h_x, "h_y": refs.h_y, "h_xy": refs.h_xy, "h_x_given_y": refs.h_x_given_y,
        "i_xy": refs.i_xy, "i_xy_se": refs.i_xy_se, "ref_trials": refs.ref_trials,
    }
    return write_table(out / "theorem.csv", THEOREM_SCHEMA, THEOREM_COLUMNS, rows, comments)
