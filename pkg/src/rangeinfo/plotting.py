"""Static SVG figures from the sweep and demo CSV files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from rangeinfo.csvio import DEMO_SCHEMA, SWEEP_SCHEMA, read_table  # noqa: E402

_RC = {
    "figure.figsize": (6.0, 4.2),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.frameon": False,
    "svg.hashsalt": "rangeinfo",
    "svg.fonttype": "none",
}


def _columns(rows, names):
    return {n: np.array([float(r[n]) for r in rows]) for n in names}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit_plots(csv_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Write bounds.svg, ri.svg and mse.svg from a sweep CSV.

    The CSV is fully read and validated before any file is created.
    """
    _, rows = read_table(csv_path, SWEEP_SCHEMA)
    c = _columns(rows, ("snr_db", "ri_bits", "ri_se_bits", "ri_bound_bits", "ee_mc", "ee_closed",
                        "crb", "zzb", "mse_mle", "mse_map", "mse_sap"))
    db = lambda v: 10.0 * np.log10(v)
    snr = c["snr_db"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(snr, db(c["crb"]), "k--", label="CRB")
        ax.plot(snr, db(c["zzb"]), "k-", label="ZZB")
        ax.plot(snr, db(c["ee_closed"]), "C0-", label="EE closed form")
        ax.plot(snr, db(c["ee_mc"]), "C1o", ms=3.5, label="EE Monte Carlo")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("variance (dB)")
        ax.legend()
        paths.append(_save(fig, out / "bounds.svg"))

        fig, ax = plt.subplots()
        ax.errorbar(snr, c["ri_bits"], yerr=2 * c["ri_se_bits"], fmt="C0o", ms=3.5, label="RI Monte Carlo")
        ax.plot(snr, c["ri_bound_bits"], "k--", label="upper bound")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("range information (bits)")
        ax.set_ylim(bottom=min(0.0, float(np.min(c["ri_bits"]))))
        ax.legend()
        paths.append(_save(fig, out / "ri.svg"))

        fig, ax = plt.subplots()
        ax.plot(snr, db(c["mse_mle"]), "C0o-", ms=3.5, label="MLE")
        ax.plot(snr, db(c["mse_map"]), "C2x", ms=4, label="MAP")
        ax.plot(snr, db(c["mse_sap"]), "C3s-", ms=3.5, label="SAP")
        ax.plot(snr, db(c["crb"]), "k--", label="CRB")
        ax.plot(snr, db(c["zzb"]), "k-", label="ZZB")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("MSE (dB)")
        ax.legend()
        paths.append(_save(fig, out / "mse.svg"))
    return paths


def plot_posterior_demo(csv_path: str | Path, out_path: str | Path) -> Path:
    meta, rows = read_table(csv_path, DEMO_SCHEMA)
    c = _columns(rows, ("x", "density"))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(c["x"], c["density"], "C0-")
        ax.axvline(float(meta["x_true"]), color="k", ls=":", lw=1, label="true range")
        ax.set_xlabel("normalized range x")
        ax.set_ylabel("p(x | y)")
        notes = [f"SNR = {float(meta['snr_db']):g} dB"]
        if "ri_bits" in meta:
            notes.append(f"RI = {float(meta['ri_bits']):.2f} bit")
            notes.append(f"EE = {float(meta['ee_mc']):.3g}")
            notes.append(f"MSE = {float(meta['mse_map']):.3g}")
        ax.text(0.02, 0.97, "\n".join(notes), transform=ax.transAxes, va="top", fontsize=9)
        ax.legend(loc="upper right")
        return _save(fig, Path(out_path))
