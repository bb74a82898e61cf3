"""Figures written next to the CSV and JSON outputs of the CLI."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

golden_mean = (np.sqrt(5.0) - 1.0) / 2.0
fig_width = 6.0

params = {
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 120,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_spectra(traj, out_dir, count: int = 6) -> Path:
    """F(t, omega) at up to ``count`` recorded times, log-log."""
    out = Path(out_dir) / "spectra.png"
    snaps = traj.snapshots
    idx = np.unique(np.linspace(0, len(snaps) - 1, min(count, len(snaps))).astype(int))
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        cmap = plt.get_cmap("viridis")
        for j, i in enumerate(idx):
            s = snaps[i]
            w = s.grid.centers
            pos = s.F > 0
            ax.loglog(w[pos], s.F[pos], color=cmap(j / max(len(idx) - 1, 1)), label=f"t = {s.t:.4g}")
        ax.set_xlabel(r"$\omega$")
        ax.set_ylabel(r"$F(t,\omega)$")
        ax.legend(loc="best")
        return _save(fig, out)


def plot_diagnostics(traj, out_dir) -> Path:
    """Conservation drift, Lyapunov functional, origin functional and dyadic masses."""
    out = Path(out_dir) / "diagnostics.png"
    t = traj.times
    m, e = traj.column("mass"), traj.column("energy")
    with plt.rc_context(params):
        fig, axs = plt.subplots(2, 2, figsize=(fig_width * 1.3, fig_width))
        ax = axs[0, 0]
        ax.plot(t, (m - m[0]) / m[0], label="mass")
        ax.plot(t, (e - e[0]) / e[0], "--", label="energy")
        ax.set_ylabel("relative drift")
        ax.legend()
        ax = axs[0, 1]
        ax.plot(t, traj.column("phi"))
        ax.set_ylabel(r"$\int F\,\ln(\omega+1)\,d\omega$")
        ax = axs[1, 0]
        ax.plot(t, traj.column("origin_functional"))
        ax.set_ylabel(rf"$\int F\,(L-\omega)_+\,d\omega$, $L={traj.origin_L:.3g}$")
        ax.set_xlabel("t")
        ax = axs[1, 1]
        for n in traj.dyadic_n:
            ax.plot(t, traj.dyadic_mass(n), label=f"n={n}")
        if traj.condensation_time is not None:
            ax.axvline(traj.condensation_time, color="k", ls=":", lw=1)
        ax.set_ylabel(r"mass in $[0, 2^{-n})$")
        ax.set_xlabel("t")
        ax.legend(ncol=2, fontsize=6)
        return _save(fig, out)


def plot_report(traj, report: dict, out_dir) -> list[Path]:
    """Figures for a diagnose report: detector margins and the dyadic masses."""
    paths = []
    cond = report.get("condensation", {})
    if "n_range" in cond:
        lo, hi = cond["n_range"]
        out = Path(out_dir) / "detector.png"
        t = traj.times
        with plt.rc_context(params):
            fig, ax = plt.subplots()
            for n in range(lo, hi + 1):
                thr = cond["C_F"] * 2.0 ** (-n * cond["varsigma"])
                ax.plot(t, traj.dyadic_mass(n) / thr, label=f"n={n}")
            ax.axhline(1.0, color="k", lw=1)
            if cond.get("T0_hat") is not None:
                ax.axvline(cond["T0_hat"], color="k", ls=":", lw=1)
            ax.set_xlabel("t")
            ax.set_ylabel("dyadic mass / threshold")
            ax.legend(ncol=2, fontsize=6)
            paths.append(_save(fig, out))
    return paths
