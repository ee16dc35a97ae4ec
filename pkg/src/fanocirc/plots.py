"""Figure rendering for the CLI report paths.

Every subcommand that writes a CSV can also render a PNG next to it.
The Agg backend is forced so runs work headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _finish(fig, path: str):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def spectrum_png(path: str, phi: np.ndarray, sectors: np.ndarray,
                 omegas: np.ndarray):
    """Transition frequencies vs flux, one line style per sector."""
    fig, ax = plt.subplots(figsize=(7, 5))
    styles = ["-", "--", "-.", ":"]
    for s in sorted(set(int(v) for v in sectors)):
        m = sectors == s
        for k in range(omegas.shape[1]):
            ax.plot(phi[m] / (2 * np.pi), omegas[m, k], styles[s % 4],
                    color=f"C{k}", lw=1.0,
                    label=f"$\\omega_{k + 1}$, sector {s}")
    ax.set_xlabel(r"$\varphi_x / 2\pi$")
    ax.set_ylabel("transition frequency (GHz)")
    ax.legend(fontsize=6, ncol=2)
    _finish(fig, path)


def smatrix_png(path: str, f: np.ndarray, s_abs: np.ndarray):
    """3x3 grid of |S_ij| vs frequency; s_abs has shape (n, 3, 3)."""
    fig, axes = plt.subplots(3, 3, figsize=(9, 7), sharex=True, sharey=True)
    for i in range(3):
        for j in range(3):
            ax = axes[i][j]
            ax.plot(f, s_abs[:, i, j], lw=1.2)
            ax.set_title(f"$|S_{{{i + 1}{j + 1}}}|$", fontsize=9)
            ax.set_ylim(-0.05, 1.05)
    for j in range(3):
        axes[2][j].set_xlabel("frequency (GHz)")
    _finish(fig, path)


def fidelity_png(path: str, f: np.ndarray, f_cw: np.ndarray,
                 f_ccw: np.ndarray, r_avg: np.ndarray):
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    axes[0].plot(f, f_cw, label=r"$F_{cw}$")
    axes[0].plot(f, f_ccw, label=r"$F_{ccw}$")
    axes[0].plot(f, r_avg, label=r"$\mathcal{R}$")
    axes[0].set_ylabel("fidelity")
    axes[0].legend()
    with np.errstate(divide="ignore"):
        axes[1].plot(f, -20 * np.log10(f_cw), label="IL (dB)")
        axes[1].plot(f, -20 * np.log10(f_ccw), label="IS (dB)")
        axes[1].plot(f, 20 * np.log10(r_avg), label="R (dB)")
    axes[1].axhline(1.0, color="k", lw=0.5, ls="--")
    axes[1].set_ylim(-40, 40)
    axes[1].set_xlabel("frequency (GHz)")
    axes[1].set_ylabel("dB")
    axes[1].legend()
    _finish(fig, path)


def optimize_png(path: str, f_start: np.ndarray, f_final: np.ndarray,
                 best: int):
    fig, ax = plt.subplots(figsize=(6, 4))
    idx = np.arange(len(f_start))
    ax.plot(idx, f_start, "o", label="presample")
    ax.plot(idx, f_final, "s", label="after simplex")
    ax.axvline(best, color="C3", lw=0.8, ls=":", label="winner")
    ax.set_xlabel("start index")
    ax.set_ylabel("fidelity")
    ax.legend()
    _finish(fig, path)


def spread_png(path: str, deltas: np.ndarray, c_xs: np.ndarray,
               fids: np.ndarray):
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in sorted(set(float(v) for v in c_xs)):
        m = c_xs == c
        order = np.argsort(deltas[m])
        ax.plot(np.asarray(deltas[m])[order] * 100,
                np.asarray(fids[m])[order], "o-",
                label=f"$C_X$ = {c:g} fF")
    ax.set_xlabel(r"junction energy spread $\delta E_J$ (%)")
    ax.set_ylabel("optimized fidelity")
    ax.legend()
    _finish(fig, path)


def power_png(path: str, p_dbm: np.ndarray, fids: np.ndarray, p_3db: float):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(p_dbm, fids, "o-")
    ax.axvline(p_3db, color="C3", ls="--", lw=0.8,
               label=f"$P_{{3dB}}$ = {p_3db:.1f} dBm")
    ax.set_xlabel("input power (dBm)")
    ax.set_ylabel("fidelity")
    ax.legend()
    _finish(fig, path)
