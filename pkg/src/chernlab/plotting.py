"""Figures for the CLI reports, rendered off-screen to PNG files."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

CHERN_CMAP = ListedColormap(["#f39c34", "white", "#35c6d6"])  # +1, 0, -1 after the sign flip below
STYLE = {"figure.dpi": 110, "savefig.dpi": 110, "font.size": 9, "axes.grid": False,
         "svg.hashsalt": "chernlab", "path.simplify": False}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def plot_bands(path, arclength, e_minus, e_plus, ticks, labels):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 3.4))
        ax.plot(arclength, e_minus, color="C0", lw=1.4, label=r"$E_-$")
        ax.plot(arclength, e_plus, color="C3", lw=1.4, label=r"$E_+$")
        for t in ticks:
            ax.axvline(t, color="0.7", lw=0.6)
        ax.set_xticks(ticks, labels)
        ax.set_xlim(arclength[0], arclength[-1])
        ax.set_ylabel("energy")
        ax.legend(frameon=False, loc="upper right")
        return _save(fig, path)


def plot_phase_diagram(path, phi, m_over_t2, chern, gapless, t2):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 3.6))
        data = np.ma.masked_array(-np.asarray(chern, dtype=float), mask=np.asarray(gapless))
        ax.pcolormesh(phi, m_over_t2, data.T, cmap=CHERN_CMAP, vmin=-1.5, vmax=1.5, shading="nearest")
        x = np.linspace(-math.pi, math.pi, 400)
        for sign in (1, -1):
            ax.plot(x, sign * 3 * math.sqrt(3) * np.sin(x), color="k", lw=0.8)
        ax.set_xlabel(r"$\phi$")
        ax.set_ylabel(r"$M / t_2$")
        ax.set_title(r"$c_1$: cyan $-1$, orange $+1$", fontsize=9)
        return _save(fig, path)


def plot_curvature(path, F, extent):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        vmax = float(np.max(np.abs(F))) or 1.0
        im = ax.imshow(F.T, origin="lower", extent=extent, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
        fig.colorbar(im, ax=ax, label="flux per plaquette")
        ax.set_xlabel(r"$k_1$")
        ax.set_ylabel(r"$k_2$")
        return _save(fig, path)


def plot_wannier(path, sizes, moments, radii, profile):
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7.2, 3.2))
        for s, values in moments.items():
            ax1.plot(sizes, values, "o-", label=f"s = {s:g}")
        ax1.set_xscale("log", base=2)
        ax1.set_xlabel("grid size")
        ax1.set_ylabel("moment")
        ax1.legend(frameon=False)
        keep = profile > 0
        ax2.semilogy(radii[keep], profile[keep], ".-")
        ax2.set_xlabel(r"shell radius ($|a_1|$)")
        ax2.set_ylabel(r"mean $|w|^2$")
        return _save(fig, path)


def plot_marker(path, sizes, markers, target):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        ax.plot(sizes, markers, "o-")
        if target is not None:
            ax.axhline(target, color="0.5", ls="--", lw=0.8)
        ax.set_xlabel("flake size (cells per side)")
        ax.set_ylabel("Chern marker")
        return _save(fig, path)
