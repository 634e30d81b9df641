"""Wannier functions of a Bloch frame and the localization dichotomy diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .frames import BlochFrame, build_pt_frame
from .lattice import HoneycombGeometry, KGrid, kgrid

MIN_SHELLS = 6
#: Shell densities below this fraction of the peak are FFT roundoff, not signal.
ROUNDOFF_FLOOR = 1e3 * np.finfo(float).eps ** 2


@dataclass(frozen=True, eq=False)
class WannierFunction:
    """Amplitudes ``amps[c1, c2, tau]`` on the cells ``gamma`` of a centred window.

    ``cells[c1, c2]`` holds the integer cell coordinates, each in
    ``(-n/2, n/2]`` (``numpy.fft.fftfreq`` ordering).
    """

    window: tuple
    amps: np.ndarray = field(repr=False)
    cells: np.ndarray = field(repr=False)
    geometry: HoneycombGeometry = field(repr=False)

    @property
    def positions(self):
        """Site positions ``gamma + tau * d3``, shape ``(n1, n2, 2, 2)``."""
        g = self.geometry
        base = self.cells[..., 0, None] * g.a1 + self.cells[..., 1, None] * g.a2
        return np.stack([base, base + g.d3], axis=-2)

    @property
    def norm2(self):
        return float(np.sum(np.abs(self.amps) ** 2))


class MomentReport(NamedTuple):
    s: float
    moment: float
    window: tuple


class DecayFit(NamedTuple):
    rate: float
    r2: float
    power: float
    power_r2: float
    shells: int


def _cell_indices(n1, n2):
    c1 = np.rint(np.fft.fftfreq(n1) * n1).astype(int)
    c2 = np.rint(np.fft.fftfreq(n2) * n2).astype(int)
    # fftfreq puts n/2 at -n/2; the window is (-n/2, n/2]
    c1[c1 == -n1 // 2] = n1 // 2 if n1 % 2 == 0 else c1[c1 == -n1 // 2]
    c2[c2 == -n2 // 2] = n2 // 2 if n2 % 2 == 0 else c2[c2 == -n2 // 2]
    m1, m2 = np.meshgrid(c1, c2, indexing="ij")
    return np.stack([m1, m2], axis=-1)


def wannier_from_frame(frame: BlochFrame):
    """Inverse discrete Bloch transform ``w(gamma) = (1/N) sum_k e^{-i k.gamma} u(k)``.

    Frames without a periodic gauge (an explicit gauge with an enclosed
    singularity) are rejected.
    """
    if not frame.periodic:
        raise ValueError(
            "frame is not periodic on its grid; its transform is meaningless (use a parallel-transport frame)"
        )
    u = np.asarray(frame.states)
    n1, n2 = u.shape[:2]
    amps = np.fft.fft2(u, axes=(0, 1)) / (n1 * n2)
    return WannierFunction((n1, n2), amps, _cell_indices(n1, n2), frame.grid.geometry)


def frame_from_wannier(w: WannierFunction, grid: KGrid | None = None, gauge_tag="parallel_transport"):
    """Forward transform, the inverse of ``wannier_from_frame``."""
    n1, n2 = w.window
    states = np.fft.ifft2(w.amps, axes=(0, 1)) * (n1 * n2)
    grid = grid or kgrid(w.geometry, n1, n2)
    return BlochFrame(grid, states, gauge_tag)


def localization_moment(w: WannierFunction, s):
    """``sum_x <x>^{2s} |w(x)|^2`` with ``<x> = (1 + |x|^2)^{1/2}`` over physical site positions."""
    if not 0 <= s <= 4:
        raise ValueError("s must lie in [0, 4]")
    r2 = np.sum(w.positions ** 2, axis=-1)
    weight = (1.0 + r2) ** s
    return MomentReport(float(s), float(np.sum(weight * np.abs(w.amps) ** 2)), w.window)


def _r2(y, yhat):
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def shell_profile(w: WannierFunction):
    """Mean ``|amp|^2`` per radial shell ``round(|x| / |a1|)``; returns radii and means."""
    dist = np.linalg.norm(w.positions, axis=-1) / np.linalg.norm(w.geometry.a1)
    shell = np.rint(dist).astype(int).ravel()
    dens = (np.abs(w.amps) ** 2).ravel()
    counts = np.bincount(shell)
    sums = np.bincount(shell, weights=dens)
    radii = np.nonzero(counts)[0]
    return radii, sums[radii] / counts[radii]


def decay_fit(w: WannierFunction):
    """Exponential and power-law fits of the radial ``|amp|^2`` profile.

    The logarithm of the shell-mean density is fitted against the shell
    radius over shells ``[2, n/2 - 2]``; ``rate = -slope / 2`` estimates the
    amplitude decay constant per ``|a1|``.  The power-law model
    ``|amp|^2 ~ r^-p`` is fitted on the same data for comparison.  Shells
    whose density underflows ``1e-300`` or sits at the roundoff floor
    (``ROUNDOFF_FLOOR`` times the peak density) are excluded.
    """
    radii, dens = shell_profile(w)
    hi = min(w.window) // 2 - 2
    floor = max(1e-300, ROUNDOFF_FLOOR * float(dens.max()))
    keep = (radii >= 2) & (radii <= hi) & (dens > floor)
    if keep.sum() < MIN_SHELLS:
        raise ValueError(f"decay_fit needs at least {MIN_SHELLS} populated shells, got {int(keep.sum())}")
    r = radii[keep].astype(float)
    y = np.log(np.maximum(dens[keep], 1e-300))
    slope, icpt = np.polyfit(r, y, 1)
    pslope, picpt = np.polyfit(np.log(r), y, 1)
    return DecayFit(
        float(-slope / 2),
        _r2(y, slope * r + icpt),
        float(-pslope),
        _r2(y, pslope * np.log(r) + picpt),
        int(keep.sum()),
    )


@dataclass(frozen=True)
class DichotomyRow:
    size: int
    moments: dict
    ratios: dict
    obstruction: int


def dichotomy_scan(p, sizes, s_values=(0.45, 1.0), geometry=None):
    """Moments of parallel-transport Wannier functions across grid sizes.

    ``ratios[s]`` of each row is ``moment(size) / moment(previous size)``
    (``nan`` on the first row).  A divergent moment shows up as ratios that
    stay away from 1.
    """
    from .lattice import build_geometry

    sizes = [int(n) for n in sizes]
    if any(n < 24 for n in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing and each at least 24")
    geometry = geometry or build_geometry()
    rows = []
    prev = None
    for n in sizes:
        frame = build_pt_frame(p, kgrid(geometry, n))
        w = wannier_from_frame(frame)
        moments = {float(s): localization_moment(w, s).moment for s in s_values}
        ratios = {s: (moments[s] / prev[s] if prev else math.nan) for s in moments}
        rows.append(DichotomyRow(n, moments, ratios, frame.obstruction))
        prev = moments
    return rows
