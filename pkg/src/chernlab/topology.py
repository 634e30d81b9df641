"""Berry curvature, Chern numbers, the Stokes loop identity and phase diagrams.

Three independent routes to ``c1`` are provided: gauge-invariant link
variables on a grid, quadrature of the projector curvature, and the winding
recorded by a parallel-transport frame.  They must agree on every gapped
input.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import GaplessError, UnderResolvedError
from .frames import build_pt_frame, explicit_states, lower_states, projector_field
from .lattice import KGrid, build_geometry, frac_of, kgrid
from .model import HaldaneParams, gap_half, min_gap, phase_classify

TWO_PI = 2 * math.pi
FHS_MIN_LINK = 1e-8
LOOP_MIN_OVERLAP = 0.5


class ChernResult(NamedTuple):
    c1: int
    raw: float
    method: str
    grid_size: tuple


@dataclass(frozen=True, eq=False)
class CurvatureMap:
    """Curvature flux through each plaquette; ``F[i, j]`` is centred at ``((i+½)/n1, (j+½)/n2)``."""

    grid: KGrid
    F: np.ndarray = field(repr=False)

    @property
    def total(self):
        return float(self.F.sum())


def _to_int(raw, method, shape):
    c1 = int(round(raw))
    if abs(raw - c1) >= 0.5:
        raise UnderResolvedError(f"{method}: raw value {raw} is not resolved to an integer")
    return ChernResult(c1, float(raw), method, tuple(shape))


def _curvature_frac(p, frac, h):
    """``-i Tr(P [d1 P, d2 P])`` in fractional coordinates (per unit ``dk1 dk2``)."""
    if not 0 < h <= 1e-3:
        raise ValueError("finite-difference step must satisfy 0 < h <= 1e-3")
    frac = np.asarray(frac, dtype=float)
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    try:
        p0 = projector_field(p, frac)
        d1 = (projector_field(p, frac + e1) - projector_field(p, frac - e1)) / (2 * h)
        d2 = (projector_field(p, frac + e2) - projector_field(p, frac - e2)) / (2 * h)
    except GaplessError as exc:
        raise GaplessError("Berry curvature needs a gapped neighbourhood") from exc
    comm = d1 @ d2 - d2 @ d1
    value = -1j * np.trace(p0 @ comm, axis1=-2, axis2=-1)
    scale = np.maximum(np.abs(value), 1.0)
    if np.any(np.abs(value.imag) > 1e-10 * scale):
        raise ArithmeticError("Berry curvature has a non-negligible imaginary part")
    return value.real


def berry_curvature(p, k, h=1e-4, geometry=None):
    """Berry curvature of the lower band at ``k`` in Cartesian units (area ``dkx dky``).

    The projector is differenced in fractional coordinates with central
    steps ``h`` and converted with the Jacobian ``det B`` of the reciprocal basis.
    """
    geometry = geometry or build_geometry()
    jac = np.linalg.det(geometry.reciprocal_matrix)
    return float(_curvature_frac(p, frac_of(k), h)) / jac


def curvature_map(p, grid: KGrid, h=1e-4):
    n1, n2 = grid.shape
    mid = grid.frac_mesh + np.array([0.5 / n1, 0.5 / n2])
    return CurvatureMap(grid, _curvature_frac(p, mid, h) / (n1 * n2))


def chern_curvature(p, grid: KGrid, h=1e-4):
    """Midpoint quadrature of the curvature, ``(1/2pi) sum F``."""
    cmap = curvature_map(p, grid, h)
    return _to_int(cmap.total / TWO_PI, "curvature_integral", grid.shape)


def _links(states):
    out = []
    for axis in (0, 1):
        link = np.einsum("...i,...i->...", states.conj(), np.roll(states, -1, axis=axis))
        mag = np.abs(link)
        if np.any(mag < FHS_MIN_LINK):
            raise UnderResolvedError("vanishing link overlap; refine the grid")
        out.append(link / mag)
    return out


def fhs_field(states):
    """Plaquette field strengths ``arg(U1(k) U2(k+e1) / U1(k+e2) / U2(k))`` in ``(-pi, pi]``."""
    u1, u2 = _links(np.asarray(states))
    loop = u1 * np.roll(u2, -1, axis=0) * np.conj(np.roll(u1, -1, axis=1)) * np.conj(u2)
    return np.angle(loop)


def chern_fhs_states(states, shape=None):
    """Link-variable Chern number of an arbitrary-gauge state field ``(n1, n2, 2)``."""
    states = np.asarray(states)
    flux = fhs_field(states)
    return _to_int(flux.sum() / TWO_PI, "fhs", shape or states.shape[:2])


def chern_fhs(p, grid: KGrid):
    if np.min(gap_half(p, grid.frac_mesh)) <= 1e-12:
        raise GaplessError("the link-variable Chern number needs a gap on every grid point")
    return chern_fhs_states(lower_states(p, grid.frac_mesh), grid.shape)


def chern_pt_obstruction(p, grid: KGrid):
    """The winding recorded by the parallel-transport frame, as a Chern number."""
    frame = build_pt_frame(p, grid)
    phases = frame.berry_phases
    raw = (np.unwrap(np.append(phases, phases[0]))[-1] - phases[0]) / TWO_PI
    return _to_int(raw, "pt_obstruction", grid.shape)


def loop_berry_phase(p, center, radius, n_points=256):
    """Berry phase ``sum arg <u_i, u_{i+1}>`` around a counterclockwise circle.

    The circle has radius ``radius`` in fractional coordinates about
    ``center`` and its states are taken in the explicit real gauge, so the
    result measures the gauge singularity enclosed (``+2pi`` around ``K`` in
    the ``c1 = -1`` phase).  Each increment is small, so windings beyond
    ``2pi`` are tracked.
    """
    if n_points < 64:
        raise ValueError("loop_berry_phase needs at least 64 points")
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.asarray(frac_of(center), dtype=float)
    t = TWO_PI * np.arange(n_points) / n_points
    ring = c + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
    disk = c + np.linspace(0, radius, 16)[:, None, None] * np.stack([np.cos(t), np.sin(t)], axis=-1)
    if np.min(gap_half(p, disk)) <= 1e-12:
        raise GaplessError("the loop's disk is not gapped")
    u = explicit_states(p, ring)
    ov = np.einsum("ai,ai->a", u.conj(), np.roll(u, -1, axis=0))
    if np.min(np.abs(ov)) < LOOP_MIN_OVERLAP:
        raise UnderResolvedError("consecutive loop overlap below 0.5; increase n_points")
    return float(np.angle(ov).sum())


@dataclass(frozen=True, eq=False)
class PhaseDiagram:
    """``chern[i, j]`` at ``(phi[i], M[j])``; gapless cells hold 0 and are flagged."""

    t1: float
    t2: float
    phi: np.ndarray
    M: np.ndarray
    chern: np.ndarray
    gapless: np.ndarray
    grid_size: tuple

    def results(self):
        return [
            [None if self.gapless[i, j] else ChernResult(int(self.chern[i, j]), float(self.chern[i, j]), "fhs", self.grid_size)
             for j in range(len(self.M))]
            for i in range(len(self.phi))
        ]


def phase_diagram(t1, t2, phi_samples, M_samples, grid: KGrid, threads=1):
    """Chern number on every ``(phi, M)`` cell via link variables.

    Cells whose Dirac masses vanish, or whose grid spectrum closes, are
    flagged gapless rather than forced.  Rows are computed independently and
    assembled in order, so the result does not depend on ``threads``.
    """
    phis = np.asarray(phi_samples, dtype=float)
    ms = np.asarray(M_samples, dtype=float)

    def row(phi):
        chern = np.zeros(len(ms), dtype=int)
        flags = np.zeros(len(ms), dtype=bool)
        for j, m in enumerate(ms):
            p = HaldaneParams(t1, t2, phi, m)
            if phase_classify(p).region == "boundary":
                flags[j] = True
                continue
            try:
                chern[j] = chern_fhs(p, grid).c1
            except (GaplessError, UnderResolvedError):
                flags[j] = True
        return chern, flags

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, phis))
    else:
        rows = [row(phi) for phi in phis]
    chern = np.array([r[0] for r in rows]).reshape(len(phis), len(ms))
    flags = np.array([r[1] for r in rows]).reshape(len(phis), len(ms))
    return PhaseDiagram(float(t1), float(t2), phis, ms, chern, flags, grid.shape)


def boundary_mass(p, lo, hi, n=24, tol=1e-10, max_iter=200):
    """Locate the gap-closing mass between ``lo`` and ``hi`` at fixed ``t1, t2, phi``.

    Bisects on the change of the link-variable Chern number over an ``n x n``
    grid (use ``3 | n`` so both Dirac points lie on the grid, where the gap
    closes) and then checks that ``min_gap`` indeed vanishes at the result.
    """
    grid = kgrid(build_geometry(), n)

    def c1(m):
        return chern_fhs(p.replace(M=m), grid).c1

    c_lo, c_hi = c1(lo), c1(hi)
    if c_lo == c_hi:
        raise ValueError("no Chern-number change between the bracketing masses")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        try:
            c_mid = c1(mid)
        except GaplessError:
            lo = hi = mid
            break
        if c_mid == c_lo:
            lo = mid
        else:
            hi = mid
    m = 0.5 * (lo + hi)
    gap = min_gap(p.replace(M=m), grid)
    if gap > 1e3 * max(tol, hi - lo) + 1e-8:
        raise ArithmeticError(f"Chern change at M={m} without a closing gap (min gap {gap})")
    return m


class SobolevReport(NamedTuple):
    l2: float
    h1_state: float
    h1_projector: float
    grid_size: tuple


def sobolev_h1_grid(frame):
    """Discrete ``H^1`` norms of a frame under the normalized measure on the torus.

    ``l2`` is the root mean square of the states.  ``h1_state`` adds forward
    differences of the states (gauge dependent), ``h1_projector`` forward
    differences of ``|u><u|`` (gauge invariant); both in fractional units.
    """
    u = np.asarray(frame.states)
    n1, n2 = u.shape[:2]
    l2sq = float(np.mean(np.sum(np.abs(u) ** 2, axis=-1)))
    grad = 0.0
    for axis, n in ((0, n1), (1, n2)):
        du = (np.roll(u, -1, axis=axis) - u) * n
        grad += float(np.mean(np.sum(np.abs(du) ** 2, axis=-1)))
    proj = np.einsum("...i,...j->...ij", u, u.conj())
    pgrad = 0.0
    for axis, n in ((0, n1), (1, n2)):
        dp = (np.roll(proj, -1, axis=axis) - proj) * n
        pgrad += float(np.mean(np.sum(np.abs(dp) ** 2, axis=(-2, -1))))
    return SobolevReport(math.sqrt(l2sq), math.sqrt(l2sq + grad), math.sqrt(l2sq + pgrad), (n1, n2))
