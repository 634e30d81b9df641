"""Lower-band Bloch functions, spectral projectors and gauged Bloch frames.

Two gauges are provided.  The explicit gauge keeps the first component real
and non-negative; it is singular at any Dirac point where ``R3 > 0``.  The
parallel-transport frame is built on a grid, is exactly periodic, and pushes
the unavoidable vortex of a Chern band into a single corner plaquette.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import GaplessError, UnderResolvedError
from .lattice import KGrid, KPoint, dirac_points, frac_of
from .model import gap_half, r_components

EXPLICIT = "explicit_real_gauge"
PARALLEL_TRANSPORT = "parallel_transport"
GAP_EPS = 1e-12
MIN_OVERLAP = 0.1


class BlochState(NamedTuple):
    k: KPoint | tuple
    v: np.ndarray


class Projector2(NamedTuple):
    k: KPoint | tuple
    P: np.ndarray


def _check_gapped(s, what):
    if np.any(s <= GAP_EPS):
        raise GaplessError(f"{what} is undefined where the bands touch")


def explicit_states(p, frac):
    """Explicit-gauge lower-band states, shape ``(..., 2)``.

    ``u = (S - R3, -R) / N`` with ``S = sqrt(R3^2 + |R|^2)`` and
    ``N = sqrt(2 S (S - R3))``.  ``S - R3`` is evaluated as ``|R|^2 / (S + R3)``
    when ``R3 > 0`` to avoid cancellation.  Where ``S = R3`` (a Dirac point
    with positive mass) the phase of the second component is undefined; the
    limit along ``arg R = 0`` is returned, i.e. ``(0, -1)``.
    """
    _, r3, r = r_components(p, frac)
    s = np.sqrt(r3 * r3 + np.abs(r) ** 2)
    _check_gapped(s, "the Bloch function")
    r_abs2 = np.abs(r) ** 2
    gap = np.where(r3 > 0, r_abs2 / np.where(r3 > 0, s + r3, 1.0), s - r3)  # S - R3
    n = np.sqrt(2 * s * gap)
    u = np.empty(np.shape(r3) + (2,), dtype=complex)
    safe = n > 0
    u[..., 0] = np.where(safe, gap / np.where(safe, n, 1.0), 0.0)
    u[..., 1] = np.where(safe, -r / np.where(safe, n, 1.0), -1.0)
    return u


def bloch_state_explicit(p, k):
    return BlochState(k, explicit_states(p, frac_of(k)))


def projector_field(p, frac):
    """Closed-form ``P_-(k) = |u_-><u_-|``, shape ``(..., 2, 2)``."""
    _, r3, r = r_components(p, frac)
    s = np.sqrt(r3 * r3 + np.abs(r) ** 2)
    _check_gapped(s, "the lower-band projector")
    out = np.empty(np.shape(r3) + (2, 2), dtype=complex)
    out[..., 0, 0] = (s - r3) / (2 * s)
    out[..., 0, 1] = -np.conj(r) / (2 * s)
    out[..., 1, 0] = -r / (2 * s)
    out[..., 1, 1] = (s + r3) / (2 * s)
    return out


def projector(p, k):
    return Projector2(k, projector_field(p, frac_of(k)))


def lower_states(p, frac):
    """Some normalized lower-band eigenvector at each momentum (gauge unspecified).

    Picks whichever column of the projector is longer, so it is regular at
    every gapped point including the Dirac points.
    """
    proj = projector_field(p, frac)
    col0 = proj[..., :, 0]
    col1 = proj[..., :, 1]
    use0 = (proj[..., 0, 0].real >= 0.5)[..., None]
    u = np.where(use0, col0, col1)
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class BlochFrame:
    """Lower-band states on a grid, ``states[i, j]`` at ``(i/n1, j/n2)``.

    ``obstruction`` is the winding of the Berry phase of the ``k2`` loops as
    ``k1`` runs once around the torus (zero for explicit-gauge frames).
    ``periodic`` tells whether the frame is a legitimate periodic gauge whose
    only defect is the controlled corner singularity.
    """

    grid: KGrid
    states: np.ndarray = field(repr=False)
    gauge_tag: str
    obstruction: int = 0
    periodic: bool = True
    berry_phases: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self):
        return self.grid.shape


def explicit_frame(p, grid: KGrid):
    """Explicit-gauge frame; marked non-periodic when a Dirac point has ``R3 > 0``."""
    states = explicit_states(p, grid.frac_mesh)
    singular = any(r_components(p, frac_of(kp))[1] > 0 for kp in dirac_points(grid.geometry))
    return BlochFrame(grid, states, EXPLICIT, 0, periodic=not singular)


def _transport(proj, u):
    """One projection-and-renormalize step; returns the new state and the overlap."""
    x = np.einsum("...ij,...j->...i", proj, u)
    norm = np.linalg.norm(x, axis=-1)
    if np.any(norm < MIN_OVERLAP):
        raise UnderResolvedError(
            "parallel transport overlap %.3g below %.1f; refine the grid" % (norm.min(), MIN_OVERLAP)
        )
    return x / norm[..., None]


def corner_vortex(n1, n2):
    """Phase field ``2 pi k1 k2 (1 - 2 alpha / pi)`` with ``alpha`` the angle at the corner.

    It vanishes on the edges ``k1 = 0``, ``k2 = 0`` and ``k1 = 1``, equals
    ``2 pi k1`` on ``k2 = 1`` and is smooth on the closed unit square except at
    ``(1, 1)``.  On the torus this is one unit vortex sitting in the corner
    plaquette.
    """
    k1 = np.arange(n1)[:, None] / n1
    k2 = np.arange(n2)[None, :] / n2
    alpha = np.arctan2(1 - k2, 1 - k1)
    return TWO_PI * k1 * k2 * (1 - 2 * alpha / math.pi)


TWO_PI = 2 * math.pi


def build_pt_frame(p, grid: KGrid, min_size=24):
    """Parallel-transport Bloch frame with the singularity confined to one corner.

    The state at ``k = 0`` is transported along ``k2 = 0``; the holonomy of that
    loop is spread linearly so the bottom row closes.  Every column is then
    transported in ``k2``.  The column mismatch ``u(k1, 1) = exp(i theta(k1))
    u(k1, 0)`` is continued on the nearest branch; its winding is the
    obstruction (reported as the winding of the Berry phase ``-theta``).  A
    gauge ``k2 (theta(0) + beta(k1)) + w Phi(k1, k2)`` with ``Phi`` from
    ``corner_vortex`` removes the mismatch, leaving one vortex plaquette when
    ``w != 0``.
    """
    n1, n2 = grid.shape
    if n1 < min_size or n2 < min_size:
        raise ValueError(f"parallel-transport frames need at least {min_size}x{min_size} points")
    frac = grid.frac_mesh
    s = gap_half(p, frac)
    if s.min() <= GAP_EPS:
        raise GaplessError("parallel transport needs a gap on every grid point")
    proj = projector_field(p, frac)
    u = np.empty((n1, n2, 2), dtype=complex)
    w0, v0 = np.linalg.eigh(proj[0, 0])
    u[0, 0] = v0[:, 1]
    for i in range(1, n1):
        u[i, 0] = _transport(proj[i, 0], u[i - 1, 0])
    closing = _transport(proj[0, 0], u[n1 - 1, 0])
    row_holonomy = np.angle(np.vdot(u[0, 0], closing))
    u[:, 0] *= np.exp(-1j * row_holonomy * np.arange(n1) / n1)[:, None]
    for j in range(1, n2):
        u[:, j] = _transport(proj[:, j], u[:, j - 1])
    wrapped = _transport(proj[:, 0], u[:, n2 - 1])
    theta = np.angle(np.einsum("ai,ai->a", u[:, 0].conj(), wrapped))
    cont = np.unwrap(np.append(theta, theta[0]))
    winding = int(round((cont[-1] - cont[0]) / TWO_PI))
    cont = cont[:-1]
    k1 = np.arange(n1) / n1
    beta = cont - cont[0] - TWO_PI * winding * k1
    k2 = np.arange(n2)[None, :] / n2
    gauge = k2 * (cont[0] + beta[:, None]) + winding * corner_vortex(n1, n2)
    u *= np.exp(-1j * gauge)[..., None]
    return BlochFrame(grid, u, PARALLEL_TRANSPORT, -winding, periodic=True, berry_phases=-cont)
