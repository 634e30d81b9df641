"""The Haldane Hamiltonian as a Bloch fiber ``H(k)`` and as a flake matrix."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import numerics
from .errors import GaplessError
from .lattice import A, B, SQRT3, HoneycombGeometry, KGrid, enumerate_flake, frac_of, site_positions

TWO_PI = 2 * math.pi
BOUNDARY_TOL = 1e-9


def wrap_phase(phi):
    """Map an angle into ``(-pi, pi]``."""
    return math.pi - math.fmod(math.fmod(math.pi - phi, TWO_PI) + TWO_PI, TWO_PI)


@dataclass(frozen=True)
class HaldaneParams:
    """Hopping ``t1`` (NN), ``t2`` (NNN), flux phase ``phi`` and staggered mass ``M``."""

    t1: float = 1.0
    t2: float = 0.25
    phi: float = math.pi / 2
    M: float = 0.0

    def __post_init__(self):
        for name in ("t1", "t2", "phi", "M"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "phi", wrap_phase(self.phi))

    def replace(self, **changes):
        values = dict(t1=self.t1, t2=self.t2, phi=self.phi, M=self.M)
        values.update(changes)
        return HaldaneParams(**values)

    @property
    def r3_K(self):
        return self.M + 3 * SQRT3 * self.t2 * math.sin(self.phi)

    @property
    def r3_Kp(self):
        return self.M - 3 * SQRT3 * self.t2 * math.sin(self.phi)


class RVector(NamedTuple):
    R0: float
    R1: float
    R2: float
    R3: float

    @property
    def R(self):
        return complex(self.R1, self.R2)


class BandPair(NamedTuple):
    e_minus: float
    e_plus: float


def r_components(p, frac):
    """Vectorized ``(R0, R3, R)`` on fractional momenta of shape ``(..., 2)``.

    ``R = R1 + i R2 = t1 (1 + exp(i k.a1) + exp(-i k.a2))``.
    """
    frac = np.asarray(frac, dtype=float)
    x1 = TWO_PI * frac[..., 0]  # k . a1
    x2 = TWO_PI * frac[..., 1]  # k . a2
    x3 = -x1 - x2               # k . a3
    r0 = 2 * p.t2 * math.cos(p.phi) * (np.cos(x1) + np.cos(x2) + np.cos(x3))
    r3 = p.M - 2 * p.t2 * math.sin(p.phi) * (np.sin(x1) + np.sin(x2) + np.sin(x3))
    r1 = p.t1 * (1 + np.cos(x1) + np.cos(x2))
    r2 = p.t1 * (np.sin(x1) - np.sin(x2))
    return r0, r3, r1 + 1j * r2


def gap_half(p, frac):
    """``sqrt(R1^2 + R2^2 + R3^2)``: half the direct band gap at each momentum."""
    _, r3, r = r_components(p, frac)
    return np.sqrt(r3 * r3 + np.abs(r) ** 2)


def r_vector(p, k):
    r0, r3, r = r_components(p, frac_of(k))
    return RVector(float(r0), float(r.real), float(r.imag), float(r3))


def fiber_field(p, frac):
    """Stack of fibers ``H(k)``, shape ``(..., 2, 2)``."""
    r0, r3, r = r_components(p, frac)
    h = np.empty(np.shape(r0) + (2, 2), dtype=complex)
    h[..., 0, 0] = r0 + r3
    h[..., 0, 1] = np.conj(r)
    h[..., 1, 0] = r
    h[..., 1, 1] = r0 - r3
    return h


def fiber(p, k):
    """``H(k) = sum_j R_j(k) sigma_j``."""
    return numerics.hermitian2(fiber_field(p, frac_of(k)))


def band_field(p, frac):
    r0, r3, r = r_components(p, frac)
    s = np.sqrt(r3 * r3 + np.abs(r) ** 2)
    return r0 - s, r0 + s


def bands(p, k):
    lo, hi = band_field(p, frac_of(k))
    return BandPair(float(lo), float(hi))


def min_gap(p, grid: KGrid):
    """Smallest direct gap ``E+ - E-`` over the grid points."""
    return float(2 * gap_half(p, grid.frac_mesh).min())


def bulk_gap_window(p, grid: KGrid):
    """``(max E-, min E+)`` over the grid: the energy window free of bulk states."""
    lo, hi = band_field(p, grid.frac_mesh)
    return float(lo.max()), float(hi.min())


class PhaseClassification(NamedTuple):
    r3_K: float
    r3_Kp: float
    region: str
    chern: int | None


REGION_CHERN = {"cyan": -1, "orange": 1, "trivial_upper": 0, "trivial_lower": 0, "boundary": None}


def phase_classify(p, tol=BOUNDARY_TOL):
    """Locate ``p`` in the phase diagram from the signs of the Dirac masses.

    The cyan region ``R3(K) > 0 > R3(K')`` carries Chern number -1, the orange
    region ``R3(K) < 0 < R3(K')`` carries +1, and equal signs are trivial.
    Either mass below ``tol`` in magnitude is reported as ``boundary``.
    """
    if p.t1 == 0:
        raise ValueError("phase classification requires t1 != 0")
    rk, rkp = p.r3_K, p.r3_Kp
    if abs(rk) < tol or abs(rkp) < tol:
        region = "boundary"
    elif rk > 0 > rkp:
        region = "cyan"
    elif rk < 0 < rkp:
        region = "orange"
    elif rk > 0:
        region = "trivial_upper"
    else:
        region = "trivial_lower"
    return PhaseClassification(rk, rkp, region, REGION_CHERN[region])


# Cell offsets (in units of a1, a2) of the A neighbours of the B site in cell g:
# B(g) sits at g + d3 and touches A(g), A(g + a2), A(g - a1).
NN_OFFSETS = ((0, 0), (0, 1), (-1, 0))
# a1, a2, a3 = -a1 - a2 in cell coordinates.
NNN_OFFSETS = ((1, 0), (0, 1), (-1, -1))


@dataclass(frozen=True, eq=False)
class FiniteSample:
    geometry: HoneycombGeometry
    params: HaldaneParams
    n1: int
    n2: int
    bc: str
    sites: tuple
    positions: np.ndarray = field(repr=False)
    hamiltonian: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return 2 * self.n1 * self.n2

    @property
    def periodic(self):
        return self.bc == "periodic"

    def index(self, g1, g2, sublattice):
        return 2 * (g1 * self.n2 + g2) + sublattice

    @property
    def cells(self):
        return np.array([s.cell for s in self.sites])

    @property
    def sublattices(self):
        return np.array([s.sublattice for s in self.sites])

    @property
    def supercell(self):
        """Rows ``n1 a1``, ``n2 a2``: the periods of a periodic sample."""
        return np.array([self.n1 * self.geometry.a1, self.n2 * self.geometry.a2])


def assemble_flake(geometry, p, n1, n2, bc="open", _nnn_sign=1):
    """Real-space Haldane matrix on an ``n1 x n2``-cell flake.

    Matrix elements: ``t1`` on every nearest-neighbour bond; for the NNN hop
    from ``x`` to ``x + a_j`` the amplitude ``t2 exp(i phi s)`` with ``s = +1``
    on A and ``-1`` on B; ``+M`` / ``-M`` on A / B sites.  Open boundaries drop
    bonds leaving the flake, periodic ones wrap cell indices.  Bonds that wrap
    onto the same pair of sites accumulate.

    ``_nnn_sign`` flips the flux orientation; it exists only as a mutation hook
    for the self-check.
    """
    if bc not in ("open", "periodic"):
        raise ValueError(f"bc must be 'open' or 'periodic', got {bc!r}")
    if bc == "periodic" and (n1 < 2 or n2 < 2):
        raise ValueError("periodic flakes need at least 2 cells per direction")
    if n1 < 1 or n2 < 1:
        raise ValueError("flake needs at least one cell in each direction")
    sites = tuple(enumerate_flake(geometry, n1, n2))
    dim = 2 * n1 * n2
    h = np.zeros((dim, dim), dtype=complex)

    def idx(g1, g2, s):
        if bc == "periodic":
            g1, g2 = g1 % n1, g2 % n2
        elif not (0 <= g1 < n1 and 0 <= g2 < n2):
            return None
        return 2 * (g1 * n2 + g2) + s

    hop = {A: p.t2 * np.exp(1j * _nnn_sign * p.phi), B: p.t2 * np.exp(-1j * _nnn_sign * p.phi)}
    for g1 in range(n1):
        for g2 in range(n2):
            b = idx(g1, g2, B)
            a = idx(g1, g2, A)
            h[a, a] += p.M
            h[b, b] -= p.M
            for o1, o2 in NN_OFFSETS:
                j = idx(g1 + o1, g2 + o2, A)
                if j is not None:
                    h[b, j] += p.t1
                    h[j, b] += p.t1
            for s in (A, B):
                src = idx(g1, g2, s)
                for o1, o2 in NNN_OFFSETS:
                    dst = idx(g1 + o1, g2 + o2, s)
                    if dst is not None:
                        h[dst, src] += hop[s]
                        h[src, dst] += np.conj(hop[s])
    h = numerics.hermitian_dense(h, rtol=1e-12)
    positions = site_positions(geometry, sites)
    positions.setflags(write=False)
    return FiniteSample(geometry, p, n1, n2, bc, sites, positions, h)


def bloch_spectrum(p, grid: KGrid):
    """Sorted multiset ``{E-(k), E+(k)}`` over the grid (the periodic-flake oracle)."""
    lo, hi = band_field(p, grid.frac_mesh)
    return np.sort(np.concatenate([lo.ravel(), hi.ravel()]))


def require_gapped(p, grid: KGrid, what="this computation"):
    gap = min_gap(p, grid)
    if gap <= 1e-12:
        raise GaplessError(f"{what} needs a gapped band pair; min gap on grid is {gap:.3e}")
    return gap


def bloch_blocks(sample: FiniteSample, grid: KGrid | None = None):
    """``2 x 2`` blocks of a periodic flake in the plane-wave basis ``e^{-i k.gamma}`` per sublattice.

    On the matching grid these equal ``fiber(k)`` exactly.  Unlike the band
    multiset this resolves momentum, so it also detects a reversed NNN flux
    (which only maps ``k`` to ``-k``).
    """
    if not sample.periodic:
        raise ValueError("plane-wave blocks need a periodic sample")
    grid = grid or KGrid(sample.n1, sample.n2, sample.geometry)
    cells = sample.cells.astype(float)
    sub = sample.sublattices
    frac = grid.frac
    basis = np.exp(-2j * math.pi * cells @ frac.T) / math.sqrt(sample.n1 * sample.n2)
    ua = np.where((sub == A)[:, None], basis, 0)
    ub = np.where((sub == B)[:, None], basis, 0)
    h = sample.hamiltonian
    hua, hub = h @ ua, h @ ub
    blocks = np.empty((len(frac), 2, 2), dtype=complex)
    for i, bra in enumerate((ua, ub)):
        blocks[:, i, 0] = np.einsum("sk,sk->k", bra.conj(), hua)
        blocks[:, i, 1] = np.einsum("sk,sk->k", bra.conj(), hub)
    return blocks.reshape(grid.shape + (2, 2))


def block_mismatch(sample: FiniteSample):
    """Largest entry of ``bloch_blocks - fiber`` over the matching grid."""
    grid = KGrid(sample.n1, sample.n2, sample.geometry)
    return float(np.max(np.abs(bloch_blocks(sample, grid) - fiber_field(sample.params, grid.frac_mesh))))
