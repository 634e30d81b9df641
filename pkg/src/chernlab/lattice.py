"""Honeycomb geometry, Brillouin-zone grids and flake site enumeration.

The dimerization is fixed to the cell whose sites are ``{0, d3}``: an A site
sits at ``g1*a1 + g2*a2`` and its B partner at the same point plus ``d3``.
Momenta are stored in fractional coordinates ``(k1, k2)`` with respect to the
reciprocal basis, so that ``k . a1 = 2 pi k1`` and ``k . a2 = 2 pi k2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SQRT3 = math.sqrt(3.0)
A, B = 0, 1
SUBLATTICES = ("A", "B")


def _vec(*xs):
    v = np.array(xs, dtype=float)
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class HoneycombGeometry:
    """Metric data of the honeycomb structure with nearest-neighbour distance ``d``."""

    d: float
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    cell_area: float

    @property
    def lattice_matrix(self):
        """Rows ``a1``, ``a2``."""
        return np.array([self.a1, self.a2])

    @property
    def reciprocal_matrix(self):
        """Rows ``b1``, ``b2``."""
        return np.array([self.b1, self.b2])

    @property
    def bz_area(self):
        return abs(float(self.b1[0] * self.b2[1] - self.b1[1] * self.b2[0]))

    def to_cart(self, frac):
        return np.asarray(frac, dtype=float) @ self.reciprocal_matrix

    def to_frac(self, cart):
        return np.asarray(cart, dtype=float) @ self.lattice_matrix.T / (2 * math.pi)

    def kpoint(self, k1, k2):
        return KPoint((float(k1), float(k2)), tuple(self.to_cart((k1, k2))))

    def cell_position(self, g1, g2):
        return g1 * self.a1 + g2 * self.a2

    def site_position(self, site):
        pos = self.cell_position(*site.cell)
        return pos + self.d3 if site.sublattice == B else pos


def build_geometry(d=1.0):
    """Displacement, periodicity and reciprocal vectors for spacing ``d``."""
    if not (d > 0 and math.isfinite(d)):
        raise ValueError(f"nearest-neighbour distance must be positive, got {d!r}")
    d = float(d)
    d1 = _vec(0.5 * d, -0.5 * SQRT3 * d)
    d2 = _vec(0.5 * d, 0.5 * SQRT3 * d)
    d3 = _vec(-d, 0.0)
    a1 = _vec(*(d2 - d3))
    a2 = _vec(*(d3 - d1))
    a3 = _vec(*(-a1 - a2))
    lat = np.array([a1, a2])
    # a_i . b_j = 2 pi delta_ij
    recip = 2 * math.pi * np.linalg.solve(lat, np.eye(2)).T
    b1, b2 = _vec(*recip[0]), _vec(*recip[1])
    area = abs(float(a1[0] * a2[1] - a1[1] * a2[0]))
    return HoneycombGeometry(d, d1, d2, d3, a1, a2, a3, b1, b2, area)


class KPoint(NamedTuple):
    frac: tuple
    cart: tuple


def frac_of(k):
    """Fractional coordinates of a ``KPoint`` or of a plain ``(k1, k2)`` pair/array."""
    if isinstance(k, KPoint):
        return np.asarray(k.frac, dtype=float)
    return np.asarray(k, dtype=float)


def dirac_points(geometry):
    """``(K, K')`` at fractional ``(-1/3, -1/3)`` and ``(1/3, 1/3)``."""
    third = 1.0 / 3.0
    return geometry.kpoint(-third, -third), geometry.kpoint(third, third)


@dataclass(frozen=True, eq=False)
class KGrid:
    """Uniform grid ``(i/n1, j/n2)`` on the Brillouin torus, row-major in ``i``."""

    n1: int
    n2: int
    geometry: HoneycombGeometry = field(repr=False)

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def frac_mesh(self):
        """Array of shape ``(n1, n2, 2)``."""
        i, j = np.meshgrid(np.arange(self.n1) / self.n1, np.arange(self.n2) / self.n2, indexing="ij")
        return np.stack([i, j], axis=-1)

    @property
    def frac(self):
        return self.frac_mesh.reshape(-1, 2)

    @property
    def cart(self):
        return self.geometry.to_cart(self.frac)

    @property
    def plaquette_area(self):
        return self.geometry.bz_area / (self.n1 * self.n2)

    @property
    def points(self):
        return [KPoint(tuple(f), tuple(c)) for f, c in zip(self.frac.tolist(), self.cart.tolist())]

    def __len__(self):
        return self.n1 * self.n2


def kgrid(geometry, n1, n2=None):
    n2 = n1 if n2 is None else n2
    if int(n1) != n1 or int(n2) != n2 or n1 < 2 or n2 < 2:
        raise ValueError(f"grid dimensions must be integers >= 2, got ({n1}, {n2})")
    return KGrid(int(n1), int(n2), geometry)


class SiteIndex(NamedTuple):
    cell: tuple
    sublattice: int  # A = 0, B = 1

    @property
    def label(self):
        return SUBLATTICES[self.sublattice]


def enumerate_flake(geometry, n1, n2):
    """Sites of an ``n1 x n2``-cell flake, cell-major with A before B."""
    if n1 < 1 or n2 < 1:
        raise ValueError("flake needs at least one cell in each direction")
    return [SiteIndex((g1, g2), s) for g1 in range(n1) for g2 in range(n2) for s in (A, B)]


def site_positions(geometry, sites):
    return np.array([geometry.site_position(s) for s in sites]).reshape(-1, 2)


def rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])
