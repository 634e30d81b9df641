"""Finite-flake spectral projections, the Chern marker and a generalized Wannier basis audit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import IllConditionedError
from .lattice import SQRT3, build_geometry, kgrid
from .model import FiniteSample, HaldaneParams, assemble_flake, bulk_gap_window, phase_classify
from .numerics import eigh_dense, hermitian_dense

TWO_PI = 2 * math.pi
BOX_EPS = 1e-9
MIN_BOX_CELLS = 9
EDGE_MARGIN_CELLS = 2


@dataclass(frozen=True, eq=False)
class SpectralProjection:
    """``P = V V^dagger`` onto the eigenvectors ``V`` with eigenvalues below ``fermi``."""

    sample: FiniteSample | None
    fermi: float
    P: np.ndarray = field(repr=False)
    rank: int
    vectors: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    def complement(self):
        """``1 - P`` (vectors are not tracked for the complement)."""
        q = np.eye(self.P.shape[0]) - self.P
        return SpectralProjection(self.sample, self.fermi, q, self.P.shape[0] - self.rank, None, self.eigenvalues)


def _hamiltonian(sample):
    if isinstance(sample, FiniteSample):
        return sample.hamiltonian
    return hermitian_dense(sample)


def projection_from_vectors(sample, fermi, vectors, eigenvalues=None):
    """Projection onto the span of the orthonormal columns ``vectors``."""
    v = np.asarray(vectors, dtype=complex)
    p = v @ v.conj().T
    return SpectralProjection(sample if isinstance(sample, FiniteSample) else None, float(fermi), p, v.shape[1], v, eigenvalues)


def spectral_projection(sample, fermi, gap_tolerance=1e-6, method="auto", check=True):
    """Spectral projection of ``sample`` (a ``FiniteSample`` or a Hermitian matrix) below ``fermi``.

    Raises ``ValueError`` when ``fermi`` is within ``gap_tolerance`` of an
    eigenvalue.
    """
    h = _hamiltonian(sample)
    values, vectors = eigh_dense(h, method=method)
    nearest = int(np.argmin(np.abs(values - fermi)))
    if abs(values[nearest] - fermi) < gap_tolerance:
        raise ValueError(
            f"fermi level {fermi} lies within {gap_tolerance:g} of eigenvalue {values[nearest]!r} (index {nearest})"
        )
    below = values < fermi
    proj = projection_from_vectors(sample, fermi, vectors[:, below], values)
    if check:
        p = proj.P
        scale = max(float(np.linalg.norm(h, 2)), 1.0)
        if np.max(np.abs(p @ p - p)) > 1e-8:
            raise ArithmeticError("spectral projection is not idempotent")
        if np.max(np.abs(p @ h - h @ p)) > 1e-8 * scale:
            raise ArithmeticError("spectral projection does not commute with H")
    return proj


class FermiChoice(NamedTuple):
    fermi: float
    gap: float
    in_gap_states: int
    window: tuple


def choose_fermi(sample: FiniteSample, eigenvalues=None, bulk_grid=48):
    """Midpoint of the widest spectral gap of the sample inside the bulk gap.

    The bulk gap window ``(max E-, min E+)`` comes from a ``bulk_grid``
    k-grid.  ``in_gap_states`` counts sample eigenvalues inside that window
    (edge states on open flakes).
    """
    values = eigh_dense(sample.hamiltonian).eigenvalues if eigenvalues is None else np.asarray(eigenvalues)
    lo, hi = bulk_gap_window(sample.params, kgrid(sample.geometry, bulk_grid))
    if not lo < hi:
        raise ValueError("the bulk bands overlap; no Fermi gap to choose")
    inside = values[(values > lo + 1e-9) & (values < hi - 1e-9)]
    edges = np.concatenate([[lo], inside, [hi]])
    gaps = np.diff(edges)
    k = int(np.argmax(gaps))
    fermi = 0.5 * (edges[k] + edges[k + 1])
    return FermiChoice(float(fermi), float(gaps[k]), len(edges) - 2, (float(lo), float(hi)))


def flake_projection(p: HaldaneParams, n, bc="open", geometry=None, method="auto"):
    """Assemble an ``n x n`` flake and project below the automatically chosen Fermi level."""
    geometry = geometry or build_geometry()
    sample = assemble_flake(geometry, p, n, n, bc)
    values, vectors = eigh_dense(sample.hamiltonian, method=method)
    choice = choose_fermi(sample, values)
    below = values < choice.fermi
    return projection_from_vectors(sample, choice.fermi, vectors[:, below], values), choice


class MarkerReport(NamedTuple):
    L: float
    cells_in_box: int
    trace_value: float
    marker: float
    imag_residue: float
    center: tuple


def relative_positions(sample: FiniteSample, center):
    """Site positions relative to ``center``; minimum-image on periodic samples."""
    rel = sample.positions - np.asarray(center, dtype=float)
    if sample.periodic:
        cell = sample.supercell
        f = rel @ np.linalg.inv(cell)
        f -= np.floor(f + 0.5)
        rel = f @ cell
    return rel


def inscribed_half_width(sample: FiniteSample):
    """Distance from the centre of an ``n x n`` rhombic flake to its edges."""
    g = sample.geometry
    n = min(sample.n1, sample.n2)
    return n * float(np.linalg.norm(g.a1)) * math.sin(math.pi / 3) / 2


def _check_box(sample, center, L, count):
    if count < 2 * MIN_BOX_CELLS:
        raise ValueError(f"marker box holds {count / 2:g} cells; at least {MIN_BOX_CELLS} required")
    if sample.periodic:
        if L > 0.5 * inscribed_half_width(sample) * 2 - 1e-12:
            raise ValueError("marker box does not fit inside one period of the sample")
        return
    g = sample.geometry
    lat_inv = np.linalg.inv(np.array([g.a1, g.a2]))
    corners = np.asarray(center) + L * np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])
    f = corners @ lat_inv
    margin = np.minimum(f + 0.5, np.array([sample.n1, sample.n2]) - 0.5 - f).min()
    if margin < EDGE_MARGIN_CELLS:
        raise ValueError(f"marker box comes within {margin:.2f} cells of the open edge (need {EDGE_MARGIN_CELLS})")


def chern_marker(proj: SpectralProjection, L, center=None):
    """Chern marker over the box ``(-L, L]^2`` around ``center`` (default: site centroid).

    Evaluates the diagonal of ``i P [[X1, P], [X2, P]] P`` on the box sites and
    normalizes per area: ``marker = 2 pi trace / (cells_in_box * cell_area)``.
    On periodic samples positions are taken as minimum images about the box
    centre, so the box never straddles the seam.
    """
    sample = proj.sample
    if sample is None:
        raise ValueError("chern_marker needs a projection attached to a FiniteSample")
    center = sample.positions.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    rel = relative_positions(sample, center)
    inb = np.all((rel > -L + BOX_EPS) & (rel <= L + BOX_EPS), axis=1)
    count = int(inb.sum())
    _check_box(sample, center, L, count)
    p = proj.P
    x, y = rel[:, 0], rel[:, 1]
    c1 = x[:, None] * p - p * x[None, :]
    c2 = y[:, None] * p - p * y[None, :]
    comm = c1 @ c2 - c2 @ c1
    cols = comm @ p[:, inb]
    diag = 1j * np.sum(p[inb, :] * cols.T, axis=1)
    trace = complex(diag.sum())
    cells = count / 2
    marker = TWO_PI * trace.real / (cells * sample.geometry.cell_area)
    if abs(trace.imag) > 1e-8 * max(1.0, abs(trace.real)):
        raise ArithmeticError(f"marker trace has imaginary residue {trace.imag:.3e}")
    return MarkerReport(float(L), int(round(cells)), trace.real, float(marker), abs(trace.imag), tuple(center))


@dataclass(frozen=True)
class MarkerScan:
    sizes: tuple
    reports: tuple
    target: int | None
    errors: tuple
    in_gap_states: tuple

    @property
    def markers(self):
        return tuple(r.marker for r in self.reports)

    @property
    def monotone(self):
        return all(b <= a + 1e-12 for a, b in zip(self.errors, self.errors[1:]))


def marker_scan(p: HaldaneParams, flake_sizes, box_ratio=0.4, bc="open", geometry=None):
    """Marker on flakes of increasing size with ``L = box_ratio * inscribed half-width``.

    ``errors`` are distances to the phase's Chern number.
    """
    sizes = tuple(int(n) for n in flake_sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("flake sizes must be increasing")
    if not 0.2 < box_ratio < 0.6:
        raise ValueError("box_ratio must lie in (0.2, 0.6)")
    target = phase_classify(p).chern
    reports, counts = [], []
    for n in sizes:
        proj, choice = flake_projection(p, n, bc, geometry)
        reports.append(chern_marker(proj, box_ratio * inscribed_half_width(proj.sample)))
        counts.append(choice.in_gap_states)
    errors = tuple(abs(r.marker - target) if target is not None else math.nan for r in reports)
    return MarkerScan(sizes, tuple(reports), target, errors, tuple(counts))


def localization_function(mode="polynomial", s=1.0, beta=0.5):
    """``G(r) = (1 + r^2)^s`` or ``G(r) = exp(2 beta r)``."""
    if mode == "polynomial":
        return lambda r: (1.0 + np.asarray(r) ** 2) ** s
    if mode == "exponential":
        return lambda r: np.exp(2 * beta * np.asarray(r))
    raise ValueError(f"unknown localization function mode {mode!r}")


@dataclass(frozen=True, eq=False)
class GWBBasis:
    """Candidate orthonormal basis of ``Ran P`` with one centre per kept vector.

    Columns ``vectors[:, :kept]`` are the localized candidates centred at
    ``centers``; the remaining columns are padding and carry no centre.
    """

    vectors: np.ndarray = field(repr=False)
    centers: np.ndarray
    kept: int
    positions: np.ndarray = field(repr=False)
    supercell: np.ndarray | None = None
    condition: float = 1.0

    @property
    def padded(self):
        return self.vectors.shape[1] - self.kept

    def displacements(self, center):
        rel = self.positions - center
        if self.supercell is not None:
            f = rel @ np.linalg.inv(self.supercell)
            f -= np.floor(f + 0.5)
            rel = f @ self.supercell
        return rel


def default_delone(geometry):
    a = float(np.linalg.norm(geometry.a1))
    return 0.4 * a, 1.1 * a


def candidate_gwb(proj: SpectralProjection, delone_r=None, delone_R=None, min_norm=0.05, max_cond=1e8):
    """Projected A-site deltas, Löwdin-orthonormalized inside ``Ran P``.

    Seeds ``P delta_x`` on every A site; seeds shorter than ``min_norm`` are
    dropped.  The kept seeds are orthonormalized symmetrically
    (``S G^{-1/2}``) and any rank deficit is filled with an orthonormal
    completion inside ``Ran P``.
    """
    sample = proj.sample
    if sample is None or proj.vectors is None:
        raise ValueError("candidate_gwb needs a projection with eigenvectors and a sample")
    r, R = default_delone(sample.geometry) if delone_r is None else (delone_r, delone_R)
    seeds_idx = np.nonzero(sample.sublattices == 0)[0]
    seeds = proj.P[:, seeds_idx]
    norms = np.linalg.norm(seeds, axis=0)
    keep = norms >= min_norm
    seeds, seeds_idx = seeds[:, keep], seeds_idx[keep]
    if seeds.shape[1] > proj.rank:
        raise IllConditionedError("more seeds than the rank of P; Delone set too dense")
    gram = seeds.conj().T @ seeds
    ev, U = np.linalg.eigh(gram)
    cond = float(ev.max() / ev.min()) if ev.min() > 0 else math.inf
    if cond > max_cond:
        raise IllConditionedError(f"seed Gram matrix condition number {cond:.3g} exceeds {max_cond:g}; Delone set too dense")
    psi = seeds @ (U / np.sqrt(ev)) @ U.conj().T
    deficit = proj.rank - psi.shape[1]
    if deficit > 0:
        rest = proj.vectors - psi @ (psi.conj().T @ proj.vectors)
        left, _, _ = np.linalg.svd(rest, full_matrices=False)
        psi = np.hstack([psi, left[:, :deficit]])
    centers = sample.positions[seeds_idx]
    sc = sample.supercell if sample.periodic else None
    basis = GWBBasis(psi, centers, len(seeds_idx), sample.positions, sc, cond)
    audit_delone(basis, r, R)
    return basis


class GWBAudit(NamedTuple):
    centers: np.ndarray
    moments: np.ndarray
    M_bound: float
    s: float
    mode: str
    delone_r: float
    delone_R: float
    min_separation: float
    covering_radius: float
    padded: int


def _test_points(basis):
    """Sites plus a 4x4 sub-grid of every cell, used to measure the covering radius."""
    pts = [basis.positions]
    if basis.supercell is not None:
        t = (np.arange(16) + 0.5) / 16
        f1, f2 = np.meshgrid(t, t, indexing="ij")
        pts.append(np.stack([f1.ravel(), f2.ravel()], axis=1) @ basis.supercell + basis.positions.min(axis=0))
    return np.vstack(pts)


def audit_delone(basis: GWBBasis, r, R):
    """Return ``(min separation, covering radius)``; raise unless ``sep > 2r`` and ``cover <= R``."""
    c = basis.centers
    if len(c) < 2:
        raise ValueError("a Delone check needs at least two centres")
    sep = math.inf
    for i in range(len(c)):
        d = np.linalg.norm(_min_image(basis, c - c[i]), axis=1)
        d[i] = math.inf
        sep = min(sep, float(d.min()))
    pts = _test_points(basis)
    cover = 0.0
    for x in pts:
        cover = max(cover, float(np.linalg.norm(_min_image(basis, c - x), axis=1).min()))
    if not sep > 2 * r:
        raise ValueError(f"centres {sep:.3g} apart violate uniform discreteness at r = {r:g}")
    if cover > R:
        raise ValueError(f"covering radius {cover:.3g} exceeds R = {R:g}")
    return sep, cover


def _min_image(basis, rel):
    if basis.supercell is None:
        return rel
    f = rel @ np.linalg.inv(basis.supercell)
    f -= np.floor(f + 0.5)
    return f @ basis.supercell


def gwb_audit(basis: GWBBasis, s=1.0, mode="polynomial", beta=0.5, delone_r=None, delone_R=None, atol=1e-8):
    """Per-centre moments ``sum_x |psi(x)|^2 G(|x - gamma|)`` and their supremum.

    Padding vectors carry no centre and are excluded from ``M_bound``.
    """
    v = basis.vectors
    if np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))) > atol:
        raise ValueError("basis is not orthonormal")
    if delone_r is None:
        a = float(np.min(np.linalg.norm(np.diff(basis.centers[:2], axis=0))) if len(basis.centers) > 1 else 1.0)
        delone_r, delone_R = 0.4 * a, 1.1 * a
    sep, cover = audit_delone(basis, delone_r, delone_R)
    G = localization_function(mode, s, beta)
    moments = np.empty(basis.kept)
    for i in range(basis.kept):
        dist = np.linalg.norm(basis.displacements(basis.centers[i]), axis=1)
        moments[i] = float(np.sum(np.abs(v[:, i]) ** 2 * G(dist)))
    return GWBAudit(basis.centers, moments, float(moments.max()), float(s), mode,
                    float(delone_r), float(delone_R), sep, cover, basis.padded)
