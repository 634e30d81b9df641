"""Small dense linear algebra for 2x2 Bloch fibers and finite flake matrices.

The 2x2 routines use closed forms.  ``eigh_dense`` carries a cyclic Jacobi
solver (round-robin ordering, so each round applies ``n // 2`` disjoint
rotations at once) and can defer to LAPACK for large matrices.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, NotHermitianError

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_0, SIGMA_1, SIGMA_2, SIGMA_3)
for _s in PAULI:
    _s.setflags(write=False)

#: Matrices up to this size go through Jacobi when ``method="auto"``.
JACOBI_AUTO_MAX_DIM = 128


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hermitian2(entries, atol=1e-12):
    """Validate a 2x2 Hermitian matrix and return it as a read-only array."""
    h = np.asarray(entries, dtype=complex)
    if h.shape != (2, 2):
        raise NotHermitianError(f"expected a 2x2 matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise NotHermitianError("matrix has non-finite entries")
    if np.max(np.abs(h - h.conj().T)) > atol:
        raise NotHermitianError("matrix is not Hermitian within %.1e" % atol)
    return _frozen(h)


def hermitian_dense(entries, rtol=1e-10):
    """Validate a square Hermitian matrix (tolerance relative to max |entry|)."""
    a = np.asarray(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NotHermitianError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotHermitianError("matrix has non-finite entries")
    scale = np.max(np.abs(a))
    if scale > 0 and np.max(np.abs(a - a.conj().T)) > rtol * scale:
        raise NotHermitianError("matrix is not Hermitian within relative %.1e" % rtol)
    return _frozen(a)


def pauli_compose(r0, r1, r2, r3):
    return _frozen(r0 * SIGMA_0 + r1 * SIGMA_1 + r2 * SIGMA_2 + r3 * SIGMA_3)


def pauli_decompose(h):
    """Coefficients ``(R0, R1, R2, R3)`` with ``h = sum_j R_j sigma_j``.

    Uses ``R_j = Tr(sigma_j h) / 2``; the coefficients are real for Hermitian
    input, which is enforced.
    """
    h = hermitian2(h)
    return tuple(float(0.5 * np.trace(s @ h).real) for s in PAULI)


def eigh2(h):
    """Closed-form eigensystem of a 2x2 Hermitian matrix.

    Eigenvalues are ``R0 -/+ |R|`` in ascending order.  A degenerate matrix
    (``|R| = 0``) returns the canonical basis.
    """
    r0, r1, r2, r3 = pauli_decompose(h)
    rho = np.sqrt(r1 * r1 + r2 * r2 + r3 * r3)
    values = np.array([r0 - rho, r0 + rho])
    if rho == 0.0:
        return EigenDecomposition(values, np.eye(2, dtype=complex))
    off = complex(r1, r2)  # lower-left entry of h
    # Two algebraically equivalent forms; pick the one without cancellation.
    if r3 <= 0:
        lower = np.array([rho - r3, -off])
    else:
        lower = np.array([-off.conjugate(), rho + r3])
    lower = lower / np.linalg.norm(lower)
    upper = np.array([-lower[1].conjugate(), lower[0].conjugate()])
    return EigenDecomposition(values, np.column_stack([lower, upper]))


def _round_robin(n):
    """Pairings for one cyclic sweep: n-1 rounds of disjoint (p, q) pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs], dtype=int),
                       np.array([q for _, q in pairs], dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a, max_sweeps=100, tol=1e-12):
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Each 2x2 pivot ``(p, q)`` is first made real by a diagonal phase and then
    annihilated with a real plane rotation.  Iteration stops once the
    Frobenius norm of the off-diagonal part drops below ``tol * ||A||_F``.

    Raises
    ------
    ConvergenceError
        After ``max_sweeps`` sweeps; ``achieved`` holds the final
        off-diagonal norm.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return EigenDecomposition(a.diagonal().real.copy(), v)
    norm = np.linalg.norm(a)
    threshold = tol * norm
    rounds = _round_robin(n)

    mask = ~np.eye(n, dtype=bool)

    def off_norm():
        # direct sum; ||A||^2 - sum |a_ii|^2 cancels down to sqrt(eps) ||A||
        return float(np.linalg.norm(a[mask]))

    off = off_norm()
    sweeps = 0
    while off > threshold:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                "Jacobi did not converge in %d sweeps (off-diagonal norm %.3e)" % (max_sweeps, off),
                achieved=off,
            )
        for p, q in rounds:
            apq = a[p, q]
            mag = np.abs(apq)
            active = mag > 1e-300
            if not np.any(active):
                continue
            p, q, apq, mag = p[active], q[active], apq[active], mag[active]
            phase = apq / mag
            app = a[p, p].real
            aqq = a[q, q].real
            tau = (aqq - app) / (2.0 * mag)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
            g00, g01 = c, s
            g10, g11 = -s * phase.conj(), c * phase.conj()
            cp, cq = a[:, p], a[:, q]
            a[:, p] = cp * g00 + cq * g10
            a[:, q] = cp * g01 + cq * g11
            rp, rq = a[p, :], a[q, :]
            a[p, :] = np.conj(g00)[:, None] * rp + np.conj(g10)[:, None] * rq
            a[q, :] = np.conj(g01)[:, None] * rp + np.conj(g11)[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p] = vp * g00 + vq * g10
            v[:, q] = vp * g01 + vq * g11
        sweeps += 1
        off = off_norm()
    values = a.diagonal().real
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(values[order], v[:, order])


def eigh_dense(a, method="auto"):
    """Full spectrum of a dense Hermitian matrix, ascending.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_AUTO_MAX_DIM``, LAPACK above).
    """
    a = hermitian_dense(a)
    if method == "auto":
        method = "jacobi" if a.shape[0] <= JACOBI_AUTO_MAX_DIM else "lapack"
    if method == "jacobi":
        return jacobi_eigh(a)
    if method == "lapack":
        values, vectors = np.linalg.eigh(a)
        return EigenDecomposition(values, vectors)
    raise ValueError(f"unknown eigensolver method {method!r}")
