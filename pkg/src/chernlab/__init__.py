"""Topology of the Haldane model: Bloch frames, Chern numbers, Wannier decay and the real-space Chern marker."""
from .errors import (
    ChernlabError,
    ConvergenceError,
    GaplessError,
    IllConditionedError,
    NotHermitianError,
    UnderResolvedError,
)
from .lattice import build_geometry, dirac_points, kgrid
from .model import HaldaneParams, assemble_flake, bands, fiber, phase_classify

__all__ = [
    "ChernlabError",
    "ConvergenceError",
    "GaplessError",
    "IllConditionedError",
    "NotHermitianError",
    "UnderResolvedError",
    "HaldaneParams",
    "assemble_flake",
    "bands",
    "build_geometry",
    "dirac_points",
    "fiber",
    "kgrid",
    "phase_classify",
]
