"""Oracle suite behind ``chernlab selfcheck``.

Each check returns a named pass/fail line; the report is a pure function of
the seed and options, so two runs print the same bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import build_pt_frame, lower_states
from .lattice import SQRT3, build_geometry, dirac_points, kgrid
from .model import HaldaneParams, assemble_flake, block_mismatch, bloch_spectrum
from .numerics import eigh_dense
from .topology import chern_curvature, chern_fhs, chern_fhs_states, chern_pt_obstruction, loop_berry_phase
from .wannier import decay_fit, dichotomy_scan, wannier_from_frame

TWO_PI = 2 * math.pi

CANONICAL = {
    "cyan": HaldaneParams(1.0, 0.25, math.pi / 2, 0.0),
    "orange": HaldaneParams(1.0, 0.25, -math.pi / 2, 0.0),
    "trivial": HaldaneParams(1.0, 0.25, 0.0, -3 * SQRT3),
}
EXPECTED_C1 = {"cyan": -1, "orange": 1, "trivial": 0}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class SelfCheckReport:
    seed: int
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def text(self):
        lines = [f"chernlab selfcheck (seed {self.seed})"]
        for c in self.checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        lines.append("RESULT: " + ("PASS" if self.passed else "FAIL " + ", ".join(self.failures)))
        return "\n".join(lines) + "\n"


def check_cross_method(fhs_grid=24, curvature_grid=96, pt_grid=48, tol=1e-3):
    g = build_geometry()
    out = []
    for name, p in CANONICAL.items():
        a = chern_fhs(p, kgrid(g, fhs_grid))
        b = chern_curvature(p, kgrid(g, curvature_grid))
        c = chern_pt_obstruction(p, kgrid(g, pt_grid))
        ok = a.c1 == c.c1 == EXPECTED_C1[name] and abs(b.raw - a.c1) < tol
        out.append(CheckResult(f"cross_method_chern[{name}]", ok,
                               f"fhs={a.c1} curvature_raw={b.raw:.6f} pt={c.c1} expected={EXPECTED_C1[name]}"))
    return out


def check_spectral_equivalence(n=6, tol=1e-8, nnn_sign=1):
    g = build_geometry()
    out = []
    for name, p in CANONICAL.items():
        sample = assemble_flake(g, p, n, n, "periodic", _nnn_sign=nnn_sign)
        flake = eigh_dense(sample.hamiltonian, method="jacobi").eigenvalues
        err = float(np.max(np.abs(flake - bloch_spectrum(p, kgrid(g, n)))))
        blocks = block_mismatch(sample)
        out.append(CheckResult(f"spectral_equivalence[{name}]", err < tol and blocks < tol,
                               f"max |dE| = {err:.3e}, max block mismatch = {blocks:.3e} (tol {tol:g})"))
    return out


def check_loop_stokes(radius=0.02, n_points=256, tol=5e-2):
    g = build_geometry()
    K, Kp = dirac_points(g)
    cases = (("cyan", K, TWO_PI), ("orange", Kp, -TWO_PI), ("trivial", K, 0.0))
    out = []
    for name, center, target in cases:
        value = loop_berry_phase(CANONICAL[name], center, radius, n_points)
        out.append(CheckResult(f"loop_stokes[{name}]", abs(value - target) < tol,
                               f"loop phase {value:.6f}, target {target:.6f}"))
    return out


def check_dichotomy(sizes=(24, 48)):
    g = build_geometry()
    out = []
    for name in ("cyan", "trivial"):
        p = CANONICAL[name]
        rows = dichotomy_scan(p, sizes, (0.45, 1.0), g)
        ratio = rows[-1].ratios[1.0]
        fit = decay_fit(wannier_from_frame(build_pt_frame(p, kgrid(g, sizes[-1]))))
        if name == "trivial":
            ok = abs(ratio - 1) < 0.02 and fit.r2 > 0.99 and fit.rate > 0
        else:
            ok = ratio >= 1.05 and fit.r2 < fit.power_r2
        out.append(CheckResult(f"dichotomy[{name}]", ok,
                               f"moment(1) ratio {ratio:.6f}, exp r2 {fit.r2:.6f}, power r2 {fit.power_r2:.6f}"))
    return out


def check_gauge_invariance(seed, trials=20, n=24):
    g = build_geometry()
    rng = np.random.default_rng(seed)
    out = []
    for name, p in CANONICAL.items():
        states = lower_states(p, kgrid(g, n).frac_mesh)
        base = chern_fhs_states(states).c1
        changed = 0
        for _ in range(trials):
            phases = np.exp(1j * rng.uniform(-math.pi, math.pi, size=(n, n)))
            changed += chern_fhs_states(states * phases[..., None]).c1 != base
        out.append(CheckResult(f"fhs_gauge_invariance[{name}]", changed == 0,
                               f"{trials} random phase fields, {changed} changed c1={base}"))
    return out


def run_selfcheck(seed=0, mutate_nnn_sign=False, gauge_trials=20):
    report = SelfCheckReport(int(seed))
    report.checks += check_cross_method()
    report.checks += check_spectral_equivalence(nnn_sign=-1 if mutate_nnn_sign else 1)
    report.checks += check_loop_stokes()
    report.checks += check_dichotomy()
    report.checks += check_gauge_invariance(seed, gauge_trials)
    return report
