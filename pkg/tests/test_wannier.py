import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chernlab.frames import BlochFrame, build_pt_frame, explicit_frame
from chernlab.lattice import kgrid
from chernlab.model import HaldaneParams
from chernlab.topology import chern_fhs
from chernlab.wannier import (
    WannierFunction,
    decay_fit,
    dichotomy_scan,
    frame_from_wannier,
    localization_moment,
    shell_profile,
    wannier_from_frame,
)

from conftest import CYAN, ORANGE, TRIVIAL, TRIVIAL_M1


def constant_frame(geom, n, vec=(1, 0)):
    states = np.broadcast_to(np.asarray(vec, dtype=complex), (n, n, 2)).copy()
    return BlochFrame(kgrid(geom, n), states, "explicit_real_gauge")


def test_constant_frame_is_a_delta(geom):
    w = wannier_from_frame(constant_frame(geom, 8))
    assert w.window == (8, 8)
    assert w.amps[0, 0, 0] == pytest.approx(1) and w.amps[0, 0, 1] == 0
    assert np.sum(np.abs(w.amps) ** 2) == pytest.approx(1)
    assert tuple(w.cells[0, 0]) == (0, 0)
    cells = w.cells.reshape(-1, 2)
    assert cells.min() == -3 and cells.max() == 4
    for s in (0, 0.5, 1, 3):
        assert localization_moment(w, s).moment == pytest.approx(1.0)


def test_parseval_and_round_trip(geom):
    for p in (CYAN, TRIVIAL):
        frame = build_pt_frame(p, kgrid(geom, 48))
        w = wannier_from_frame(frame)
        assert abs(w.norm2 - 1) <= 1e-10
        back = frame_from_wannier(w)
        assert np.max(np.abs(back.states - frame.states)) <= 1e-10


def test_shift_theorem(geom):
    n = 24
    frame = build_pt_frame(TRIVIAL, kgrid(geom, n))
    w = wannier_from_frame(frame)
    g0 = (2, -3)
    k = frame.grid.frac_mesh
    phase = np.exp(-2j * math.pi * (k[..., 0] * g0[0] + k[..., 1] * g0[1]))
    shifted = BlochFrame(frame.grid, frame.states * phase[..., None], frame.gauge_tag)
    ws = wannier_from_frame(shifted)
    # w(gamma) = (1/N) sum_k e^{-ik.gamma} u(k): the factor e^{-ik.g0} moves the function to -g0
    assert np.max(np.abs(ws.amps - np.roll(w.amps, (-g0[0], -g0[1]), axis=(0, 1)))) <= 1e-12
    back = BlochFrame(frame.grid, frame.states * np.conj(phase)[..., None], frame.gauge_tag)
    assert np.max(np.abs(wannier_from_frame(back).amps - np.roll(w.amps, g0, axis=(0, 1)))) <= 1e-12


def test_explicit_frame_rejected_when_singular(geom):
    with pytest.raises(ValueError):
        wannier_from_frame(explicit_frame(CYAN, kgrid(geom, 24)))
    w = wannier_from_frame(explicit_frame(TRIVIAL, kgrid(geom, 24)))
    assert abs(w.norm2 - 1) < 1e-10


def test_moment_properties(geom):
    w = wannier_from_frame(build_pt_frame(TRIVIAL_M1, kgrid(geom, 48)))
    values = [localization_moment(w, s).moment for s in (0, 0.25, 0.5, 1, 2)]
    assert values[0] == pytest.approx(1.0, abs=1e-10)
    assert all(b >= a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        localization_moment(w, 5)
    # larger windows can only add weight
    small = localization_moment(wannier_from_frame(build_pt_frame(CYAN, kgrid(geom, 24))), 1).moment
    big = localization_moment(wannier_from_frame(build_pt_frame(CYAN, kgrid(geom, 48))), 1).moment
    assert big >= small


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_moment_cauchy_schwarz(seed):
    from chernlab.lattice import build_geometry

    geom = build_geometry()
    rng = np.random.default_rng(seed)
    template = wannier_from_frame(constant_frame(geom, 6))
    amps = rng.normal(size=(6, 6, 2)) + 1j * rng.normal(size=(6, 6, 2))
    amps *= rng.uniform(0, 1, size=(6, 6, 1)) ** 4
    amps /= np.linalg.norm(amps)
    w = WannierFunction(template.window, amps, template.cells, geom)
    m0, mh, m1 = (localization_moment(w, s).moment for s in (0, 0.5, 1))
    assert m1 * m0 >= mh ** 2 * (1 - 1e-12)


def test_moment_gauge_sensitivity(geom):
    frame = build_pt_frame(TRIVIAL, kgrid(geom, 24))
    base = localization_moment(wannier_from_frame(frame), 1).moment
    glob = BlochFrame(frame.grid, frame.states * np.exp(0.7j), frame.gauge_tag)
    assert localization_moment(wannier_from_frame(glob), 1).moment == pytest.approx(base, rel=1e-12)
    rng = np.random.default_rng(21)
    for _ in range(20):
        phases = np.exp(1j * rng.uniform(-math.pi, math.pi, size=(24, 24)))
        noisy = BlochFrame(frame.grid, frame.states * phases[..., None], frame.gauge_tag)
        assert localization_moment(wannier_from_frame(noisy), 1).moment > base


def test_decay_fit_synthetic(geom):
    template = wannier_from_frame(constant_frame(geom, 48))
    r = np.linalg.norm(template.positions, axis=-1) / np.linalg.norm(geom.a1)
    amps = np.exp(-r).astype(complex)
    amps /= np.linalg.norm(amps)
    fit = decay_fit(WannierFunction(template.window, amps, template.cells, geom))
    assert fit.rate == pytest.approx(1.0, rel=0.03) and fit.r2 > 0.999


def test_decay_fit_requires_shells(geom):
    with pytest.raises(ValueError):
        decay_fit(wannier_from_frame(constant_frame(geom, 8)))


def test_decay_fit_phases(geom):
    triv = wannier_from_frame(build_pt_frame(TRIVIAL, kgrid(geom, 48)))
    fit = decay_fit(triv)
    assert fit.rate > 0 and fit.r2 > 0.99
    radii, dens = shell_profile(triv)
    beyond = dens[(radii >= 3) & (dens > 1e-28)]
    assert np.all(np.diff(beyond) < 0)
    cyan = decay_fit(wannier_from_frame(build_pt_frame(CYAN, kgrid(geom, 48))))
    assert cyan.r2 < cyan.power_r2 - 0.05


def test_dichotomy_scan(geom):
    cyan = dichotomy_scan(CYAN, (24, 48, 96), (0.45, 1.0))
    assert math.isnan(cyan[0].ratios[1.0])
    assert all(row.ratios[1.0] >= 1.05 for row in cyan[1:])
    assert abs(cyan[-1].ratios[0.45] - 1) < 0.05
    triv = dichotomy_scan(TRIVIAL, (24, 48, 96))
    assert all(abs(row.ratios[1.0] - 1) < 0.02 for row in triv[1:])
    with pytest.raises(ValueError):
        dichotomy_scan(CYAN, (48, 24))
    with pytest.raises(ValueError):
        dichotomy_scan(CYAN, (12, 24))


GAPPED_SET = [
    CYAN, ORANGE, TRIVIAL, TRIVIAL_M1,
    HaldaneParams(1, 0.25, 1.0, -0.6),
    HaldaneParams(1, 0.25, -2.2, 0.3),
    HaldaneParams(1, 0.25, math.pi / 2, 2.0),
    HaldaneParams(1, 0.1, 0.4, -0.8),
]


@pytest.mark.parametrize("p", GAPPED_SET)
def test_no_mixed_dichotomy_outcome(geom, p):
    c1 = chern_fhs(p, kgrid(geom, 25)).c1
    rows = dichotomy_scan(p, (24, 48, 96))
    fit = decay_fit(wannier_from_frame(build_pt_frame(p, kgrid(geom, 96))))
    localized = fit.r2 > 0.99 and fit.rate > 0 and all(abs(r.ratios[1.0] - 1) < 0.02 for r in rows[1:])
    divergent = all(r.ratios[1.0] >= 1.05 for r in rows[1:])
    assert localized != divergent
    assert localized == (c1 == 0)
