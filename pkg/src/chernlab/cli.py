"""Command-line front end: ``chernlab <command> [--config FILE] [--out DIR]``.

Every command is a pure function of its effective configuration (defaults
overlaid with the JSON config file and the seed).  Each CSV embeds the
configuration digest; figures are written next to the CSV files unless
``--no-figures`` is given.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import artifacts
from .errors import ConvergenceError, GaplessError, IllConditionedError, UnderResolvedError
from .lattice import SQRT3, build_geometry, kgrid
from .model import HaldaneParams, band_field, phase_classify

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

PARAM_DEFAULTS = {"t1": 1.0, "t2": 0.25, "phi": math.pi / 2, "M": 0.0}
DEFAULTS = {
    "bands": {"samples": 241},
    "chern": {"grid": 24, "curvature_grid": 192, "pt_grid": 48},
    "curvature-map": {"grid": 96},
    "phase-diagram": {"n_phi": 49, "n_M": 49, "M_max_over_t2": 9.0, "grid": 20},
    "wannier": {"sizes": [24, 48, 96], "s_values": [0.45, 1.0]},
    "marker": {"sizes": [10, 14, 18], "box_ratio": 0.4, "bc": "open"},
    "selfcheck": {"mutate_nnn_sign": False, "gauge_trials": 20},
}
COMMANDS = tuple(DEFAULTS)


class ConfigError(ValueError):
    pass


class InvariantFailure(RuntimeError):
    pass


def build_config(command, raw=None, seed=None):
    """Overlay ``raw`` on the defaults; unknown keys raise ``ConfigError``."""
    raw = dict(raw or {})
    cfg = {"command": command, "d": 1.0, "params": dict(PARAM_DEFAULTS), "seed": 0}
    cfg.update(copy.deepcopy(DEFAULTS[command]))
    params = raw.pop("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be an object")
    unknown = set(params) - set(PARAM_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
    unknown = (set(raw) - set(cfg)) | ({"command"} & set(raw))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    for key, value in params.items():
        cfg["params"][key] = float(value)
    cfg.update(raw)
    if seed is not None:
        cfg["seed"] = int(seed)
    if not 0 <= int(cfg["seed"]) < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    try:
        cfg["_params"] = HaldaneParams(**cfg["params"])
        cfg["_geometry"] = build_geometry(float(cfg["d"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def public(cfg):
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


def _out(args, name):
    return Path(args.out) / name


def k_path(samples):
    """Gamma -> K -> M -> K' -> Gamma in fractional coordinates, vertices hit exactly.

    Segment point counts follow the Cartesian lengths (largest remainder).
    """
    g = build_geometry()
    third = 1.0 / 3.0
    vertices = np.array([[0, 0], [-third, -third], [0.5, 0.0], [third, third], [0, 0]], dtype=float)
    labels = ["Γ", "K", "M", "K'", "Γ"]
    if samples < len(vertices):
        raise ConfigError(f"a k-path needs at least {len(vertices)} samples")
    cart = g.to_cart(vertices)
    seg = np.linalg.norm(np.diff(cart, axis=0), axis=1)
    if np.any(seg <= 0):
        raise ConfigError("degenerate k-path segment")
    steps = samples - 1
    share = seg / seg.sum() * steps
    counts = np.maximum(np.floor(share).astype(int), 1)
    while counts.sum() < steps:
        counts[np.argmax(share - counts)] += 1
    while counts.sum() > steps:
        counts[np.argmax(counts)] -= 1
    frac, arc, ticks = [vertices[0]], [0.0], [0.0]
    for i, m in enumerate(counts):
        t = np.arange(1, m + 1) / m
        seg_pts = vertices[i] + t[:, None] * (vertices[i + 1] - vertices[i])
        seg_pts[-1] = vertices[i + 1]
        frac.extend(seg_pts)
        arc.extend(ticks[-1] + t * seg[i])
        ticks.append(ticks[-1] + seg[i])
    return np.array(frac), np.array(arc), ticks, labels


def cmd_bands(cfg, args):
    p = cfg["_params"]
    frac, arc, ticks, labels = k_path(int(cfg["samples"]))
    lo, hi = band_field(p, frac)
    rows = [(a, k[0], k[1], e0, e1) for a, k, e0, e1 in zip(arc, frac, lo, hi)]
    gap = hi - lo
    i = int(np.argmin(gap))
    path = artifacts.write_csv(_out(args, "bands.csv"), ["arclength", "k1", "k2", "E_minus", "E_plus"], rows,
                               public(cfg), [f"min gap {artifacts.fmt(gap[i])} at k = ({artifacts.fmt(frac[i][0])}, {artifacts.fmt(frac[i][1])})"])
    if args.figures:
        from .plotting import plot_bands
        plot_bands(_out(args, "bands.png"), arc, lo, hi, ticks, labels)
    return [path]


def cmd_chern(cfg, args):
    from .topology import chern_curvature, chern_fhs, chern_pt_obstruction

    p, g = cfg["_params"], cfg["_geometry"]
    results = [
        chern_fhs(p, kgrid(g, cfg["grid"])),
        chern_curvature(p, kgrid(g, cfg["curvature_grid"])),
        chern_pt_obstruction(p, kgrid(g, cfg["pt_grid"])),
    ]
    cls = phase_classify(p)
    rows = [(r.method, r.c1, r.raw, r.grid_size[0], r.grid_size[1]) for r in results]
    path = artifacts.write_csv(_out(args, "chern.csv"), ["method", "c1", "raw", "n1", "n2"], rows, public(cfg),
                               [f"phase region {cls.region}, r3(K) {artifacts.fmt(cls.r3_K)}, r3(K') {artifacts.fmt(cls.r3_Kp)}"])
    if len({r.c1 for r in results}) != 1:
        raise InvariantFailure("Chern methods disagree: " + ", ".join(f"{r.method}={r.c1}" for r in results))
    return [path]


def cmd_curvature_map(cfg, args):
    from .topology import curvature_map

    p, g = cfg["_params"], cfg["_geometry"]
    n = int(cfg["grid"])
    cmap = curvature_map(p, kgrid(g, n))
    rows = [(i, j, (i + 0.5) / n, (j + 0.5) / n, cmap.F[i, j]) for i in range(n) for j in range(n)]
    path = artifacts.write_csv(_out(args, "curvature_map.csv"), ["i", "j", "k1", "k2", "flux"], rows, public(cfg),
                               [f"total flux / 2pi = {artifacts.fmt(cmap.total / (2 * math.pi))}"])
    pgm = artifacts.write_pgm(_out(args, "curvature_map.pgm"), artifacts.signed_image(cmap.F.T[::-1]))
    if args.figures:
        from .plotting import plot_curvature
        plot_curvature(_out(args, "curvature_map.png"), cmap.F, (0, 1, 0, 1))
    return [path, pgm]


def cmd_phase_diagram(cfg, args):
    from .topology import phase_diagram

    p, g = cfg["_params"], cfg["_geometry"]
    phis = np.linspace(-math.pi, math.pi, int(cfg["n_phi"]))
    m_over = np.linspace(-cfg["M_max_over_t2"], cfg["M_max_over_t2"], int(cfg["n_M"]))
    pd = phase_diagram(p.t1, p.t2, phis, m_over * p.t2, kgrid(g, int(cfg["grid"])), threads=args.threads)
    rows = [(phis[i], pd.M[j], m_over[j], pd.chern[i, j], pd.gapless[i, j])
            for i in range(len(phis)) for j in range(len(m_over))]
    path = artifacts.write_csv(_out(args, "phase_diagram.csv"), ["phi", "M", "M_over_t2", "c1", "gapless"], rows,
                               public(cfg))
    # columns follow phi, rows follow M with the largest M on top
    image = artifacts.chern_image(pd.chern.T[::-1], pd.gapless.T[::-1])
    pgm = artifacts.write_pgm(_out(args, "phase_diagram.pgm"), image)
    if args.figures:
        from .plotting import plot_phase_diagram
        plot_phase_diagram(_out(args, "phase_diagram.png"), phis, m_over, pd.chern, pd.gapless, p.t2)
    return [path, pgm]


def cmd_wannier(cfg, args):
    from .frames import build_pt_frame
    from .wannier import decay_fit, dichotomy_scan, shell_profile, wannier_from_frame

    p, g = cfg["_params"], cfg["_geometry"]
    sizes = [int(n) for n in cfg["sizes"]]
    rows = dichotomy_scan(p, sizes, [float(s) for s in cfg["s_values"]], g)
    table = [(r.size, s, r.moments[s], r.ratios[s], r.obstruction) for r in rows for s in r.moments]
    paths = [artifacts.write_csv(_out(args, "wannier_moments.csv"), ["size", "s", "moment", "ratio", "obstruction"],
                                 table, public(cfg))]
    fits, profile = [], None
    for n in sizes:
        w = wannier_from_frame(build_pt_frame(p, kgrid(g, n)))
        fit = decay_fit(w)
        fits.append((n, fit.rate, fit.r2, fit.power, fit.power_r2, fit.shells))
        profile = shell_profile(w)
    paths.append(artifacts.write_csv(_out(args, "wannier_fit.csv"),
                                     ["size", "rate", "r2", "power", "power_r2", "shells"], fits, public(cfg)))
    paths.append(artifacts.write_csv(_out(args, "wannier_profile.csv"), ["shell", "mean_density"],
                                     list(zip(*profile)), public(cfg), [f"size {sizes[-1]}"]))
    if args.figures:
        from .plotting import plot_wannier
        moments = {s: [r.moments[s] for r in rows] for s in rows[0].moments}
        plot_wannier(_out(args, "wannier.png"), sizes, moments, profile[0], profile[1])
    return paths


def cmd_marker(cfg, args):
    from .realspace import marker_scan

    p, g = cfg["_params"], cfg["_geometry"]
    scan = marker_scan(p, cfg["sizes"], float(cfg["box_ratio"]), cfg["bc"], g)
    rows = [(n, r.L, r.cells_in_box, r.trace_value, r.marker, e, c)
            for n, r, e, c in zip(scan.sizes, scan.reports, scan.errors, scan.in_gap_states)]
    path = artifacts.write_csv(_out(args, "marker.csv"),
                               ["size", "L", "cells_in_box", "trace", "marker", "error", "in_gap_states"],
                               rows, public(cfg), [f"target c1 {scan.target}, monotone {scan.monotone}"])
    if args.figures:
        from .plotting import plot_marker
        plot_marker(_out(args, "marker.png"), scan.sizes, scan.markers, scan.target)
    return [path]


def cmd_selfcheck(cfg, args):
    from .selfcheck import run_selfcheck

    report = run_selfcheck(cfg["seed"], bool(cfg["mutate_nnn_sign"]), int(cfg["gauge_trials"]))
    text = report.text()
    path = _out(args, "selfcheck.txt")
    path.write_text(text, encoding="utf-8", newline="")
    sys.stdout.write(text)
    if not report.passed:
        raise InvariantFailure("selfcheck failed: " + ", ".join(report.failures))
    return [path]


HANDLERS = {
    "bands": cmd_bands,
    "chern": cmd_chern,
    "curvature-map": cmd_curvature_map,
    "phase-diagram": cmd_phase_diagram,
    "wannier": cmd_wannier,
    "marker": cmd_marker,
    "selfcheck": cmd_selfcheck,
}


def _threads(value):
    if value is None:
        value = os.environ.get("CHERNLAB_THREADS", "1")
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"thread count must be an integer, got {value!r}") from None
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def make_parser():
    parser = argparse.ArgumentParser(prog="chernlab", description="Haldane model topology toolkit")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with overrides of the command defaults")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--threads", default=None, help="worker threads (default: $CHERNLAB_THREADS or 1)")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized checks (u64)")
    parser.add_argument("--no-figures", dest="figures", action="store_false", help="skip PNG figures")
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        raw = {}
        if args.config:
            try:
                raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError("config file must hold a JSON object")
        args.threads = _threads(args.threads)
        cfg = build_config(args.command, raw, args.seed)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        for path in HANDLERS[args.command](cfg, args):
            print(f"wrote {path}", file=sys.stderr)
    except ConfigError as exc:
        print(f"chernlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantFailure as exc:
        print(f"chernlab: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConvergenceError, GaplessError, UnderResolvedError, IllConditionedError) as exc:
        print(f"chernlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (TypeError, ValueError) as exc:
        # remaining argument errors come from invalid config values
        print(f"chernlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
