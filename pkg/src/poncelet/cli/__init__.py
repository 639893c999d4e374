"""``poncelet`` command line: grid, verify, portrait, rotnum, string.

Exit codes: 0 success, 2 configuration error, 3 computation or
verification failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from .. import canonical, grid
from ..conics import ConfocalConic, ConfocalFamily
from ..errors import PonceletError
from ..linespace import phase_portrait, support
from . import output
from .checks import TOLERANCES, render_text, run_verify
from .config import ConfigError, RunConfig, build_config, read_config_file, require_odd

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 2, 3

# grid points farther than this many major semi-axes are left out of the SVG view
VIEW_REACH = 4.0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    flag = common.add_argument
    flag("--config", help="key = value file; command-line flags override it")
    flag("--a1sq", type=str)
    flag("--a2sq", type=str)
    flag("--lambda-gamma", dest="lambda_gamma", type=str, help="table parameter")
    flag("--n", type=str)
    flag("--k", type=str)
    flag("--x0", type=str, help="chart position of the first tangency point")
    flag("--resolution", type=str)
    flag("--seed", type=str)
    flag("--out-dir", dest="out_dir", type=str)
    flag("--format", type=str, help="comma list of csv, json, svg")
    flag("--perturb", type=str, help="stretch the declared table's major axis by 1+delta")
    flag("--lambda-caustic", dest="lambda_caustic", type=str)
    flag("--lambdas", type=str, help="comma list of caustic parameters (portrait)")
    flag("--samples", type=str)
    flag("--length", type=str, help="string length (string)")
    flag("--tol", action="append", default=[], metavar="NAME=VALUE",
         help="override a verify tolerance; repeatable")

    ap = argparse.ArgumentParser(prog="poncelet", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("grid", parents=[common], help="Poncelet grid as CSV/JSON/SVG")
    sub.add_parser("verify", parents=[common], help="run every invariant check")
    sub.add_parser("portrait", parents=[common], help="phase portrait of the billiard map")
    sub.add_parser("rotnum", parents=[common], help="print the rotation number c")
    sub.add_parser("string", parents=[common], help="string-construction polyline")
    return ap


def _config(args) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    cli = {k: v for k, v in vars(args).items() if k not in ("command", "config", "tol")}
    for item in args.tol:
        if "=" not in item:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        cli["tol." + name.strip()] = value
    return build_config(file_values, cli, known_tolerances=tuple(TOLERANCES))


def _family(cfg: RunConfig) -> ConfocalFamily:
    return ConfocalFamily(cfg.a1sq, cfg.a2sq)


def _use_color() -> bool:
    return "PONCELET_NO_COLOR" not in os.environ and sys.stdout.isatty()


def _caustic(cfg: RunConfig) -> float:
    if cfg.lambda_caustic is not None:
        return cfg.lambda_caustic
    return canonical.find_caustic(_family(cfg), cfg.lambda_gamma, cfg.k, cfg.n, cfg.resolution)


# ------------------------------------------------------------------ grid


def _grid_rows(poly, sets):
    """One row per distinct point, listed under its P set."""
    rows = []
    for gs in sets:
        if gs.kind != "P":
            continue
        for m in gs.members:
            if m.at_infinity:
                rows.append(("P", gs.index, m.i, None, None, None, None))
                continue
            x, y = grid.point_xy(poly.chart, m.point, tangency=m.i == m.j)
            rows.append(("P", gs.index, m.i, m.point[0], m.point[1], x, y))
    return rows


def _grid_summary(cfg, poly, sets) -> dict:
    F = poly.family
    circle = F.focal_sq <= 1e-9 * F.a1_sq
    out = {
        "config": cfg.as_dict(),
        "lambda_caustic": poly.lambda_caustic,
        "rotation_number": cfg.k / cfg.n,
        "distinct_points": grid.distinct_points(sets),
        "sets": [],
    }
    usable = []
    for gs in sets:
        entry = {"kind": gs.kind, "index": gs.index, "points": len(gs),
                 "axis_degenerate": gs.axis_degenerate}
        if gs.axis_degenerate or (gs.kind == "Q" and circle):
            entry["status"] = "skipped"
        else:
            fc = grid.fit_set(gs)
            cf = grid.confocality(F, fc)
            entry.update({
                "status": "fitted",
                "coefficients": list(fc.conic.coeffs),
                "fit_residual": fc.residual,
                "lambda": grid.fitted_lambda(F, fc),
                "confocality_residual": cf.residual,
                "dual_pencil_ratio": cf.dual_ratio,
            })
            usable.append(gs)
        out["sets"].append(entry)
    gaps = []
    if not circle:
        for a in usable:
            for b in usable:
                if a.kind == b.kind and a.index != b.index:
                    gaps.append({"from": f"{a.kind}{a.index}", "to": f"{b.kind}{b.index}",
                                 "gap": grid.equivalence_gap(F, a, b, x0=poly.x0, n=poly.n)})
    out["equivalence_gaps"] = gaps
    return out


def _grid_svg(poly, sets) -> str:
    A, B = poly.table.axes_sq
    pts = [m for gs in sets if gs.kind == "P" for m in gs.members if not m.at_infinity]
    reach = VIEW_REACH * math.sqrt(A)
    shown = [m for m in pts if math.hypot(*m.point) <= reach]
    xs = [math.sqrt(A), -math.sqrt(A)] + [m.point[0] for m in shown]
    ys = [math.sqrt(B), -math.sqrt(B)] + [m.point[1] for m in shown]
    svg = output.Svg(min(xs), max(xs), min(ys), max(ys))
    ga, gb = poly.gamma.axes_sq
    svg.polyline(output.ellipse_polyline(A, B), stroke="#000000", width=1.5, closed=True)
    svg.polyline(output.ellipse_polyline(ga, gb), stroke="#555555", width=1.0, closed=True)
    span = 2.0 * max(svg.xmax - svg.xmin, svg.ymax - svg.ymin)
    for line in poly.side_lines:
        c = line.p * line.normal
        d = line.direction
        svg.polyline([c - span * d, c + span * d], stroke="#aaaaaa", width=0.6)
    n = poly.n
    for m in shown:
        d = min((m.j - m.i) % n, (m.i - m.j) % n)
        s = (m.i + m.j) % n
        svg.circle(m.point[0], m.point[1], 3.5,
                   fill=output.PALETTE[d % len(output.PALETTE)],
                   stroke=output.PALETTE[s % len(output.PALETTE)])
    return svg.text()


def cmd_grid(cfg: RunConfig) -> int:
    require_odd(cfg)
    poly = grid.build_polygon(_family(cfg), cfg.lambda_gamma, cfg.n, cfg.k, cfg.x0, cfg.resolution)
    sets = grid.grid_sets(poly)
    out = Path(cfg.out_dir)
    if "csv" in cfg.format:
        header = ("kind", "index", "j", "x1", "x2", "chart_x", "chart_y")
        output.atomic_write(out / "grid.csv", output.csv_text(header, _grid_rows(poly, sets)))
    if "json" in cfg.format:
        output.atomic_write(out / "grid.json", output.json_text(_grid_summary(cfg, poly, sets)))
    if "svg" in cfg.format:
        output.atomic_write(out / "grid.svg", _grid_svg(poly, sets))
    print(f"grid n={cfg.n} k={cfg.k}: {grid.distinct_points(sets)} points, "
          f"lambda_caustic={output.fmt(poly.lambda_caustic)} -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------- verify


def cmd_verify(cfg: RunConfig) -> int:
    require_odd(cfg)
    report = run_verify(cfg)
    output.atomic_write(Path(cfg.out_dir) / "verify_report.json", output.json_text(report.as_dict()))
    sys.stdout.write(render_text(report, _use_color()))
    return EXIT_OK if report.passed else EXIT_FAIL


# -------------------------------------------------------------- portrait


def default_lambdas(cfg: RunConfig) -> tuple:
    """Four ellipse caustics, the focal value ``-a2sq`` and two hyperbolas."""
    a1, a2, lG = cfg.a1sq, cfg.a2sq, cfg.lambda_gamma
    lams = [-a2 + (lG + a2) * t for t in (0.2, 0.4, 0.6, 0.8)]
    if a1 - a2 > 1e-9 * a1:
        lams.append(-a2)
        lams += [-a1 + (a1 - a2) * t for t in (1 / 3, 2 / 3)]
    return tuple(sorted(lams))


def cmd_portrait(cfg: RunConfig) -> int:
    F = _family(cfg)
    lams = cfg.lambdas if cfg.lambdas is not None else default_lambdas(cfg)
    curves = phase_portrait(F, cfg.lambda_gamma, lams, samples=cfg.samples or 720)
    out = Path(cfg.out_dir)
    if "csv" in cfg.format:
        rows = [(c.lam, f, a, b) for c in curves for f, a, b in zip(c.phi, c.p_plus, c.p_minus)]
        output.atomic_write(out / "portrait.csv", output.csv_text(("lam", "phi", "p_plus", "p_minus"), rows))
    if "json" in cfg.format:
        output.atomic_write(out / "portrait.json", output.json_text(
            {"config": cfg.as_dict(), "lambdas": list(lams), "samples": len(curves[0].phi) if curves else 0}))
    if "svg" in cfg.format:
        phi = np.linspace(0.0, 2 * math.pi, 721)
        h = support(F, cfg.lambda_gamma, phi)
        svg = output.Svg(0.0, 2 * math.pi, -float(h.max()), float(h.max()))
        svg.polyline(np.column_stack([phi, h]), stroke="#000000", width=1.5)
        svg.polyline(np.column_stack([phi, -h]), stroke="#000000", width=1.5)
        for idx, c in enumerate(curves):
            color = output.PALETTE[idx % len(output.PALETTE)]
            for branch in (c.p_plus, c.p_minus):
                for seg in _runs(c.phi, branch):
                    svg.polyline(seg, stroke=color)
        output.atomic_write(out / "portrait.svg", svg.text())
    print(f"portrait: {len(curves)} curves -> {out}")
    return EXIT_OK


def _runs(x, y):
    """Split a sampled graph at NaN gaps."""
    ok = np.isfinite(y)
    runs, cur = [], []
    for xi, yi, good in zip(x, y, ok):
        if good:
            cur.append((xi, yi))
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return [np.array(r) for r in runs if len(r) > 1]


# -------------------------------------------------------- rotnum, string


def cmd_rotnum(cfg: RunConfig) -> int:
    lam_c = _caustic(cfg)
    c = canonical.rotation_number(_family(cfg), lam_c, cfg.lambda_gamma, cfg.resolution)
    frac = canonical.rational_approximation(c, max(cfg.n, 12))
    tail = f" ~ {frac[1]}/{frac[0]}" if frac else ""
    print(f"c = {output.fmt(c)}{tail}  (lambda_caustic={output.fmt(lam_c)}, lambda_gamma={output.fmt(cfg.lambda_gamma)})")
    return EXIT_OK


def cmd_string(cfg: RunConfig) -> int:
    F = _family(cfg)
    lam_c = _caustic(cfg)
    L = cfg.length if cfg.length is not None else canonical.string_length(F, lam_c, cfg.lambda_gamma)
    pts = canonical.string_curve(F, lam_c, L, samples=cfg.samples or 256)
    out = Path(cfg.out_dir)
    if "csv" in cfg.format:
        output.atomic_write(out / "string.csv", output.csv_text(("x1", "x2"), pts))
    if "json" in cfg.format:
        output.atomic_write(out / "string.json", output.json_text(
            {"config": cfg.as_dict(), "lambda_caustic": lam_c, "length": L, "points": pts.tolist()}))
    if "svg" in cfg.format:
        A, B = ConfocalConic(F, lam_c).axes_sq
        r = float(np.hypot(pts[:, 0], pts[:, 1]).max())
        svg = output.Svg(-r, r, -float(np.abs(pts[:, 1]).max()), float(np.abs(pts[:, 1]).max()))
        svg.polyline(output.ellipse_polyline(A, B), stroke="#555555", closed=True)
        svg.polyline(pts, stroke=output.PALETTE[0], width=1.5, closed=True)
        output.atomic_write(out / "string.svg", svg.text())
    print(f"string: length {output.fmt(L)}, {len(pts)} points -> {out}")
    return EXIT_OK


COMMANDS = {
    "grid": cmd_grid,
    "verify": cmd_verify,
    "portrait": cmd_portrait,
    "rotnum": cmd_rotnum,
    "string": cmd_string,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"poncelet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"poncelet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PonceletError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"poncelet: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
