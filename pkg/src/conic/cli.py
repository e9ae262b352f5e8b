"""Command dispatch: config ingestion, report emission, plots.

Commands and their artifacts (written under --out / output.dir):

* ``curvature``  curvature.csv            (x, S, Sxx2)
* ``check``      obstructions.json        (exit 2 when obstructed)
* ``barriers``   barriers.json, barriers.csv
* ``solve``      solve.json, profile.csv, profile.svg
* ``yamabe``     yamabe.json, yamabe.csv
* ``examples``   catalog listing on stdout

Exit status: 0 success, 2 obstruction or hypothesis failure, 1 internal
error.  Every command is deterministic for a given config.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import barriers as barriers_mod
from . import solver as solver_mod
from .catalog import build_example, catalog_descriptions
from .config import COMMANDS, JobConfig, parse_config, serialize_config
from .conformal import (ConformalFactor, conformal_scalar_curvature,
                        yamabe_context, yamabe_residual)
from .errors import ConfigError, ConicError, ConstructionError, HypothesisError
from .functionals import ConformalFamily, conic_yamabe_estimate, einstein_hilbert
from .geometry import ConicMetric, scalar_curvature_warped_profile
from .grid import RadialGrid
from .obstructions import VERDICT_OBSTRUCTED, check_obstructions

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_OBSTRUCTED = 2


def _setup_logging(quiet: bool):
    level_name = os.environ.get("CONIC_LOG", "info").lower()
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(level_name, logging.INFO)
    if quiet:
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def build_metric(cfg: JobConfig) -> ConicMetric:
    return build_example(cfg.example, m=cfg.m, x_max=cfg.x_max, k=cfg.k,
                         link_curvature=cfg.link_curvature,
                         link_kind=cfg.link_kind, link_bump=cfg.link_bump)


def build_grid(cfg: JobConfig) -> RadialGrid:
    return RadialGrid.graded(cfg.n, cfg.x_max, cfg.gamma, cfg.n_theta)


def _solver_options(cfg: JobConfig) -> solver_mod.SolverOptions:
    return solver_mod.SolverOptions(residual_tol=cfg.residual_tol,
                                    step_tol=cfg.step_tol,
                                    max_iterations=cfg.max_iterations,
                                    ladder_rate=cfg.ladder_rate)


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    logger.info("wrote %s", path)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")
    logger.info("wrote %s", path)


def _svg_polyline(xs, ys, x0, y0, w, h) -> str:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    x_lo, x_hi = xs.min(), xs.max()
    y_lo, y_hi = ys.min(), ys.max()
    if y_hi - y_lo < 1e-300:
        y_hi = y_lo + 1.0
    px = x0 + (xs - x_lo) / (x_hi - x_lo) * w
    py = y0 + h - (ys - y_lo) / (y_hi - y_lo) * h
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    frame = (f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" '
             'fill="none" stroke="#888"/>')
    labels = (f'<text x="{x0}" y="{y0 + h + 14}" font-size="10">{x_lo:.4g}</text>'
              f'<text x="{x0 + w - 30}" y="{y0 + h + 14}" font-size="10">{x_hi:.4g}</text>'
              f'<text x="{x0 - 4}" y="{y0 + h}" font-size="10" text-anchor="end">{y_lo:.4g}</text>'
              f'<text x="{x0 - 4}" y="{y0 + 10}" font-size="10" text-anchor="end">{y_hi:.4g}</text>')
    return (frame + labels +
            f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.2" points="{points}"/>')


def write_profile_svg(path: Path, x, v, s_tilde) -> None:
    """Static two-panel line plot of the solved factor and its curvature."""
    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="640" height="520">']
    parts.append('<text x="320" y="18" text-anchor="middle" font-size="13">'
                 'conformal factor v(x)</text>')
    parts.append(_svg_polyline(x, v, 60, 30, 540, 180))
    parts.append('<text x="320" y="288" text-anchor="middle" font-size="13">'
                 'deformed scalar curvature</text>')
    parts.append(_svg_polyline(x, s_tilde, 60, 300, 540, 180))
    parts.append('<text x="320" y="512" text-anchor="middle" font-size="11">x</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    logger.info("wrote %s", path)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_curvature(cfg: JobConfig, out: Path | None) -> int:
    g = build_metric(cfg)
    grid = build_grid(cfg)
    profile = scalar_curvature_warped_profile(g, grid)
    logger.info("curvature: singular coefficient %.6g, bounded=%s",
                profile.singular_coefficient, profile.bounded_at_boundary)
    if out is not None:
        _write_csv(out / "curvature.csv", ["x", "S", "Sxx2"], profile.rows())
    return EXIT_OK


def _cmd_check(cfg: JobConfig, out: Path | None) -> int:
    g = build_metric(cfg)
    report = check_obstructions(g)
    print(json.dumps(report.to_json_dict(), indent=2))
    if out is not None:
        _write_json(out / "obstructions.json", report.to_json_dict())
    return EXIT_OBSTRUCTED if report.verdict == VERDICT_OBSTRUCTED else EXIT_OK


def _radial(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values.mean(axis=1) if values.ndim == 2 else values


def _cmd_barriers(cfg: JobConfig, out: Path | None) -> int:
    g = build_metric(cfg)
    grid = build_grid(cfg)
    ctx = yamabe_context(g, grid)
    pair = barriers_mod.build_barrier_pair(ctx)
    payload = pair.constants.to_json_dict()
    payload["residual_margins"] = {"min_P_phi": pair.residual_margins[0],
                                   "max_P_psi": pair.residual_margins[1]}
    print(json.dumps(payload["residual_margins"], indent=2))
    if out is not None:
        _write_json(out / "barriers.json", payload)
        p_phi = _radial(yamabe_residual(ctx, pair.phi))
        p_psi = _radial(yamabe_residual(ctx, pair.psi))
        rows = zip(grid.nodes, _radial(pair.phi.values), _radial(pair.psi.values),
                   p_phi, p_psi)
        _write_csv(out / "barriers.csv", ["x", "phi", "psi", "Pphi", "Ppsi"], rows)
    return EXIT_OK


def _cmd_solve(cfg: JobConfig, out: Path | None) -> int:
    g = build_metric(cfg)
    grid = build_grid(cfg)
    ctx = yamabe_context(g, grid)
    pair = barriers_mod.build_barrier_pair(ctx)
    report = solver_mod.monotone_iterate(ctx, pair, _solver_options(cfg))
    print(json.dumps({k: v for k, v in report.to_json_dict().items()
                      if k not in ("trace", "ladder_lower", "ladder_upper")},
                     indent=2))
    if out is not None:
        _write_json(out / "solve.json", report.to_json_dict())
        v = _radial(report.v.values)
        p_v = _radial(yamabe_residual(ctx, report.v))
        s_tilde = _radial(conformal_scalar_curvature(ctx, report.v))
        v_conf = v ** (4.0 / (ctx.m - 1))
        rows = zip(grid.nodes, v, v_conf, p_v, s_tilde)
        _write_csv(out / "profile.csv", ["x", "v", "v_conformal_power", "Pv", "S_tilde"],
                   rows)
        write_profile_svg(out / "profile.svg", grid.nodes, v, s_tilde)
    return EXIT_OK


def default_family(g: ConicMetric, grid: RadialGrid) -> ConformalFamily:
    """Constants times a quadratic bump: u = k (1 + t (x/x_max)^2)."""
    scales = np.geomspace(0.5, 2.0, 7)
    bumps = np.linspace(-0.5, 0.5, 5)
    params = tuple((float(kk), float(tt)) for kk in scales for tt in bumps)
    xhat2 = (grid.nodes / grid.x_max) ** 2

    def builder(p):
        kk, tt = p
        return ConformalFactor(values=kk * (1.0 + tt * xhat2))

    return ConformalFamily(base=g, grid=grid, parameters=params,
                           factor_builder=builder, name="scale-bump")


def _cmd_yamabe(cfg: JobConfig, out: Path | None) -> int:
    g = build_metric(cfg)
    grid = build_grid(cfg)
    family = default_family(g, grid)
    estimate = conic_yamabe_estimate(family)
    payload = estimate.to_json_dict()
    payload["EH_base"] = einstein_hilbert(g, grid)
    payload["estimate_not_above_base"] = bool(payload["inf_value"] <= payload["EH_base"] + 1e-12)
    print(json.dumps(payload, indent=2))
    if out is not None:
        _write_json(out / "yamabe.json", payload)
        rows = ([*params, value] for params, value in estimate.members)
        _write_csv(out / "yamabe.csv", ["scale", "bump", "EH"], rows)
    return EXIT_OK


def _cmd_examples(cfg: JobConfig, out: Path | None) -> int:
    for name, blurb in catalog_descriptions():
        print(f"{name:16s} {blurb}")
    return EXIT_OK


_DISPATCH = {
    "curvature": _cmd_curvature,
    "check": _cmd_check,
    "barriers": _cmd_barriers,
    "solve": _cmd_solve,
    "yamabe": _cmd_yamabe,
    "examples": _cmd_examples,
}


def run(command: str, cfg: JobConfig, out_dir: str | None = None) -> int:
    """Execute one command; returns the process exit status."""
    if command not in _DISPATCH:
        raise ConfigError(f"unknown command {command!r}; choices: {', '.join(COMMANDS)}")
    if command != "examples" and not cfg.example:
        raise ConfigError("metric.example is required for this command")
    out = None
    target = out_dir or cfg.output_dir
    if target:
        out = Path(target)
        out.mkdir(parents=True, exist_ok=True)
    return _DISPATCH[command](cfg, out)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="conic",
        description="curvature, obstruction, barrier and constant-curvature "
                    "deformation computations for warped conic metrics")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, default=None,
                        help="job config file (section.key = value lines)")
    parser.add_argument("--out", type=str, default=None,
                        help="directory for CSV/JSON/SVG artifacts")
    parser.add_argument("--grid-n", type=int, default=None,
                        help="override grid.n from the config")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.quiet)

    try:
        if args.config is not None:
            cfg = parse_config(args.config.read_text())
        else:
            cfg = JobConfig()
        if args.grid_n is not None:
            from dataclasses import replace
            cfg = replace(cfg, n=args.grid_n)
            cfg.validate()
        logger.debug("effective config:\n%s", serialize_config(cfg))
        return run(args.command, cfg, args.out)
    except (HypothesisError, ConstructionError) as exc:
        logger.error("%s", exc)
        return EXIT_OBSTRUCTED
    except ConicError as exc:
        logger.error("%s", exc)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        logger.error("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
