"""Command-line entry point: one JSON config in, reproducible files out.

Subcommands surface the library modules one-to-one::

    magfiber dispersion --config run.json --out results/
    magfiber thresholds --config run.json --out results/
    magfiber velocity   --config run.json --out results/
    magfiber minima     --config run.json --out results/
    magfiber evolve     --config run.json --out results/ --plots

Every run writes a ``manifest.json`` echoing the config, the grids and every
numeric tolerance in play, so reruns of an identical config are byte-stable.
Exit codes: 0 success, 2 bad config, 3 compute error (structured JSON on
stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import eigensolver as _eig
from . import operator as _op
from . import velocity as _vel
from . import wavepacket as _wp
from .dispersion import (find_local_minima, sweep, thresholds,
                         write_curve_csv, write_threshold_json)
from .fields import load_field_table, power_law
from .operator import RadialGrid
from .velocity import estimate, sign_certificate, write_velocity_csv
from .wavepacket import (WavePacketSpec, asymptotic_velocity_check,
                         build_stationary_phase, evolve_quadrature,
                         evolve_stationary_phase, gaussian_packet,
                         write_evolution_csv, write_snapshot)

TOLERANCES = {
    "eig_abs_tol_scale": _eig.EIG_ABS_TOL,
    "eig_residual_bound": _eig.RESIDUAL_BOUND,
    "eig_sign_threshold": _eig.SIGN_THRESHOLD,
    "eig_inverse_iter_shift": _eig.INVERSE_ITER_SHIFT,
    "eig_max_inverse_iter": _eig.MAX_INVERSE_ITER,
    "grid_max_nodes": _op.MAX_NODES,
    "grid_r_floor": _op.DEFAULT_R_FLOOR,
    "grid_well_width_factor": _op.WELL_WIDTH_FACTOR,
    "grid_de_broglie_fraction": _op.DE_BROGLIE_FRACTION,
    "velocity_normalization_tol": _vel.NORMALIZATION_TOL,
    "velocity_agreement_tol": _vel.AGREEMENT_TOL,
    "velocity_sign_dead_band": _vel.SIGN_DEAD_BAND,
    "velocity_default_fd_step": _vel.DEFAULT_FD_STEP,
    "velocity_grid_refine": _vel.VELOCITY_GRID_REFINE,
    "packet_phase_resolution_limit": _wp.PHASE_RESOLUTION_LIMIT,
    "packet_default_t_min": _wp.DEFAULT_T_MIN,
    "packet_default_edge_band": _wp.DEFAULT_EDGE_BAND,
    "packet_gaussian_support_sigmas": _wp.GAUSSIAN_SUPPORT_SIGMAS,
    "packet_interval_margin_steps": _wp.INTERVAL_MARGIN_STEPS,
}


class ConfigError(ValueError):
    pass


def _require_keys(block: dict, allowed: dict, context: str) -> None:
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    missing = [k for k, required in allowed.items() if required and k not in block]
    if missing:
        raise ConfigError(f"{context}: missing required keys {missing}")


def _parse_field(block, base_dir: Path):
    if not isinstance(block, dict):
        raise ConfigError("field: must be an object")
    kind = block.get("kind")
    if kind == "power_law":
        _require_keys(block, {"kind": True, "b0": True, "delta": True,
                              "gauge_c": False}, "field")
        return power_law(float(block["b0"]), float(block["delta"]),
                         gauge_c=float(block.get("gauge_c", 0.0)))
    if kind == "tabulated":
        _require_keys(block, {"kind": True, "path": True, "gauge_c": False}, "field")
        path = Path(block["path"])
        if not path.is_absolute():
            path = base_dir / path
        return load_field_table(path, gauge_c=float(block.get("gauge_c", 0.0)))
    raise ConfigError(f"field.kind must be 'power_law' or 'tabulated', got {kind!r}")


def _parse_grid_policy(block):
    if block in (None, "auto"):
        return "auto"
    if isinstance(block, dict):
        _require_keys(block, {"R": True, "N": True}, "grid_policy")
        return RadialGrid(R=float(block["R"]), N=int(block["N"]))
    raise ConfigError("grid_policy must be 'auto' or an object {R, N}")


TOP_KEYS = {"field": True, "m_list": False, "n_max": False, "p_range": False,
            "grid_policy": False, "velocity": False, "thresholds": False,
            "minima": False, "evolve": False, "output_dir": False}


def load_config(path: Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(raw, TOP_KEYS, "config")

    cfg = {"raw": raw, "field": _parse_field(raw["field"], Path(path).parent),
           "grid_policy": _parse_grid_policy(raw.get("grid_policy", "auto"))}

    m_list = raw.get("m_list", [0])
    if (not isinstance(m_list, list) or not m_list
            or any(not isinstance(m, int) for m in m_list)):
        raise ConfigError("m_list must be a non-empty list of integers")
    cfg["m_list"] = m_list

    n_max = raw.get("n_max", 1)
    if not isinstance(n_max, int) or n_max < 1:
        raise ConfigError("n_max must be a positive integer")
    cfg["n_max"] = n_max

    pr = raw.get("p_range", {"min": -5.0, "max": 5.0, "count": 21})
    if isinstance(pr, list) and len(pr) == 3:
        pr = {"min": pr[0], "max": pr[1], "count": pr[2]}
    if not isinstance(pr, dict):
        raise ConfigError("p_range must be {min, max, count} or [min, max, count]")
    _require_keys(pr, {"min": True, "max": True, "count": True}, "p_range")
    if not (pr["min"] < pr["max"] and int(pr["count"]) >= 2):
        raise ConfigError("p_range needs min < max and count >= 2")
    cfg["p_grid"] = np.linspace(float(pr["min"]), float(pr["max"]), int(pr["count"]))

    vel = raw.get("velocity", {})
    _require_keys(vel, {"dp": False}, "velocity")
    cfg["velocity_dp"] = float(vel.get("dp", _vel.DEFAULT_FD_STEP))

    _require_keys(raw.get("thresholds", {}), {}, "thresholds")
    _require_keys(raw.get("minima", {}), {}, "minima")

    ev = raw.get("evolve")
    if ev is not None:
        _require_keys(ev, {"n": True, "m": True, "p0": True, "sigma": True,
                           "t_list": True, "method": False, "amplitude": False,
                           "x3_extent": False, "Q": False, "t_min": False,
                           "edge_band": False, "r_points": False}, "evolve")
        method = ev.get("method", "quadrature")
        if method not in ("quadrature", "stationary_phase", "both"):
            raise ConfigError(f"evolve.method invalid: {method!r}")
        q = ev.get("Q")
        if q is not None:
            _require_keys(q, {"kind": True, "lo": True, "hi": True}, "evolve.Q")
            if q["kind"] != "indicator":
                raise ConfigError("evolve.Q.kind must be 'indicator'")
        x3e = ev.get("x3_extent")
        if x3e is not None and (not isinstance(x3e, list) or len(x3e) != 3):
            raise ConfigError("evolve.x3_extent must be [lo, hi, count]")
        cfg["evolve"] = ev
    cfg["output_dir"] = raw.get("output_dir")
    return cfg


def _write_manifest(out: Path, command: str, cfg: dict, grids: dict,
                    warnings_seen: list[str], outputs: list[str],
                    extra: dict | None = None) -> None:
    manifest = {
        "tool": {"name": "magfiber", "version": __version__},
        "command": command,
        "config": cfg["raw"],
        "grids": grids,
        "tolerances": TOLERANCES,
        "warnings": sorted(warnings_seen),
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _grid_entry(grid) -> dict:
    return {"R": grid.R, "N": grid.N, "h": grid.h}


def _plot_script(out: Path, command: str, csvs: list[str]) -> str:
    lines = [
        "#!/usr/bin/env python3",
        f'"""Plot the {command} outputs; run from the results directory."""',
        "import csv",
        "import matplotlib.pyplot as plt",
        "",
        "def load(path):",
        "    with open(path) as fh:",
        "        rows = list(csv.DictReader(fh))",
        "    return {k: [float(r[k]) if r[k] else None for r in rows]"
        " for k in rows[0]}",
        "",
    ]
    if command in ("dispersion", "minima", "thresholds"):
        for name in csvs:
            lines += [f"d = load({name!r})",
                      f"plt.plot(d['p'], d['lambda'], label={name!r})"]
        lines += ["plt.xlabel('p')", "plt.ylabel('lambda')"]
    elif command == "velocity":
        for name in csvs:
            lines += [f"d = load({name!r})",
                      f"plt.plot(d['p'], d['v_fh'], label={name!r})"]
        lines += ["plt.xlabel('p')", "plt.ylabel('group velocity')"]
    else:
        for name in csvs:
            lines += [f"d = load({name!r})",
                      "plt.plot(d['x3'], [a*a + b*b for a, b in"
                      " zip(d['re_u'], d['im_u'])], label=%r)" % name]
        lines += ["plt.xlabel('x3')", "plt.ylabel('|u|^2 (per row)')"]
    lines += ["plt.legend()", "plt.savefig('%s.png', dpi=150)" % command, ""]
    path = out / f"plots_{command}.py"
    path.write_text("\n".join(lines))
    return path.name


def _sweep_all(cfg, keep_psi, workers):
    grids, curves_by_m = {}, {}
    for m in cfg["m_list"]:
        curves = sweep(cfg["field"], m, cfg["n_max"], cfg["p_grid"],
                       grid_policy=cfg["grid_policy"], keep_psi=keep_psi,
                       workers=workers)
        curves_by_m[m] = curves
        grids[str(m)] = _grid_entry(curves[0].grid)
        if curves[0].grid_capped:
            grids[str(m)]["capped"] = True
    return grids, curves_by_m


def cmd_dispersion(cfg, out: Path, plots: bool, workers: int) -> list[str]:
    grids, curves_by_m = _sweep_all(cfg, keep_psi=False, workers=workers)
    outputs = []
    for m, curves in curves_by_m.items():
        for c in curves:
            name = f"curve_m{m}_n{c.n}.csv"
            write_curve_csv(c, out / name)
            outputs.append(name)
    if plots:
        outputs.append(_plot_script(out, "dispersion", sorted(outputs)))
    return outputs, grids, {}


def cmd_thresholds(cfg, out: Path, plots: bool, workers: int):
    grids, curves_by_m = _sweep_all(cfg, keep_psi=False, workers=workers)
    outputs = []
    for m, curves in curves_by_m.items():
        name = f"thresholds_m{m}.json"
        write_threshold_json(thresholds(curves), out / name)
        outputs.append(name)
        for c in curves:
            cname = f"curve_m{m}_n{c.n}.csv"
            write_curve_csv(c, out / cname)
            outputs.append(cname)
    if plots:
        outputs.append(_plot_script(out, "thresholds",
                                    sorted(n for n in outputs if n.endswith(".csv"))))
    return outputs, grids, {}


def cmd_velocity(cfg, out: Path, plots: bool, workers: int):
    outputs, grids = [], {}
    for m in cfg["m_list"]:
        if isinstance(cfg["grid_policy"], RadialGrid):
            grid = cfg["grid_policy"]
        else:
            grid = _vel.velocity_grid(cfg["field"], m,
                                      (cfg["p_grid"][0], cfg["p_grid"][-1]),
                                      cfg["n_max"])
        grids[str(m)] = _grid_entry(grid)
        for n in range(1, cfg["n_max"] + 1):
            ests = [estimate(cfg["field"], m, n, p, grid=grid, dp=cfg["velocity_dp"])
                    for p in cfg["p_grid"]]
            name = f"velocity_m{m}_n{n}.csv"
            write_velocity_csv(ests, out / name)
            outputs.append(name)
            cert = sign_certificate(cfg["field"], m, n, cfg["p_grid"], grid=grid,
                                    dp=cfg["velocity_dp"])
            jname = f"signs_m{m}_n{n}.json"
            with open(out / jname, "w") as fh:
                json.dump({"m": m, "n": n, "kind": cert.kind,
                           "p_star": cert.p_star, "detail": cert.detail},
                          fh, indent=2, sort_keys=True)
                fh.write("\n")
            outputs.append(jname)
    if plots:
        outputs.append(_plot_script(out, "velocity",
                                    sorted(n for n in outputs if n.endswith(".csv"))))
    return outputs, grids, {}


def cmd_minima(cfg, out: Path, plots: bool, workers: int):
    grids, curves_by_m = _sweep_all(cfg, keep_psi=False, workers=workers)
    outputs = []
    for m, curves in curves_by_m.items():
        record = {"m": m, "per_n": []}
        for c in curves:
            minima = find_local_minima(c)
            record["per_n"].append({
                "n": c.n,
                "minima": [{"p": p, "lambda": lam} for p, lam in minima]})
            cname = f"curve_m{m}_n{c.n}.csv"
            write_curve_csv(c, out / cname)
            outputs.append(cname)
        name = f"minima_m{m}.json"
        with open(out / name, "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(name)
    if plots:
        outputs.append(_plot_script(out, "minima",
                                    sorted(n for n in outputs if n.endswith(".csv"))))
    return outputs, grids, {}


def cmd_evolve(cfg, out: Path, plots: bool, workers: int):
    if "evolve" not in cfg:
        raise ConfigError("evolve command needs an 'evolve' config block")
    ev = cfg["evolve"]
    n, m = int(ev["n"]), int(ev["m"])
    curves = sweep(cfg["field"], m, n, cfg["p_grid"],
                   grid_policy=cfg["grid_policy"], keep_psi=True, workers=workers)
    curve = curves[n - 1]
    grids = {str(m): _grid_entry(curve.grid)}

    amplitude = float(ev.get("amplitude", 1.0))
    if amplitude == 0.0:
        spec = WavePacketSpec(n=n, m=m, f=np.zeros(curve.p.size, dtype=complex),
                              support=(float(ev["p0"]), float(ev["p0"])),
                              interval_id=0,
                              interval=(float(curve.p[0]), float(curve.p[-1])))
    else:
        spec = gaussian_packet(curve, float(ev["p0"]), float(ev["sigma"]))
        if amplitude != 1.0:
            spec = WavePacketSpec(n=spec.n, m=spec.m, f=amplitude * spec.f,
                                  support=spec.support,
                                  interval_id=spec.interval_id,
                                  interval=spec.interval)

    x3e = ev.get("x3_extent")
    r_points = ev.get("r_points")
    r_grid = None
    if r_points:
        nodes = curve.grid.nodes
        r_grid = np.linspace(nodes[0], nodes[-1], int(r_points))

    method = ev.get("method", "quadrature")
    sp = None
    if method in ("stationary_phase", "both") and amplitude != 0.0:
        sp = build_stationary_phase(curve, spec.interval)

    outputs, norm_report = [], {}
    for t in ev["t_list"]:
        t = float(t)
        if x3e is not None:
            x3 = np.linspace(float(x3e[0]), float(x3e[1]), int(x3e[2]))
        elif amplitude == 0.0:
            x3 = np.linspace(-1.0, 1.0, 3)
        else:
            x3 = None
        runs = []
        if method in ("quadrature", "both"):
            runs.append(evolve_quadrature(spec, curve, r_grid=r_grid,
                                          x3_grid=x3, t=t))
        if method in ("stationary_phase", "both") and sp is not None:
            runs.append(evolve_stationary_phase(
                spec, curve, sp, r_grid=r_grid, x3_grid=x3, t=t,
                t_min=float(ev.get("t_min", _wp.DEFAULT_T_MIN)),
                edge_band=float(ev.get("edge_band", _wp.DEFAULT_EDGE_BAND))))
        for field_t in runs:
            stem = f"evolution_{field_t.method}_t{t:g}"
            write_snapshot(field_t, out / f"{stem}.bin")
            write_evolution_csv(field_t, out / f"{stem}.csv")
            outputs += [f"{stem}.bin", f"{stem}.csv"]
            norm_report[f"{field_t.method}_t{t:g}"] = field_t.norm()

        if ev.get("Q") is not None and t != 0 and method in ("quadrature", "both"):
            qlo, qhi = float(ev["Q"]["lo"]), float(ev["Q"]["hi"])
            table = asymptotic_velocity_check(
                spec, curve, lambda g: ((g > qlo) & (g < qhi)).astype(float), [t],
                r_grid=r_grid)
            norm_report[f"Q_t{t:g}"] = {
                "observed": table.rows[0].observed,
                "spectral": table.rows[0].spectral,
                "abs_diff": table.rows[0].abs_diff}

    if plots:
        outputs.append(_plot_script(out, "evolve",
                                    sorted(n_ for n_ in outputs if n_.endswith(".csv"))))
    extra = {"norms": norm_report, "packet_norm": spec.norm(curve.p)}
    return outputs, grids, extra


COMMANDS = {
    "dispersion": cmd_dispersion,
    "thresholds": cmd_thresholds,
    "velocity": cmd_velocity,
    "minima": cmd_minima,
    "evolve": cmd_evolve,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="magfiber",
        description="dispersion curves, thresholds, group velocities and "
                    "wave packets of axial magnetic fields")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--plots", action="store_true",
                        help="emit a plot script consuming the CSV outputs")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(Path(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or cfg.get("output_dir") or "."
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            outputs, grids, extra = COMMANDS[args.command](
                cfg, out, args.plots, max(args.threads, 1))
        seen = [f"{w.category.__name__}: {w.message}" for w in caught]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - mapped to a structured exit code
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 3

    _write_manifest(out, args.command, cfg, grids, seen, outputs, extra)
    if args.verbose:
        for name in sorted(outputs):
            print(out / name)
        print(out / "manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
