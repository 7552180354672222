"""Command-line front end: ``slmc <command> --config run.json [overrides]``.

Every command writes its outputs atomically into the output directory
(``--out``, else ``$SLMC_OUT``, else ``./slmc_out``) together with a
``manifest.json`` whose ``config`` block can be fed back through
``--config`` to reproduce the CSVs byte for byte. Each CSV starts with a
``# manifest_sha256=...`` comment line.

Exit codes: 0 ok, 1 configuration, 2 inconclusive classification,
3 truncation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .cauchy import (PayoffSpec, boundary_layer_report, defect_surface,
                     payoff_from_config, solve_raw, solve_transformed)
from .classification import classify
from .errors import ConfigError, SLMCError
from .grid import Grid1D
from .models import model_from_config, validate
from .montecarlo import (estimate_expectation, simulate_euler,
                         simulate_exact_bessel2d)
from .montecarlo import to_csv_rows as mc_csv_rows
from .numerics.special import exp_integral_e1
from .sturm_liouville import (compute_basic_solutions, growth_report,
                              to_csv_rows as sl_csv_rows, wronskian)

log = logging.getLogger("slmc")

COMMANDS = ("classify", "phi", "solve", "defect", "mc", "boundary-layer", "demo-nonuniqueness")

DEFAULT_GRIDS = {
    "inverse_bessel_2d": {"x_left": -12.0, "x_right": 6.0, "n": 2001},
    "qnv_no_root": {"x_left": -50.0, "x_right": 50.0, "n": 4001},
    "qnv": {"x_left": -50.0, "x_right": 50.0, "n": 4001},
}
FALLBACK_GRID = {"x_left": -12.0, "x_right": 12.0, "n": 2001}

DEFAULTS = {
    "lambda": 0.5,
    "T": 1.0,
    "scheme": "rannacher",
    "payoff": "identity",
    "seed": 20240601,
    "paths": 100000,
    "mc_steps": 2000,
    "x0": [0.0],
    "estimator": "euler",
    "side": "minus_inf",
    "output_times": 10,
    "times": [1e-4, 1e-3, 1e-2, 0.1, 1.0],
    "probe_x": [],
    "check_adequacy": True,
    "strict_side_bc": None,
    "antithetic": False,
}


# -- config -------------------------------------------------------------------

def _load_config(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in cfg and "command" in cfg:  # an emitted manifest
        cfg = cfg["config"]
    if "model" not in cfg:
        raise ConfigError("config needs a 'model' object")
    return cfg


def _resolve(cfg: dict, args: argparse.Namespace) -> dict:
    """Config with defaults and command-line overrides applied; this is the
    object stored in the manifest."""
    out = copy.deepcopy(DEFAULTS)
    out.update(copy.deepcopy(cfg))
    model_kind = cfg["model"].get("kind") if isinstance(cfg["model"], dict) else None
    given = out.get("grid") or {}
    grid = dict(given) if "nodes" in given else {**DEFAULT_GRIDS.get(model_kind, FALLBACK_GRID),
                                                 **given}
    for key, attr in (("x_left", "grid_left"), ("x_right", "grid_right"), ("n", "grid_n")):
        val = getattr(args, attr, None)
        if val is not None:
            grid[key] = val
    out["grid"] = grid
    for key, attr in (("lambda", "lam"), ("T", "T"), ("n_steps", "steps"), ("paths", "paths"),
                      ("scheme", "scheme"), ("seed", "seed")):
        val = getattr(args, attr, None)
        if val is not None:
            out[key] = val
    if getattr(args, "payoff", None) is not None:
        out["payoff"] = args.payoff
    return out


def _grid(cfg: dict) -> Grid1D:
    g = cfg["grid"]
    if "nodes" in g:
        return Grid1D.from_nodes(g["nodes"])
    extra = set(g) - {"x_left", "x_right", "n", "spacing", "strength"}
    if extra:
        raise ConfigError(f"unexpected grid fields: {sorted(extra)}")
    try:
        return Grid1D(float(g["x_left"]), float(g["x_right"]), int(g["n"]),
                      g.get("spacing", "uniform"), float(g.get("strength", 2.0)))
    except KeyError as exc:
        raise ConfigError(f"grid needs {exc}") from exc


def _output_times(cfg: dict, T: float):
    spec = cfg.get("output_times")
    if spec == "all":
        return None
    if isinstance(spec, int):
        return list(np.linspace(0.0, T, spec + 1))
    if isinstance(spec, list):
        return [float(v) for v in spec]
    raise ConfigError("output_times must be 'all', a count, or a list of times")


# -- output -------------------------------------------------------------------

def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return str(float(obj))
    return obj


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(header, rows, digest: str) -> str:
    buf = io.StringIO()
    buf.write(f"# manifest_sha256={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


class _Run:
    def __init__(self, command: str, cfg: dict, out_dir: Path):
        self.command = command
        self.cfg = cfg
        self.out = out_dir
        self.digest = hashlib.sha256(_canonical({"command": command, "config": cfg})
                                     .encode()).hexdigest()
        self.results: dict = {}
        self.files: list[str] = []

    def csv(self, name: str, header, rows) -> None:
        _atomic_write(self.out / name, _csv_text(header, rows, self.digest))
        self.files.append(name)

    def json(self, name: str, obj) -> None:
        _atomic_write(self.out / name, json.dumps(_clean(obj), indent=2, sort_keys=True,
                                                  default=_jsonable) + "\n")
        self.files.append(name)

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "config": self.cfg,
            "manifest_sha256": self.digest,
            "versions": {"slmc": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
            "results": self.results,
            "files": sorted(self.files + ["manifest.json"]),
        }
        self.json("manifest.json", manifest)


# -- commands -----------------------------------------------------------------

def cmd_classify(run: _Run) -> int:
    model = model_from_config(run.cfg["model"])
    klass = classify(model)
    report = {"model": model.description, **klass.to_dict()}
    run.results["classification"] = report
    print(json.dumps(_clean(report), indent=2, default=_jsonable))
    return 0


def cmd_phi(run: _Run) -> int:
    model = model_from_config(run.cfg["model"])
    grid = _grid(run.cfg)
    validate(model, grid)
    sol = compute_basic_solutions(model, float(run.cfg["lambda"]), grid,
                                  check_adequacy=bool(run.cfg.get("check_adequacy", True)))
    try:
        klass = classify(model)
    except SLMCError as exc:
        log.warning("classification unavailable for growth cross-check: %s", exc)
        klass = None
    growth = growth_report(sol, klass)
    W = wronskian(sol)
    interior = W[1:-1]
    header, rows = sl_csv_rows(sol)
    run.csv("phi.csv", header, rows)
    run.results.update(
        class_label=klass.label.value if klass else None,
        growth=growth.to_dict(), sl_adequacy=sol.adequacy,
        wronskian={"min": float(interior.min()), "max": float(interior.max())},
        grid_used=sol.grid.to_dict())
    print(json.dumps(_clean(growth.to_dict()), indent=2, default=_jsonable))
    return 0


def _solve_kwargs(cfg: dict) -> dict:
    kw = {}
    if cfg.get("strict_side_bc"):
        kw["strict_side_bc"] = cfg["strict_side_bc"]
    return kw


def cmd_solve(run: _Run) -> int:
    cfg = run.cfg
    model = model_from_config(cfg["model"])
    grid = _grid(cfg)
    validate(model, grid)
    T = float(cfg["T"])
    sol = solve_transformed(model, payoff_from_config(cfg["payoff"]), T, float(cfg["lambda"]),
                            grid, cfg.get("n_steps"), cfg["scheme"],
                            check_adequacy=bool(cfg.get("check_adequacy", True)),
                            output_times=_output_times(cfg, T), **_solve_kwargs(cfg))
    header, rows = sol.to_csv_rows()
    run.csv("solution.csv", header, rows)
    run.results.update(sol.manifest())
    return 0


def cmd_defect(run: _Run) -> int:
    cfg = run.cfg
    model = model_from_config(cfg["model"])
    grid = _grid(cfg)
    validate(model, grid)
    T = float(cfg["T"])
    kw = {}
    if cfg.get("strict_side_bc"):
        kw["strict_side_bc"] = cfg["strict_side_bc"]
    d = defect_surface(model, float(cfg["lambda"]), cfg["side"], T, grid, cfg.get("n_steps"),
                       output_times=_output_times(cfg, T), **kw)
    header, rows = d.to_csv_rows()
    run.csv("defect.csv", header, rows)
    run.results.update(d.manifest())
    return 0


def cmd_mc(run: _Run) -> int:
    cfg = run.cfg
    model = model_from_config(cfg["model"])
    x0 = [float(v) for v in np.atleast_1d(cfg["x0"])]
    t = float(cfg.get("t", cfg["T"]))
    H = payoff_from_config(cfg["payoff"])
    seed = int(cfg["seed"])
    paths = int(cfg["paths"])
    anti = bool(cfg.get("antithetic", False))
    if cfg["estimator"] == "exact_bessel2d":
        if model.kind != "inverse_bessel_2d":
            raise ConfigError("exact_bessel2d estimator needs the inverse_bessel_2d model")
        sample = simulate_exact_bessel2d(x0, t, paths, seed, antithetic=anti)
    elif cfg["estimator"] == "euler":
        sample = simulate_euler(model, x0, t, int(cfg["mc_steps"]), paths, seed, antithetic=anti)
    else:
        raise ConfigError(f"unknown estimator {cfg['estimator']!r}")
    ests = [estimate_expectation(sample, H, k) for k in range(len(x0))]
    header, rows = mc_csv_rows(ests, model.description)
    run.csv("mc.csv", header, rows)
    run.results["estimates"] = [e.to_dict() for e in ests]
    for e in ests:
        print(f"x0={e.x0:g} t={e.t:g} H={e.payoff}: mean={e.mean:.6f} "
              f"std_error={e.std_error:.2e} (n={e.n_paths}, flagged={e.n_flagged})")
    return 0


def cmd_boundary_layer(run: _Run) -> int:
    cfg = run.cfg
    model = model_from_config(cfg["model"])
    grid = _grid(cfg)
    validate(model, grid)
    times = [float(v) for v in cfg["times"]]
    T = float(cfg.get("T", max(times)))
    if max(times) > T:
        raise ConfigError("report times must not exceed T")
    sol = solve_transformed(model, PayoffSpec.identity(), T, float(cfg["lambda"]), grid,
                            cfg.get("n_steps"), cfg["scheme"],
                            check_adequacy=bool(cfg.get("check_adequacy", True)),
                            **_solve_kwargs(cfg))
    rep = boundary_layer_report(sol, times, cfg.get("probe_x", []))
    header, rows = rep.to_csv_rows()
    run.csv("boundary_layer.csv", header, rows)
    run.results["report"] = rep.to_dict()
    run.results["solve"] = sol.manifest()
    print(json.dumps(_clean(rep.to_dict()), indent=2, default=_jsonable))
    return 0


def cmd_demo_nonuniqueness(run: _Run) -> int:
    cfg = run.cfg
    model = model_from_config(cfg["model"])
    grid = _grid(cfg)
    validate(model, grid)
    H = payoff_from_config(cfg["payoff"])
    T = float(cfg["T"])
    times = _output_times(cfg, T)
    x = grid.nodes
    raw = solve_raw(model, H, T, grid, cfg.get("n_steps"), H(x[0]), H(x[-1]), cfg["scheme"],
                    output_times=times)
    tr = solve_transformed(model, H, T, float(cfg["lambda"]), grid, cfg.get("n_steps"),
                           cfg["scheme"], check_adequacy=bool(cfg.get("check_adequacy", True)),
                           output_times=times, **_solve_kwargs(cfg))
    run.csv("raw.csv", *raw.to_csv_rows())
    run.csv("transformed.csv", *tr.to_csv_rows())
    diff = np.interp(x, tr.x, tr.surfaces[-1]) - raw.surfaces[-1]
    i = int(np.argmax(np.abs(diff)))
    summary = {
        "T": T,
        "max_abs_difference": float(abs(diff[i])),
        "difference": "transformed minus raw at t = T",
        "argmax_x": float(x[i]),
        "raw_minus_payoff_max": float(np.max(np.abs(raw.surfaces[-1] - H(x)))),
    }
    if model.kind == "inverse_bessel_2d" and H.kind == "identity":
        probes = [v for v in (-8.0, -4.0, -2.0, 0.0, 1.0) if x[0] < v < x[-1]]
        summary["probes"] = [
            {"x": v, "difference": float(np.interp(v, x, diff)),
             "half_E1": float(0.5 * exp_integral_e1(math.exp(2 * v) / (2 * T)))}
            for v in probes]
    run.json("summary.json", summary)
    run.results.update(summary=summary, raw=raw.manifest(), transformed=tr.manifest())
    print(json.dumps(_clean(summary), indent=2, default=_jsonable))
    return 0


HANDLERS = {
    "classify": cmd_classify,
    "phi": cmd_phi,
    "solve": cmd_solve,
    "defect": cmd_defect,
    "mc": cmd_mc,
    "boundary-layer": cmd_boundary_layer,
    "demo-nonuniqueness": cmd_demo_nonuniqueness,
}


# -- entry point ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are configuration errors (exit 1)
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slmc", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run config or emitted manifest")
    p.add_argument("--out", help="output directory (default $SLMC_OUT or ./slmc_out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--grid-left", type=float)
    p.add_argument("--grid-right", type=float)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--payoff", help="identity | constant:C | call:K | abs")
    p.add_argument("--scheme", choices=("rannacher", "crank_nicolson", "implicit_euler"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out_dir = Path(args.out or os.environ.get("SLMC_OUT") or "slmc_out")
    try:
        cfg = _resolve(_load_config(args.config), args)
        run = _Run(args.command, cfg, out_dir)
        code = HANDLERS[args.command](run)
        run.finish()
        return code
    except SLMCError as exc:
        print(f"slmc {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (KeyError, TypeError, ValueError) as exc:
        print(f"slmc {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
