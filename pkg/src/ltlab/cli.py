"""Command-line front end.

Every run resolves a RunConfig from built-in defaults, then an optional
``--config`` JSON file, then explicit flags.  It writes ``<name>.report.json``
(sorted keys, no timestamps) and, with ``--csv``, ``<name>.csv`` into
``--out``.  Failures print one JSON line {"error", "code", "message"} to
stderr and exit with 2 (configuration), 3 (I/O) or 4 (numeric failure).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ltlab import __version__, grid_core, io
from ltlab.analytic_constants import all_constants

EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 2, 3, 4

COMMANDS = ("gn", "hgn", "constants", "cover", "exclusion", "quotient", "sweep-lambda",
            "sweep-delta", "certify", "local-constant", "lup1-constant")


class ConfigError(Exception):
    pass


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    s: float = 1.0
    d: int = 1
    delta: float = 0.1
    epsilon_inv: int | None = None
    lam: float | None = None
    lams: list = field(default_factory=lambda: [1.0, 10.0, 100.0, 1000.0])
    deltas: list = field(default_factory=lambda: [0.3, 0.2, 0.1, 0.05])
    points: int = 2048
    box: float = 40.0
    restarts: int = 3
    max_iters: int = 2000
    tol_rel: float = 1e-11
    hardy: bool = False
    max_level: int | None = None
    input: str | None = None
    calibration: str | None = None
    save_calibration: str | None = None
    save_minimizer: str | None = None
    cubes: str = "0"
    origin: str | None = None
    cells: int | None = None
    modes: int | None = None
    gn_constant: float | None = None
    out: str = "."
    name: str | None = None
    csv: bool = False
    seed: int = 0
    threads: int = 1

    def resolved(self) -> dict:
        out = dataclasses.asdict(self)
        for k in ("out", "name", "threads"):
            out.pop(k)
        return out


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _is_pow2(n):
    return n >= 8 and n & (n - 1) == 0


def validate(cfg: RunConfig):
    """Range checks done before any computation."""
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if not cfg.s > 0:
        raise ConfigError("s must be positive")
    if cfg.d not in (1, 2, 3):
        raise ConfigError("d must be 1, 2 or 3")
    if not 0 < cfg.delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    if any(not 0 < x < 1 for x in cfg.deltas):
        raise ConfigError("every sweep delta must lie in (0, 1)")
    if cfg.epsilon_inv is None:
        cfg.epsilon_inv = 3 if cfg.hardy else 2
    if int(cfg.epsilon_inv) != cfg.epsilon_inv or cfg.epsilon_inv < 2:
        raise ConfigError("eps-inv must be an integer >= 2")
    if cfg.hardy and cfg.epsilon_inv % 2 == 0:
        raise ConfigError("hardy mode requires an odd eps-inv")
    if cfg.hardy and not 2 * cfg.s < cfg.d and cfg.command not in ("cover",):
        raise ConfigError("hardy mode requires 2s < d")
    if cfg.lam is not None and cfg.lam < 0:
        raise ConfigError("lambda must be nonnegative")
    if any(x < 0 for x in cfg.lams):
        raise ConfigError("lambdas must be nonnegative")
    if not _is_pow2(cfg.points):
        raise ConfigError("points must be a power of two >= 8")
    if cfg.command in ("gn", "hgn") and cfg.points**cfg.d > 1 << 24:
        raise ConfigError("grid too large for this dimension; lower --points")
    if not cfg.box > 0:
        raise ConfigError("box length must be positive")
    if cfg.restarts < 1 or cfg.max_iters < 1 or not cfg.tol_rel > 0:
        raise ConfigError("optimizer settings out of range")
    if cfg.max_level is not None and cfg.max_level < 1:
        raise ConfigError("max-level must be at least 1")
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    if cfg.command in ("cover", "exclusion", "quotient", "sweep-lambda", "certify") \
            and not cfg.input:
        raise ConfigError(f"{cfg.command} needs --input")
    if cfg.command == "hgn" and not 2 * cfg.s < cfg.d:
        raise ConfigError("hgn requires 2s < d")


def _parse_cubes(text: str, d: int):
    try:
        cubes = [tuple(int(v) for v in part.split(",")) for part in text.split(";") if part]
    except ValueError:
        raise ConfigError(f"malformed cube list {text!r}") from None
    if not cubes or any(len(c) != d for c in cubes):
        raise ConfigError("each cube needs d integer coordinates")
    return cubes


# ------------------------------------------------------------------- output

def _to_jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Fraction):
        return float(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_to_jsonable, allow_nan=False)


def _write_outputs(cfg: RunConfig, report: dict, rows=None, header=None) -> Path:
    out = Path(cfg.out)
    name = cfg.name or cfg.command
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{name}.report.json"
        path.write_text(dumps(report) + "\n")
        if cfg.csv and rows is not None:
            with open(out / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for r in rows:
                    w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x
                                for x in r])
    except OSError as exc:
        raise InputError(f"cannot write outputs: {exc}") from None
    return path


def _load(loader, path):
    try:
        return loader(path)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _calibration(cfg: RunConfig):
    from ltlab.certifier import Calibration

    if cfg.calibration:
        cal = _load(Calibration.load, cfg.calibration)
        try:
            cal.check(cfg.s, cfg.d)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return cal
    return Calibration(cfg.s, cfg.d, gn_constant=cfg.gn_constant, seed=cfg.seed)


def _save_calibration(cfg, cal):
    if cfg.save_calibration:
        try:
            cal.save(cfg.save_calibration)
        except OSError as exc:
            raise InputError(f"cannot write calibration: {exc}") from None


# ----------------------------------------------------------------- commands

def _opt(cfg):
    from ltlab.gn_solver import OptimizerParams

    return OptimizerParams(max_iters=cfg.max_iters, tol_rel=cfg.tol_rel,
                           restarts=cfg.restarts, seed=cfg.seed)


def cmd_gn(cfg: RunConfig, hardy=False):
    from ltlab.grid_core import BoxSpec
    from ltlab.gn_solver import minimize_gn, minimize_hgn

    box = BoxSpec.cube(cfg.d, cfg.box, cfg.points)
    res = (minimize_hgn if hardy else minimize_gn)(cfg.s, cfg.d, box, _opt(cfg))
    if cfg.save_minimizer:
        try:
            io.save_grid(cfg.save_minimizer, res.minimizer)
        except OSError as exc:
            raise InputError(f"cannot write minimizer: {exc}") from None
    rows = list(enumerate(res.trace))
    return {"result": res.to_json()}, rows, ["iteration", "quotient"]


def cmd_constants(cfg: RunConfig):
    return {"constants": all_constants()}, None, None


def cmd_cover(cfg: RunConfig):
    from ltlab.covering import CoveringParams, decompose, verify

    _, rho = _load(io.load_density_or_state, cfg.input)
    dec = decompose(rho, CoveringParams(cfg.epsilon_inv, cfg.delta, cfg.max_level,
                                        hardy_mode=cfg.hardy))
    rows = []
    for n, rec in sorted(dec.levels.items()):
        for c, m in zip(rec.g0, rec.g0_masses):
            rows.append([n, "g0", " ".join(map(str, c.index)), m])
        for K in rec.light + rec.heavy:
            for c in K.cubes:
                rows.append([n, K.kind, " ".join(map(str, c.index)), K.closure_mass])
    return ({"decomposition": dec.to_json(), "checks": verify(dec, rho)}, rows,
            ["level", "kind", "index", "mass"])


def cmd_exclusion(cfg: RunConfig):
    from ltlab.covering import CoveringParams, decompose
    from ltlab.exclusion import build_ball_families, exclusion_lower_bound, scale_terms
    from ltlab.nbody import interaction_energy

    state, rho = _load(io.load_density_or_state, cfg.input)
    dec = decompose(rho, CoveringParams(cfg.epsilon_inv, cfg.delta, cfg.max_level,
                                        hardy_mode=cfg.hardy))
    fams = build_ball_families(dec, rho, cfg.delta)
    terms = scale_terms(fams, cfg.s)
    rep = {"families": fams.to_json(), "scale_terms": terms,
           "lower_bound": exclusion_lower_bound(fams, cfg.s)}
    if state is not None and state.N > 1:
        rep["interaction"] = interaction_energy(state, cfg.s)
    rows = [[f.level, f.radius, f.overlap, t] for f, t in zip(fams.families, terms)]
    return rep, rows, ["level", "radius", "overlap", "contribution"]


def _state(cfg):
    state, _ = _load(io.load_density_or_state, cfg.input)
    if state is None:
        raise InputError(f"{cfg.input} is not a state file")
    return state


def cmd_quotient(cfg: RunConfig, sweep=False):
    from ltlab.nbody import QuotientParams, lt_quotient, quotient_parts

    state = _state(cfg)
    lams = cfg.lams if (sweep or cfg.lam is None) else [cfg.lam]
    parts = quotient_parts(state, QuotientParams(cfg.s, 0.0, cfg.hardy))
    rows = [[lam, lt_quotient(state, QuotientParams(cfg.s, lam, cfg.hardy), parts)]
            for lam in lams]
    return {"parts": parts, "table": rows}, rows, ["lambda", "quotient"]


def cmd_sweep_delta(cfg: RunConfig):
    from ltlab.certifier import sweep_delta

    cal = _calibration(cfg)
    shapes = [_parse_cubes(cfg.cubes, cfg.d)]
    rows = [list(r) for r in sweep_delta(cfg.deltas, cfg.s, cfg.d, cal, cfg.epsilon_inv,
                                         shapes)]
    _save_calibration(cfg, cal)
    return ({"table": rows, "calibration": cal.to_json()}, rows,
            ["delta", "lambda_star", "factor"])


def cmd_certify(cfg: RunConfig):
    from ltlab.certifier import CertifyParams, certify

    state, rho = _load(io.load_density_or_state, cfg.input)
    cal = _calibration(cfg)
    rep = certify(state if state is not None else rho,
                  CertifyParams(cfg.s, cfg.delta, cfg.epsilon_inv, cfg.lam, cfg.hardy,
                                cfg.max_level, cfg.d), cal)
    _save_calibration(cfg, cal)
    rows = []
    for n, lv in rep.ledger.items():
        for kind in ("uncertainty_I", "uncertainty_II"):
            for e in lv[kind]:
                rows.append([int(n), kind, e["positive"], e["negative"], e["credit"]])
    return ({"certificate": rep.to_json()}, rows,
            ["level", "kind", "positive", "negative", "credit"])


def cmd_local_constant(cfg: RunConfig):
    from ltlab.gn_solver import estimate_local_constant, unit_cluster_masks
    from ltlab.certifier import Calibration

    cubes = _parse_cubes(cfg.cubes, cfg.d)
    origin = _parse_cubes(cfg.origin, cfg.d)[0] if cfg.origin else None
    cal = _calibration(cfg) if cfg.calibration else Calibration(
        cfg.s, cfg.d, gn_constant=cfg.gn_constant, seed=cfg.seed)
    gn = cal.ensure_hgn() if origin is not None else cal.ensure_gn()
    box, om, omt = unit_cluster_masks(cubes, cfg.d, cells_per_side=cfg.cells or 16,
                                      origin_cube=origin)
    res = estimate_local_constant(cfg.s, cfg.delta, om, omt, _opt(cfg), gn_constant=gn,
                                  modes=cfg.modes or 8, hardy_center=origin is not None)
    rows = [[i, v] for i, v in enumerate(res.restart_values)]
    return ({"result": res.to_json(), "gn_constant": gn, "calibration": cal.to_json()}, rows,
            ["start", "deficit"])


def cmd_lup1_constant(cfg: RunConfig):
    from ltlab.gn_solver import estimate_lup1_constant

    res = estimate_lup1_constant(cfg.s, cfg.d, _opt(cfg), cells_per_side=cfg.cells or 32,
                                 modes=cfg.modes or 6, hardy=cfg.hardy)
    rows = [[i, v] for i, v in enumerate(res.restart_values)]
    return {"result": res.to_json()}, rows, ["start", "constant"]


_DISPATCH = {
    "gn": cmd_gn,
    "hgn": lambda c: cmd_gn(c, hardy=True),
    "constants": cmd_constants,
    "cover": cmd_cover,
    "exclusion": cmd_exclusion,
    "quotient": cmd_quotient,
    "sweep-lambda": lambda c: cmd_quotient(c, sweep=True),
    "sweep-delta": cmd_sweep_delta,
    "certify": cmd_certify,
    "local-constant": cmd_local_constant,
    "lup1-constant": cmd_lup1_constant,
}


def run(cfg: RunConfig) -> Path:
    """Validate, dispatch and write outputs; returns the report path."""
    validate(cfg)
    grid_core.set_workers(cfg.threads)
    np.random.seed(cfg.seed)
    body, rows, header = _DISPATCH[cfg.command](cfg)
    report = {"schema": 1, "version": __version__, "command": cfg.command,
              "config": cfg.resolved(), **body}
    return _write_outputs(cfg, report, rows, header)


# ------------------------------------------------------------------ parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ltlab", description="strong-coupling Lieb-Thirring laboratory")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    common = _Parser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--config")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int)
    g.add_argument("--out")
    g.add_argument("--name")
    g.add_argument("--csv", action="store_const", const=True)
    g.add_argument("--calibration")
    g.add_argument("--s", type=float)
    g.add_argument("--d", type=int)
    g.add_argument("--delta", type=float)
    g.add_argument("--eps-inv", dest="epsilon_inv", type=int)
    g.add_argument("--lam", "--lambda", dest="lam", type=float)
    g.add_argument("--lams", type=float, nargs="+")
    g.add_argument("--deltas", type=float, nargs="+")
    g.add_argument("--hardy", action="store_const", const=True)
    g.add_argument("--max-level", type=int)
    g.add_argument("--input")
    g.add_argument("--points", type=int)
    g.add_argument("--box", type=float)
    g.add_argument("--restarts", type=int)
    g.add_argument("--max-iters", type=int)
    g.add_argument("--tol", dest="tol_rel", type=float)
    g.add_argument("--cubes")
    g.add_argument("--origin")
    g.add_argument("--cells", type=int)
    g.add_argument("--modes", type=int)
    g.add_argument("--gn-constant", type=float)
    g.add_argument("--save-calibration")
    g.add_argument("--save-minimizer")
    for c in COMMANDS:
        sub.add_parser(c, parents=[common])
    return p


def resolve(argv) -> RunConfig:
    """defaults < --config file < flags."""
    ns = vars(build_parser().parse_args(argv))
    merged = {}
    if ns.get("config"):
        try:
            with open(ns["config"]) as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise InputError(f"no such file: {ns['config']}") from None
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        for k, v in file_cfg.items():
            key = k.replace("-", "_")
            key = {"eps_inv": "epsilon_inv", "lambda": "lam", "tol": "tol_rel"}.get(key, key)
            if key not in _FIELDS or key == "command":
                raise ConfigError(f"unknown config key {k!r}")
            merged[key] = v
    for k, v in ns.items():
        if k != "config" and v is not None:
            merged[k] = v
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "code": code, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve(argv)
        path = run(cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except InputError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, "numeric", str(exc))
    if cfg.command == "constants":
        print(dumps(all_constants()))
    else:
        print(json.dumps({"report": str(path)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
