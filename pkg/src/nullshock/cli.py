"""Command-line driver.

Usage:
    nullshock solve-sigma
    nullshock tensors --metric frw --sigma 0.63442 --point 1,0.5,1.5707,0 --quantity einstein
    nullshock verify --suite match --perturb-gamma 0.01 --out report.json
    nullshock trajectory --grid 0,1,100 --out shock.csv
    nullshock match --lightlike --json
    nullshock mgs --grid 0.3,0.3,1

Exit codes: 0 every check passed, 1 a check failed, 2 bad usage or config.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from typing import Any

import numpy as np

from . import __version__
from . import exact_solutions as es
from . import lightlike_solution as ls
from . import shock_matching as sm
from . import surface_geometry as sg
from . import tensor_core as tc
from . import validation
from .errors import NullShockError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TOL_ENV = "NULLSHOCK_TOL_SCALE"

DEFAULT_TOLERANCES = {
    "field_equations": 1e-7,
    "ode": 1e-9,
    "ove": 1e-9,
    "divergence": 1e-5,
    "prop1": 1e-9,
    "prop2_round_trip": 1e-9,
    "mass_matching": 1e-10,
    "conservation": 1e-12,
    "lightlike": 1e-8,
    "transverse": 1e-10,
    "k_jump": 1e-6,
    "c2_jump": 1e-5,
    "mgs_form": 1e-6,
    "derivatives": 1e-6,
    "s_residual": 1e-12,
    "sigma2": 1e-4,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    G: float = 1.0
    eta: float = 1.0
    sigma: float | None = None
    sigma_bar: float | None = None
    lightlike: bool = False
    perturb_gamma: float = 0.0
    t0: float = 0.0
    rbar0: float = 1.0
    R0: float = 1.0
    B0: float = 1.0
    t_min: float = 0.0
    t_max: float = 1.0
    steps: int = 100
    tolerances: dict = field(default_factory=dict)
    out: str | None = None

    def validate(self) -> "RunConfig":
        optional = ("sigma", "sigma_bar")
        for name in ("G", "eta", "rbar0", "R0", "B0", "t0", "t_min", "t_max", "perturb_gamma") + optional:
            v = getattr(self, name)
            if v is None and name in optional:
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise UsageError(f"{name} must be a finite number")
        if not isinstance(self.lightlike, bool):
            raise UsageError("lightlike must be true or false")
        if not isinstance(self.tolerances, dict) or not all(
                isinstance(v, (int, float)) and v > 0 for v in self.tolerances.values()):
            raise UsageError("tolerances must map names to positive numbers")
        if self.out is not None and not isinstance(self.out, str):
            raise UsageError("out must be a path string")
        if self.G <= 0 or self.rbar0 <= 0 or self.R0 <= 0 or self.B0 <= 0:
            raise UsageError("G, rbar0, R0 and B0 must be positive")
        if self.eta == 0:
            raise UsageError("eta must be non-zero")
        if self.sigma is not None and not 0.0 <= self.sigma <= 1.0:
            raise UsageError(f"sigma must lie in [0, 1], got {self.sigma}")
        if self.sigma_bar is not None and not 0.0 < self.sigma_bar <= 1.0:
            raise UsageError(f"sigma_bar must lie in (0, 1], got {self.sigma_bar}")
        if isinstance(self.steps, bool) or not (isinstance(self.steps, int) and self.steps >= 1):
            raise UsageError("steps must be a positive integer")
        if not self.t_min <= self.t_max:
            raise UsageError("grid needs t_min <= t_max")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise UsageError(f"unknown tolerance keys: {sorted(unknown)}")
        return self

    def resolved_sigma_bar(self) -> float:
        if self.sigma_bar is not None:
            return self.sigma_bar
        if self.sigma is not None and not self.lightlike:
            return es.eos_H(self.sigma)
        return es.eos_H(ls.sigma2())

    def tolerance(self, key: str) -> float:
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key]) * tolerance_scale()

    def matched(self) -> sm.MatchedSolution:
        return sm.match(self.resolved_sigma_bar(), self.eta, self.t0, self.rbar0, self.R0, self.B0,
                        self.G, self.perturb_gamma)


def tolerance_scale() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw == "":
        return 1.0
    try:
        val = float(raw)
    except ValueError as exc:
        raise UsageError(f"{TOL_ENV} must be a positive number, got {raw!r}") from exc
    if not math.isfinite(val) or val <= 0:
        raise UsageError(f"{TOL_ENV} must be a positive number, got {raw!r}")
    return val


# --------------------------------------------------------------------------
# report document
# --------------------------------------------------------------------------


def _plain(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


class Report:
    """Ordered tree of checks; each entry carries value, tolerance and status."""

    def __init__(self, title: str):
        self.title = title
        self.checks: dict[str, dict] = {}
        self.values: dict[str, Any] = {}
        self.notes: list[str] = []

    def check(self, name: str, value: float, tol: float, mode: str = "below") -> bool:
        value = float(value)
        ok = abs(value) < tol if mode == "below" else abs(value) > tol
        self.checks[name] = {"value": value, "tolerance": tol, "mode": mode,
                             "status": "pass" if ok else "fail"}
        return ok

    def value(self, name: str, v: Any) -> None:
        self.values[name] = v

    @property
    def passed(self) -> bool:
        return all(c["status"] == "pass" for c in self.checks.values())

    def as_dict(self) -> dict:
        return _plain({
            "title": self.title,
            "passed": self.passed,
            "checks": self.checks,
            "values": self.values,
            "notes": self.notes,
        })


def dumps(doc: dict) -> str:
    return json.dumps(_plain(doc), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_output(path: str, text: str, argv: list[str]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        meta = {
            "argv": argv,
            "created": datetime.now(timezone.utc).isoformat(),
            "numpy": np.__version__,
            "python": platform.python_version(),
            "tolerance_scale": tolerance_scale(),
            "version": __version__,
        }
        with open(path + ".meta.json", "w", encoding="utf-8") as fh:
            fh.write(dumps(meta))
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

QUANTITIES = ("christoffel", "riemann", "ricci", "scalar", "einstein")
METRICS = ("minkowski", "frw", "tov")


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"{what} must be {n} comma-separated numbers") from exc
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what} must be {n} comma-separated finite numbers")
    return vals


def _metric_for(cfg: RunConfig, name: str) -> tc.MetricSpec:
    if name == "minkowski":
        return tc.minkowski()
    if name == "frw":
        sigma = cfg.sigma if cfg.sigma is not None else ls.sigma2()
        sb = es.eos_H(sigma)
        return es.frw_metric(es.FrwParameters(sigma, 0.0, cfg.R0, cfg.t0, cfg.rbar0, 1, cfg.G,
                                              gamma=es.gamma_of(sb, cfg.G)))
    return es.tov_metric(es.tov_solve(cfg.resolved_sigma_bar(), cfg.B0, cfg.rbar0, cfg.G))


def _labelled(data: np.ndarray, letters: str) -> dict[str, float]:
    out = {}
    for idx in np.ndindex(data.shape):
        v = float(data[idx])
        if v != 0.0:
            out[letters.format(*idx)] = v
    return out


def cmd_tensors(cfg: RunConfig, args) -> tuple[int, str]:
    if args.metric not in METRICS:
        raise UsageError(f"--metric must be one of {METRICS}")
    if args.quantity not in QUANTITIES:
        raise UsageError(f"--quantity must be one of {QUANTITIES}")
    m = _metric_for(cfg, args.metric)
    default = "0.5,1,1,0.5" if args.metric == "minkowski" else "0.5,0.8,1.2,0.3"
    x = np.array(_parse_floats(args.point or default, 4, "--point"))
    if args.quantity == "christoffel":
        comps = _labelled(tc.christoffel_array(m, x), "Gamma^{}_{}{}")
    elif args.quantity == "riemann":
        comps = _labelled(tc.riemann_array(m, x), "R^{}_{}{}{}")
    elif args.quantity == "ricci":
        comps = _labelled(tc.ricci_array(m, x), "R_{}{}")
    elif args.quantity == "einstein":
        comps = _labelled(tc.einstein_array(m, x), "G_{}{}")
    else:
        comps = {"R": tc.ricci_scalar(m, x)}
    doc = {"metric": args.metric, "point": x, "quantity": args.quantity, "components": comps}
    if args.json:
        return EXIT_OK, dumps(doc)
    lines = [f"{args.metric} {args.quantity} at {','.join(repr(float(v)) for v in x)}"]
    if not comps or all(v == 0.0 for v in comps.values()):
        lines.append("all components are zero")
    else:
        lines += [f"  {k} = {v!r}" for k, v in comps.items()]
    return EXIT_OK, "\n".join(lines) + "\n"


def _suite_frw(cfg: RunConfig, rep: Report) -> None:
    ms = cfg.matched()
    fp = ms.frw
    m = es.frw_metric(fp)
    lo = min(cfg.t_min, cfg.t_max)
    grid = es.interior_grid((lo, cfg.t_max), (0.1, 2.0), 10)
    rep.check("frw.field_equations", es.validate_field_equations(
        m, lambda x: es.frw_fluid(fp, x), grid, cfg.G), cfg.tolerance("field_equations"))
    worst = max(max(abs(v) for v in es.frw_ode_residuals(fp, t))
                for t in np.linspace(lo, cfg.t_max, 100))
    rep.check("frw.ode_residuals", worst, cfg.tolerance("ode"))
    div = 0.0
    for x in grid[::7]:
        sampler = lambda y: tc.stress_energy(es.frw_fluid(fp, y), m, y)  # noqa: E731
        d = tc.covariant_divergence(sampler, m, x, h=1e-3)
        div = max(div, float(np.abs(d).max()))
    rep.check("frw.divergence_T", div, cfg.tolerance("divergence"))
    rep.check("frw.derivatives_vs_fd", max(validation.derivative_agreement(m, grid[37]).values()),
              cfg.tolerance("derivatives"))


def _suite_tov(cfg: RunConfig, rep: Report) -> None:
    tp = es.tov_solve(cfg.resolved_sigma_bar(), cfg.B0, cfg.rbar0, cfg.G)
    m = es.tov_metric(tp)
    grid = es.interior_grid((cfg.t_min, cfg.t_max), (0.1, 2.0), 10)
    rep.check("tov.field_equations", es.validate_field_equations(
        m, lambda x: es.tov_fluid(tp, x), grid, cfg.G), cfg.tolerance("field_equations"))
    worst = max(abs(v) for r in np.linspace(0.1, 2.0, 50)
                for k, v in es.tov_structure_residuals(tp, r).items())
    rep.check("tov.structure_residuals", worst, cfg.tolerance("ove"))
    rep.check("tov.derivatives_vs_fd", max(validation.derivative_agreement(m, grid[37]).values()),
              cfg.tolerance("derivatives"))


def _match_times(cfg: RunConfig, n: int = 20) -> np.ndarray:
    return np.linspace(cfg.t_min, cfg.t_max, n)


def _suite_match(cfg: RunConfig, rep: Report) -> None:
    ms = cfg.matched()
    ts = _match_times(cfg)
    rep.check("match.prop1", max(max(sm.prop1_identities(ms, t).values()) for t in ts),
              cfg.tolerance("prop1"))
    rep.check("match.prop2_round_trip", max(sm.jacobian_round_trip(ms, t) for t in ts),
              cfg.tolerance("prop2_round_trip"))
    rep.check("match.mass_matching", max(abs(ms.mass_mismatch(t)) for t in ts),
              cfg.tolerance("mass_matching"))
    rep.check("match.conservation_residual",
              max(abs(sm.conservation_jump(ms, t)) for t in ts), cfg.tolerance("conservation"))
    rep.check("match.conservation_normalized",
              max(abs(sm.conservation_jump(ms, t, normalized=True)) for t in ts),
              cfg.tolerance("conservation"))
    rep.check("match.lightlike_residual", max(abs(sm.lightlike_residual(ms, t)) for t in ts),
              cfg.tolerance("lightlike"))
    rep.check("match.transverse_jumps",
              max(max(abs(v) for v in sm.transverse_jumps(ms, t).values()) for t in ts),
              cfg.tolerance("transverse"))
    rep.value("sigma", ms.sigma)
    rep.value("sigma_bar", ms.sigma_bar)
    rep.value("perturb_gamma", ms.perturb_gamma)
    rep.notes.extend(ms.notes)


def _suite_jumps(cfg: RunConfig, rep: Report) -> None:
    ms = cfg.matched()
    t = 0.5 * (cfg.t_min + cfg.t_max)
    chart = sm.build_chart(ms, t)
    jr = sm.full_jump_report(ms, t, chart)
    form = sg.mgs_form_residuals(chart)
    rep.check("jumps.mgs_g01_minus_eta", form["g01_minus_eta"], cfg.tolerance("mgs_form"))
    rep.check("jumps.mgs_g11", form["g11"], cfg.tolerance("mgs_form"))
    rep.check("jumps.k_jump_norm", jr.k_jump_norm, cfg.tolerance("k_jump"))
    rep.check("jumps.c2_jump_22", jr.c2_jumps[0], cfg.tolerance("c2_jump"))
    rep.check("jumps.c2_jump_33", jr.c2_jumps[1], cfg.tolerance("c2_jump"))
    rep.value("jump_report", jr.as_dict())
    rep.value("t", t)


def _suite_lightlike(cfg: RunConfig, rep: Report) -> None:
    res = ls.solve_lightlike()
    rep.check("lightlike.s_residual", res.residual, cfg.tolerance("s_residual"))
    rep.check("lightlike.sigma2_vs_reported", res.root - ls.REPORTED_SIGMA2, cfg.tolerance("sigma2"))
    k = ls.characteristics(res.root)
    rep.check("lightlike.sqrt_sigma2_vs_reported", k.lambda_frw_plus - ls.REPORTED_SQRT_SIGMA2,
              cfg.tolerance("sigma2"))
    # subluminal characteristics: the excess over 1 must vanish
    rep.check("lightlike.characteristics_subluminal",
              max(abs(k.lambda_tov_plus), abs(k.lambda_tov_minus), k.lambda_frw_plus) >= 1.0, 0.5)
    rep.value("lambda_tov_plus_evaluated", k.lambda_tov_plus)
    rep.value("lambda_tov_plus_reported", k.lambda_tov_plus_reported)
    rep.value("lax", ls.lax_classify(res.root).classification.value)


SUITES = {
    "frw": _suite_frw,
    "tov": _suite_tov,
    "match": _suite_match,
    "jumps": _suite_jumps,
    "lightlike": _suite_lightlike,
}


def cmd_verify(cfg: RunConfig, args) -> tuple[int, str]:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if any(n not in SUITES for n in names):
        raise UsageError(f"--suite must be one of {sorted(SUITES) + ['all']}")
    rep = Report(f"verify {args.suite}")
    for n in names:
        SUITES[n](cfg, rep)
    text = dumps(rep.as_dict())
    code = EXIT_OK if rep.passed else EXIT_FAIL
    if cfg.out:
        write_output(cfg.out, text, sys.argv)
    if args.json or not cfg.out:
        return code, text
    lines = [f"{name}: {c['status']} {c['value']!r} (tol {c['tolerance']!r})" for name, c in rep.checks.items()]
    return code, "\n".join(lines) + "\n"


def cmd_solve_sigma(cfg: RunConfig, args) -> tuple[int, str]:
    res = ls.solve_lightlike()
    comp = ls.subluminal_comparison()
    sb = es.eos_H(res.root)
    doc = {
        "sigma2": res.root,
        "sigma_bar2": sb,
        "s_residual": res.residual,
        "iterations": res.iterations,
        "smoller_temple": ls.SMOLLER_TEMPLE_SIGMA,
        "comparison": comp,
    }
    ok = abs(res.residual) <= cfg.tolerance("s_residual")
    text = (
        f"sigma2={res.root!r}\n"
        f"sigma_bar2={sb!r}\n"
        f"s_residual={res.residual!r}\n"
        f"smoller_temple={ls.SMOLLER_TEMPLE_SIGMA!r}\n"
        + dumps(doc)
    )
    if cfg.out:
        write_output(cfg.out, dumps(doc), sys.argv)
    return (EXIT_OK if ok else EXIT_FAIL), text


def cmd_match(cfg: RunConfig, args) -> tuple[int, str]:
    ms = cfg.matched()
    t = cfg.t_min
    doc = {
        "sigma": ms.sigma,
        "sigma_bar": ms.sigma_bar,
        "gamma": ms.tov.gamma,
        "A": ms.tov.A,
        "eta": ms.eta,
        "perturb_gamma": ms.perturb_gamma,
        "t": t,
        "rbar": ms.rbar(t),
        "r": ms.r(t),
        "rho_over_rho_bar": ms.rho(t) / ms.rho_bar(t),
        "prop1": sm.prop1_identities(ms, t),
        "prop2": sm.prop2_partials(ms, t),
        "conservation_normalized": sm.conservation_jump(ms, t, normalized=True),
        "lightlike_residual": sm.lightlike_residual(ms, t),
        "noncharacteristic_margin": ms.noncharacteristic_margin(t),
        "notes": list(ms.notes),
    }
    text = dumps(doc)
    if cfg.out:
        write_output(cfg.out, text, sys.argv)
    return EXIT_OK, text


def trajectory_csv(rows: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ls.TRAJECTORY_COLUMNS)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_trajectory(cfg: RunConfig, args) -> tuple[int, str]:
    ms = cfg.matched()
    rows = ls.trajectory(ms, (cfg.t_min, cfg.t_max), cfg.steps)
    text = trajectory_csv(rows)
    if cfg.out:
        write_output(cfg.out, text, sys.argv)
        return EXIT_OK, f"wrote {len(rows)} rows to {cfg.out}\n"
    return EXIT_OK, text


def cmd_mgs(cfg: RunConfig, args) -> tuple[int, str]:
    rep = Report("mgs")
    _suite_jumps(cfg, rep)
    text = dumps(rep.as_dict())
    if cfg.out:
        write_output(cfg.out, text, sys.argv)
    return (EXIT_OK if rep.passed else EXIT_FAIL), text


COMMANDS = {
    "tensors": cmd_tensors,
    "verify": cmd_verify,
    "solve-sigma": cmd_solve_sigma,
    "match": cmd_match,
    "trajectory": cmd_trajectory,
    "mgs": cmd_mgs,
}


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig keys")
    common.add_argument("--out", help="output file (a .meta.json sidecar is written next to it)")
    common.add_argument("--json", action="store_true", help="print JSON to stdout")
    common.add_argument("--sigma", type=float)
    common.add_argument("--sigma-bar", dest="sigma_bar", type=float)
    common.add_argument("--lightlike", action="store_true", help="use sigma2 with s(sigma2) = 1")
    common.add_argument("--perturb-gamma", dest="perturb_gamma", type=float)
    common.add_argument("--grid", help="t_min,t_max,steps")
    common.add_argument("--eta", type=float)

    p = _Parser(prog="nullshock", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    t = sub.add_parser("tensors", parents=[common])
    t.add_argument("--metric", default="minkowski")
    t.add_argument("--point")
    t.add_argument("--quantity", default="riemann")
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--suite", default="all")
    for name in ("solve-sigma", "match", "trajectory", "mgs"):
        sub.add_parser(name, parents=[common])
    return p


CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = replace(cfg, **raw)
        except TypeError as exc:
            raise UsageError(str(exc)) from exc
    overrides = {}
    for key in ("sigma", "sigma_bar", "perturb_gamma", "eta", "out"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if args.lightlike:
        overrides["lightlike"] = True
    if args.grid:
        tmin, tmax, steps = _parse_floats(args.grid, 3, "--grid")
        if steps != int(steps):
            raise UsageError("--grid steps must be an integer")
        overrides.update(t_min=tmin, t_max=tmax, steps=int(steps))
    cfg = replace(cfg, **overrides)
    if isinstance(cfg.steps, float) and cfg.steps == int(cfg.steps):
        cfg.steps = int(cfg.steps)
    tolerance_scale()
    return cfg.validate()


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        cfg = load_config(args)
        code, text = COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"nullshock: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NullShockError as exc:
        print(f"nullshock: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
