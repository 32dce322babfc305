"""Scenario configuration, presets and run orchestration.

Configs are YAML documents with a fixed set of sections::

    name: my_run
    base: fig2_panel1          # optional: start from a preset
    domain:      {bounds: [-5, 5, -5, 5], nx: 60, ny: 60, boundary: neumann}
    time:        {T: 10, nt: 50}
    physics:     {epsilon: 0.001, alpha: 0.1, drift_scaling: true}
    attrition:   {lambda_a: 14, sigma_a: 5, lambda_h: 1, sigma_h: 5}
    populations:
      defenders: {center: [-3, -3], variance: 0.85}
      attackers: {center: [-4, 4], variance: 0.85}
      hvu:       {center: [1, 1], variance: 0.1}
    attacker:    {target: [1, 1], gain: 0.4}
    solver:      {eps_ot: 0.1, sinkhorn_tol: 1.0e-6, sinkhorn_max_iter: 2000,
                  damping: 0.5, max_outer: 100, residual_tol: 1.0e-4, cfl: 0.5}
    output:      {dir: runs/my_run, trace: true, snapshots: true,
                  residuals: true, bounds: true, snapshot_stride: 1}

Unknown keys are rejected and every error names the offending key and,
when it came from a file, its line.
"""

from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from . import agents
from .attrition import AttritionParams
from .errors import ConfigParseError, ConfigurationError, SolverDiagnosticError
from .grid import make_grid
from .io import write_columns, write_field
from .mfg import GaussianSpec, MfgConfig, MfgSolution, PicardParams, picard_solve, verify_bounds
from .mfg.bounds import BoundsReport
from .ot import SinkhornParams, distance_sweep

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_BOUNDS = 3
EXIT_CONFIG = 4
EXIT_SOLVER = 5

RESOLVED_NAME = "resolved_config.yaml"
FLOWS_NAME = "flows.npz"


# ---------------------------------------------------------------------------
# schema


@dataclass(frozen=True)
class Key:
    kind: str
    default: Any = None
    check: Callable[[Any], bool] | None = None
    rule: str = ""


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


MFG_SCHEMA: dict[str, dict[str, Key]] = {
    "domain": {
        "bounds": Key("bounds", [-5.0, 5.0, -5.0, 5.0], lambda b: b[0] < b[1] and b[2] < b[3], "x_min < x_max and y_min < y_max"),
        "nx": Key("int", 60, lambda v: v >= 4, ">= 4"),
        "ny": Key("int", 60, lambda v: v >= 4, ">= 4"),
        "boundary": Key("str", "neumann", lambda v: v in ("neumann", "periodic"), "one of neumann, periodic"),
    },
    "time": {
        "T": Key("float", 10.0, _positive, "> 0"),
        "nt": Key("int", 50, lambda v: v >= 2, ">= 2"),
    },
    "physics": {
        "epsilon": Key("float", 0.001, _positive, "> 0"),
        "alpha": Key("float", 0.1, lambda v: 0 < v < 1, "in the open interval (0, 1)"),
        "drift_scaling": Key("bool", True),
    },
    "attrition": {
        "lambda_a": Key("float", 14.0, _nonneg, ">= 0"),
        "sigma_a": Key("float", 5.0, _positive, "> 0"),
        "lambda_h": Key("float", 1.0, _nonneg, ">= 0"),
        "sigma_h": Key("float", 5.0, _positive, "> 0"),
    },
    "populations": {
        "defenders": Key("gaussian", {"center": [-3.0, -3.0], "variance": 0.85}),
        "attackers": Key("gaussian", {"center": [-4.0, 4.0], "variance": 0.85}),
        "hvu": Key("mixture", [{"center": [1.0, 1.0], "variance": 0.1, "weight": 1.0}]),
    },
    "attacker": {
        "target": Key("point", [1.0, 1.0]),
        "gain": Key("float", 0.4, _nonneg, ">= 0"),
    },
    "solver": {
        "eps_ot": Key("float", 0.1, _positive, "> 0"),
        "sinkhorn_tol": Key("float", 1e-6, _positive, "> 0"),
        "sinkhorn_max_iter": Key("int", 2000, lambda v: v >= 1, ">= 1"),
        "damping": Key("float", 0.5, lambda v: 0 < v <= 1, "in (0, 1]"),
        "max_outer": Key("int", 100, lambda v: v >= 1, ">= 1"),
        "residual_tol": Key("float", 1e-4, _positive, "> 0"),
        "cfl": Key("float", 0.5, lambda v: 0 < v <= 1, "in (0, 1]"),
    },
    "output": {
        "dir": Key("str", None),
        "trace": Key("bool", True),
        "snapshots": Key("bool", True),
        "residuals": Key("bool", True),
        "bounds": Key("bool", True),
        "snapshot_stride": Key("int", 1, lambda v: v >= 1, ">= 1"),
    },
}

_MOTION_KINDS = ("stationary", "constant", "homing")

ORACLE_SCHEMA: dict[str, dict[str, Key]] = {
    "agents": {
        "attackers": Key("points", [[0.0, 0.0]]),
        "defenders": Key("points", [[2.0, 0.0]]),
        "hvu": Key("point", [0.0, 0.0]),
        "attacker_motion": Key("motion", {"kind": "stationary"}),
        "defender_motion": Key("motion", {"kind": "stationary"}),
    },
    "attrition": {
        "lambda_a": Key("float", 1.0, _nonneg, ">= 0"),
        "sigma_a": Key("float", 5.0, _positive, "> 0"),
        "lambda_h": Key("float", 0.0, _nonneg, ">= 0"),
        "sigma_h": Key("float", 5.0, _positive, "> 0"),
    },
    "time": {
        "T": Key("float", 5.0, _positive, "> 0"),
        "dt": Key("float", 0.1, _positive, "> 0"),
    },
    "simulation": {
        "noise": Key("float", 0.0, _nonneg, ">= 0"),
        "seed": Key("int", 0),
        "dirac_check": Key("bool", True),
    },
    "output": {"dir": Key("str", None)},
}

SWEEP_SCHEMA: dict[str, dict[str, Key]] = {
    "sweep": {
        "mode": Key("str", "variance", lambda v: v in ("translation", "variance"), "one of translation, variance"),
        "n": Key("int", 100, lambda v: v >= 1, ">= 1"),
        "start": Key("float", None),
        "stop": Key("float", None),
    },
    "domain": {k: MFG_SCHEMA["domain"][k] for k in ("bounds", "nx", "ny")},
    "solver": {k: MFG_SCHEMA["solver"][k] for k in ("eps_ot", "sinkhorn_tol", "sinkhorn_max_iter")},
    "output": {"dir": Key("str", None)},
}


# ---------------------------------------------------------------------------
# presets (partial documents merged over the schema defaults)


def _fig2(lambda_a, lambda_h):
    return {"attrition": {"lambda_a": lambda_a, "sigma_a": 5.0, "lambda_h": lambda_h, "sigma_h": 5.0}}


def _fig3(variance):
    return {
        "attrition": {"lambda_a": 3.0, "sigma_a": 2.0, "lambda_h": 10.0, "sigma_h": 2.0},
        "populations": {
            "defenders": {"center": [0.0, 0.0], "variance": variance},
            "attackers": {"center": [-4.0, 0.0], "variance": 1.5},
            "hvu": [{"center": [-4.0, 4.0], "variance": 0.2, "weight": 1.0}],
        },
        "attacker": {"target": [-4.0, 4.0], "gain": 0.4},
    }


MFG_PRESETS: dict[str, dict] = {
    "fig2_panel1": _fig2(14.0, 1.0),
    "fig2_panel2": _fig2(7.0, 7.0),
    "fig2_panel3": _fig2(2.0, 7.0),
    "fig3_var0p35": _fig3(0.35),
    "fig3_var1p4": _fig3(1.4),
    "fig3_var1p8": _fig3(1.8),
}

SWEEP_PRESETS: dict[str, dict] = {
    "fig1_translation": {"sweep": {"mode": "translation", "n": 100, "start": 1.0, "stop": 0.0}},
    "fig1_variance": {"sweep": {"mode": "variance", "n": 100, "start": 0.1, "stop": 10.0}},
}


def _pair(s0, x0, att_motion=None, def_motion=None, lambda_a=1.0, lambda_h=0.0):
    stationary = {"kind": "stationary"}
    return {
        "agents": {
            "attackers": [s0],
            "defenders": [x0],
            "hvu": [0.0, 0.0],
            "attacker_motion": att_motion or stationary,
            "defender_motion": def_motion or stationary,
        },
        "attrition": {"lambda_a": lambda_a, "sigma_a": 5.0, "lambda_h": lambda_h, "sigma_h": 5.0},
        "time": {"T": 5.0, "dt": 0.1},
    }


ORACLE_PRESETS: dict[str, dict] = {
    "pair_stationary": _pair([0.0, 0.0], [2.0, 0.0]),
    "pair_coincident": _pair([1.0, 1.0], [1.0, 1.0]),
    "pair_diverging": _pair(
        [-0.5, 0.0],
        [0.5, 0.0],
        {"kind": "constant", "velocity": [-0.3, 0.0]},
        {"kind": "constant", "velocity": [0.3, 0.0]},
    ),
    "zero_attrition": _pair([-2.0, 2.0], [2.0, -2.0], {"kind": "homing", "target": [0.0, 0.0], "gain": 0.3},
                            lambda_a=0.0, lambda_h=0.0),
}


def preset_names() -> dict[str, list[str]]:
    return {"run": list(MFG_PRESETS), "sweep": list(SWEEP_PRESETS), "oracle": list(ORACLE_PRESETS)}


# ---------------------------------------------------------------------------
# parsing


def _compose(text: str) -> tuple[dict, dict[tuple, int]]:
    """Load YAML keeping the line of every mapping key."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigParseError(f"malformed YAML: {exc}", line=mark.line + 1 if mark else None) from exc
    if node is None:
        return {}, {}
    lines: dict[tuple, int] = {}

    def walk(n, path):
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                lines[(*path, k.value)] = k.start_mark.line + 1
                walk(v, (*path, k.value))
        elif isinstance(n, yaml.SequenceNode):
            for i, v in enumerate(n.value):
                lines.setdefault((*path, i), v.start_mark.line + 1)
                walk(v, (*path, i))

    walk(node, ())
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigParseError("config must be a mapping of sections", line=node.start_mark.line + 1)
    return data, lines


class _Checker:
    def __init__(self, lines: dict[tuple, int]):
        self.lines = lines

    def fail(self, path: tuple, msg: str):
        key = ".".join(str(p) for p in path)
        raise ConfigParseError(msg, key=key, line=self._line(path))

    def _line(self, path):
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path[:-1]
        return None

    def number(self, path, v, integer=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a {'integer' if integer else 'number'}, got {v!r}")
        if integer and not isinstance(v, int):
            if float(v).is_integer():
                return int(v)
            self.fail(path, f"expected an integer, got {v!r}")
        return int(v) if integer else float(v)

    def numbers(self, path, v, n):
        if not isinstance(v, (list, tuple)) or len(v) != n:
            self.fail(path, f"expected a list of {n} numbers, got {v!r}")
        return [self.number((*path, i), x) for i, x in enumerate(v)]

    def mapping(self, path, v, allowed):
        if not isinstance(v, dict):
            self.fail(path, f"expected a mapping, got {v!r}")
        for k in v:
            if k not in allowed:
                self.fail((*path, k), f"unknown key {k!r}; allowed: {', '.join(allowed)}")
        return v

    def gaussian(self, path, v, weighted=False):
        allowed = ("center", "variance", "weight") if weighted else ("center", "variance")
        self.mapping(path, v, allowed)
        for req in ("center", "variance"):
            if req not in v:
                self.fail((*path, req), f"missing required key {req!r}")
        out = {"center": self.numbers((*path, "center"), v["center"], 2),
               "variance": self.number((*path, "variance"), v["variance"])}
        if out["variance"] <= 0:
            self.fail((*path, "variance"), "variance must be > 0")
        if weighted:
            out["weight"] = self.number((*path, "weight"), v.get("weight", 1.0))
            if out["weight"] < 0:
                self.fail((*path, "weight"), "weight must be >= 0")
        return out

    def motion(self, path, v):
        self.mapping(path, v, ("kind", "velocity", "target", "gain"))
        kind = v.get("kind", "stationary")
        if kind not in _MOTION_KINDS:
            self.fail((*path, "kind"), f"motion kind must be one of {', '.join(_MOTION_KINDS)}")
        out = {"kind": kind}
        if kind == "constant":
            out["velocity"] = self.numbers((*path, "velocity"), v.get("velocity"), 2)
        elif kind == "homing":
            out["target"] = self.numbers((*path, "target"), v.get("target"), 2)
            out["gain"] = self.number((*path, "gain"), v.get("gain", 0.4))
        extra = set(v) - set(out)
        if extra:
            k = sorted(extra)[0]
            self.fail((*path, k), f"key {k!r} does not apply to motion kind {kind!r}")
        return out

    def value(self, path, key: Key, v):
        kind = key.kind
        if v is None and key.default is None:
            return None
        if kind == "float":
            v = self.number(path, v)
        elif kind == "int":
            v = self.number(path, v, integer=True)
        elif kind == "bool":
            if not isinstance(v, bool):
                self.fail(path, f"expected true or false, got {v!r}")
        elif kind == "str":
            if not isinstance(v, str):
                self.fail(path, f"expected a string, got {v!r}")
        elif kind == "point":
            v = self.numbers(path, v, 2)
        elif kind == "bounds":
            v = self.numbers(path, v, 4)
        elif kind == "points":
            if not isinstance(v, list) or not v:
                self.fail(path, f"expected a non-empty list of points, got {v!r}")
            v = [self.numbers((*path, i), p, 2) for i, p in enumerate(v)]
        elif kind == "gaussian":
            v = self.gaussian(path, v)
        elif kind == "mixture":
            comps = v if isinstance(v, list) else [v]
            if not comps:
                self.fail(path, "mixture needs at least one component")
            v = [self.gaussian((*path, i) if isinstance(v, list) else path, c, weighted=True)
                 for i, c in enumerate(comps)]
        elif kind == "motion":
            v = self.motion(path, v)
        if key.check is not None and not key.check(v):
            self.fail(path, f"value {v!r} must be {key.rule}")
        return v


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _resolve(data: dict, lines: dict, schema: dict, presets: dict, default_name: str) -> dict:
    """Validate ``data`` against ``schema`` and fill every default."""
    chk = _Checker(lines)
    top = ("name", "base", *schema)
    chk.mapping((), data, top)
    base = data.get("base")
    if base is not None:
        if base not in presets:
            chk.fail(("base",), f"unknown preset {base!r}; choose from {', '.join(presets)}")
        data = _merge(presets[base], {k: v for k, v in data.items() if k != "base"})
    name = data.get("name", base or default_name)
    if not isinstance(name, str):
        chk.fail(("name",), f"expected a string, got {name!r}")
    out: dict[str, Any] = {"name": name}
    for section, keys in schema.items():
        raw = data.get(section) or {}
        chk.mapping((section,), raw, tuple(keys))
        out[section] = {
            k: chk.value((section, k), key, raw.get(k, copy.deepcopy(key.default)))
            for k, key in keys.items()
        }
    return out


@dataclass
class ScenarioConfig:
    """A validated run description plus the resolved document it came from."""

    name: str
    mfg: MfgConfig
    out_dir: Path | None
    emit_trace: bool = True
    emit_snapshots: bool = True
    emit_residuals: bool = True
    emit_bounds: bool = True
    snapshot_stride: int = 1
    resolved: dict = field(default_factory=dict)


def _mfg_from_resolved(doc: dict, chk: _Checker) -> MfgConfig:
    d, t, ph, at, pop, atk, sv = (doc[s] for s in ("domain", "time", "physics", "attrition", "populations", "attacker", "solver"))
    grid = make_grid(tuple(d["bounds"]), d["nx"], d["ny"], d["boundary"])
    for path, point in ((("populations", "defenders", "center"), pop["defenders"]["center"]),
                        (("populations", "attackers", "center"), pop["attackers"]["center"]),
                        (("attacker", "target"), atk["target"]),
                        *(((("populations", "hvu", i, "center"), c["center"]) for i, c in enumerate(pop["hvu"])))):
        if not grid.contains(point):
            chk.fail(path, f"point {point} lies outside the domain {d['bounds']}")
    if sum(c["weight"] for c in pop["hvu"]) <= 0:
        chk.fail(("populations", "hvu"), "hvu mixture weights must not all be zero")
    try:
        return MfgConfig(
            grid=grid,
            T=t["T"],
            nt=t["nt"],
            epsilon=ph["epsilon"],
            alpha=ph["alpha"],
            drift_scaling=ph["drift_scaling"],
            att=AttritionParams(at["lambda_a"], at["sigma_a"]),
            hvu=AttritionParams(at["lambda_h"], at["sigma_h"]),
            m0=GaussianSpec(tuple(pop["defenders"]["center"]), pop["defenders"]["variance"]),
            mu0=GaussianSpec(tuple(pop["attackers"]["center"]), pop["attackers"]["variance"]),
            nu_h=tuple(GaussianSpec(tuple(c["center"]), c["variance"], c["weight"]) for c in pop["hvu"]),
            attacker_target=tuple(atk["target"]),
            attacker_gain=atk["gain"],
            sinkhorn=SinkhornParams(sv["eps_ot"], sv["sinkhorn_tol"], sv["sinkhorn_max_iter"]),
            picard=PicardParams(sv["damping"], sv["max_outer"], sv["residual_tol"]),
            cfl=sv["cfl"],
        )
    except ConfigurationError as exc:
        raise ConfigParseError(str(exc)) from exc


def _scenario(doc: dict, lines: dict) -> ScenarioConfig:
    chk = _Checker(lines)
    mfg = _mfg_from_resolved(doc, chk)
    o = doc["output"]
    return ScenarioConfig(
        name=doc["name"],
        mfg=mfg,
        out_dir=Path(o["dir"]) if o["dir"] else None,
        emit_trace=o["trace"],
        emit_snapshots=o["snapshots"],
        emit_residuals=o["residuals"],
        emit_bounds=o["bounds"],
        snapshot_stride=o["snapshot_stride"],
        resolved=doc,
    )


def parse_config(text: str, overrides: dict | None = None) -> ScenarioConfig:
    """Validate a YAML run config; ``overrides`` is merged on top (CLI flags)."""
    data, lines = _compose(text)
    if overrides:
        data = _merge(data, overrides)
    return _scenario(_resolve(data, lines, MFG_SCHEMA, MFG_PRESETS, "run"), lines)


def preset_config(name: str, overrides: dict | None = None) -> ScenarioConfig:
    if name not in MFG_PRESETS:
        raise ConfigParseError(f"unknown preset {name!r}; choose from {', '.join(MFG_PRESETS)}")
    data = _merge({"name": name, "base": name}, overrides or {})
    return _scenario(_resolve(data, {}, MFG_SCHEMA, MFG_PRESETS, name), {})


def load_config(source: str, overrides: dict | None = None) -> ScenarioConfig:
    """Preset name or path to a YAML file."""
    if source in MFG_PRESETS:
        return preset_config(source, overrides)
    path = Path(source)
    if not path.is_file():
        raise ConfigParseError(f"{source!r} is neither a preset ({', '.join(MFG_PRESETS)}) nor a file")
    return parse_config(path.read_text(), overrides)


def resolved_yaml(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


# ---------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    solution: MfgSolution | None = None
    bounds: BoundsReport | None = None
    summary: dict = field(default_factory=dict)


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, default=float) + "\n")


def _default_out(name: str) -> Path:
    return Path("runs") / name


def save_flows(path: Path, solution: MfgSolution) -> None:
    np.savez_compressed(
        path, times=solution.times, m=solution.m_flow, mu=solution.mu_flow, w=solution.w_flow,
        residuals=np.asarray(solution.residuals), converged=solution.converged,
    )


def _summary(cfg: ScenarioConfig, sol: MfgSolution, rep: BoundsReport, seconds: float) -> dict:
    tr = sol.trace
    return {
        "name": cfg.name,
        "P_T": float(tr.p[-1]),
        "Q_T": float(tr.q[-1]),
        "objective": float(tr.objective),
        "converged": sol.converged,
        "iterations": sol.iterations,
        "final_residual": sol.residuals[-1] if sol.residuals else None,
        "residual_monotone": sol.monotone,
        "mass_error": sol.mass_error(),
        "min_density": float(sol.m_flow.min()),
        "max_density": float(sol.m_flow.max()),
        "clip_events": sol.clip_events,
        "sinkhorn_failures": sol.sinkhorn_failures,
        "K": rep.K,
        "K_w": rep.K_w,
        "bound_violations": rep.violation_count,
        "seconds": round(seconds, 2),
    }


def run_scenario(cfg: ScenarioConfig, progress: Callable[[int, float], None] | None = None) -> RunResult:
    """Solve, check the density envelope and write every artifact."""
    out = cfg.out_dir or _default_out(cfg.name)
    out.mkdir(parents=True, exist_ok=True)
    (out / RESOLVED_NAME).write_text(resolved_yaml(cfg.resolved))
    t0 = time.perf_counter()
    try:
        sol = picard_solve(cfg.mfg, callback=progress)
    except SolverDiagnosticError as exc:
        _write_json(out / "error_report.json", {"error": type(exc).__name__, "message": str(exc), "step": exc.step})
        return RunResult(EXIT_SOLVER, out, summary={"error": str(exc)})
    rep = verify_bounds(sol)
    seconds = time.perf_counter() - t0
    mfg = cfg.mfg
    if cfg.emit_trace:
        sol.trace.to_csv(out / "trace.csv")
    if cfg.emit_residuals:
        write_columns(out / "residuals.csv", {"iteration": np.arange(1, sol.iterations + 1), "l1_change": sol.residuals})
    if cfg.emit_bounds:
        rep.to_csv(out / "bounds_report.csv")
    if cfg.emit_snapshots:
        snap = out / "snapshots"
        for k in range(0, mfg.nt, cfg.snapshot_stride):
            t = mfg.times[k]
            write_field(snap / f"m_{k:03d}.csv", mfg.grid, sol.m_flow[k], t)
            write_field(snap / f"mu_{k:03d}.csv", mfg.grid, sol.mu_flow[k], t)
            write_field(snap / f"w_{k:03d}.csv", mfg.grid, sol.w_flow[k], t)
    save_flows(out / FLOWS_NAME, sol)
    summary = _summary(cfg, sol, rep, seconds)
    _write_json(out / "summary.json", summary)
    if not sol.converged:
        code = EXIT_NOT_CONVERGED
    elif not rep.ok:
        code = EXIT_BOUNDS
    else:
        code = EXIT_OK
    return RunResult(code, out, sol, rep, summary)


def check_bounds(run_dir: str | Path) -> tuple[int, BoundsReport]:
    """Re-check the envelope of a finished run from its saved flows."""
    run_dir = Path(run_dir)
    cfg_path, flows_path = run_dir / RESOLVED_NAME, run_dir / FLOWS_NAME
    if not cfg_path.is_file() or not flows_path.is_file():
        raise ConfigParseError(f"{run_dir} is not a run directory (needs {RESOLVED_NAME} and {FLOWS_NAME})")
    cfg = parse_config(cfg_path.read_text())
    with np.load(flows_path) as z:
        sol = MfgSolution(
            config=cfg.mfg, m_flow=z["m"], mu_flow=z["mu"], w_flow=z["w"], trace=None,
            residuals=list(z["residuals"]), converged=bool(z["converged"]),
        )
    rep = verify_bounds(sol)
    rep.to_csv(run_dir / "bounds_report.csv")
    return (EXIT_OK if rep.ok else EXIT_BOUNDS), rep


# ---------------------------------------------------------------------------
# distance sweeps


def load_sweep(source: str, overrides: dict | None = None) -> dict:
    if source in SWEEP_PRESETS:
        data, lines = _merge({"name": source, "base": source}, overrides or {}), {}
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigParseError(f"{source!r} is neither a sweep preset ({', '.join(SWEEP_PRESETS)}) nor a file")
        data, lines = _compose(path.read_text())
        data = _merge(data, overrides or {})
    return _resolve(data, lines, SWEEP_SCHEMA, SWEEP_PRESETS, "sweep")


def run_distance_sweep(doc: dict, out_dir: str | Path | None = None):
    """Tabulate one comparison sweep and write it as ``sweep_<mode>.csv``."""
    sw, d, sv = doc["sweep"], doc["domain"], doc["solver"]
    grid = make_grid(tuple(d["bounds"]), d["nx"], d["ny"])
    values = None
    if sw["start"] is not None or sw["stop"] is not None:
        default = SWEEP_PRESETS[f"fig1_{sw['mode']}"]["sweep"]
        start = default["start"] if sw["start"] is None else sw["start"]
        stop = default["stop"] if sw["stop"] is None else sw["stop"]
        values = np.linspace(start, stop, sw["n"])
    try:
        table = distance_sweep(
            sw["mode"], grid, n=sw["n"], values=values,
            params=SinkhornParams(sv["eps_ot"], sv["sinkhorn_tol"], sv["sinkhorn_max_iter"]),
        )
    except ConfigurationError as exc:
        raise ConfigParseError(str(exc), key="sweep") from exc
    out = Path(out_dir or doc["output"]["dir"] or _default_out(doc["name"]))
    out.mkdir(parents=True, exist_ok=True)
    (out / RESOLVED_NAME).write_text(resolved_yaml(doc))
    path = table.to_csv(out / f"sweep_{sw['mode']}.csv")
    return table, path


# ---------------------------------------------------------------------------
# agent oracle


def _velocity_law(spec: dict) -> agents.VelocityLaw:
    if spec["kind"] == "constant":
        return agents.constant_velocity(spec["velocity"])
    if spec["kind"] == "homing":
        return agents.homing(spec["target"], spec["gain"])
    return agents.stationary()


def load_oracle(source: str, overrides: dict | None = None) -> dict:
    if source in ORACLE_PRESETS:
        data, lines = _merge({"name": source, "base": source}, overrides or {}), {}
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigParseError(f"{source!r} is neither an oracle preset ({', '.join(ORACLE_PRESETS)}) nor a file")
        data, lines = _compose(path.read_text())
        data = _merge(data, overrides or {})
    return _resolve(data, lines, ORACLE_SCHEMA, ORACLE_PRESETS, "oracle")


def oracle_scenario(doc: dict) -> agents.AgentScenario:
    a, at, t, sim = doc["agents"], doc["attrition"], doc["time"], doc["simulation"]
    try:
        return agents.AgentScenario(
            s0=np.array(a["attackers"]),
            x0=np.array(a["defenders"]),
            s_hvu=tuple(a["hvu"]),
            att=AttritionParams(at["lambda_a"], at["sigma_a"]),
            hvu=AttritionParams(at["lambda_h"], at["sigma_h"]),
            attacker_drift=_velocity_law(a["attacker_motion"]),
            defender_control=_velocity_law(a["defender_motion"]),
            dt=t["dt"],
            T=t["T"],
            noise=sim["noise"],
            seed=sim["seed"],
        )
    except ConfigurationError as exc:
        raise ConfigParseError(str(exc)) from exc


def run_oracle(doc: dict, out_dir: str | Path | None = None) -> dict:
    """Simulate the agents, write their traces and, for a single
    deterministic pair, the point-mass consistency report."""
    scn = oracle_scenario(doc)
    out = Path(out_dir or doc["output"]["dir"] or _default_out(doc["name"]))
    out.mkdir(parents=True, exist_ok=True)
    (out / RESOLVED_NAME).write_text(resolved_yaml(doc))
    trace = agents.simulate_agents(scn)
    trace.write(out)
    result = {"name": doc["name"], "P_T": float(trace.p[-1]), "Q_T": trace.q[-1].tolist()}
    pair = scn.n_attackers == 1 and scn.m_defenders == 1 and scn.noise == 0
    if doc["simulation"]["dirac_check"] and pair:
        rep = agents.dirac_consistency_check(scn.att, scn)
        rep.to_csv(out / "dirac_check.csv")
        result["dirac_max_relative_deviation"] = rep.max_relative_deviation
    _write_json(out / "summary.json", result)
    return result
