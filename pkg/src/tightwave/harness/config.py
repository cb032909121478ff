"""Run configuration: strict JSON parsing with defaults.

Unknown keys are rejected with the dotted path of the offending key.  The
parsed structure only checks shapes and ranges; model objects (kernel, Q)
are built at run time so that model-level rejections (for example a
degenerate offspring law) surface as validation failures, not config errors.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigError

COMMANDS = ("iterate", "validate", "lyapunov", "simulate", "compare")
KERNEL_FAMILIES = ("gaussian", "exponential", "uniform", "two_point", "pareto", "table", "cover")
MODES = ("move-first", "branch-first")
SIM_TARGETS = ("brw", "cover", "beta", "torus", "epochs")
COMPARE_TARGETS = ("brw", "beta")
CONDITIONS = ("q", "moment", "kernel", "qtilde", "assumption24")

_KERNEL_PARAMS = {
    "gaussian": {"sigma": 1.0},
    "exponential": {"rate": 1.0},
    "uniform": {"a": 0.0, "b": 1.0},
    "two_point": {"prob": 0.5},
    "pareto": {"alpha": 2.0},
    "table": {"path": None},
    "cover": {},
}


@dataclass
class KernelConf:
    family: str = "gaussian"
    params: dict = field(default_factory=dict)
    shift: Any = 0.0  # number or "auto"


@dataclass
class SystemConf:
    kernel: KernelConf = field(default_factory=KernelConf)
    q: dict = field(default_factory=lambda: {"type": "binary"})
    mode: str = "move-first"
    m: float = 1.8
    theta: float = 2.0


@dataclass
class GridConf:
    step: float = 0.01
    half_width: float | None = None
    edge_tol: float = 1e-12
    clip_budget: float = 1e-10
    lattice: bool = False


@dataclass
class DiagConf:
    width_eps: float = 0.02
    levels: list = field(default_factory=lambda: [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99])


@dataclass
class ValidateConf:
    conditions: list = field(default_factory=lambda: ["q", "kernel", "qtilde"])
    delta0: float = 0.05
    c_star: float = 2.0
    theta_star: float = 1.0
    eta1: float = 0.01
    qtilde: str = "q"
    M_candidates: list | None = None
    y_grid: list | None = None  # [lo, hi, count]
    x_grid: list | None = None  # [lo, hi, count]
    a_floor: float = 0.01


@dataclass
class SimConf:
    target: str = "brw"
    n: int = 10
    depths: list | None = None  # cover sweep over several depths
    arity: int = 2
    extended: bool = False
    side: int = 16
    epochs: int = 10000
    alpha: float = 1e-3
    tolerance: float | None = None


@dataclass
class McConf:
    reps: int = 1000
    seed: int = 0
    workers: int = 1
    dump: bool = False


@dataclass
class OutputConf:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class RunConfig:
    command: str
    system: SystemConf = field(default_factory=SystemConf)
    grid: GridConf = field(default_factory=GridConf)
    iterations: int = 0
    diagnostics: DiagConf = field(default_factory=DiagConf)
    lyapunov: Any = None  # None, "auto" or a parameter mapping
    validate: ValidateConf = field(default_factory=ValidateConf)
    simulate: SimConf = field(default_factory=SimConf)
    mc: McConf = field(default_factory=McConf)
    outputs: OutputConf = field(default_factory=OutputConf)
    base_dir: str = "."

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        k = d["system"]["kernel"]
        d["system"]["kernel"] = {"family": k["family"], "shift": k["shift"], **k["params"]}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def canonical(self) -> str:
        """Compact form used for hashing; the output location does not affect results."""
        d = self.to_dict()
        d["outputs"].pop("directory")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))


# -- parsing helpers -------------------------------------------------------

def _obj(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    return value


def _keys(d: dict, allowed, path):
    for k in d:
        if k not in allowed:
            where = f"{path}.{k}" if path else k
            raise ConfigError(f"unknown key {where!r}")


def _num(v, path, lo=None, hi=None, lo_open=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{path}: must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"{path}: must be {'>' if lo_open else '>='} {lo}, got {v!r}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}: must be <= {hi}, got {v!r}")
    return int(v) if integer else float(v)


def _bool(v, path):
    if not isinstance(v, bool):
        raise ConfigError(f"{path}: expected true/false")
    return v


def _choice(v, options, path):
    if v not in options:
        raise ConfigError(f"{path}: expected one of {list(options)}, got {v!r}")
    return v


def _kernel(d, path) -> KernelConf:
    d = _obj(d, path)
    fam = _choice(d.get("family", "gaussian"), KERNEL_FAMILIES, f"{path}.family")
    allowed = {"family", "shift", *_KERNEL_PARAMS[fam]}
    _keys(d, allowed, path)
    params = {}
    for k, default in _KERNEL_PARAMS[fam].items():
        v = d.get(k, default)
        if k == "path":
            if not isinstance(v, str):
                raise ConfigError(f"{path}.path: table kernels need a CSV path")
            params[k] = v
        else:
            params[k] = _num(v, f"{path}.{k}")
    shift = d.get("shift", 0.0)
    if shift != "auto":
        shift = _num(shift, f"{path}.shift")
    return KernelConf(fam, params, shift)


def _q(d, path) -> dict:
    d = _obj(d, path)
    typ = _choice(d.get("type", "binary"), ("binary", "offspring"), f"{path}.type")
    if typ == "binary":
        _keys(d, {"type"}, path)
        return {"type": "binary"}
    _keys(d, {"type", "p"}, path)
    p = d.get("p")
    if isinstance(p, dict):
        out = {}
        for k, v in p.items():
            try:
                kk = int(k)
            except ValueError:
                raise ConfigError(f"{path}.p: offspring counts must be integers, got {k!r}") from None
            if kk < 0:
                raise ConfigError(f"{path}.p: offspring counts must be >= 0")
            out[str(kk)] = _num(v, f"{path}.p[{k}]", lo=0.0, hi=1.0)
        p = out
    elif isinstance(p, list):
        p = {str(k): _num(v, f"{path}.p[{k}]", lo=0.0, hi=1.0) for k, v in enumerate(p)}
    else:
        raise ConfigError(f"{path}.p: expected a mapping k -> p_k or a list indexed by k")
    if abs(sum(p.values()) - 1.0) > 1e-9:
        raise ConfigError(f"{path}.p: probabilities sum to {sum(p.values())!r}")
    return {"type": "offspring", "p": p}


def _fill(cls, d, path, spec):
    """Build dataclass ``cls`` from ``d`` using per-field validators in ``spec``."""
    d = _obj(d, path)
    _keys(d, spec.keys(), path)
    obj = cls()
    for k, check in spec.items():
        if k in d:
            setattr(obj, k, check(d[k], f"{path}.{k}"))
    return obj


def _grid3(v, path):
    if v is None:
        return None
    if not (isinstance(v, list) and len(v) == 3):
        raise ConfigError(f"{path}: expected [lo, hi, count]")
    lo, hi = _num(v[0], path), _num(v[1], path)
    cnt = _num(v[2], path, lo=2, integer=True)
    if hi <= lo:
        raise ConfigError(f"{path}: hi must exceed lo")
    return [lo, hi, cnt]


def _num_list(v, path, lo=None, lo_open=False):
    if v is None:
        return None
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}: expected a non-empty list")
    return [_num(x, path, lo=lo, lo_open=lo_open) for x in v]


def _lyap(v, path):
    if v is None or v == "auto":
        return v
    d = _obj(v, path)
    allowed = {"delta0", "eps1", "M", "b", "a", "M0", "kappa", "m", "eps0", "theta_star", "C1"}
    _keys(d, allowed, path)
    for k in ("delta0", "eps1", "M", "b"):
        if k not in d:
            raise ConfigError(f"{path}: missing {k!r}")
    return {k: (None if d[k] is None else _num(d[k], f"{path}.{k}")) for k in d}


def parse_config(doc: dict, base_dir: str = ".") -> RunConfig:
    doc = _obj(doc, "")
    top = {"command", "system", "grid", "iterations", "diagnostics", "lyapunov", "validate",
           "simulate", "compare", "mc", "outputs"}
    _keys(doc, top, "")
    if "command" not in doc:
        raise ConfigError("missing key 'command'")
    cfg = RunConfig(_choice(doc["command"], COMMANDS, "command"))
    cfg.base_dir = base_dir
    if "system" in doc:
        s = _obj(doc["system"], "system")
        _keys(s, {"kernel", "q", "mode", "m", "theta"}, "system")
        sc = SystemConf()
        if "kernel" in s:
            sc.kernel = _kernel(s["kernel"], "system.kernel")
        if "q" in s:
            sc.q = _q(s["q"], "system.q")
        if "mode" in s:
            sc.mode = _choice(s["mode"], MODES, "system.mode")
        if "m" in s:
            sc.m = _num(s["m"], "system.m", lo=1.0, hi=2.0, lo_open=True)
        if "theta" in s:
            sc.theta = _num(s["theta"], "system.theta", lo=1.0, hi=2.0, lo_open=True)
        cfg.system = sc
    if "grid" in doc:
        cfg.grid = _fill(GridConf, doc["grid"], "grid", {
            "step": lambda v, p: _num(v, p, lo=0.0, lo_open=True),
            "half_width": lambda v, p: None if v is None else _num(v, p, lo=0.0, lo_open=True),
            "edge_tol": lambda v, p: _num(v, p, lo=0.0, lo_open=True, hi=0.5),
            "clip_budget": lambda v, p: _num(v, p, lo=0.0, hi=1.0),
            "lattice": _bool,
        })
    if "iterations" in doc:
        cfg.iterations = _num(doc["iterations"], "iterations", lo=0, integer=True)
    if "diagnostics" in doc:
        cfg.diagnostics = _fill(DiagConf, doc["diagnostics"], "diagnostics", {
            "width_eps": lambda v, p: _num(v, p, lo=0.0, lo_open=True, hi=0.999),
            "levels": lambda v, p: sorted(_num_list(v, p, lo=0.0, lo_open=True)),
        })
        if any(x >= 1 for x in cfg.diagnostics.levels):
            raise ConfigError("diagnostics.levels: must lie in (0, 1)")
    if "lyapunov" in doc:
        cfg.lyapunov = _lyap(doc["lyapunov"], "lyapunov")
    if "validate" in doc:
        cfg.validate = _fill(ValidateConf, doc["validate"], "validate", {
            "conditions": lambda v, p: [_choice(c, CONDITIONS, p) for c in (v if isinstance(v, list) else [None])],
            "delta0": lambda v, p: _num(v, p, lo=0.0, lo_open=True, hi=0.49),
            "c_star": lambda v, p: _num(v, p, lo=0.0, lo_open=True),
            "theta_star": lambda v, p: _num(v, p, lo=0.0, lo_open=True),
            "eta1": lambda v, p: _num(v, p),
            "qtilde": lambda v, p: _choice(v, ("q", "identity"), p),
            "M_candidates": lambda v, p: _num_list(v, p, lo=0.0, lo_open=True),
            "y_grid": _grid3,
            "x_grid": _grid3,
            "a_floor": lambda v, p: _num(v, p, lo=0.0, lo_open=True),
        })
    for key in ("simulate", "compare"):
        if key in doc:
            cfg.simulate = _fill(SimConf, doc[key], key, {
                "target": lambda v, p: _choice(v, SIM_TARGETS if key == "simulate" else COMPARE_TARGETS, p),
                "n": lambda v, p: _num(v, p, lo=0, integer=True),
                "depths": lambda v, p: None if v is None else [_num(x, p, lo=1, integer=True) for x in _num_list(v, p)],
                "arity": lambda v, p: _num(v, p, lo=2, integer=True),
                "extended": _bool,
                "side": lambda v, p: _num(v, p, lo=1, integer=True),
                "epochs": lambda v, p: _num(v, p, lo=1, integer=True),
                "alpha": lambda v, p: _num(v, p, lo=0.0, lo_open=True, hi=0.5),
                "tolerance": lambda v, p: None if v is None else _num(v, p, lo=0.0, lo_open=True),
            })
    if "mc" in doc:
        cfg.mc = _fill(McConf, doc["mc"], "mc", {
            "reps": lambda v, p: _num(v, p, lo=1, integer=True),
            "seed": lambda v, p: _num(v, p, lo=0, hi=2 ** 64 - 1, integer=True),
            "workers": lambda v, p: _num(v, p, lo=1, integer=True),
            "dump": _bool,
        })
    if "outputs" in doc:
        cfg.outputs = _fill(OutputConf, doc["outputs"], "outputs", {
            "directory": lambda v, p: v if isinstance(v, str) and v else _bad(p, "a path"),
            "formats": lambda v, p: [_choice(f, ("csv", "json"), p) for f in (v if isinstance(v, list) else [None])],
        })
    return cfg


def _bad(path, what):
    raise ConfigError(f"{path}: expected {what}")


def load_config(source) -> RunConfig:
    """Parse a config from a path, a JSON string or an already-decoded mapping."""
    base = "."
    if isinstance(source, dict):
        doc = copy.deepcopy(source)
    else:
        text = None
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            p = Path(source)
            try:
                text = p.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {p}: {exc}") from exc
            base = str(p.parent)
        else:
            text = source
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc, base)


def apply_overrides(cfg: RunConfig, out=None, seed=None, reps=None, iterations=None) -> RunConfig:
    """CLI flags take precedence over the file."""
    if out is not None:
        cfg.outputs.directory = out
    if seed is not None:
        cfg.mc.seed = _num(seed, "--seed", lo=0, hi=2 ** 64 - 1, integer=True)
    if reps is not None:
        cfg.mc.reps = _num(reps, "--reps", lo=1, integer=True)
    if iterations is not None:
        cfg.iterations = _num(iterations, "--iterations", lo=0, integer=True)
    return cfg
