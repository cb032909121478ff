"""Command dispatch: build model objects from a config and run one experiment."""
from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
from scipy.stats import kendalltau

from .. import dist
from ..assumptions import (AssumptionReport, ConditionRecord, QTildeSpec, estimate_B,
                           identity_qtilde, validate_kernel, validate_moment, validate_q,
                           validate_qtilde, verify_B)
from ..errors import (ConfigError, DomainError, NumericError, ResourceError, TightwaveError,
                      ValidationFailure)
from ..kernels import FAMILIES, CoverTime, Table, TranslationInvariant, shift_for_centering
from ..lyapunov import LyapunovParams, default_delta1, flatness_check, select_params
from ..mc import (KAryTree, McConfig, OffspringLaw, binomial_halfwidth, dkw_band,
                  return_time_moments, simulate_beta_chain, simulate_brw_max, simulate_cover_time,
                  simulate_return_epochs, simulate_torus_cover)
from ..mc.compare import ks_vs_curve
from ..operators import (Diagnostics, GridSpec, QTransform, RecursionConfig, iterate,
                         mean_increment, trace_to_csv)
from .artifact import (NUMERIC_ERROR, SUCCESS, VALIDATION_FAILURE, RunArtifact, content_hash,
                       versions)
from .config import RunConfig

LYAP_EARLY = 20
LYAP_SLACK = 0.5
ATOM_MIN_MASS = 1e-9


def _clean(v):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python ones."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- model construction ----------------------------------------------------

def _table_path(cfg: RunConfig) -> Path:
    return Path(cfg.base_dir) / cfg.system.kernel.params["path"]


def build_kernel(cfg: RunConfig):
    kc = cfg.system.kernel
    try:
        if kc.family == "cover":
            base = CoverTime(0.0)
        elif kc.family == "table":
            try:
                text = _table_path(cfg).read_text()
            except OSError as exc:
                raise ConfigError(f"system.kernel.path: {exc}") from exc
            base = TranslationInvariant(Table.from_csv(text))
        else:
            base = TranslationInvariant(FAMILIES[kc.family](**kc.params))
        shift = shift_for_centering(base, cfg.system.m) if kc.shift == "auto" else kc.shift
        return base.with_shift(float(shift))
    except DomainError as exc:
        raise ConfigError(f"system.kernel: {exc}") from exc


def build_q(cfg: RunConfig) -> QTransform:
    """Offspring transform; degenerate laws raise ``DegenerateOffspringError``."""
    spec = cfg.system.q
    if spec["type"] == "binary":
        return QTransform.binary(cfg.system.theta)
    p = {int(k): v for k, v in spec["p"].items()}
    arr = np.zeros(max(p) + 1)
    for k, v in p.items():
        arr[k] = v
    return QTransform(arr, theta=cfg.system.theta)


def build_mc(cfg: RunConfig) -> McConfig:
    m = cfg.mc
    return McConfig(reps=m.reps, master_seed=m.seed, workers=m.workers, dump=m.dump)


def build_recursion(cfg: RunConfig, kernel, q, iterations=None, lyap=None) -> RecursionConfig:
    g = cfg.grid
    try:
        return RecursionConfig(
            kernel=kernel, q=q, mode=cfg.system.mode,
            grid=GridSpec(step=g.step, half_width=g.half_width, edge_tol=g.edge_tol,
                          clip_budget=g.clip_budget, lattice=g.lattice),
            iterations=cfg.iterations if iterations is None else iterations,
            diagnostics=Diagnostics(levels=tuple(cfg.diagnostics.levels),
                                    width_eps=cfg.diagnostics.width_eps, lyapunov=lyap))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _kernel_grids(cfg: RunConfig):
    v = cfg.validate
    ys = None if v.y_grid is None else np.linspace(v.y_grid[0], v.y_grid[1], int(v.y_grid[2]))
    xs = None if v.x_grid is None else np.linspace(v.x_grid[0], v.x_grid[1], int(v.x_grid[2]))
    return ys, xs


def kernel_report(cfg: RunConfig, kernel) -> AssumptionReport:
    ys, xs = _kernel_grids(cfg)
    try:
        return validate_kernel(kernel, ys, xs, cfg.validate.M_candidates, m=cfg.system.m,
                               a_floor=cfg.validate.a_floor)
    except DomainError as exc:
        raise ConfigError(f"validate: {exc}") from exc


def resolve_lyapunov(cfg: RunConfig, kernel, spec=None):
    """``(params, report)``; "auto" derives ``(a, M0)`` from the (G2) scan."""
    spec = cfg.lyapunov if spec is None else spec
    if spec is None:
        return None, None
    if spec != "auto":
        try:
            return LyapunovParams(**spec), None
        except (TypeError, DomainError) as exc:
            raise ConfigError(f"lyapunov: {exc}") from exc
    rep = kernel_report(cfg, kernel)
    g2 = rep["(G2)"]
    if not g2.passed:
        raise ValidationFailure(
            f"lyapunov 'auto' needs (G2) constants but the scan failed: {g2.witnesses[:1]}")
    c = g2.constants
    params = select_params(c["a"], c["M0"], cfg.system.m, cfg.validate.theta_star,
                           delta0=cfg.validate.delta0, grid_step=cfg.grid.step)
    return params, rep


# -- commands --------------------------------------------------------------

def _trace_summary(trace, cfg: RunConfig) -> dict:
    N = len(trace) - 1
    out = {"iterations": N, "final_median": trace[-1].median,
           "max_clipped_mass": max(r.clipped_mass for r in trace)}
    if N >= 4:
        start = N - N // 4
        out["mean_increment"] = {"start": start, "stop": N,
                                 "value": mean_increment(trace, start, N)}
        ws = [r.width for r in trace if r.n >= N // 4]
        out["width"] = {"eps": cfg.diagnostics.width_eps, "from": N // 4,
                        "min": min(ws), "max": max(ws)}
    return out


def cmd_iterate(cfg: RunConfig) -> RunArtifact:
    kernel, q = build_kernel(cfg), build_q(cfg)
    params, _ = resolve_lyapunov(cfg, kernel)
    trace, final = iterate(build_recursion(cfg, kernel, q, lyap=params))
    tables = {"trace.csv": trace_to_csv(trace), "final_curve.csv": final.to_csv(),
              "summary.json": _dump(_trace_summary(trace, cfg))}
    if params is not None:
        tables["lyapunov_params.json"] = _dump(json.loads(params.to_json()))
    return RunArtifact({}, tables, SUCCESS)


def cmd_lyapunov(cfg: RunConfig) -> RunArtifact:
    kernel, q = build_kernel(cfg), build_q(cfg)
    params, rep = resolve_lyapunov(cfg, kernel, cfg.lyapunov or "auto")
    trace, final = iterate(build_recursion(cfg, kernel, q, lyap=params))
    L = np.array([r.lyapunov for r in trace], dtype=float)
    early = L[: LYAP_EARLY + 1]
    late = L[LYAP_EARLY:] if L.size > LYAP_EARLY else np.empty(0)
    c_early = float(np.max(early))
    c_late = float(np.max(late)) if late.size else -math.inf
    bounded = bool(c_late <= c_early + LYAP_SLACK)
    c0 = float(np.max(L[np.isfinite(L)])) if np.any(np.isfinite(L)) else 0.0
    delta1 = default_delta1(c0)
    flat = flatness_check(final, delta1, params.M, params.eps1)
    summary = {
        "params": json.loads(params.to_json()),
        "max_L_early": c_early, "max_L_late": c_late, "early_cutoff": LYAP_EARLY,
        "slack": LYAP_SLACK, "bounded": bounded,
        "sup_domain_empty": bool(np.all(np.isneginf(L))),
        "flatness": {"delta1": delta1, "violations": len(flat), "first": flat[:5]},
        "trace": _trace_summary(trace, cfg),
    }
    tables = {"trace.csv": trace_to_csv(trace), "lyapunov.json": _dump(summary)}
    if rep is not None:
        tables["assumption_report.json"] = rep.to_json() + "\n"
    return RunArtifact({}, tables, SUCCESS if bounded else VALIDATION_FAILURE, summary)


def cmd_validate(cfg: RunConfig) -> RunArtifact:
    v = cfg.validate
    report = AssumptionReport()
    q = build_q(cfg)
    kernel = None
    for cond in v.conditions:
        if cond == "q":
            report.extend(validate_q(q, v.delta0, cfg.system.m, v.c_star, v.theta_star))
        elif cond == "moment":
            probs = [0.0, 0.0, 1.0] if q.probs is None else q.probs
            mt = validate_moment(probs, cfg.system.theta)
            report.records.append(ConditionRecord("moment", math.isfinite(mt), mt,
                                                  constants={"m_theta": mt, "theta": cfg.system.theta}))
        elif cond == "kernel":
            kernel = kernel or build_kernel(cfg)
            report.extend(kernel_report(cfg, kernel))
        elif cond == "qtilde":
            qt = q if v.qtilde == "q" else identity_qtilde
            try:
                spec = QTildeSpec(qt, name=v.qtilde)
            except DomainError as exc:
                raise ConfigError(f"validate.qtilde: {exc}") from exc
            report.extend(validate_qtilde(spec))
        elif cond == "assumption24":
            kernel = kernel or build_kernel(cfg)
            try:
                B = estimate_B(kernel, q, v.eta1)
            except DomainError as exc:
                raise ConfigError(f"validate.eta1: {exc}") from exc
            qt = None if v.qtilde == "q" else identity_qtilde
            report.records.append(verify_B(kernel, q, v.eta1, B, qtilde=qt))
    status = SUCCESS if report.passed else VALIDATION_FAILURE
    return RunArtifact({}, {"assumption_report.json": report.to_json() + "\n"}, status,
                       {"failed": report.failed()})


def _variance_stderr(x: np.ndarray) -> float:
    n = x.size
    c = x - x.mean()
    m2, m4 = np.mean(c ** 2), np.mean(c ** 4)
    return math.sqrt(max(m4 - m2 * m2, 0.0) / n)


def _cover_sweep(cfg: RunConfig, mc: McConfig) -> tuple[dict, dict, dict]:
    s = cfg.simulate
    per, tables = {}, {}
    for d in s.depths:
        summ = simulate_cover_time(KAryTree(d, s.arity, s.extended), mc)
        e = summ.extras["E_n"]
        row = {"mean_C": summ.mean, "E_n_iqr": e.iqr(), "E_n_std": e.std}
        if "lln_ratio" in summ.extras:
            row["lln_ratio_mean"] = summ.extras["lln_ratio"].mean
        per[d] = row
        if mc.dump:
            tables[f"samples_depth{d}.csv"] = summ.dump_csv()
    depths = list(s.depths)
    checks = {}
    lo, hi = min(depths), max(depths)
    if s.arity == 2 and len(depths) >= 2:
        r_hi, r_lo = per[hi]["lln_ratio_mean"], per[lo]["lln_ratio_mean"]
        checks["lln_ratio_in_range"] = {"depth": hi, "value": r_hi, "range": [0.6, 1.1],
                                        "pass": 0.6 <= r_hi <= 1.1}
        checks["lln_ratio_increases"] = {"depths": [lo, hi], "values": [r_lo, r_hi],
                                         "pass": r_hi > r_lo}
    if len(depths) >= 3:
        iqr = np.array([per[d]["E_n_iqr"] for d in depths])
        std = np.array([per[d]["E_n_std"] for d in depths])
        spread = float(iqr.max() / iqr.min() - 1.0)
        tau, p_two = kendalltau(depths, iqr)
        p_growth = p_two / 2.0 if tau > 0 else 1.0 - p_two / 2.0
        checks["iqr_spread"] = {"value": spread, "limit": 0.5, "pass": spread <= 0.5}
        checks["iqr_no_growth"] = {"kendall_tau": float(tau), "p_one_sided": float(p_growth),
                                   "level": 0.05, "pass": bool(p_growth >= 0.05)}
        base = per[lo]["E_n_std"]
        checks["std_floor"] = {"reference_depth": lo, "min_ratio": float(std.min() / base),
                               "limit": 0.5, "pass": bool(np.all(std >= 0.5 * base))}
    return {"per_depth": per}, checks, tables


def cmd_simulate(cfg: RunConfig) -> RunArtifact:
    s = cfg.simulate
    mc = build_mc(cfg)
    checks, tables, body = {}, {}, {}
    extra = None
    if s.target == "brw":
        kernel, q = build_kernel(cfg), build_q(cfg)
        summ = simulate_brw_max(OffspringLaw.from_q(q), kernel, s.n, mc)
    elif s.target == "beta":
        summ = simulate_beta_chain(s.n, mc)
    elif s.target == "torus":
        summ = simulate_torus_cover(s.side, mc)
    elif s.target == "epochs":
        summ = simulate_return_epochs(s.n, s.epochs, mc, arity=s.arity)
        if s.arity == 2:
            exact = return_time_moments(s.n)
            x = summ.values
            z_mean = (summ.mean - exact["mean"]) / summ.stderr
            z_var = (summ.variance - exact["variance"]) / _variance_stderr(x)
            body["exact"] = exact
            checks["mean_within_4sigma"] = {"z": z_mean, "pass": abs(z_mean) <= 4.0}
            checks["variance_within_4sigma"] = {"z": z_var, "pass": abs(z_var) <= 4.0}
            nm = exact["normalized_mean"] - (2.0 - 2.0 ** (-s.n))
            checks["exact_normalized_mean"] = {"error": nm, "pass": abs(nm) <= 1e-9}
    else:  # cover
        if s.depths:
            body, checks, tables = _cover_sweep(cfg, mc)
            summ = None
        else:
            summ = simulate_cover_time(KAryTree(s.n, s.arity, s.extended), mc)
            extra = "R_n" if s.extended else None
    if summ is not None:
        d = summ.to_dict()
        body.update(d)
        if mc.dump:
            tables["samples.csv"] = summ.dump_csv(extra)
    body["checks"] = checks
    tables["summary.json"] = _dump(body)
    ok = all(c["pass"] for c in checks.values())
    return RunArtifact({}, tables, SUCCESS if ok else VALIDATION_FAILURE, {"checks": checks})


def cmd_compare(cfg: RunConfig) -> RunArtifact:
    s = cfg.simulate
    mc = build_mc(cfg)
    kernel = build_kernel(cfg)
    if s.target == "beta":
        if not isinstance(kernel, CoverTime) or kernel.shift != 0.0:
            raise ConfigError("compare.target 'beta' needs the cover kernel with shift 0")
        q = build_q(cfg)
        if not q.is_binary:
            raise ConfigError("compare.target 'beta' needs binary branching")
        samples = simulate_beta_chain(s.n, mc)
    else:
        if not getattr(kernel, "translation_invariant", False):
            raise ConfigError("compare.target 'brw' needs a translation-invariant kernel")
        q = build_q(cfg)
        samples = simulate_brw_max(OffspringLaw.from_q(q), kernel, s.n, mc)
    trace, curve = iterate(build_recursion(cfg, kernel, q, iterations=s.n))
    ks = ks_vs_curve(samples.values, curve)
    band = dkw_band(mc.reps, s.alpha)
    limit = band if s.tolerance is None else s.tolerance
    checks = {"kolmogorov": {"distance": ks, "dkw_band": band, "alpha": s.alpha,
                             "limit": limit, "pass": ks <= limit}}
    body = {"target": s.target, "n": s.n, "reps": mc.reps, "seed": mc.master_seed,
            "engine_median": trace[-1].median,
            "mc_median": float(np.median(samples.values))}
    if cfg.grid.lattice:
        pmf = dist.pmf_on_grid(curve)
        grid = curve.grid
        keep = pmf > ATOM_MIN_MASS
        vals = np.round(samples.values / curve.step) * curve.step
        atoms, ok = [], True
        for x, p in zip(grid[keep], pmf[keep]):
            freq = float(np.mean(np.abs(vals - x) < 0.5 * curve.step))
            hw = binomial_halfwidth(float(p), mc.reps)
            good = abs(freq - p) <= hw
            ok &= good
            atoms.append({"x": float(x), "engine": float(p), "mc": freq,
                          "halfwidth_4sigma": hw, "pass": good})
        body["atoms"] = atoms
        checks["atoms_within_4sigma"] = {"count": len(atoms), "pass": bool(ok)}
    body["checks"] = checks
    tables = {"summary.json": _dump(body), "engine_curve.csv": curve.to_csv(),
              "trace.csv": trace_to_csv(trace)}
    if mc.dump:
        tables["samples.csv"] = samples.dump_csv()
    ok = all(c["pass"] for c in checks.values())
    return RunArtifact({}, tables, SUCCESS if ok else VALIDATION_FAILURE, {"checks": checks})


COMMANDS = {"iterate": cmd_iterate, "validate": cmd_validate, "lyapunov": cmd_lyapunov,
            "simulate": cmd_simulate, "compare": cmd_compare}


def _inputs(cfg: RunConfig) -> dict:
    if cfg.system.kernel.family == "table":
        try:
            return {"kernel_table": _table_path(cfg).read_bytes()}
        except OSError:
            return {}
    return {}


def _filter_formats(tables: dict, formats) -> dict:
    return {k: v for k, v in tables.items() if k.rsplit(".", 1)[-1] in formats}



def run(cfg: RunConfig) -> RunArtifact:
    """Dispatch ``cfg.command``.

    Validation failures and numeric errors are returned as artifacts with the
    matching status; configuration problems raise ``ConfigError``.
    """
    echo = cfg.to_dict()
    t0 = time.perf_counter()
    try:
        art = COMMANDS[cfg.command](cfg)
    except (ValidationFailure, NumericError, ResourceError) as exc:
        status = VALIDATION_FAILURE if isinstance(exc, ValidationFailure) else NUMERIC_ERROR
        err = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("constraint", "iteration", "clipped_mass"):
            if getattr(exc, attr, None) is not None:
                err[attr] = getattr(exc, attr)
        art = RunArtifact({}, {"error.json": _dump(err)}, status, err)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    except TightwaveError:
        raise
    # JSON summaries are always kept; CSV tables only when requested
    art.tables = _filter_formats(art.tables, set(cfg.outputs.formats) | {"json"})
    art.manifest = {
        "command": cfg.command, "config": echo, "versions": versions(), "seed": cfg.mc.seed,
        "wall_time_s": time.perf_counter() - t0,
        "input_hash": content_hash(cfg.canonical(), _inputs(cfg)),
    }
    return art
