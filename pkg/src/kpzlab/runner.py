"""Experiment runner: dispatches configs, collects artifacts, writes reports.

Reports are flat files: CSV for tabular data, JSON for structured results
(always echoing the config and library version for exact replay), JSON-lines
for trajectory snapshots, and a minimal SVG per plot.  Identical configs
(including seed) produce byte-identical numeric artifacts.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .config import ExperimentConfig, ValidationError
from .core import Boundary, HeightField, ScalingParams, round_half_up
from .engine import ModelSpec, build_state, kernel_kind, rescaled_height, run_to_time
from .initial import (ProfileSpec, discretize_profile, rn_l2_energy,
                      sample_equilibrium_walk, sample_randomized_wedge, norm_cdf)
from .observables import (EmpiricalDistribution, TargetSet,
                          estimate_hit_probability, ks_distance, maxima_tail,
                          one_point_distribution)
from .svg import line_plot

__all__ = ["ReportBundle", "Artifact", "IoError", "run_experiment", "write_report"]


class IoError(OSError):
    pass


@dataclass(frozen=True)
class Artifact:
    name: str
    kind: str  # csv | json | jsonl | svg
    data: Any
    columns: tuple[str, ...] = ()


@dataclass
class ReportBundle:
    meta: dict[str, Any]
    artifacts: list[Artifact] = field(default_factory=list)


def _fmt_cell(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    s = str(v)
    if any(c in s for c in ",\"\n"):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_report(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write every artifact plus report.json (meta) under out_dir."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    paths = []
    for art in bundle.artifacts:
        path = out / art.name
        try:
            if art.kind == "csv":
                cols = art.columns or (tuple(art.data[0].keys()) if art.data else ())
                lines = [",".join(cols)]
                for row in art.data:
                    lines.append(",".join(_fmt_cell(row.get(c, "")) for c in cols))
                path.write_text("\n".join(lines) + "\n")
            elif art.kind == "json":
                path.write_text(json.dumps(_jsonable(art.data), indent=2, sort_keys=True) + "\n")
            elif art.kind == "jsonl":
                path.write_text("\n".join(json.dumps(_jsonable(r), sort_keys=True)
                                          for r in art.data) + "\n")
            elif art.kind == "svg":
                path.write_text(art.data)
            else:
                raise ValueError(f"unknown artifact kind {art.kind}")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
        paths.append(path)
    meta_path = out / "report.json"
    meta_path.write_text(json.dumps(_jsonable(bundle.meta), indent=2, sort_keys=True) + "\n")
    paths.append(meta_path)
    return paths


def _anchor_steps(params: ScalingParams, anchor_rescaled: float) -> int:
    return round_half_up(anchor_rescaled / params.height_unit)


def make_initial_sampler(cfg: ExperimentConfig,
                         params: ScalingParams) -> Callable[[int, int], HeightField]:
    """Per-trajectory initial field factory from the [initial] section."""
    kind = cfg.initial.get("kind", "equilibrium")
    window = cfg.window_sites
    boundary = cfg.boundary
    origin = cfg.window_origin if cfg.window_origin is not None else window // 2
    anchor = _anchor_steps(params, cfg.initial.get("anchor", 0.0))
    if kind == "equilibrium":
        def sampler(seed: int, traj: int) -> HeightField:
            return sample_equilibrium_walk(window, params.epsilon, anchor, seed,
                                           origin=origin, boundary=boundary,
                                           trajectory=traj)
        return sampler
    if kind == "profile":
        fld = discretize_profile(cfg.initial["profile"], window, params.epsilon,
                                 origin=origin, boundary=boundary)
        return lambda seed, traj: fld
    if kind == "step":
        bits = np.zeros(window, dtype=np.uint8)
        bits[:origin] = 1
        fld = HeightField(bits=bits, anchor=float(anchor) - origin,
                          boundary=boundary, origin=origin)
        return lambda seed, traj: fld
    if kind == "wedge":
        wspec = cfg.initial["wedge"]

        def sampler(seed: int, traj: int) -> HeightField:
            return sample_randomized_wedge(wspec, window, params.epsilon, seed,
                                           origin=origin, trajectory=traj)
        return sampler
    raise ValidationError(f"unknown initial kind '{kind}'")


def _meta(cfg: ExperimentConfig, config_text: str | None, extra: dict) -> dict:
    return {
        "label": cfg.label,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "version": __version__,
        "kernel": kernel_kind(),
        "config": cfg.raw,
        "config_text": config_text,
        **extra,
    }


def _exp_simulate(cfg: ExperimentConfig, config_text: str | None) -> ReportBundle:
    params = cfg.scaling
    spec = cfg.model
    sampler = make_initial_sampler(cfg, params)
    micro_t = params.micro_time
    opts = cfg.options.get("simulate", {})
    n_snap = int(opts.get("snapshots", min(cfg.n, 100)))
    one = cfg.options.get("onepoint")
    snaps = []
    values = np.empty(cfg.n) if one else None
    x_macro = float(one.get("x", 0.0)) if one else 0.0
    for traj in range(cfg.n):
        state = build_state(sampler(cfg.seed, traj), spec, cfg.seed, traj)
        state = run_to_time(state, micro_t)
        if traj < n_snap:
            snaps.append({
                "trajectory": traj,
                "micro_time": state.micro_time,
                "anchor": state.anchor,
                "bits": state.occ.astype(int).tolist(),
            })
        if one:
            values[traj] = rescaled_height(state, params, x_macro)
    arts = [Artifact("snapshots.jsonl", "jsonl", snaps)]
    if cfg.target is not None:
        p_hat, stderr = estimate_hit_probability(
            spec, sampler, params.macro_time, cfg.target, params, cfg.n,
            cfg.seed)
        arts.append(Artifact("hit_probability.csv", "csv", [{
            "experiment_id": cfg.label, "epsilon": params.epsilon,
            "t": params.macro_time, "n": cfg.n, "p_hat": p_hat,
            "stderr": stderr, "a": params.averaging_std,
        }], columns=("experiment_id", "epsilon", "t", "n", "p_hat",
                     "stderr", "a")))
    extra: dict[str, Any] = {"micro_time": micro_t, "window": cfg.window_sites,
                             "boundary": cfg.boundary.value}
    if one:
        emp = EmpiricalDistribution(samples=values)
        rows = [{"trajectory": i, "value": float(v)} for i, v in enumerate(values)]
        arts.append(Artifact("onepoint.csv", "csv", rows,
                             columns=("trajectory", "value")))
        stats = {"x": x_macro, "n": cfg.n, "mean": float(values.mean()),
                 "var": float(values.var(ddof=1))}
        table_path = one.get("ks_table")
        if table_path:
            ss, F2 = _read_cdf_table(table_path)
            cdf = _table_cdf(ss, F2)
            stats["ks_distance"] = ks_distance(emp, cdf)
        arts.append(Artifact("onepoint_stats.json", "json", stats))
        ecdf_y = (np.arange(1, emp.count + 1) / emp.count).tolist()
        arts.append(Artifact("onepoint_cdf.svg", "svg", line_plot(
            {"empirical cdf": (emp.samples.tolist(), ecdf_y)},
            xlabel="rescaled height", ylabel="F", title=cfg.label)))
    return ReportBundle(meta=_meta(cfg, config_text, extra), artifacts=arts)


def _read_cdf_table(path: str) -> tuple[np.ndarray, np.ndarray]:
    rows = Path(path).read_text().strip().splitlines()
    ss, fs = [], []
    for line in rows[1:]:
        a, b = line.split(",")[:2]
        ss.append(float(a))
        fs.append(float(b))
    return np.array(ss), np.array(fs)


def _table_cdf(ss: np.ndarray, F2: np.ndarray) -> Callable[[float], float]:
    def cdf(x: float) -> float:
        if x <= ss[0]:
            return float(F2[0])
        if x >= ss[-1]:
            return float(F2[-1])
        return float(np.interp(x, ss, F2))
    return cdf


def _drift(spec: ModelSpec) -> float:
    return sum(v * r for v, r in spec.micro_rates.items())


def _exp_compare(cfg: ExperimentConfig, config_text: str | None) -> ReportBundle:
    opts = cfg.options["compare"]
    eps_list = [float(e) for e in opts["epsilons"]]
    t = float(opts.get("macro_time", cfg.scaling.macro_time if cfg.scaling else 1.0))
    a = float(opts.get("averaging", cfg.scaling.averaging_std if cfg.scaling else 0.0))
    if abs(_drift(cfg.model) - 1.0) > 1e-9:
        raise ValidationError(
            "compare requires the model normalized to drift 1 "
            f"(got {_drift(cfg.model)}); rescale the rates")
    rows = []
    for eps in eps_list:
        params = ScalingParams(epsilon=eps, macro_time=t, averaging_std=a)
        sub = ExperimentConfig(**{**cfg.__dict__, "scaling": params})
        sampler = make_initial_sampler(sub, params)
        p_m, se_m = estimate_hit_probability(
            cfg.model, sampler, t, cfg.target, params, cfg.n, cfg.seed)
        p_t, se_t = estimate_hit_probability(
            ModelSpec.tasep(), sampler, t, cfg.target, params, cfg.n, cfg.seed)
        rows.append({
            "experiment_id": cfg.label, "epsilon": eps, "t": t, "n": cfg.n,
            "p_hat_model": p_m, "stderr_model": se_m,
            "p_hat_tasep": p_t, "stderr_tasep": se_t,
            "difference": abs(p_m - p_t),
            "stderr": math.hypot(se_m, se_t), "a": a,
        })
    arts = [
        Artifact("compare.csv", "csv", rows, columns=(
            "experiment_id", "epsilon", "t", "n", "p_hat_model", "stderr_model",
            "p_hat_tasep", "stderr_tasep", "difference", "stderr", "a")),
        Artifact("compare.svg", "svg", line_plot(
            {"|p_model - p_tasep|": ([r["epsilon"] for r in rows],
                                     [r["difference"] for r in rows])},
            xlabel="epsilon", ylabel="difference", title=cfg.label, scatter=True)),
    ]
    extra = {"model": cfg.model.kind, "micro_rates": {str(k): v for k, v in
                                                      cfg.model.micro_rates.items()},
             "window": cfg.window_sites, "boundary": cfg.boundary.value,
             "window_justification": (
                 "ring window with no walls; circumference exceeds the shifted "
                 "comparison span, and periodic wrap affects both models "
                 "identically in the reported difference")}
    return ReportBundle(meta=_meta(cfg, config_text, extra), artifacts=arts)


def canonical_skew_profiles(n_sites: int) -> tuple[HeightField, HeightField]:
    """The canonical (f, g) pair for skew-gap experiments across sizes.

    A fixed rough 4-site pattern sits at the center; f continues with
    zigzag wings, g with V wings (descending left, ascending right), so the
    event localizes at the center and growing the window only moves the
    boundary away.
    """
    c = n_sites // 2
    lw = c - 2
    f_bits = np.array([1, 0] * (lw // 2) + ([1] if lw % 2 else [])
                      + [0, 1, 1, 0] + [1, 0] * (lw // 2)
                      + ([1] if lw % 2 else []), dtype=np.uint8)[:n_sites]
    g_bits = np.array([0] * lw + [1, 0, 1, 0] + [1] * lw, dtype=np.uint8)
    f = HeightField(bits=f_bits, anchor=0.0, origin=c)
    g = HeightField(bits=g_bits, anchor=float(1 + lw), origin=c)
    return f, g


def _exp_exact_check(cfg: ExperimentConfig, config_text: str | None) -> ReportBundle:
    from . import oracle

    opts = cfg.options.get("exactcheck", {})
    sizes = [int(s) for s in opts.get("sizes", [6, 8, 10])]
    t = float(opts.get("t", 1.0))
    models = {
        "sep": ModelSpec.asep(0.5, 0.5),
        "asep": ModelSpec.asep(0.7, 0.3),
        "tasep": ModelSpec.tasep(),
    }
    rows = []
    for name, spec in models.items():
        for n in sizes:
            space = oracle.state_space(n)
            f, g = canonical_skew_profiles(n)
            res = oracle.skew_reversibility_gap(space, spec, t, f, g)
            rows.append({"model": name, "sites": n, "t": t,
                         "lhs": res["lhs"], "rhs": res["rhs"], "gap": res["gap"]})
    n_arg = int(opts.get("argmax_sites", 6))
    space = oracle.state_space(n_arg)
    g_lin = ProfileSpec.from_points([[0.0, 2.0]], left_slope=-1.0, right_slope=1.0)
    arg = oracle.gradient_argmax_check(space, t, g_lin)
    sem = oracle.semigroup_difference(
        oracle.state_space(6), ModelSpec.tasep(), ModelSpec.asep(1.75, 0.75),
        np.ones(64), TargetSet(mode="hyp", profile=g_lin), t)
    gaps_doc = {
        name: [r["gap"] for r in rows if r["model"] == name] for name in models
    }
    doc = (
        "The skew identity is exact for TASEP on a closed window.  For "
        "SEP/ASEP the closed boundary breaks it at finite size; the gap is "
        "reported per window size and decreases as the boundary recedes."
    )
    report = {
        "skew": rows,
        "skew_gaps_by_model": gaps_doc,
        "skew_documentation": doc,
        "gradient_argmax": arg,
        "semigroup_difference": {k: v for k, v in sem.items()},
        "t": t,
    }
    arts = [
        Artifact("skew_gaps.csv", "csv", rows,
                 columns=("model", "sites", "t", "lhs", "rhs", "gap")),
        Artifact("exact_check.json", "json", report),
        Artifact("skew_gaps.svg", "svg", line_plot(
            {name: ([float(s) for s in sizes], [max(g, 1e-18) for g in gaps_doc[name]])
             for name in models},
            xlabel="window sites", ylabel="gap", title="skew gap vs size",
            scatter=True)),
    ]
    return ReportBundle(meta=_meta(cfg, config_text, {}), artifacts=arts)


def _exp_decompose(cfg: ExperimentConfig, config_text: str | None) -> ReportBundle:
    from . import cycles as cyc

    opts = cfg.options["decompose"]
    law = opts["law"]
    decomp = cyc.cycle_decompose(law)
    ok = cyc.verify_decomposition(law, decomp)
    out = {
        "law": {str(k): v for k, v in law.items()},
        "cycles": decomp.to_jsonable(),
        "verified": ok,
    }
    sector = []
    for c in decomp.cycles:
        n_sites = len(set(c.vertices))
        ell = int(opts.get("particle_count", max(1, n_sites // 2)))
        res = cyc.sector_constant(c, ell)
        sector.append({"vertices": list(c.vertices), "particles": ell,
                       "B": res["B"], "dim": res["dim"]})
    out["sector_constants"] = sector
    arts = [Artifact("decomposition.json", "json", out)]
    return ReportBundle(meta=_meta(cfg, config_text, {}), artifacts=arts)


def _exp_tw_table(cfg: ExperimentConfig, config_text: str | None) -> ReportBundle:
    from . import tw

    opts = cfg.options.get("twtable", {})
    s_min = float(opts.get("s_min", -8.0))
    s_max = float(opts.get("s_max", 5.0))
    step = float(opts.get("step", 0.05))
    m = int(opts.get("m", 64))
    table = tw.tw_table(s_min, s_max, step, m)
    doubling = {str(s): abs(tw.tracy_widom_gue_cdf(s, 64)
                            - tw.tracy_widom_gue_cdf(s, 128))
                for s in (-4.0, -2.0, 0.0, 2.0)}
    rows = [{"s": s, "F2": f} for s, f in zip(table["s"], table["F2"])]
    arts = [
        Artifact("tw_f2.csv", "csv", rows, columns=("s", "F2")),
        Artifact("tw_moments.json", "json", {
            "implied_mean": table["implied_mean"],
            "implied_var": table["implied_var"],
            "implied_mass": table["implied_mass"],
            "m": m, "step": step, "doubling_64_vs_128": doubling,
        }),
        Artifact("tw_f2.svg", "svg", line_plot(
            {"F2": (table["s"], table["F2"])}, xlabel="s", ylabel="F2(s)",
            title="Tracy-Widom GUE cdf")),
    ]
    return ReportBundle(meta=_meta(cfg, config_text, {}), artifacts=arts)


def _exp_maxima_tail(cfg: ExperimentConfig, config_text: str | None) -> ReportBundle:
    opts = cfg.options.get("maxtail", {})
    slope = float(opts.get("slope", 1.0))
    window = int(opts.get("window", cfg.window_sites or 2000))
    eps = cfg.scaling.epsilon if cfg.scaling else 0.01
    prof = ProfileSpec.from_points([[0.0, 0.0]], left_slope=slope,
                                   right_slope=-slope)
    res = maxima_tail(prof, eps, window, cfg.n, cfg.seed)
    rows = [{"k": k, "pmf": p, "survival": s}
            for k, p, s in zip(res["k"], res["pmf"], res["survival"])]
    ks = [k for k, s in zip(res["k"], res["survival"]) if s > 0]
    sf = [s for s in res["survival"] if s > 0]
    arts = [
        Artifact("maxima_tail.csv", "csv", rows, columns=("k", "pmf", "survival")),
        Artifact("maxima_tail.json", "json", {
            "envelope_logC": res["envelope_logC"], "envelope_c": res["envelope_c"],
            "n": res["n"], "window": window, "epsilon": eps, "slope": slope}),
        Artifact("maxima_tail.svg", "svg", line_plot(
            {"log P(X>=k)": ([k ** 0.25 for k in ks], [math.log(s) for s in sf])},
            xlabel="k^(1/4)", ylabel="log survival", title="maxima tail",
            scatter=True)),
    ]
    return ReportBundle(meta=_meta(cfg, config_text, {}), artifacts=arts)


def _exp_wedge_energy(cfg: ExperimentConfig, config_text: str | None) -> ReportBundle:
    opts = cfg.options.get("wedgeenergy", {})
    a = float(opts.get("a", 1.0))
    d = float(opts.get("d", 1.0))
    eps = cfg.scaling.epsilon if cfg.scaling else 0.01
    exact, bound = rn_l2_energy(a, d, eps)
    n_steps = 2 * int(math.floor(d / eps))
    p = norm_cdf(a * math.sqrt(eps / 2.0))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 6]))
    # E_0[f^2] estimated from unbiased walks: f = 2^n p^S (1-p)^(n-S)
    S = rng.binomial(n_steps, 0.5, size=cfg.n)
    logf = (n_steps * math.log(2.0) + S * math.log(p)
            + (n_steps - S) * math.log1p(-p))
    fsq = np.exp(2.0 * logf)
    mc = float(fsq.mean())
    se = float(fsq.std(ddof=1) / math.sqrt(cfg.n))
    out = {"a": a, "d": d, "epsilon": eps, "n_steps": n_steps, "p_n": p,
           "exact": exact, "bound": bound, "mc_estimate": mc, "mc_stderr": se,
           "agrees_within_4se": bool(abs(mc - exact) <= 4 * se)}
    arts = [
        Artifact("wedge_energy.json", "json", out),
        Artifact("wedge_energy.csv", "csv", [out], columns=tuple(out.keys())),
    ]
    return ReportBundle(meta=_meta(cfg, config_text, {}), artifacts=arts)


_DISPATCH = {
    "simulate": _exp_simulate,
    "compare": _exp_compare,
    "exact-check": _exp_exact_check,
    "decompose": _exp_decompose,
    "tw-table": _exp_tw_table,
    "maxima-tail": _exp_maxima_tail,
    "wedge-energy": _exp_wedge_energy,
}


def run_experiment(cfg: ExperimentConfig,
                   config_text: str | None = None) -> ReportBundle:
    """Execute one experiment; raises module errors with experiment context."""
    fn = _DISPATCH[cfg.kind]
    try:
        return fn(cfg, config_text)
    except Exception as exc:
        raise type(exc)(f"[{cfg.label}] {exc}") from exc


def artifact_digest(paths: list[Path]) -> str:
    """SHA-256 over the sorted artifact bytes (replay/determinism checks)."""
    h = hashlib.sha256()
    for p in sorted(paths):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()
