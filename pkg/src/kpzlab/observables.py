"""Rescaled statistics: hypograph hits, maxima counts, moduli, one-point laws.

Hit probabilities optionally apply the Gaussian shift averaging: each
trajectory's membership test is preceded by independent shifts r ~ N(0, a^2)
in height and y' ~ N(0, 2 a^2) in space (the law of a sum of two N(0, a^2)
shifts), which is an unbiased one-sample estimate of the smoothed transition
probability.  Membership is always evaluated on the simulation window; the
report records the window so the truncation of the infinite-lattice event is
explicit.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Boundary, HeightField, ScalingParams, round_half_up
from .engine import ModelSpec, build_state, run_to_time
from .initial import ProfileSpec, WindowTooSmall
from .rng import derived_generator, stream_base

__all__ = [
    "TargetSet",
    "EmpiricalDistribution",
    "NoSamples",
    "NonDecayingProfile",
    "contains",
    "estimate_hit_probability",
    "count_maxima",
    "maxima_tail",
    "modulus_of_continuity",
    "one_point_distribution",
    "ks_distance",
]


class NoSamples(ValueError):
    pass


class NonDecayingProfile(ValueError):
    pass


@dataclass(frozen=True)
class TargetSet:
    """hyp(g) or epi(g) membership for a piecewise-linear profile g.

    Hyp: every rescaled lattice height is <= g; Epi: every one is > g
    (strict).  Enlarging g pointwise can only grow hyp(g), so membership is
    monotone in the height field.
    """

    mode: str  # "hyp" | "epi"
    profile: ProfileSpec

    def __post_init__(self):
        if self.mode not in ("hyp", "epi"):
            raise ValueError("mode must be 'hyp' or 'epi'")


def _lattice_heights(field: HeightField) -> np.ndarray:
    return field.heights()


def _lattice_macro(field: HeightField, params: ScalingParams, n_pts: int) -> np.ndarray:
    return (np.arange(n_pts) - field.origin) * (params.epsilon / 2.0)


def contains(target: TargetSet, field: HeightField, params: ScalingParams) -> bool:
    """Windowed membership of the rescaled field in hyp(g)/epi(g)."""
    h = _lattice_heights(field)
    xs = _lattice_macro(field, params, len(h))
    resc = params.height_unit * h + params.macro_time / params.epsilon
    g = np.asarray(target.profile(xs), dtype=np.float64)
    if target.mode == "hyp":
        return bool(np.all(resc <= g + 1e-12))
    return bool(np.all(resc > g + 1e-12))


def _hit_single(heights: np.ndarray, g_vals: np.ndarray, mode: str,
                shift_sites: int, shift_steps: int, unit: float,
                time_term: float, ring: bool, cmp_idx: np.ndarray) -> bool:
    """Membership of the shifted field: h(x - y) + r compared to g(x).

    On a ring the spatial shift is cyclic.  On a segment, comparison points
    whose shifted preimage leaves the window are unconstrained (documented
    window truncation).
    """
    n = len(heights)
    src = cmp_idx - shift_sites
    if ring:
        src = src % n
        vals = heights[src]
        keep = slice(None)
    else:
        keep = (src >= 0) & (src < n)
        vals = heights[np.clip(src, 0, n - 1)]
    resc = unit * (vals + shift_steps) + time_term
    g = g_vals
    if ring:
        ok = resc <= g + 1e-12 if mode == "hyp" else resc > g + 1e-12
        return bool(np.all(ok))
    ok = resc <= g + 1e-12 if mode == "hyp" else resc > g + 1e-12
    return bool(np.all(ok[keep]))


def estimate_hit_probability(
    spec: ModelSpec,
    init: Callable[[int, int], HeightField],
    t: float,
    target: TargetSet,
    params: ScalingParams,
    n: int,
    seed: int,
    coupled_with: TargetSet | None = None,
) -> tuple[float, float] | tuple[float, float, float, float]:
    """Monte Carlo transition probability into hyp(g)/epi(g).

    ``init(seed, trajectory)`` supplies the initial field per trajectory.
    With params.averaging_std = a > 0 the shifts r ~ N(0, a^2), y' ~ N(0, 2a^2)
    are applied per trajectory before testing.  When ``coupled_with`` is given
    the second target is evaluated on the same trajectories (same coupling),
    and both (p, stderr) pairs are returned.
    """
    if n < 1:
        raise NoSamples("need at least one trajectory")
    prm = ScalingParams(epsilon=params.epsilon, delta=params.delta,
                        macro_time=t, averaging_std=params.averaging_std)
    micro_t = prm.micro_time
    a = prm.averaging_std
    unit = prm.height_unit
    time_term = t / prm.epsilon
    cache: dict[int, tuple] = {}

    def one_trajectory(traj: int) -> tuple[int, int]:
        field = init(seed, traj)
        state = build_state(field, spec, seed, traj)
        state = run_to_time(state, micro_t)
        fld = state.field
        heights = fld.heights()
        npts = len(heights)
        if npts not in cache:
            cmp_idx = np.arange(npts)
            xs = _lattice_macro(fld, prm, npts)
            g_vals = np.asarray(target.profile(xs), dtype=np.float64)
            g2 = (np.asarray(coupled_with.profile(xs), dtype=np.float64)
                  if coupled_with is not None else None)
            cache[npts] = (cmp_idx, g_vals, g2)
        cmp_idx, g_vals, g2 = cache[npts]
        if a > 0:
            srng = derived_generator(stream_base(seed, traj), 4)
            r = srng.normal(0.0, a)
            y = srng.normal(0.0, math.sqrt(2.0) * a)
            shift_sites = round_half_up(2.0 * y / prm.epsilon)
            shift_steps = round_half_up(r / unit)
        else:
            shift_sites = 0
            shift_steps = 0
        ring = fld.boundary is Boundary.PERIODIC_RING
        h1 = int(_hit_single(heights, g_vals, target.mode, shift_sites,
                             shift_steps, unit, time_term, ring, cmp_idx))
        h2 = 0
        if coupled_with is not None and _hit_single(
                heights, g2, coupled_with.mode, shift_sites, shift_steps,
                unit, time_term, ring, cmp_idx):
            h2 = 1
        return h1, h2

    # Per-trajectory counter-based seeding makes the tallies associative:
    # the totals cannot depend on the worker count.  The compiled kernel
    # releases the GIL, so threads parallelize the hot loop.
    workers = int(os.environ.get("KPZLAB_WORKERS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one_trajectory, range(n), chunksize=64))
    else:
        outcomes = [one_trajectory(traj) for traj in range(n)]
    hits = sum(h for h, _ in outcomes)
    hits2 = sum(h for _, h in outcomes)
    p = hits / n
    se = math.sqrt(p * (1.0 - p) / n)
    if coupled_with is None:
        return p, se
    p2 = hits2 / n
    return p, se, p2, math.sqrt(p2 * (1.0 - p2) / n)


def count_maxima(values: Sequence[float]) -> int:
    """Number of positions attaining the global maximum (plateaus count per point)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty sequence")
    return int(np.sum(arr == arr.max()))


def maxima_tail(profile: ProfileSpec, eps: float, window: int, n: int,
                seed: int) -> dict:
    """Tail statistics of X = #maxima of (discretized profile + equilibrium walk).

    The profile must decay linearly on both sides so the maximum localizes;
    enforced as slopes <= -0.1.  Works on the integer height lattice, so
    plateau ties are exact.  Returns the histogram, the survival function and
    a fitted envelope log P(X >= k) ~ log C - c k^{1/4}.
    """
    # decay toward both edges: right slope <= -0.1, left slope >= +0.1
    if profile.right_slope > -0.1 or profile.left_slope < 0.1:
        raise NonDecayingProfile("profile must decay at slope >= 0.1 on both sides")
    unit = math.sqrt(eps)
    origin = window // 2
    xs = (np.arange(window + 1) - origin) * (eps / 2.0)
    f_steps = np.array([round_half_up(v) for v in
                        np.asarray(profile(xs)) / unit], dtype=np.int64)
    rng = derived_generator(stream_base(seed, 0), 5)
    counts = np.zeros(n, dtype=np.int64)
    chunk = max(1, min(n, (1 << 24) // (window + 1)))
    done = 0
    while done < n:
        m = min(chunk, n - done)
        steps = rng.integers(0, 2, size=(m, window), dtype=np.int8).astype(np.int64) * 2 - 1
        walks = np.concatenate(
            [np.zeros((m, 1), dtype=np.int64), np.cumsum(steps, axis=1)], axis=1)
        tot = walks + f_steps[None, :]
        mx = tot.max(axis=1, keepdims=True)
        counts[done:done + m] = (tot == mx).sum(axis=1)
        done += m
    kmax = int(counts.max())
    hist = np.bincount(counts, minlength=kmax + 1)[1:]  # P(X = k), k >= 1
    pmf = hist / n
    sf = np.cumsum(pmf[::-1])[::-1]  # P(X >= k)
    ks = np.arange(1, kmax + 1)
    mask = sf > 0
    x = ks[mask] ** 0.25
    y = np.log(sf[mask])
    slope, intercept = np.polyfit(x, y, 1)
    return {
        "k": ks.tolist(),
        "pmf": pmf.tolist(),
        "survival": sf.tolist(),
        "envelope_logC": float(intercept),
        "envelope_c": float(-slope),
        "n": n,
    }


def modulus_of_continuity(field: HeightField, params: ScalingParams,
                          b: float, L: float) -> float:
    """sup |h_eps(x) - h_eps(y)| over |x - y| <= b with x, y in [-L, L]."""
    if not (0.0 < b < 1.0):
        raise ValueError("b must lie in (0, 1)")
    h = field.heights()
    xs = _lattice_macro(field, params, len(h))
    if xs[0] > -L + 1e-12 or xs[-1] < L - 1e-12:
        raise WindowTooSmall("window does not cover [-L, L]")
    inside = (xs >= -L - 1e-12) & (xs <= L + 1e-12)
    vals = params.height_unit * h[inside]
    max_lag = int(math.floor(b / (params.epsilon / 2.0) + 1e-9))
    if max_lag < 1:
        return 0.0
    best = 0.0
    for lag in range(1, min(max_lag, len(vals) - 1) + 1):
        d = np.abs(vals[lag:] - vals[:-lag]).max()
        best = max(best, float(d))
    return best


@dataclass(frozen=True)
class EmpiricalDistribution:
    samples: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.samples, dtype=np.float64))
        if arr.size == 0:
            raise NoSamples("empty sample set")
        object.__setattr__(self, "samples", arr)
        arr.setflags(write=False)

    @property
    def count(self) -> int:
        return int(self.samples.size)

    def cdf(self, x: float) -> float:
        return float(np.searchsorted(self.samples, x, side="right")) / self.count


def one_point_distribution(
    spec: ModelSpec,
    init: Callable[[int, int], HeightField],
    t: float,
    x_macro: float,
    params: ScalingParams,
    n: int,
    seed: int,
) -> EmpiricalDistribution:
    """n independent samples of the rescaled height at (t, x_macro), sorted."""
    from .engine import rescaled_height

    if n < 1:
        raise NoSamples("need at least one trajectory")
    prm = ScalingParams(epsilon=params.epsilon, delta=params.delta,
                        macro_time=t, averaging_std=params.averaging_std)
    micro_t = prm.micro_time
    out = np.empty(n, dtype=np.float64)
    for traj in range(n):
        state = build_state(init(seed, traj), spec, seed, traj)
        state = run_to_time(state, micro_t)
        out[traj] = rescaled_height(state, prm, x_macro)
    return EmpiricalDistribution(samples=out)


def ks_distance(emp: EmpiricalDistribution, cdf: Callable[[float], float]) -> float:
    """Two-sided Kolmogorov-Smirnov sup distance at the sample points."""
    n = emp.count
    xs = emp.samples
    F = np.array([cdf(float(x)) for x in xs])
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - F)
    d_minus = np.max(F - (i - 1) / n)
    return float(max(d_plus, d_minus))
