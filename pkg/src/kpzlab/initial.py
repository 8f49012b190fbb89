"""Initial conditions: equilibrium walks, discretized profiles, random wedges.

All samplers return anchored :class:`HeightField` windows on the microscopic
lattice.  Heights are handled in integer steps; a target profile value r is
placed on the height lattice as [r] = round(r / sqrt(eps)), ties toward +inf.

The wedge sampler follows the sign construction for drifted branches: a step
up is taken when a Brownian increment plus half the local deterministic slope
is positive, so the step-up probability is p = Phi(a sqrt(eps/2)) with a the
local slope.  The squared L2 norm of the induced Radon-Nikodym derivative
with respect to the unbiased walk then has the closed form implemented in
:func:`rn_l2_energy`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Boundary, HeightField, ScalingParams, round_half_up
from .rng import derived_generator, stream_base

__all__ = [
    "ProfileSpec",
    "RandomWedgeSpec",
    "WindowTooSmall",
    "sample_equilibrium_walk",
    "discretize_profile",
    "sample_bridge_bits",
    "sample_randomized_wedge",
    "sample_drifted_walk_bits",
    "rn_l2_energy",
    "norm_cdf",
]


class WindowTooSmall(ValueError):
    pass


def norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@dataclass(frozen=True)
class ProfileSpec:
    """Piecewise-linear profile: sorted knots plus linear extrapolation slopes."""

    knots: tuple[tuple[float, float], ...]
    left_slope: float = 0.0
    right_slope: float = 0.0

    def __post_init__(self):
        if not self.knots:
            raise ValueError("profile needs at least one knot")
        xs = [k[0] for k in self.knots]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("knots must be strictly increasing in x")

    @staticmethod
    def constant(value: float) -> "ProfileSpec":
        return ProfileSpec(knots=((0.0, value),))

    @staticmethod
    def from_points(points: Sequence[Sequence[float]],
                    left_slope: float = 0.0, right_slope: float = 0.0) -> "ProfileSpec":
        return ProfileSpec(knots=tuple((float(x), float(v)) for x, v in points),
                           left_slope=left_slope, right_slope=right_slope)

    def __call__(self, x):
        xs = np.array([k[0] for k in self.knots])
        vs = np.array([k[1] for k in self.knots])
        x = np.asarray(x, dtype=np.float64)
        out = np.interp(x, xs, vs)
        out = np.where(x < xs[0], vs[0] + (x - xs[0]) * self.left_slope, out)
        out = np.where(x > xs[-1], vs[-1] + (x - xs[-1]) * self.right_slope, out)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class RandomWedgeSpec:
    """Parameters (y_i, b_i, gamma, s, L) of a randomized (narrowish) wedge.

    Anchor heights are uniform on the height-lattice points of [b_i, b_i+gamma],
    consecutive anchors are joined by walk bridges, and the outer branches are
    drifted walks following max(b - s |x - y|, -L).  s and L may be math.inf.
    """

    anchors_y: tuple[float, ...]
    heights_b: tuple[float, ...]
    gamma: float
    slope: float = math.inf
    floor: float = math.inf

    def __post_init__(self):
        ys = self.anchors_y
        if len(ys) != len(self.heights_b) or not ys:
            raise ValueError("need matching nonempty anchor/height lists")
        if any(b <= a for a, b in zip(ys, ys[1:])):
            raise ValueError("anchor positions must be strictly increasing")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.slope < 0:
            raise ValueError("wedge slope must be nonnegative (math.inf allowed)")
        if self.floor != math.inf and self.floor <= max(abs(b) for b in self.heights_b):
            raise ValueError("floor L must exceed max |b_i|")

    def deterministic(self, x):
        """max_i max(b_i - s |x - y_i|, -L), the truncated multi-wedge."""
        x = np.asarray(x, dtype=np.float64)
        best = np.full_like(x, -np.inf)
        for y, b in zip(self.anchors_y, self.heights_b):
            if self.slope == math.inf:
                cand = np.where(x == y, b, -np.inf)
            else:
                cand = b - self.slope * np.abs(x - y)
            best = np.maximum(best, cand)
        if self.floor != math.inf:
            best = np.maximum(best, -self.floor)
        return best


def sample_equilibrium_walk(window: int, eps: float, anchor: float, seed: int,
                            origin: int | None = None,
                            boundary: Boundary = Boundary.CLOSED_SEGMENT,
                            trajectory: int = 0) -> HeightField:
    """Two-sided simple random walk from the invariant product measure.

    Steps are independent fair +-1 (i.e. +-sqrt(eps) after rescaling); the
    height at microscopic site 0 equals ``anchor`` (in steps).  On a ring the
    walk is conditioned to zero winding (uniform half-filled sector), which
    is the invariant measure of the finite system.
    """
    if window <= 0:
        raise ValueError("window must have at least one site")
    origin = window // 2 if origin is None else origin
    rng = derived_generator(stream_base(seed, trajectory), 2)
    if boundary is Boundary.PERIODIC_RING:
        if window % 2:
            raise ValueError("ring equilibrium needs an even window")
        # uniform zero-winding sector = random arrangement of N/2 up-steps
        base = np.zeros(window, dtype=np.uint8)
        base[: window // 2] = 1
        bits = rng.permutation(base)
    else:
        bits = rng.integers(0, 2, size=window, dtype=np.uint8)
    steps = 2 * bits[:origin].astype(np.int64) - 1
    left_anchor = float(anchor) - float(steps.sum())
    return HeightField(bits=bits, anchor=left_anchor, boundary=boundary,
                       origin=origin)


def discretize_profile(profile: ProfileSpec, window: int, eps: float,
                       origin: int | None = None,
                       boundary: Boundary = Boundary.CLOSED_SEGMENT) -> HeightField:
    """Greedy nearest +-step path through the rescaled profile.

    Each step takes the sign minimizing the distance to the profile at the
    next lattice point, ties up; the sup-norm error is at most sqrt(eps) +
    (eps/2) max|slope| on the window.
    """
    if window <= 0:
        raise ValueError("window must have at least one site")
    origin = window // 2 if origin is None else origin
    unit = math.sqrt(eps)
    pts = np.arange(window + 1) - origin
    targets = np.asarray(profile(pts * (eps / 2.0)), dtype=np.float64) / unit
    h = round_half_up(targets[0])
    bits = np.empty(window, dtype=np.uint8)
    for j in range(window):
        up = abs(h + 1 - targets[j + 1])
        dn = abs(h - 1 - targets[j + 1])
        if up <= dn:
            bits[j] = 1
            h += 1
        else:
            bits[j] = 0
            h -= 1
    return HeightField(bits=bits, anchor=float(round_half_up(targets[0])),
                       boundary=boundary, origin=origin)


def sample_bridge_bits(n_steps: int, n_up: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform walk bridge by exact sequential conditioning.

    P(step j up | past) = (up-steps still needed) / (steps remaining), which
    samples uniformly over all arrangements; endpoints are pinned by count.
    """
    if not (0 <= n_up <= n_steps):
        raise ValueError("impossible bridge endpoint")
    bits = np.empty(n_steps, dtype=np.uint8)
    need = n_up
    for j in range(n_steps):
        remaining = n_steps - j
        u = rng.random()
        if u * remaining < need:
            bits[j] = 1
            need -= 1
        else:
            bits[j] = 0
    return bits


def sample_drifted_walk_bits(slope_a: float, n_steps: int, eps: float,
                             rng: np.random.Generator) -> np.ndarray:
    """Sign-construction drifted walk: step up with p = Phi(a sqrt(eps/2))."""
    p = norm_cdf(slope_a * math.sqrt(eps / 2.0))
    return (rng.random(n_steps) < p).astype(np.uint8)


def _drifted_branch(start_h: int, xs_mid: np.ndarray, det_vals: np.ndarray,
                    eps: float, rng: np.random.Generator) -> np.ndarray:
    """Heights after each step of a branch following the deterministic profile.

    det_vals holds the (truncated) deterministic profile at the lattice points
    bounding each step; the local slope is its finite difference, so infinite
    wedge slopes simply produce step-down probability 1.
    """
    halfsite = eps / 2.0
    n = len(xs_mid)
    out = np.empty(n, dtype=np.int64)
    h = start_h
    scale = math.sqrt(eps / 2.0)
    for j in range(n):
        a, b = float(det_vals[j]), float(det_vals[j + 1])
        diff = math.nan if (math.isinf(a) and math.isinf(b)) else b - a
        if math.isnan(diff) or diff == -math.inf:
            p = 0.0      # both ends below any floor: dive at full speed
        elif diff == math.inf:
            p = 1.0
        else:
            p = norm_cdf(diff / halfsite * scale)
        h += 1 if rng.random() < p else -1
        out[j] = h
    return out


def sample_randomized_wedge(spec: RandomWedgeSpec, window: int, eps: float,
                            seed: int, origin: int | None = None,
                            trajectory: int = 0) -> HeightField:
    """Sample the randomized wedge on a closed segment window.

    Anchor heights are uniform on the lattice points of [b_i, b_i + gamma]
    (the set S_gamma), interiors are exact bridges, outer branches follow the
    drifted sign construction, and the whole path is clipped at the parity-
    aligned discretized floor so samples dominate it pointwise.
    """
    origin = window // 2 if origin is None else origin
    unit = math.sqrt(eps)
    params = ScalingParams(epsilon=eps)
    anchor_pts = [origin + params.site_of(y) for y in spec.anchors_y]
    if anchor_pts[0] < 1 or anchor_pts[-1] > window - 1:
        raise WindowTooSmall(
            f"window [0, {window}] does not cover anchors {anchor_pts} with margin")
    rng = derived_generator(stream_base(seed, trajectory), 3)

    gamma_steps = round_half_up(spec.gamma / unit)
    hts = [round_half_up(b / unit) + int(rng.integers(0, gamma_steps + 1))
           for b in spec.heights_b]
    # bridge parity: adjust later anchors up one step when needed
    for i in range(1, len(hts)):
        span = anchor_pts[i] - anchor_pts[i - 1]
        if (hts[i] - hts[i - 1] + span) % 2:
            hts[i] += 1

    heights = np.zeros(window + 1, dtype=np.int64)
    heights[anchor_pts[0]] = hts[0]
    for i in range(1, len(hts)):
        a, b = anchor_pts[i - 1], anchor_pts[i]
        span = b - a
        n_up = (hts[i] - hts[i - 1] + span) // 2
        bits = sample_bridge_bits(span, n_up, rng)
        heights[a + 1: b + 1] = hts[i - 1] + np.cumsum(2 * bits.astype(np.int64) - 1)

    lattice_x = (np.arange(window + 1) - origin) * (eps / 2.0)
    det = spec.deterministic(lattice_x)
    # right branch from the last anchor
    pr = anchor_pts[-1]
    if pr < window:
        seg = _drifted_branch(hts[-1], lattice_x[pr:window], det[pr:window + 1],
                              eps, rng)
        heights[pr + 1:] = seg
    # left branch from the first anchor, built rightward then mirrored
    pl = anchor_pts[0]
    if pl > 0:
        det_rev = det[pl::-1]
        seg = _drifted_branch(hts[0], lattice_x[:pl], det_rev, eps, rng)
        heights[pl - 1::-1] = seg

    if spec.floor != math.inf:
        base = round_half_up(-spec.floor / unit)
        jj = np.arange(window + 1)
        par = (base + hts[0] + (jj - anchor_pts[0])) % 2
        floor_path = base + par
        heights = np.maximum(heights, floor_path)

    steps = np.diff(heights)
    bits = ((steps + 1) // 2).astype(np.uint8)
    return HeightField(bits=bits, anchor=float(heights[0]),
                       boundary=Boundary.CLOSED_SEGMENT, origin=origin)


def rn_l2_energy(slope_a: float, length_d: float, eps: float) -> tuple[float, float]:
    """Exact L2 energy of the drifted-walk likelihood ratio, and its bound.

    exact = (1 + (2 p_n - 1)^2)^n  with p_n = Phi(a sqrt(eps/2)) and
    n = 2 floor(d / eps); bound = exp(4 a^2 d phi(0)^2) with phi the standard
    Gaussian density.
    """
    if length_d <= 0 or eps <= 0:
        raise ValueError("need positive length and eps")
    n = 2 * int(math.floor(length_d / eps))
    p = norm_cdf(slope_a * math.sqrt(eps / 2.0))
    exact = (1.0 + (2.0 * p - 1.0) ** 2) ** n
    phi0 = 1.0 / math.sqrt(2.0 * math.pi)
    bound = math.exp(4.0 * slope_a ** 2 * length_d * phi0 ** 2)
    return exact, bound
