"""Lattice configurations, height paths, jump moves and jump-law validation.

Everything here lives on the microscopic integer lattice: a window of N
sites carries occupation bits eta(x) in {0,1}, and the associated height
path h on the N+1 lattice points (N on a ring) obeys

    h(x+1) = h(x) + eta_hat(x),    eta_hat(x) = 2 eta(x) - 1.

Heights are measured in units of one step; the KPZ rescaling (site spacing
eps/2, height unit sqrt(eps), time unit 2 eps^{-3/2}) is applied only
through :class:`ScalingParams`, so a single canonical state representation
serves every model and every eps.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "Boundary",
    "JumpLaw",
    "HeightField",
    "LocalShape",
    "ScalingParams",
    "ZeroDrift",
    "Reducible",
    "EmptyLaw",
    "OutOfWindow",
    "ZeroDisplacement",
    "BoundarySite",
    "validate_jump_law",
    "apply_jump",
    "symmetric_exchange",
    "exchange_path",
    "shift",
    "local_shape",
    "wedge_vee_identities",
    "round_half_up",
]


class ZeroDrift(ValueError):
    """Jump law has zero mean; the process does not move on KPZ scales."""


class Reducible(ValueError):
    """Symmetrized support does not generate the integers (gcd > 1)."""


class EmptyLaw(ValueError):
    """No strictly positive rate in the proposed jump law."""


class OutOfWindow(IndexError):
    """A move would leave a closed segment."""


class ZeroDisplacement(ValueError):
    """Exchange path requested for v = 0."""


class BoundarySite(IndexError):
    """Local shape queried at a lattice point without both neighbours."""


def round_half_up(z: float) -> int:
    """Nearest integer, ties toward +inf (the lattice rounding rule)."""
    return int(math.floor(z + 0.5))


class Boundary(enum.Enum):
    CLOSED_SEGMENT = "segment"
    PERIODIC_RING = "ring"


@dataclass(frozen=True)
class JumpLaw:
    """Finite-support rate table v -> p(v), normalized so sum_v v p(v) = 1."""

    rates: Mapping[int, float]

    @property
    def normalized_mean(self) -> float:
        return sum(v * r for v, r in self.rates.items())

    @property
    def max_range(self) -> int:
        return max(abs(v) for v in self.rates)

    @property
    def total_rate(self) -> float:
        """Per-particle attempt rate sum_v p(v)."""
        return sum(self.rates.values())

    def symmetrized(self) -> dict[int, float]:
        """p_sym(v) = (p(v) + p(-v)) / 2."""
        out: dict[int, float] = {}
        for v, r in self.rates.items():
            out[v] = out.get(v, 0.0) + r / 2.0
            out[-v] = out.get(-v, 0.0) + r / 2.0
        return {v: r for v, r in out.items() if r > 0.0}

    def to_json(self) -> str:
        return json.dumps({str(v): r for v, r in sorted(self.rates.items())})

    @staticmethod
    def from_json(text: str) -> "JumpLaw":
        raw = {int(k): float(v) for k, v in json.loads(text).items()}
        return validate_jump_law(raw)


def validate_jump_law(raw_rates: Mapping[int, float]) -> JumpLaw:
    """Check support, irreducibility and drift; rescale to unit mean.

    Multiplying all rates by a constant only changes the time scale, so a
    law with mean m != 0 is rescaled by 1/m.  Zero-mean laws are rejected:
    under the 1:2:3 scaling such a process does not move.
    """
    rates = {int(v): float(r) for v, r in raw_rates.items() if r != 0.0}
    if any(r < 0 for r in rates.values()):
        raise ValueError("negative rate in jump law")
    if not rates or all(r == 0.0 for r in rates.values()):
        raise EmptyLaw("jump law needs at least one positive rate")
    if any(v == 0 for v in rates):
        raise ValueError("displacement 0 carries no move")
    g = 0
    for v in rates:
        g = math.gcd(g, abs(v))
    if g != 1:
        raise Reducible(f"gcd of support is {g}; the walk is not irreducible")
    mean = sum(v * r for v, r in rates.items())
    if mean == 0.0 or abs(mean) < 1e-15 * sum(abs(v) * r for v, r in rates.items()):
        raise ZeroDrift("sum_v v p(v) = 0")
    scale = 1.0 / mean
    if scale < 0:
        raise ZeroDrift("negative drift; flip space instead of running backwards")
    return JumpLaw(rates={v: r * scale for v, r in rates.items()})


@dataclass(frozen=True)
class HeightField:
    """Occupation bits on a window plus the anchored height path.

    ``anchor`` is the height at the leftmost lattice point (index 0), in
    units of one step.  ``origin`` is the array index of microscopic site 0,
    so experiments can center their window on the macroscopic origin.
    """

    bits: np.ndarray
    anchor: float = 0.0
    boundary: Boundary = Boundary.CLOSED_SEGMENT
    origin: int = 0

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.bits, dtype=np.uint8))
        if b.ndim != 1 or b.size == 0:
            raise ValueError("bits must be a nonempty 1-d sequence")
        if not np.all((b == 0) | (b == 1)):
            raise ValueError("bits must be 0/1")
        object.__setattr__(self, "bits", b)
        b.setflags(write=False)

    @property
    def n_sites(self) -> int:
        return int(self.bits.size)

    @property
    def n_particles(self) -> int:
        return int(self.bits.sum())

    @property
    def winding(self) -> int:
        """Net height change around the window: 2*(#particles) - N."""
        return 2 * self.n_particles - self.n_sites

    def heights(self) -> np.ndarray:
        """Height path at lattice points 0..N (segment) or 0..N-1 (ring).

        On a ring a globally defined height needs zero winding, i.e. exactly
        N/2 particles.
        """
        steps = 2.0 * self.bits.astype(np.float64) - 1.0
        if self.boundary is Boundary.PERIODIC_RING:
            if self.winding != 0:
                raise ValueError("ring height is multivalued unless half filled")
            h = np.empty(self.n_sites, dtype=np.float64)
            h[0] = self.anchor
            np.cumsum(steps[:-1], out=h[1:])
            h[1:] += self.anchor
            return h
        h = np.empty(self.n_sites + 1, dtype=np.float64)
        h[0] = self.anchor
        np.cumsum(steps, out=h[1:])
        h[1:] += self.anchor
        return h

    def to_json(self) -> str:
        return json.dumps(
            {
                "anchor": self.anchor,
                "bits": self.bits.tolist(),
                "boundary": self.boundary.value,
                "origin": self.origin,
            }
        )

    @staticmethod
    def from_json(text: str) -> "HeightField":
        d = json.loads(text)
        return HeightField(
            bits=np.array(d["bits"], dtype=np.uint8),
            anchor=float(d["anchor"]),
            boundary=Boundary(d["boundary"]),
            origin=int(d.get("origin", 0)),
        )


@dataclass(frozen=True)
class LocalShape:
    """(eps/2)-normalized one-sided gradients and extremum flags at a point."""

    grad_minus: float
    grad_plus: float
    is_local_max: int
    is_local_min: int

    def __post_init__(self):
        if self.is_local_max * self.is_local_min != 0:
            raise ValueError("a point cannot be both a local max and min")


@dataclass(frozen=True)
class ScalingParams:
    """The 1:2:3 dictionary between microscopic and rescaled coordinates.

    Rescaled height: h_eps(t, x) = sqrt(eps) * h(2 eps^{-3/2} t, 2 eps^{-1} x)
    + t / eps.  Microscopic site of the rescaled coordinate x is
    round(2 x / eps), ties toward +inf.
    """

    epsilon: float
    delta: float = 0.0
    macro_time: float = 0.0
    averaging_std: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")
        if self.delta < 0 or self.macro_time < 0 or self.averaging_std < 0:
            raise ValueError("delta, macro_time, averaging_std must be >= 0")

    @property
    def micro_time(self) -> float:
        return 2.0 * self.epsilon ** (-1.5) * self.macro_time

    @property
    def height_unit(self) -> float:
        return math.sqrt(self.epsilon)

    @property
    def site_spacing(self) -> float:
        return self.epsilon / 2.0

    def site_of(self, x_macro: float) -> int:
        return round_half_up(2.0 * x_macro / self.epsilon)

    def macro_of_site(self, site: int) -> float:
        return site * self.epsilon / 2.0

    def snap_height(self, r: float) -> int:
        """[r]_{sqrt(eps)} in units of one step, ties toward +inf."""
        return round_half_up(r / self.height_unit)

    def rescale(self, h_steps: float) -> float:
        """Rescaled height of a microscopic height (in steps) at macro_time."""
        return self.height_unit * h_steps + self.macro_time / self.epsilon


def _check_site(h: HeightField, x: int) -> None:
    if not (0 <= x < h.n_sites):
        raise OutOfWindow(f"site {x} outside window of {h.n_sites} sites")


def _resolve_target(h: HeightField, x: int, v: int) -> int:
    y = x + v
    if h.boundary is Boundary.PERIODIC_RING:
        return y % h.n_sites
    if not (0 <= y < h.n_sites):
        raise OutOfWindow(f"target site {y} exits the closed segment")
    return y


def apply_jump(h: HeightField, x: int, v: int) -> HeightField:
    """Particle at x jumps to x+v if allowed; otherwise the field is unchanged.

    A jump with v > 0 lowers the height by 2 at the lattice points
    x+1, ..., x+v; v < 0 raises it by 2 at x+v+1, ..., x.
    """
    _check_site(h, x)
    y = _resolve_target(h, x, v)
    if v == 0 or h.bits[x] != 1 or h.bits[y] != 0:
        return h
    bits = h.bits.copy()
    bits[x], bits[y] = 0, 1
    anchor = h.anchor
    if h.boundary is Boundary.PERIODIC_RING:
        # the anchor (height at lattice point 0) moves when the jump crosses
        # the seam between site N-1 and site 0
        if v > 0 and x + v >= h.n_sites:
            anchor -= 2.0
        elif v < 0 and x + v < 0:
            anchor += 2.0
    return replace(h, bits=bits, anchor=anchor)


def symmetric_exchange(h: HeightField, x: int, v: int) -> HeightField:
    """Swap the occupations at x and x+v (identity if they agree)."""
    _check_site(h, x)
    y = _resolve_target(h, x, v)
    if v == 0 or h.bits[x] == h.bits[y]:
        return h
    if h.bits[x] == 1:
        return apply_jump(h, x, v)
    # occupied target: the particle at x+v jumps by -v
    return apply_jump(h, y, -v)


def exchange_path(x: int, v: int) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds whose composed swaps equal the (x, x+v) swap.

    Forward-then-backward bubble: carry the content of x out to x+v along
    adjacent bonds, then carry the displaced content back.  Length 2|v| - 1,
    and composing the swaps in order exchanges the endpoints while fixing
    every intermediate site, on every configuration.
    """
    if v == 0:
        raise ZeroDisplacement("exchange over zero displacement")
    if v > 0:
        forward = [(x + j, x + j + 1) for j in range(v)]
        backward = [(x + j, x + j + 1) for j in range(v - 2, -1, -1)]
        return forward + backward
    forward = [(x - 1 - j, x - j) for j in range(-v)]
    backward = [(x - 1 - j, x - j) for j in range(-v - 2, -1, -1)]
    return forward + backward


def shift(
    h: HeightField, space_y: float, height_r: float, eps: float
) -> tuple[HeightField, bool]:
    """Apply the lattice shift tau_{[y]_eps} then the height shift sigma_{[r]}.

    [y]_eps is the nearest point of the eps/2 site lattice and [r]_{sqrt(eps)}
    the nearest height-lattice point, ties toward +inf.  On a ring the space
    shift is cyclic; on a segment the window slides and vacated sites are
    filled with the alternating (flat) pattern, with the truncation flag set.
    """
    k = round_half_up(2.0 * space_y / eps)
    r_steps = round_half_up(height_r / math.sqrt(eps))
    bits = h.bits
    anchor = h.anchor
    truncated = False
    if k != 0:
        if h.boundary is Boundary.PERIODIC_RING:
            n = h.n_sites
            kk = k % n
            # tau_y h(.) = h(. - [y]): contents move k sites to the right
            bits = np.roll(bits, kk)
            if h.winding == 0:
                # new anchor = old height at lattice point -k (mod n)
                steps = 2.0 * h.bits.astype(np.int64) - 1.0
                j = (-kk) % n
                anchor = h.anchor + float(steps[:j].sum())
            truncated = False
        else:
            n = h.n_sites
            fill = ((np.arange(n) + h.origin) % 2).astype(np.uint8)  # flat zigzag
            out = fill.copy()
            if k > 0:
                # contents slide right; the left edge value is no longer known
                if k < n:
                    out[k:] = bits[: n - k]
            else:
                kk = -k
                if kk < n:
                    out[: n - kk] = bits[kk:]
                steps = 2.0 * h.bits.astype(np.int64) - 1.0
                anchor = h.anchor + float(steps[: min(kk, n)].sum())
            bits = out
            truncated = True
    anchor = anchor + r_steps
    return replace(h, bits=bits, anchor=anchor), truncated


def local_shape(h: HeightField, x: int, eps: float) -> LocalShape:
    """One-sided gradients and extremum flags at lattice point x.

    grad_minus = (h(x) - h(x - eps/2)) / (eps/2) and similarly grad_plus,
    with the height measured in rescaled units (steps of sqrt(eps)).
    """
    n = h.n_sites
    if h.boundary is Boundary.PERIODIC_RING:
        left = h.bits[(x - 1) % n]
        right = h.bits[x % n]
    else:
        if not (1 <= x <= n - 1):
            raise BoundarySite(f"lattice point {x} lacks two neighbours")
        left = h.bits[x - 1]
        right = h.bits[x]
    sl = 2 * int(left) - 1
    sr = 2 * int(right) - 1
    unit = 2.0 / math.sqrt(eps)  # sqrt(eps) / (eps/2)
    return LocalShape(
        grad_minus=sl * unit,
        grad_plus=sr * unit,
        is_local_max=int(sl == 1 and sr == -1),
        is_local_min=int(sl == -1 and sr == 1),
    )


def wedge_vee_identities(shape: LocalShape, eps: float) -> tuple[float, float, float, float]:
    """Evaluate both sides of the corner-indicator identities

        4*1_wedge = -(eps/4) grad- grad+ - (eps^{3/2}/4) lap + 1
        4*1_vee   = -(eps/4) grad- grad+ + (eps^{3/2}/4) lap + 1

    where lap is the discrete (eps/2)-normalized second difference.  Written
    out in the step variables the eps powers cancel identically, so the
    right-hand sides are evaluated in that cancelled form and the identities
    hold exactly in floating point for every eps.
    """
    sl = 1 if shape.grad_minus > 0 else -1
    sr = 1 if shape.grad_plus > 0 else -1
    # -(eps/4) grad- grad+ = -sl*sr ; (eps^{3/2}/4) lap = (sr - sl)
    rhs_wedge = float(-sl * sr - (sr - sl) + 1)
    rhs_vee = float(-sl * sr + (sr - sl) + 1)
    lhs_wedge = 4.0 * shape.is_local_max
    lhs_vee = 4.0 * shape.is_local_min
    return lhs_wedge, rhs_wedge, lhs_vee, rhs_vee


def reconstruct(heights: Sequence[float], boundary: Boundary = Boundary.CLOSED_SEGMENT,
                origin: int = 0) -> HeightField:
    """Build a HeightField from a +-1-step height path (consistency helper)."""
    harr = np.asarray(heights, dtype=np.float64)
    steps = np.diff(harr)
    if not np.all(np.isin(steps, (-1.0, 1.0))):
        raise ValueError("not a +-1 step path")
    bits = ((steps + 1) / 2).astype(np.uint8)
    return HeightField(bits=bits, anchor=float(harr[0]), boundary=boundary, origin=origin)
