"""Continuous-time Monte Carlo for TASEP / ASEP / AEP / WASEP height functions.

The simulation uses rejection (null-event) kinetic Monte Carlo with a global
clock: every particle attempts each displacement v at its microscopic rate,
the total attempt rate R = (#particles) * sum_v rate(v) never changes, and a
blocked attempt advances time without moving anything.  This realizes the
exclusion generator exactly; the equivalence is asserted against the dense
CTMC oracle in the test suite.

``run_to_time`` exploits the constant clock: the number of attempts in a
window of length dt is Poisson(R dt), so it draws that count once and applies
the events without per-event exponentials.  ``step`` keeps the literal
one-event contract (exponential holding time) for inspection and small-scale
use; both views sample the same process law and are deterministic in
(seed, spec, initial field, call sequence).

The hot loop lives in the compiled extension ``_kernel`` when available, with
a bit-identical pure-Python fallback selected at import time (see
``KERNEL_KIND`` / ``kpzlab.engine.kernel_kind()``).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as dfield
from typing import Optional

import numpy as np

from .core import Boundary, HeightField, JumpLaw, ScalingParams
from .rng import displacement_thresholds, derived_generator, splitmix64, stream_base

if os.environ.get("KPZLAB_FORCE_FALLBACK"):
    from . import _kernel_fallback as _impl
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernel_fallback as _impl

KERNEL_KIND = _impl.KERNEL_KIND

__all__ = [
    "ModelSpec",
    "SimState",
    "Frozen",
    "IncompatibleBoundary",
    "SiteOutsideWindow",
    "TimeMismatch",
    "build_state",
    "step",
    "run_to_time",
    "rescaled_height",
    "kernel_kind",
]


class Frozen(RuntimeError):
    """No particle can attempt a move (total rate zero)."""


class IncompatibleBoundary(ValueError):
    """Window too small for the jump range of the model."""


class SiteOutsideWindow(IndexError):
    pass


class TimeMismatch(ValueError):
    pass


def kernel_kind() -> str:
    """'compiled' when the Cython extension is active, else 'python'."""
    return KERNEL_KIND


@dataclass(frozen=True)
class ModelSpec:
    """A model plus its per-particle microscopic rate menu.

    Rates are per particle per microscopic time unit; the TASEP clock
    2 eps^{-3/2} that converts macroscopic time to microscopic time lives in
    ScalingParams, never here.
    """

    kind: str
    micro_rates: dict[int, float]

    @staticmethod
    def tasep() -> "ModelSpec":
        return ModelSpec(kind="tasep", micro_rates={1: 1.0})

    @staticmethod
    def asep(p_right: float, p_left: float) -> "ModelSpec":
        if p_right < 0 or p_left < 0 or p_right + p_left == 0:
            raise ValueError("ASEP rates must be nonnegative, not both zero")
        rates = {}
        if p_right:
            rates[1] = float(p_right)
        if p_left:
            rates[-1] = float(p_left)
        return ModelSpec(kind="asep", micro_rates=rates)

    @staticmethod
    def aep(law: JumpLaw) -> "ModelSpec":
        return ModelSpec(kind="aep", micro_rates=dict(law.rates))

    @staticmethod
    def wasep(epsilon: float, delta: float) -> "ModelSpec":
        # (T_eps + S_{eps,delta}) / (2 eps^{-3/2}): symmetric exchanges at
        # rate delta eps^{-1/2} on top of the unit right jump
        s = delta * epsilon ** (-0.5)
        return ModelSpec(kind="wasep", micro_rates={1: 1.0 + s, -1: s})

    @property
    def total_rate(self) -> float:
        return sum(self.micro_rates.values())

    @property
    def max_range(self) -> int:
        return max(abs(v) for v in self.micro_rates)

    def is_nearest_neighbor(self) -> bool:
        return self.max_range == 1


class SimState:
    """Single-owner trajectory state: field, clock, counter-based rng.

    Identical (seed, spec, initial field, trajectory, call sequence) produce
    identical states; independent trajectories use independent streams keyed
    by seed XOR trajectory index.
    """

    __slots__ = ("spec", "boundary", "origin", "anchor", "occ", "sites",
                 "micro_time", "event_count", "seed", "trajectory",
                 "base", "ctr", "_vlist", "_vcum")

    def __init__(self, field: HeightField, spec: ModelSpec, seed: int,
                 trajectory: int = 0):
        self.spec = spec
        self.boundary = field.boundary
        self.origin = field.origin
        self.anchor = float(field.anchor)
        self.occ = field.bits.copy()
        self.occ.setflags(write=True)
        self.sites = np.flatnonzero(self.occ).astype(np.int64)
        self.micro_time = 0.0
        self.event_count = 0
        self.seed = int(seed)
        self.trajectory = int(trajectory)
        self.base = stream_base(seed, trajectory)
        self.ctr = 0
        self._vlist, self._vcum = displacement_thresholds(spec.micro_rates)

    @property
    def n_particles(self) -> int:
        return int(self.sites.size)

    @property
    def total_rate(self) -> float:
        return self.n_particles * self.spec.total_rate

    @property
    def field(self) -> HeightField:
        return HeightField(bits=self.occ.copy(), anchor=self.anchor,
                           boundary=self.boundary, origin=self.origin)

    def copy(self) -> "SimState":
        out = object.__new__(SimState)
        for name in SimState.__slots__:
            val = getattr(self, name)
            if isinstance(val, np.ndarray) and name in ("occ", "sites"):
                val = val.copy()
            setattr(out, name, val)
        return out

    def _apply_events(self, n_events: int) -> None:
        ctr, adelta = _impl.run_events(
            self.occ, self.sites, np.uint64(self.base), np.uint64(self.ctr),
            int(n_events), self._vlist, self._vcum,
            self.boundary is Boundary.PERIODIC_RING,
        )
        self.ctr = int(ctr)
        self.anchor += float(adelta)
        self.event_count += int(n_events)


def build_state(field: HeightField, spec: ModelSpec, seed: int,
                trajectory: int = 0) -> SimState:
    """Initial state at micro_time 0 with a reproducible stream."""
    if field.n_sites <= spec.max_range:
        raise IncompatibleBoundary(
            f"window of {field.n_sites} sites cannot host jumps of range "
            f"{spec.max_range}")
    return SimState(field, spec, seed, trajectory)


def step(state: SimState) -> tuple[SimState, float]:
    """One attempt of the global clock: dt ~ Exponential(R), one event.

    Blocked attempts are null events: the state is unchanged but time still
    advances, which is exactly the rejection realization of the exclusion
    generator.
    """
    R = state.total_rate
    if R <= 0.0:
        raise Frozen("total attempt rate is zero")
    out = state.copy()
    d = splitmix64((out.base + out.ctr) & 0xFFFFFFFFFFFFFFFF)
    out.ctr += 1
    u = (d + 0.5) / 2.0 ** 64
    dt = -math.log(u) / R
    out._apply_events(1)
    out.micro_time += dt
    return out, dt


def run_to_time(state: SimState, micro_t: float) -> SimState:
    """Advance to the microscopic horizon micro_t (exact uniformized count).

    The attempt clock has constant rate R, so the number of events in the
    window is Poisson(R dt); the count is drawn once from a stream keyed to
    the current counter and the events are applied in the compiled loop.
    Frozen states simply wait.
    """
    if micro_t < state.micro_time - 1e-12:
        raise ValueError("cannot run backwards in time")
    out = state.copy()
    dt = micro_t - out.micro_time
    R = out.total_rate
    if R > 0.0 and dt > 0.0:
        rng = derived_generator(out.base, 1, out.ctr)
        n_events = int(rng.poisson(R * dt))
        if n_events:
            out._apply_events(n_events)
    out.micro_time = float(micro_t)
    return out


def rescaled_height(state: SimState, params: ScalingParams, x_macro: float) -> float:
    """eps^{1/2} h(micro site) + eps^{-1} t at the lattice point of x_macro."""
    if not math.isclose(state.micro_time, params.micro_time,
                        rel_tol=1e-9, abs_tol=1e-9):
        raise TimeMismatch(
            f"state at micro time {state.micro_time}, params want {params.micro_time}")
    site = params.site_of(x_macro)
    idx = state.origin + site
    n = state.occ.size
    if state.boundary is Boundary.PERIODIC_RING:
        idx %= n
    elif not (0 <= idx <= n):
        raise SiteOutsideWindow(f"lattice point {idx} outside window")
    steps = 2.0 * state.occ[:idx].astype(np.int64) - 1.0
    h_steps = state.anchor + float(steps.sum())
    return params.rescale(h_steps)


def terminal_heights(state: SimState) -> np.ndarray:
    """Height path of the current state (steps of one unit, anchored left)."""
    return state.field.heights()
