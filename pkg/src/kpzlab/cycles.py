"""Irreducible-cycle decompositions of mean-zero jump laws and sector constants.

A mean-zero finite-support law p can be written as a convex combination of
cycle measures pi_C, where C = (0 = y_0, y_1, ..., y_k = 0) visits distinct
interior vertices and pi_C gives weight 1/k to each step y_j - y_{j-1}.  The
decomposition here peels greedily: find a cycle through the remaining
support (breadth-first over step sequences with distinct partial sums),
remove the largest feasible multiple, recurse.  Rational inputs are handled
exactly with Fraction arithmetic.

The sector constant of a finite antisymmetric perturbation A on a fixed-
particle sector is the smallest B with

    sum  Ag (-Abar)^+ Ag  <=  B^2  sum  g (-Abar g),

computed as the top generalized eigenvalue of (A* (-Abar)^+ A, -Abar) on the
range of -Abar.  For a symmetric law A = Abar and B = 1 (Cauchy-Schwarz).
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "Cycle",
    "CycleDecomposition",
    "NotMeanZero",
    "NoCycleFound",
    "cycle_decompose",
    "verify_decomposition",
    "sector_constant",
    "mean_zero_part",
]


class NotMeanZero(ValueError):
    pass


class NoCycleFound(RuntimeError):
    pass


class TooLarge(ValueError):
    pass


class SingularForm(ValueError):
    pass


@dataclass(frozen=True)
class Cycle:
    """Closed integer walk 0 = y_0, ..., y_k = 0 with distinct interior vertices."""

    vertices: tuple[int, ...]

    def __post_init__(self):
        ys = self.vertices
        if len(ys) < 3 or ys[0] != 0 or ys[-1] != 0:
            raise ValueError("cycle must start and end at 0 with >= 2 steps")
        interior = ys[1:-1]
        if len(set(interior)) != len(interior) or 0 in interior:
            raise ValueError("interior vertices must be distinct and nonzero")

    @property
    def steps(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.vertices, self.vertices[1:]))

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def measure(self) -> dict[int, Fraction]:
        """pi_C: each of the k steps carries weight 1/k."""
        k = self.length
        out: dict[int, Fraction] = {}
        for a in self.steps:
            out[a] = out.get(a, Fraction(0)) + Fraction(1, k)
        return out


@dataclass(frozen=True)
class CycleDecomposition:
    weights: tuple[Fraction, ...]
    cycles: tuple[Cycle, ...]

    def reconstruct(self) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for w, c in zip(self.weights, self.cycles):
            for a, q in c.measure().items():
                out[a] = out.get(a, Fraction(0)) + w * q
        return {a: q for a, q in out.items() if q != 0}

    def to_jsonable(self) -> list[dict]:
        return [{"weight": [w.numerator, w.denominator], "vertices": list(c.vertices)}
                for w, c in zip(self.weights, self.cycles)]


def _to_fractions(law: Mapping[int, float | Fraction],
                  tol: float = 1e-12) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for v, r in law.items():
        if isinstance(r, Fraction):
            q = r
        elif isinstance(r, int):
            q = Fraction(r)
        else:
            q = Fraction(r).limit_denominator(10 ** 12)
            if abs(float(q) - float(r)) > tol * max(1.0, abs(float(r))):
                q = Fraction(r)
        if q < 0:
            raise ValueError("rates must be nonnegative")
        if q:
            out[int(v)] = q
    if not out:
        raise ValueError("empty law")
    return out


def _find_cycle(support: set[int], max_len: int) -> Cycle | None:
    """Shortest closed walk from 0 over the support with distinct partial sums."""
    start = (0, (0,))
    queue = deque([start])
    seen = {(0, frozenset())}
    order = sorted(support, key=lambda a: (a < 0, abs(a)))
    while queue:
        pos, path = queue.popleft()
        if len(path) - 1 > max_len:
            return None
        for a in order:
            npos = pos + a
            if npos == 0:
                if len(path) >= 2:
                    return Cycle(vertices=path + (0,))
                continue
            if npos in path:
                continue
            key = (npos, frozenset(path))
            if key in seen:
                continue
            seen.add(key)
            queue.append((npos, path + (npos,)))
    return None


def cycle_decompose(law: Mapping[int, float | Fraction]) -> CycleDecomposition:
    """Greedy peeling of a mean-zero law into weighted irreducible cycles."""
    rates = _to_fractions(law)
    mean = sum(Fraction(v) * q for v, q in rates.items())
    if mean != 0:
        raise NotMeanZero(f"law has mean {mean}, expected 0")
    total = sum(rates.values())
    rem = {v: q / total for v, q in rates.items()}
    max_v = max(abs(v) for v in rem)
    max_len = 2 * len(rem) * max_v
    weights: list[Fraction] = []
    cycles: list[Cycle] = []
    while rem:
        cyc = _find_cycle(set(rem), max_len)
        if cyc is None:
            raise NoCycleFound("no irreducible cycle through the remaining support")
        pi = cyc.measure()
        w = min(rem[a] / q for a, q in pi.items())
        weights.append(w)
        cycles.append(cyc)
        for a, q in pi.items():
            rem[a] -= w * q
            if rem[a] == 0:
                del rem[a]
            elif rem[a] < 0:
                raise NoCycleFound("negative remainder while peeling")
    return CycleDecomposition(weights=tuple(weights), cycles=tuple(cycles))


def verify_decomposition(law: Mapping[int, float | Fraction],
                         decomp: CycleDecomposition, tol: float = 1e-12) -> bool:
    """Exact (rational) or tolerance reconstruction plus per-cycle irreducibility."""
    try:
        for c in decomp.cycles:
            Cycle(vertices=c.vertices)  # revalidates distinctness
    except ValueError:
        return False
    if any(w <= 0 for w in decomp.weights):
        return False
    try:
        rates = _to_fractions(law)
    except ValueError:
        return False
    total = sum(rates.values())
    target = {v: q / total for v, q in rates.items()}
    recon = decomp.reconstruct()
    keys = set(target) | set(recon)
    for a in keys:
        lhs = recon.get(a, Fraction(0))
        rhs = target.get(a, Fraction(0))
        if lhs != rhs and abs(float(lhs - rhs)) > tol:
            return False
    return True


def mean_zero_part(law_rates: Mapping[int, float]) -> dict[int, float]:
    """Mean-zero exclusion obtained by adding the reversed unit jump.

    For a drift-1 law p, the difference of the generator and the unit-drift
    reference is M - S where M has jump law p + delta_{-1}; M has mean zero.
    """
    out = {int(v): float(r) for v, r in law_rates.items()}
    out[-1] = out.get(-1, 0.0) + 1.0
    mean = sum(v * r for v, r in out.items())
    if abs(mean) > 1e-9:
        raise NotMeanZero(f"augmented law has mean {mean}")
    return {v: r for v, r in out.items() if r != 0.0}


def _sector_space(sites: Sequence[int], n_particles: int) -> np.ndarray:
    sites = list(sites)
    rows = []
    for occ in combinations(range(len(sites)), n_particles):
        bits = np.zeros(len(sites), dtype=np.uint8)
        bits[list(occ)] = 1
        rows.append(bits)
    return np.array(rows, dtype=np.uint8)


def _cycle_generator(cycle: Cycle, configs: np.ndarray,
                     site_pos: dict[int, int]) -> np.ndarray:
    """Markov generator of the single-cycle exclusion on the given sector."""
    n_states = configs.shape[0]
    index = {c.tobytes(): i for i, c in enumerate(configs)}
    k = cycle.length
    A = np.zeros((n_states, n_states))
    ys = cycle.vertices
    for i, cfg in enumerate(configs):
        for j in range(k):
            a, b = site_pos[ys[j]], site_pos[ys[j + 1]]
            if cfg[a] == 1 and cfg[b] == 0:
                new = cfg.copy()
                new[a], new[b] = 0, 1
                A[i, index[new.tobytes()]] += 1.0 / k
    np.fill_diagonal(A, A.diagonal() - A.sum(axis=1))
    return A


def _ring_generator(rates: Mapping[int, float], n_sites: int,
                    configs: np.ndarray) -> np.ndarray:
    n_states = configs.shape[0]
    index = {c.tobytes(): i for i, c in enumerate(configs)}
    A = np.zeros((n_states, n_states))
    for i, cfg in enumerate(configs):
        for x in range(n_sites):
            if not cfg[x]:
                continue
            for v, r in rates.items():
                y = (x + v) % n_sites
                if y == x or cfg[y]:
                    continue
                new = cfg.copy()
                new[x], new[y] = 0, 1
                A[i, index[new.tobytes()]] += r
    np.fill_diagonal(A, A.diagonal() - A.sum(axis=1))
    return A


def sector_constant(cycle_or_law, n_particles: int, span: int | None = None,
                    cutoff: float = 1e-10) -> dict:
    """Smallest B with the sector inequality on a finite configuration space.

    For a :class:`Cycle`, the space is the occupation sector of the cycle's
    vertex set.  For a mean-zero law (mapping), the space is a ring of
    ``span`` sites carrying the translation-aggregated generator.  Returns B
    together with the operators' dimensions; B = 0 when the sector admits no
    moves (empty or full).
    """
    if isinstance(cycle_or_law, Cycle):
        verts = sorted(set(cycle_or_law.vertices))
        site_pos = {v: i for i, v in enumerate(verts)}
        n_sites = len(verts)
        configs = _sector_space(verts, n_particles)
        if configs.shape[0] > 10 ** 4:
            raise TooLarge("sector space exceeds 10^4 states")
        A = _cycle_generator(cycle_or_law, configs, site_pos)
    else:
        rates = {int(v): float(r) for v, r in dict(cycle_or_law).items()}
        mean = sum(v * r for v, r in rates.items())
        if abs(mean) > 1e-9:
            raise NotMeanZero("sector constants require a mean-zero law")
        if span is None:
            raise ValueError("span (ring size) required for a full law")
        if span <= max(abs(v) for v in rates):
            raise ValueError("span must exceed the maximum jump range")
        configs = _sector_space(range(span), n_particles)
        if configs.shape[0] > 10 ** 4:
            raise TooLarge("sector space exceeds 10^4 states")
        A = _ring_generator(rates, span, configs)

    if not np.any(A):
        return {"B": 0.0, "dim": int(configs.shape[0]), "rank": 0}
    Abar = 0.5 * (A + A.T)
    w, V = np.linalg.eigh(-Abar)
    scale = max(w.max(), 1.0)
    keep = w > cutoff * scale
    if not np.any(keep):
        raise SingularForm("-Abar vanishes on the whole sector")
    wk = w[keep]
    Vk = V[:, keep]
    # pseudo-inverse of -Abar on its range
    pinv = Vk @ np.diag(1.0 / wk) @ Vk.T
    M1 = Vk.T @ (A.T @ pinv @ A) @ Vk
    M2 = np.diag(wk)
    from scipy.linalg import eigh as sc_eigh

    vals = sc_eigh(0.5 * (M1 + M1.T), M2, eigvals_only=True)
    B = float(math.sqrt(max(vals.max(), 0.0)))
    return {"B": B, "dim": int(configs.shape[0]), "rank": int(keep.sum()),
            "A": A, "Abar": Abar}
