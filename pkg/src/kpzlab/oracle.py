"""Dense CTMC computations on small windows: the ground truth the sampler
is checked against.

State spaces are the full 2^n occupation cube on a closed segment, or a
fixed-particle-number sector on a ring.  Transition probabilities come from
uniformization (a Poisson mixture of powers of I + Q/Lambda), which is
unconditionally stable for these non-normal generators and carries an
explicit tail tolerance.

Heights on a segment are anchored at the left end, so a configuration
determines a full height path; hypograph events and the skew-reversibility
experiment both use that convention on both sides of the identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .core import Boundary, HeightField, JumpLaw
from .engine import ModelSpec
from .initial import ProfileSpec, discretize_profile
from .observables import TargetSet

__all__ = [
    "StateSpace",
    "GeneratorMatrix",
    "TooLarge",
    "NotNearestNeighbor",
    "NotTASEP",
    "Degenerate",
    "SingularForm",
    "state_space",
    "generator_matrix",
    "transition_matrix",
    "skew_reversibility_gap",
    "dirichlet_form",
    "comparability_constants",
    "gradient_argmax_check",
    "semigroup_difference",
]

MAX_SITES = 14


class TooLarge(ValueError):
    pass


class NotNearestNeighbor(ValueError):
    pass


class NotTASEP(ValueError):
    pass


class Degenerate(ValueError):
    pass


class SingularForm(ValueError):
    pass


@dataclass(frozen=True)
class StateSpace:
    """Enumerated configurations of a small window.

    configs is an (n_states, n_sites) 0/1 array; ``index_of`` inverts the
    enumeration exactly.
    """

    n_sites: int
    boundary: Boundary
    configs: np.ndarray
    n_particles: int | None = None

    @property
    def n_states(self) -> int:
        return int(self.configs.shape[0])

    def index_of(self, bits: Sequence[int]) -> int:
        key = np.asarray(bits, dtype=np.uint8)
        if self.boundary is Boundary.CLOSED_SEGMENT:
            return int(key @ (1 << np.arange(self.n_sites, dtype=np.int64)))
        hits = np.flatnonzero((self.configs == key[None, :]).all(axis=1))
        if hits.size != 1:
            raise KeyError("configuration not in this sector")
        return int(hits[0])

    def heights(self, anchor: float = 0.0) -> np.ndarray:
        """Left-anchored height paths for every configuration.

        Segment: (n_states, n_sites + 1).  Ring sectors include the closing
        lattice point so callers can check the winding explicitly.
        """
        steps = 2.0 * self.configs.astype(np.float64) - 1.0
        h = np.concatenate(
            [np.full((self.n_states, 1), anchor),
             anchor + np.cumsum(steps, axis=1)], axis=1)
        return h


def state_space(n_sites: int, boundary: Boundary = Boundary.CLOSED_SEGMENT,
                n_particles: int | None = None) -> StateSpace:
    if n_sites > MAX_SITES:
        raise TooLarge(f"{n_sites} sites exceeds the dense limit of {MAX_SITES}")
    if boundary is Boundary.CLOSED_SEGMENT:
        n_states = 1 << n_sites
        idx = np.arange(n_states, dtype=np.int64)
        configs = ((idx[:, None] >> np.arange(n_sites)) & 1).astype(np.uint8)
        return StateSpace(n_sites=n_sites, boundary=boundary, configs=configs)
    if n_particles is None:
        n_particles = n_sites // 2
    rows = []
    for occ in combinations(range(n_sites), n_particles):
        bits = np.zeros(n_sites, dtype=np.uint8)
        bits[list(occ)] = 1
        rows.append(bits)
    return StateSpace(n_sites=n_sites, boundary=boundary,
                      configs=np.array(rows), n_particles=n_particles)


@dataclass(frozen=True)
class GeneratorMatrix:
    Q: np.ndarray
    model: str
    space: StateSpace


def _moves(space: StateSpace, rates: dict[int, float]):
    """Yield (i, j, rate) for every allowed particle jump."""
    n = space.n_sites
    ring = space.boundary is Boundary.PERIODIC_RING
    if ring:
        index = {c.tobytes(): k for k, c in enumerate(space.configs)}
    for i, cfg in enumerate(space.configs):
        for x in range(n):
            if not cfg[x]:
                continue
            for v, r in rates.items():
                y = x + v
                if ring:
                    y %= n
                elif not (0 <= y < n):
                    continue
                if cfg[y]:
                    continue
                new = cfg.copy()
                new[x], new[y] = 0, 1
                if ring:
                    j = index[new.tobytes()]
                else:
                    j = int(new @ (1 << np.arange(n, dtype=np.int64)))
                yield i, j, r


def generator_matrix(space: StateSpace, spec: ModelSpec) -> GeneratorMatrix:
    """Dense rate matrix: Q[i, j] = total rate of moves taking i to j."""
    Q = np.zeros((space.n_states, space.n_states))
    for i, j, r in _moves(space, spec.micro_rates):
        Q[i, j] += r
    np.fill_diagonal(Q, Q.diagonal() - Q.sum(axis=1))
    return GeneratorMatrix(Q=Q, model=spec.kind, space=space)


def _poisson_weights(lam: float, tol: float) -> np.ndarray:
    """Poisson(lam) pmf truncated once the missing tail is below tol."""
    if lam == 0.0:
        return np.array([1.0])
    w = [math.exp(-lam)]
    total = w[0]
    m = 0
    log_w = -lam
    while total < 1.0 - tol:
        m += 1
        log_w += math.log(lam) - math.log(m)
        wm = math.exp(log_w)
        w.append(wm)
        total += wm
        if m > 20 * lam + 200:
            break
    return np.array(w)


def transition_matrix(gen: GeneratorMatrix, t: float, tol: float = 1e-12) -> np.ndarray:
    """P_t by uniformization: sum_m pois(m; Lambda t) (I + Q/Lambda)^m."""
    if t < 0 or tol <= 0:
        raise ValueError("need t >= 0 and tol > 0")
    Q = gen.Q
    lam = float(np.max(-np.diag(Q)))
    n = Q.shape[0]
    if t == 0.0 or lam == 0.0:
        return np.eye(n)
    A = np.eye(n) + Q / lam
    w = _poisson_weights(lam * t, tol)
    P = np.eye(n) * w[0]
    term = np.eye(n)
    for m in range(1, len(w)):
        term = term @ A
        P += w[m] * term
    return P


def transition_apply(gen: GeneratorMatrix, t: float, u: np.ndarray,
                     tol: float = 1e-12) -> np.ndarray:
    """P_t @ u without forming P_t (uniformized matrix-vector products)."""
    Q = gen.Q
    lam = float(np.max(-np.diag(Q)))
    if t == 0.0 or lam == 0.0:
        return u.copy()
    A = np.eye(Q.shape[0]) + Q / lam
    w = _poisson_weights(lam * t, tol)
    acc = w[0] * u
    vec = u.copy()
    for m in range(1, len(w)):
        vec = A @ vec
        acc = acc + w[m] * vec
    return acc


def hyp_indicator(space: StateSpace, g_path: np.ndarray, anchor: float = 0.0,
                  epi: bool = False) -> np.ndarray:
    """Indicator over configurations of {h <= g} (or strict epi) pointwise."""
    H = space.heights(anchor)
    npts = min(H.shape[1], len(g_path))
    if epi:
        ok = np.all(H[:, :npts] > g_path[None, :npts] + 1e-12, axis=1)
    else:
        ok = np.all(H[:, :npts] <= g_path[None, :npts] + 1e-12, axis=1)
    return ok.astype(np.float64)


def _profile_to_path(g: ProfileSpec | HeightField, n_sites: int) -> np.ndarray:
    """Height path of g on the window (micro units, eps = 1 lattice)."""
    if isinstance(g, HeightField):
        return g.heights()
    fld = discretize_profile(g, n_sites, eps=1.0, origin=n_sites // 2)
    return fld.heights()


def skew_reversibility_gap(space: StateSpace, spec: ModelSpec, t: float,
                           f: HeightField, g: ProfileSpec | HeightField,
                           exploratory: bool = False) -> dict:
    """|P(h_t <= g | h_0 = f) - P(h_t <= -f | h_0 = -g)| from exact P_t.

    Only nearest-neighbour models qualify (the height order is not preserved
    beyond range 1); pass exploratory=True to probe longer-range laws anyway.
    The gap is reported, never asserted zero: the identity is exact for TASEP
    on a closed window but picks up boundary corrections for ASEP/SEP, which
    experiments document against growing window sizes.
    """
    if not spec.is_nearest_neighbor() and not exploratory:
        raise NotNearestNeighbor(
            "skew reversibility is only claimed for nearest-neighbour models")
    if space.boundary is not Boundary.CLOSED_SEGMENT:
        raise ValueError("the skew experiment uses closed segments")
    gen = generator_matrix(space, spec)
    P = transition_matrix(gen, t)
    g_path = _profile_to_path(g, space.n_sites)
    f_path = f.heights()
    u_fwd = hyp_indicator(space, g_path - f.anchor)
    lhs = float(P[space.index_of(f.bits)] @ u_fwd)
    g_bits = ((np.diff(g_path) + 1) // 2).astype(np.uint8)
    u_rev = hyp_indicator(space, -f_path + g_path[0])
    rhs = float(P[space.index_of(1 - g_bits)] @ u_rev)
    return {"lhs": lhs, "rhs": rhs, "gap": abs(lhs - rhs)}


def _form_matrix(space: StateSpace, rates: dict[int, float]) -> np.ndarray:
    """Quadratic-form matrix K with f' K f = sum_{x,v} p(v) E[(grad_sym f)^2]."""
    n_states = space.n_states
    n = space.n_sites
    ring = space.boundary is Boundary.PERIODIC_RING
    if ring:
        index = {c.tobytes(): k for k, c in enumerate(space.configs)}
    K = np.zeros((n_states, n_states))
    for x in range(n):
        for v, r in rates.items():
            y = x + v
            if ring:
                y %= n
                if y == x:
                    continue
            elif not (0 <= y < n):
                continue
            # permutation swapping occupations at x and y
            perm = np.empty(n_states, dtype=np.int64)
            for i, cfg in enumerate(space.configs):
                if cfg[x] == cfg[y]:
                    perm[i] = i
                else:
                    new = cfg.copy()
                    new[x], new[y] = new[y], new[x]
                    if ring:
                        perm[i] = index[new.tobytes()]
                    else:
                        perm[i] = int(new @ (1 << np.arange(n, dtype=np.int64)))
            P = np.zeros((n_states, n_states))
            P[np.arange(n_states), perm] = 1.0
            K += r * 2.0 * (np.eye(n_states) - P)
    return K / n_states


def dirichlet_form(space: StateSpace, f, law: JumpLaw | dict) -> float:
    """Unscaled form sum_x sum_v p(v) int (grad_sym_{x,v} f)^2 dnu, nu uniform.

    The eps^{-3/2} prefactor of the rescaled form belongs to the caller.
    ``f`` is a vector over states or a callable on configuration arrays.
    """
    rates = dict(law.rates) if isinstance(law, JumpLaw) else dict(law)
    vec = _as_vector(space, f)
    K = _form_matrix(space, rates)
    return float(vec @ K @ vec)


def _as_vector(space: StateSpace, f) -> np.ndarray:
    if callable(f):
        return np.array([float(f(cfg)) for cfg in space.configs])
    vec = np.asarray(f, dtype=np.float64)
    if vec.shape != (space.n_states,):
        raise ValueError("function vector has wrong length")
    return vec


def _common_range_basis(K1: np.ndarray, K2: np.ndarray, cutoff: float = 1e-10):
    """Orthonormal basis of the common range of two PSD forms.

    Raises Degenerate when the kernels differ: then one form vanishes on a
    non-constant function where the other does not (reducibility).
    """
    w1, v1 = np.linalg.eigh(K1)
    w2, v2 = np.linalg.eigh(K2)
    scale1 = max(w1.max(), 1.0)
    scale2 = max(w2.max(), 1.0)
    null1 = v1[:, w1 < cutoff * scale1]
    null2 = v2[:, w2 < cutoff * scale2]
    if null1.shape[1] != null2.shape[1]:
        raise Degenerate("the two forms have different kernels")
    # verify the null spaces agree as subspaces
    cross = null1.T @ null2
    s = np.linalg.svd(cross, compute_uv=False)
    if null1.shape[1] and (s.min() < 1.0 - 1e-8):
        raise Degenerate("the two forms have different kernels")
    basis = v1[:, w1 >= cutoff * scale1]
    if basis.shape[1] == 0:
        raise SingularForm("both forms vanish identically")
    return basis


def comparability_constants(space: StateSpace, law: JumpLaw) -> tuple[float, float]:
    """Extreme ratios of the law's Dirichlet form to the basic bond form.

    c_upper = max over non-constant f of D^p(f)/D(f), c_lower the reverse,
    both as generalized eigenvalues restricted to the common range (constants,
    and on sectors any function fixed by all exchanges, are deflated).
    """
    if space.n_sites > 10:
        raise TooLarge("comparability search limited to 10 sites")
    Kp = _form_matrix(space, dict(law.rates))
    K1 = _form_matrix(space, {1: 1.0})
    basis = _common_range_basis(Kp, K1)
    A = basis.T @ Kp @ basis
    B = basis.T @ K1 @ basis
    from scipy.linalg import eigh as sc_eigh

    vals = sc_eigh(A, B, eigvals_only=True)
    c_upper = float(vals.max())
    c_lower = float(1.0 / vals.min())
    return c_upper, c_lower


def gradient_argmax_check(space: StateSpace, t: float,
                          g: ProfileSpec | HeightField,
                          spec: ModelSpec | None = None) -> dict:
    """Flip-gradient of the TASEP hit probability vs the max/level event.

    For each height configuration h and interior lattice point x, compares
    |grad_sym_x p_t(h, hyp(g))| (from exact P_t) with the probability, started
    from -g, that h_t + h stays <= 0 away from x while h_t(x) + h(x) lands in
    {1, 2} (local max at x) or {-1, 0} (local min).  Returns the maximum
    absolute discrepancy over all cases.
    """
    if spec is not None and spec.kind != "tasep":
        raise NotTASEP("the gradient/argmax identity is a TASEP statement")
    if space.boundary is not Boundary.CLOSED_SEGMENT:
        raise ValueError("argmax check uses closed segments")
    n = space.n_sites
    spec = ModelSpec.tasep()
    gen = generator_matrix(space, spec)
    P = transition_matrix(gen, t)
    g_path = _profile_to_path(g, n)
    u = hyp_indicator(space, g_path)
    hit = P @ u
    g_bits = ((np.diff(g_path) + 1) // 2).astype(np.uint8)
    row = P[space.index_of(1 - g_bits)]
    W = space.heights(-g_path[0])          # paths from -g's anchor
    H = space.heights(0.0)
    n_pts = n + 1
    worst = 0.0
    cases = 0
    for i, cfg in enumerate(space.configs):
        h_path = H[i]
        S = W + h_path[None, :]
        # prefix/suffix maxima to exclude one lattice point at a time
        pref = np.maximum.accumulate(S, axis=1)
        suff = np.maximum.accumulate(S[:, ::-1], axis=1)[:, ::-1]
        for x in range(1, n):
            left, right = cfg[x - 1], cfg[x]
            if left == right:
                continue
            cases += 1
            flipped = cfg.copy()
            flipped[x - 1], flipped[x] = right, left
            j = space.index_of(flipped)
            lhs = abs(float(hit[j] - hit[i]))
            lo, hi = (0.0, 2.0) if left == 1 else (-2.0, 0.0)
            others = np.maximum(pref[:, x - 1], suff[:, x + 1])
            ok = (others <= 1e-9) & (S[:, x] > lo + 1e-9) & (S[:, x] <= hi + 1e-9)
            rhs = float(row[ok].sum())
            worst = max(worst, abs(lhs - rhs))
    return {"max_discrepancy": worst, "cases": cases}


def _simpson(values: np.ndarray, h: float) -> float:
    n = len(values) - 1
    return h / 3.0 * (values[0] + values[-1]
                      + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-2:2].sum())


def semigroup_difference(space: StateSpace, spec_a: ModelSpec, spec_b: ModelSpec,
                         f0, target: TargetSet | np.ndarray, t: float,
                         rel_tol: float = 1e-8) -> dict:
    """Exact transition-probability difference and the Dirichlet time integral.

    lhs = |p^A_t(f0 nu, B) - p^B_t(f0 nu, B)|; the integral is
    int_0^t D(p^A_s(., B)) ds with D the basic bond form, by composite Simpson
    with interval doubling until the relative change is below rel_tol.
    Callers report the empirical constant lhs / (||f0||_2 sqrt(integral)).
    """
    if space.n_sites > 10:
        raise TooLarge("semigroup difference limited to 10 sites")
    f0v = _as_vector(space, f0)
    if np.any(f0v < -1e-12):
        raise ValueError("f0 must be a nonnegative density")
    mean = f0v.mean()
    if abs(mean - 1.0) > 1e-9:
        raise ValueError("f0 must integrate to 1 against uniform nu")
    if isinstance(target, np.ndarray):
        u = target.astype(np.float64)
    else:
        g_path = _profile_to_path(target.profile, space.n_sites)
        u = hyp_indicator(space, g_path, epi=(target.mode == "epi"))
    gen_a = generator_matrix(space, spec_a)
    gen_b = generator_matrix(space, spec_b)
    nu = 1.0 / space.n_states
    pa = float(f0v @ transition_apply(gen_a, t, u) * nu)
    pb = float(f0v @ transition_apply(gen_b, t, u) * nu)
    lhs = abs(pa - pb)

    K1 = _form_matrix(space, {1: 1.0})

    def dform(s: float) -> float:
        w = transition_apply(gen_a, s, u)
        return float(w @ K1 @ w)

    n_iv = 4
    prev = None
    cache: dict[float, float] = {}

    def cached(s: float) -> float:
        if s not in cache:
            cache[s] = dform(s)
        return cache[s]

    while True:
        ss = np.linspace(0.0, t, n_iv + 1)
        vals = np.array([cached(float(s)) for s in ss])
        integral = _simpson(vals, t / n_iv)
        if prev is not None and abs(integral - prev) <= rel_tol * max(abs(integral), 1e-300):
            break
        prev = integral
        n_iv *= 2
        if n_iv > 4096:
            break
    norm_f0 = math.sqrt(float((f0v * f0v).mean()))
    const = lhs / (norm_f0 * math.sqrt(integral)) if integral > 0 and norm_f0 > 0 else math.inf
    return {
        "p_a": pa,
        "p_b": pb,
        "lhs": lhs,
        "dirichlet_integral": integral,
        "empirical_constant": const,
    }
