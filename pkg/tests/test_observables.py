import math

import numpy as np
import pytest

from kpzlab.core import Boundary, HeightField, ScalingParams
from kpzlab.engine import ModelSpec, build_state, run_to_time
from kpzlab.initial import ProfileSpec, WindowTooSmall, discretize_profile
from kpzlab.observables import (
    EmpiricalDistribution,
    NonDecayingProfile,
    NoSamples,
    TargetSet,
    contains,
    count_maxima,
    estimate_hit_probability,
    ks_distance,
    maxima_tail,
    modulus_of_continuity,
    one_point_distribution,
)
from kpzlab import oracle


def field(bits, **kw):
    return HeightField(bits=np.array(bits, dtype=np.uint8), **kw)


PARAMS1 = ScalingParams(epsilon=1.0, macro_time=0.0)


class TestContains:
    def test_huge_constant_is_true(self):
        t = TargetSet(mode="hyp", profile=ProfileSpec.constant(1e9))
        assert contains(t, field([1, 0, 1, 0]), PARAMS1)

    def test_boundary_case(self):
        prof = ProfileSpec.from_points([[0.0, 0.0]], left_slope=0, right_slope=0)
        f = discretize_profile(prof, 10, 1.0)
        g = ProfileSpec.from_points(
            [[x, h] for x, h in zip((np.arange(11) - 5) * 0.5, f.heights())])
        assert contains(TargetSet(mode="hyp", profile=g), f, PARAMS1)
        assert not contains(TargetSet(mode="epi", profile=g), f, PARAMS1)

    def test_single_violation(self):
        t = TargetSet(mode="hyp", profile=ProfileSpec.constant(0.5))
        assert not contains(t, field([1, 0]), PARAMS1)  # h(1) = 1 > 0.5


class TestHitProbability:
    def test_certain_event_at_t0(self):
        t = TargetSet(mode="hyp", profile=ProfileSpec.constant(50.0))
        init = lambda seed, traj: field([1, 0, 1, 0])
        p, se = estimate_hit_probability(
            ModelSpec.tasep(), init, 0.0, t, PARAMS1, 200, seed=1)
        assert p == 1.0 and se == 0.0

    def test_zero_averaging_reproducible(self):
        t = TargetSet(mode="hyp", profile=ProfileSpec.constant(1.5))
        init = lambda seed, traj: field([1, 0, 1, 0, 0, 1])
        prm = ScalingParams(epsilon=1.0)
        a = estimate_hit_probability(ModelSpec.tasep(), init, 0.5, t, prm, 300, 9)
        b = estimate_hit_probability(ModelSpec.tasep(), init, 0.5, t, prm, 300, 9)
        assert a == b

    def test_tiny_averaging_matches_plain(self):
        # shifts below one lattice spacing round away exactly
        t = TargetSet(mode="hyp", profile=ProfileSpec.constant(1.5))
        init = lambda seed, traj: field([1, 0, 1, 0, 0, 1])
        plain = ScalingParams(epsilon=1.0, averaging_std=0.0)
        tiny = ScalingParams(epsilon=1.0, averaging_std=1e-9)
        a = estimate_hit_probability(ModelSpec.tasep(), init, 0.5, t, plain, 300, 9)
        b = estimate_hit_probability(ModelSpec.tasep(), init, 0.5, t, tiny, 300, 9)
        assert a[0] == b[0]

    def test_monotone_in_target_coupled(self):
        g1 = ProfileSpec.constant(1.5)
        g2 = ProfileSpec.constant(2.5)
        init = lambda seed, traj: field([1, 0, 1, 0, 0, 1])
        prm = ScalingParams(epsilon=1.0)
        p1, _, p2, _ = estimate_hit_probability(
            ModelSpec.tasep(), init, 0.4, TargetSet(mode="hyp", profile=g1),
            prm, 500, 3, coupled_with=TargetSet(mode="hyp", profile=g2))
        assert p2 >= p1

    def test_matches_oracle_small_system(self):
        # 3-site TASEP at micro time 2 against the dense transition matrix.
        # The estimator tests the rescaled field, so the oracle event uses
        # g - t/eps on the bare height paths.
        bits0 = (1, 1, 0)
        t_micro = 2.0
        eps = 1.0
        t_macro = t_micro / 2.0  # micro = 2 eps^{-3/2} t with eps = 1
        g = ProfileSpec.constant(2.5)
        space = oracle.state_space(3)
        gen = oracle.generator_matrix(space, ModelSpec.tasep())
        P = oracle.transition_matrix(gen, t_micro)
        u = oracle.hyp_indicator(space, np.full(4, 2.5 - t_macro / eps))
        p_exact = float(P[space.index_of(bits0)] @ u)
        assert 0.05 < p_exact < 0.95  # nondegenerate check
        init = lambda seed, traj: field(list(bits0))
        prm = ScalingParams(epsilon=eps)
        n = 20_000
        p_mc, se = estimate_hit_probability(
            ModelSpec.tasep(), init, t_macro, TargetSet(mode="hyp", profile=g),
            prm, n, seed=17)
        se_exact = math.sqrt(p_exact * (1 - p_exact) / n)
        assert abs(p_mc - p_exact) <= 4 * se_exact

    def test_no_samples(self):
        t = TargetSet(mode="hyp", profile=ProfileSpec.constant(0.0))
        with pytest.raises(NoSamples):
            estimate_hit_probability(ModelSpec.tasep(),
                                     lambda s, i: field([1, 0]), 0.0, t,
                                     PARAMS1, 0, 0)


class TestCountMaxima:
    @pytest.mark.parametrize("vals,expected", [
        ((0, 1, 0, 1, 0), 2),
        ((0, 1, 2, 1, 0), 1),
        ((0, 1, 1, 0), 2),
    ])
    def test_examples(self, vals, expected):
        assert count_maxima(vals) == expected

    def test_shift_invariance(self):
        vals = [0.0, 2.0, 1.0, 2.0, -1.0]
        for c in (-3.5, 0.0, 7.25):
            assert count_maxima([v + c for v in vals]) == count_maxima(vals)


class TestMaximaTail:
    def test_steep_profile_statistics(self):
        prof = ProfileSpec.from_points([[0.0, 0.0]], left_slope=2.0,
                                       right_slope=-2.0)
        res = maxima_tail(prof, 0.01, window=400, n=20_000, seed=5)
        pmf = np.array(res["pmf"])
        sf = np.array(res["survival"])
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(sf) <= 1e-15)
        assert pmf[0] > 0.5  # steep decay isolates a single max
        assert res["envelope_c"] > 0

    def test_non_decaying_rejected(self):
        with pytest.raises(NonDecayingProfile):
            maxima_tail(ProfileSpec.constant(0.0), 0.01, 100, 10, 0)


class TestModulus:
    def test_linear_field(self):
        eps = 0.01
        prof = ProfileSpec.from_points([[0.0, 0.0]], left_slope=1.0,
                                       right_slope=1.0)
        f = discretize_profile(prof, 600, eps)
        prm = ScalingParams(epsilon=eps)
        w = modulus_of_continuity(f, prm, b=0.1, L=1.0)
        assert w == pytest.approx(0.1, abs=2 * math.sqrt(eps))

    def test_lower_bound_and_monotone(self):
        eps = 0.04
        f = discretize_profile(ProfileSpec.constant(0.0), 200, eps)
        prm = ScalingParams(epsilon=eps)
        w1 = modulus_of_continuity(f, prm, 0.1, 1.0)
        w2 = modulus_of_continuity(f, prm, 0.3, 1.0)
        assert w1 >= math.sqrt(eps) - 1e-12
        assert w2 >= w1

    def test_window_too_small(self):
        f = field([1, 0])
        with pytest.raises(WindowTooSmall):
            modulus_of_continuity(f, PARAMS1, 0.5, 50.0)


class TestOnePoint:
    def test_singleton_deterministic(self):
        init = lambda seed, traj: field([1, 0, 1, 0], anchor=2.0)
        prm = ScalingParams(epsilon=1.0)
        a = one_point_distribution(ModelSpec.tasep(), init, 0.7, 0.0, prm, 1, 5)
        b = one_point_distribution(ModelSpec.tasep(), init, 0.7, 0.0, prm, 1, 5)
        assert a.samples.tolist() == b.samples.tolist()
        assert a.count == 1

    def test_point_mass_at_t0(self):
        init = lambda seed, traj: field([1, 0, 1, 0], anchor=2.0)
        prm = ScalingParams(epsilon=1.0)
        d = one_point_distribution(ModelSpec.tasep(), init, 0.0, 0.0, prm, 50, 5)
        assert np.all(d.samples == 2.0)


class TestKsDistance:
    def test_single_sample_at_median(self):
        emp = EmpiricalDistribution(samples=np.array([0.0]))
        cdf = lambda x: 0.5 * (1 + math.erf(x / math.sqrt(2)))
        assert ks_distance(emp, cdf) == pytest.approx(0.5)

    def test_self_cdf(self):
        rng = np.random.default_rng(0)
        xs = np.sort(rng.normal(size=500))
        emp = EmpiricalDistribution(samples=xs)
        assert ks_distance(emp, emp.cdf) <= 1.0 / 500 + 1e-12

    def test_correct_model_small_distance(self):
        rng = np.random.default_rng(1)
        emp = EmpiricalDistribution(samples=rng.normal(size=10_000))
        cdf = lambda x: 0.5 * (1 + math.erf(x / math.sqrt(2)))
        assert ks_distance(emp, cdf) < 0.025


class TestWorkerIndependence:
    def test_worker_count_does_not_change_results(self, monkeypatch):
        from kpzlab.initial import ProfileSpec as PS
        t = TargetSet(mode="hyp", profile=PS.constant(2.5))
        init = lambda seed, traj: field([1, 0, 1, 0, 0, 1])
        prm = ScalingParams(epsilon=1.0, averaging_std=0.3)
        ref = estimate_hit_probability(ModelSpec.tasep(), init, 0.5, t, prm,
                                       400, 13)
        monkeypatch.setenv("KPZLAB_WORKERS", "3")
        par = estimate_hit_probability(ModelSpec.tasep(), init, 0.5, t, prm,
                                       400, 13)
        assert ref == par
