import math

import numpy as np
import pytest

from kpzlab.core import Boundary, ScalingParams
from kpzlab.initial import (
    ProfileSpec,
    RandomWedgeSpec,
    WindowTooSmall,
    discretize_profile,
    norm_cdf,
    rn_l2_energy,
    sample_bridge_bits,
    sample_drifted_walk_bits,
    sample_equilibrium_walk,
    sample_randomized_wedge,
)
from kpzlab.rng import derived_generator


class TestProfileSpec:
    def test_eval_and_extrapolation(self):
        p = ProfileSpec.from_points([[0.0, 1.0], [1.0, 2.0]],
                                    left_slope=-1.0, right_slope=0.5)
        assert p(0.5) == pytest.approx(1.5)
        assert p(-1.0) == pytest.approx(2.0)
        assert p(3.0) == pytest.approx(3.0)

    def test_knots_sorted(self):
        with pytest.raises(ValueError):
            ProfileSpec.from_points([[1.0, 0.0], [0.0, 0.0]])


class TestEquilibriumWalk:
    def test_anchor_exact(self):
        f = sample_equilibrium_walk(10, 0.25, anchor=6.0, seed=1, origin=4)
        h = f.heights()
        assert h[4] == 6.0

    def test_walk_moments(self):
        # Var of the rescaled walk at macro distance x is 2|x|; mean is 0.
        eps = 0.01
        x = 0.5
        k = int(2 * x / eps)
        n = 100_000
        window = k + 10
        vals = np.empty(n)
        for i in range(n):
            f = sample_equilibrium_walk(window, eps, 0.0, seed=5, origin=0,
                                        trajectory=i)
            vals[i] = f.heights()[k] * math.sqrt(eps)
        se_mean = vals.std() / math.sqrt(n)
        assert abs(vals.mean()) <= 3 * se_mean
        var = vals.var()
        se_var = var * math.sqrt(2.0 / n)
        assert abs(var - 2 * x) <= 3 * se_var

    def test_ring_winding_zero(self):
        f = sample_equilibrium_walk(12, 0.25, 0.0, seed=2,
                                    boundary=Boundary.PERIODIC_RING)
        assert f.winding == 0


class TestDiscretize:
    def test_flat_profile_stays_close(self):
        eps = 0.04
        f = discretize_profile(ProfileSpec.constant(0.0), 50, eps)
        assert np.max(np.abs(f.heights() * math.sqrt(eps))) <= math.sqrt(eps) + 1e-12

    def test_maximal_slope_forces_all_ups(self):
        eps = 0.04
        prof = ProfileSpec.from_points([[0.0, 0.0]],
                                       left_slope=2 * eps ** -0.5,
                                       right_slope=2 * eps ** -0.5)
        f = discretize_profile(prof, 30, eps, origin=0)
        assert f.bits.tolist() == [1] * 30

    def test_sup_error_bound(self):
        eps = 0.01
        prof = ProfileSpec.from_points([[0.0, 0.0]], left_slope=1.0,
                                       right_slope=1.0)
        f = discretize_profile(prof, 400, eps)
        xs = (np.arange(401) - 200) * eps / 2.0
        dev = np.abs(f.heights() * math.sqrt(eps) - xs)
        assert dev.max() <= math.sqrt(eps) + 0.5 * eps * 1.0 + 1e-12


class TestBridge:
    def test_exact_up_count(self):
        rng = derived_generator(0)
        for m in (1, 3, 7):
            for _ in range(25):
                bits = sample_bridge_bits(2 * m, m, rng)
                assert bits.sum() == m

    def test_first_step_symmetric(self):
        rng = derived_generator(1)
        n = 20_000
        ups = sum(int(sample_bridge_bits(4, 2, rng)[0]) for _ in range(n))
        p = ups / n
        assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / n)


class TestRandomizedWedge:
    def test_gamma_zero_limit_pins_anchor(self):
        eps = 0.04
        spec = RandomWedgeSpec(anchors_y=(0.0,), heights_b=(1.3,),
                               gamma=1e-12, slope=0.0, floor=math.inf)
        f = sample_randomized_wedge(spec, 40, eps, seed=3)
        h = f.heights()[20]  # anchor lattice point (origin)
        assert h == round(1.3 / math.sqrt(eps) + 0.5)  # [b]_{sqrt(eps)} steps

    def test_bridge_between_anchors(self):
        eps = 0.01
        spec = RandomWedgeSpec(anchors_y=(-0.2, 0.2), heights_b=(0.0, 0.0),
                               gamma=0.3, slope=1.0, floor=5.0)
        f = sample_randomized_wedge(spec, 200, eps, seed=4)
        assert f.n_sites == 200

    def test_window_too_small(self):
        spec = RandomWedgeSpec(anchors_y=(-1.0, 1.0), heights_b=(0.0, 0.0),
                               gamma=0.5)
        with pytest.raises(WindowTooSmall):
            sample_randomized_wedge(spec, 4, 0.01, seed=0)

    def test_branch_drift_matches_sign_construction(self):
        # right branch of a slope-1 wedge: step-up prob Phi(-sqrt(eps/2));
        # the realized mean slope is 2 eps^{-1/2} (2p - 1) = -(2/sqrt(pi)) + o(1)
        eps = 0.01
        spec = RandomWedgeSpec(anchors_y=(0.0,), heights_b=(0.0,),
                               gamma=1e-12, slope=1.0, floor=math.inf)
        n = 10_000
        span = 60  # stay above the floor kink
        slopes = np.empty(n)
        for i in range(n):
            f = sample_randomized_wedge(spec, 200, eps, seed=6, trajectory=i)
            h = f.heights() * math.sqrt(eps)
            x0, x1 = 100, 100 + span
            slopes[i] = (h[x1] - h[x0]) / (span * eps / 2.0)
        p = norm_cdf(-1.0 * math.sqrt(eps / 2.0))
        exact_mean = 2.0 * eps ** -0.5 * (2.0 * p - 1.0)
        se = slopes.std() / math.sqrt(n)
        assert abs(slopes.mean() - exact_mean) <= 4 * se
        assert abs(slopes.mean() - (-2.0 / math.sqrt(math.pi))) <= 0.05 * (
            2.0 / math.sqrt(math.pi))

    def test_floor_domination(self):
        eps = 0.04
        L = 1.0
        spec = RandomWedgeSpec(anchors_y=(0.0,), heights_b=(0.5,),
                               gamma=0.4, slope=2.0, floor=L)
        floor_f = discretize_profile(ProfileSpec.constant(-L), 300, eps)
        floor_h = floor_f.heights() * math.sqrt(eps)
        for traj in range(200):
            f = sample_randomized_wedge(spec, 300, eps, seed=8, trajectory=traj)
            h = f.heights() * math.sqrt(eps)
            assert np.all(h >= floor_h - math.sqrt(eps) - 1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            RandomWedgeSpec(anchors_y=(0.0, 0.0), heights_b=(0.0, 0.0), gamma=1.0)
        with pytest.raises(ValueError):
            RandomWedgeSpec(anchors_y=(0.0,), heights_b=(2.0,), gamma=1.0,
                            floor=1.5)


class TestRnEnergy:
    def test_no_drift(self):
        assert rn_l2_energy(0.0, 1.0, 0.01) == (1.0, 1.0)

    def test_closed_form_values(self):
        exact, bound = rn_l2_energy(1.0, 1.0, 0.01)
        # n = 200 steps, p = Phi(sqrt(0.005))
        p = norm_cdf(math.sqrt(0.005))
        assert exact == pytest.approx((1 + (2 * p - 1) ** 2) ** 200, rel=1e-12)
        assert exact == pytest.approx(1.886177, abs=5e-7)
        assert bound == pytest.approx(1.890081, abs=5e-7)

    def test_exact_below_inflated_bound(self):
        for a in (0.5, 1.0, 2.0):
            for d in (0.5, 1.0, 2.0):
                exact, bound = rn_l2_energy(a, d, 1e-3)
                assert exact <= bound * 1.05

    def test_monte_carlo_agreement(self):
        # E_0[f^2] from unbiased-walk samples of the squared likelihood ratio
        a, d, eps = 1.0, 1.0, 0.01
        exact, _ = rn_l2_energy(a, d, eps)
        n_steps = 2 * int(d / eps)
        p = norm_cdf(a * math.sqrt(eps / 2.0))
        rng = derived_generator(12)
        S = rng.binomial(n_steps, 0.5, size=100_000)
        logf = (n_steps * math.log(2.0) + S * math.log(p)
                + (n_steps - S) * math.log1p(-p))
        fsq = np.exp(2.0 * logf)
        se = fsq.std(ddof=1) / math.sqrt(len(fsq))
        assert abs(fsq.mean() - exact) <= 4 * se

    def test_drifted_walk_bits(self):
        rng = derived_generator(3)
        bits = sample_drifted_walk_bits(1.0, 50_000, 0.01, rng)
        p = norm_cdf(math.sqrt(0.005))
        assert abs(bits.mean() - p) <= 4 * math.sqrt(p * (1 - p) / 50_000)
