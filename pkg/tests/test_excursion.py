import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from measura.excursion import (
    BesselCheckReport,
    ExcursionFunctional,
    ExcursionPath,
    bessel_semigroup_check,
    empirical_lhs,
    eval_functional,
    excursion_metric,
    kappa,
    levy_hitting_density,
    levy_survival,
    sample_killed_bm,
    smoothed_bump,
    smoothed_cutoff,
    step_indicator,
    target_rhs,
)


def const_path(level, end, dt=0.01):
    n = int(round(end / dt))
    grid = np.arange(n + 1) * dt
    return ExcursionPath(grid, np.full(n + 1, float(level)), zeta=float(grid[-1]))


class TestExcursionPath:
    def test_zero_lifetime_rejected(self):
        with pytest.raises(ValueError, match="lifetime"):
            ExcursionPath(np.array([0.0]), np.array([0.0]), zeta=0.0)

    def test_values_after_lifetime_must_vanish(self):
        grid = np.array([0.0, 0.5, 1.0])
        with pytest.raises(ValueError, match="lifetime"):
            ExcursionPath(grid, np.array([1.0, 1.0, 1.0]), zeta=0.5)

    def test_negative_values_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            ExcursionPath(np.array([0.0, 0.1]), np.array([1.0, -0.2]), zeta=0.1)


class TestExcursionMetric:
    def test_identity(self):
        e = const_path(1.0, 1.0)
        assert excursion_metric(e, e) == 0.0

    def test_piecewise_constant_hand_value(self):
        # |e1 - e2| is 1 on [1, 2]: integral clips at 1; lifetime |1 - 1/2|
        e1 = const_path(1.0, 1.0)
        e2 = const_path(1.0, 2.0)
        assert excursion_metric(e1, e2) == pytest.approx(1.5, abs=1e-12)

    def test_lifetime_only_difference(self):
        # identical traces (zero after 0.6), different declared absorption times
        grid = np.arange(0, 101) * 0.01
        vals = np.concatenate([np.full(61, 0.7), np.zeros(40)])
        vals[60] = 0.0
        e1 = ExcursionPath(grid, vals, zeta=0.6)
        e2 = ExcursionPath(grid, vals.copy(), zeta=1.0)
        assert excursion_metric(e1, e2) == pytest.approx(abs(1 / 0.6 - 1 / 1.0), abs=1e-12)

    def test_mixed_grids_are_exact(self):
        # linear ramp represented on two different grids is the same function
        g1 = np.linspace(0.0, 1.0, 11)
        g2 = np.linspace(0.0, 1.0, 101)
        e1 = ExcursionPath(g1, 1.0 - g1, zeta=1.0)
        e2 = ExcursionPath(g2, 1.0 - g2, zeta=1.0)
        assert excursion_metric(e1, e2) == pytest.approx(0.0, abs=1e-12)

    def test_triangle_on_random_paths(self):
        rng = np.random.default_rng(8)

        def rand_path():
            dt = float(rng.choice([0.01, 0.02, 0.025]))
            n = int(rng.integers(5, 60))
            vals = np.abs(np.cumsum(rng.standard_normal(n + 1))) * 0.3
            vals[-1] = 0.0
            grid = np.arange(n + 1) * dt
            return ExcursionPath(grid, vals, zeta=float(grid[-1]))

        for _ in range(300):
            a, b, c = rand_path(), rand_path(), rand_path()
            assert excursion_metric(a, c) <= (
                excursion_metric(a, b) + excursion_metric(b, c) + 1e-9
            )
            assert excursion_metric(a, b) == pytest.approx(excursion_metric(b, a), abs=1e-12)

    def test_lebesgue_convergence_with_matching_lifetimes(self):
        base = const_path(1.0, 1.0)
        dists = []
        for n in (2, 4, 8, 16, 32):
            bumped = ExcursionPath(base.grid, base.values + 1.0 / n, zeta=base.zeta)
            dists.append(excursion_metric(base, bumped))
        assert all(b < a for a, b in zip(dists, dists[1:]))
        assert dists[-1] < 0.05

    def test_lifetime_gap_is_a_floor(self):
        e1 = const_path(1.0, 1.0)
        zeta2 = 2.0
        floor = abs(1.0 / 1.0 - 1.0 / zeta2)
        for n in (10, 100):
            # paths shrinking in measure toward e1 but keeping lifetime 2
            grid = np.arange(0, 201) * 0.01
            vals = np.where(grid <= 1.0, 1.0, 1.0 / n)
            vals[-1] = 1.0 / n
            e2 = ExcursionPath(grid, vals, zeta=zeta2)
            assert excursion_metric(e1, e2) >= floor - 1e-9


class TestKilledBM:
    def test_deterministic_for_fixed_seed(self):
        p1 = sample_killed_bm(1.0, 1e-3, 5.0, seed=123)
        p2 = sample_killed_bm(1.0, 1e-3, 5.0, seed=123)
        assert np.array_equal(p1.values, p2.values)
        assert p1.zeta == p2.zeta and p1.censored == p2.censored

    def test_survival_probability_matches_reflection_formula(self):
        # P_x(T_0 > t) = 2 Phi(x / sqrt(t)) - 1
        eps, t, dt, n = 1.0, 1.0, 1e-3, 4000
        alive = 0
        for i in range(n):
            p = sample_killed_bm(eps, dt, horizon=t, seed=(777, i))
            alive += p.censored or p.zeta > t
        target = 2.0 * norm.cdf(eps / math.sqrt(t)) - 1.0
        se = math.sqrt(target * (1 - target) / n)
        assert abs(alive / n - target) < 4.0 * se

    def test_small_eps_absorption_fraction(self):
        eps, dt, n = 0.01, 1e-4, 3000
        absorbed = sum(
            sample_killed_bm(eps, dt, horizon=1.0, seed=(41, i)).zeta <= 1.0 for i in range(n)
        )
        target = 1.0 - eps * math.sqrt(2.0 / math.pi)
        se = math.sqrt(target * (1 - target) / n)
        assert abs(absorbed / n - target) < 4.0 * se

    def test_path_invariants(self):
        for i in range(50):
            p = sample_killed_bm(0.3, 1e-3, 2.0, seed=(5, i))
            assert p.values[0] == 0.3
            if not p.censored:
                assert p.values[-1] == 0.0
                assert p.zeta == pytest.approx(p.grid[-1])


class TestFunctional:
    def test_unit_functional(self):
        F = ExcursionFunctional(h=lambda r: np.ones_like(np.asarray(r, float)), h_constant_after=0.0)
        assert eval_functional(F, const_path(2.0, 1.0)) == 1.0

    def test_window_integral_of_constant_path(self):
        f = smoothed_bump(0.0, 1.0, 0.05)
        F = ExcursionFunctional(
            h=lambda r: np.ones_like(np.asarray(r, float)),
            h_constant_after=0.0,
            pairs=((f, 1.0, lambda x: np.asarray(x, float)),),
        )
        c = 0.6
        val = eval_functional(F, const_path(c, 1.0, dt=0.002))
        mass, _ = quad(f, 0.0, 1.0)
        assert val == pytest.approx(c * mass, rel=1e-4)

    def test_short_lifetime_kills_window(self):
        f = smoothed_bump(1.0, 2.0, 0.1)
        F = ExcursionFunctional(
            h=lambda r: np.ones_like(np.asarray(r, float)),
            h_constant_after=0.0,
            pairs=((f, 2.0, lambda x: np.minimum(np.asarray(x, float), 1.0)),),
        )
        e = const_path(0.8, 0.5, dt=0.005)  # dies before the window opens
        padded = ExcursionPath(
            np.arange(0, 401) * 0.005,
            np.concatenate([e.values, np.zeros(300)]),
            zeta=e.zeta,
        )
        assert eval_functional(F, padded) == 0.0

    def test_level_weight_must_vanish_at_zero(self):
        with pytest.raises(ValueError, match="vanish"):
            ExcursionFunctional(
                h=lambda r: 1.0,
                h_constant_after=0.0,
                pairs=((lambda t: t, 1.0, lambda x: np.asarray(x, float) + 1.0),),
            )

    def test_censored_with_late_h_raises(self):
        F = ExcursionFunctional(h=step_indicator(5.0), h_constant_after=5.0)
        grid = np.arange(0, 101) * 0.01
        censored = ExcursionPath(grid, np.full(101, 0.5), zeta=math.inf, censored=True)
        with pytest.raises(RuntimeError, match="horizon too short"):
            eval_functional(F, censored)

    def test_grid_refinement_stability(self):
        # halving dt moves the value by O(dt) on a deterministic trace
        f = smoothed_bump(0.2, 0.9, 0.1)
        g = lambda x: np.minimum(np.asarray(x, float), 1.0)
        F = ExcursionFunctional(
            h=lambda r: np.ones_like(np.asarray(r, float)), h_constant_after=0.0,
            pairs=((f, 0.9, g),),
        )
        trace = lambda t: 0.5 + 0.4 * np.sin(3.0 * t)

        def path(dt):
            grid = np.arange(0, int(round(1.0 / dt)) + 1) * dt
            vals = trace(grid)
            vals[-1] = 0.0
            return ExcursionPath(grid, vals, zeta=float(grid[-1]))

        vals = [eval_functional(F, path(dt)) for dt in (0.02, 0.01, 0.005)]
        assert abs(vals[1] - vals[0]) < 5.0 * 0.02
        assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0]) + 1e-12


class TestEmpiricalLhs:
    def test_unit_functional_scales_exactly(self):
        F = ExcursionFunctional(h=lambda r: np.ones_like(np.asarray(r, float)), h_constant_after=0.0)
        mean, se = empirical_lhs(F, eps=0.25, n_paths=200, dt=1e-3, horizon=0.02, seed=1)
        assert mean == pytest.approx(4.0, abs=1e-12)
        assert se == 0.0

    def test_reproducible_and_partition_independent(self):
        F = ExcursionFunctional(h=step_indicator(0.1), h_constant_after=0.1)
        a = empirical_lhs(F, 0.05, 400, 1e-3, 0.5, seed=9)
        b = empirical_lhs(F, 0.05, 400, 1e-3, 0.5, seed=9)
        c = empirical_lhs(F, 0.05, 400, 1e-3, 0.5, seed=9, workers=3)
        assert a == b
        assert a[0] == pytest.approx(c[0], abs=1e-12)

    def test_minimum_path_count_enforced(self):
        F = ExcursionFunctional(h=step_indicator(0.1), h_constant_after=0.1)
        with pytest.raises(ValueError, match="100"):
            empirical_lhs(F, 0.05, 50, 1e-3, 0.5, seed=9)

    def test_lifetime_tail_at_moderate_eps(self):
        t = 0.5
        F = ExcursionFunctional(h=step_indicator(t), h_constant_after=t)
        eps = 0.05
        mean, se = empirical_lhs(F, eps, 20_000, 1e-3, horizon=t + 0.1, seed=11)
        exact = (2.0 * norm.cdf(eps / math.sqrt(t)) - 1.0) / eps
        assert abs(mean - exact) < 3.0 * se


class TestTargetRhs:
    def test_levy_density_normalizes(self):
        for alpha in (0.2, 1.0, 3.7):
            val, _ = quad(lambda r: float(levy_hitting_density(alpha, r)), 0.0, np.inf, limit=200)
            assert val == pytest.approx(1.0, abs=1e-3)

    def test_levy_survival_closed_form(self):
        for alpha, rc in ((0.5, 1.0), (2.0, 0.3)):
            tail, _ = quad(lambda r: float(levy_hitting_density(alpha, r)), rc, np.inf, limit=200)
            assert tail == pytest.approx(float(levy_survival(alpha, rc)), abs=1e-6)

    def test_lifetime_step_target_is_kappa_tail(self):
        # no pairs, h = 1_{r > 1}: integral of kappa over (1, inf) = sqrt(2/pi)
        F = ExcursionFunctional(h=step_indicator(1.0), h_constant_after=1.0)
        val, se = target_rhs(F, n_bessel=10, dt=0.01, r_grid=np.linspace(0.0, 5.0, 10), seed=0)
        assert se == 0.0
        assert val == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-10)

    def test_zero_h_gives_zero(self):
        F = ExcursionFunctional(h=lambda r: np.zeros_like(np.asarray(r, float)), h_constant_after=0.0)
        val, se = target_rhs(F, 10, 0.01, np.linspace(0, 3, 5), seed=0)
        assert val == 0.0 and se == 0.0

    def test_h_not_vanishing_near_zero_rejected(self):
        F = ExcursionFunctional(h=lambda r: np.ones_like(np.asarray(r, float)), h_constant_after=0.0)
        with pytest.raises(ValueError, match="infinite"):
            target_rhs(F, 10, 0.01, np.linspace(0, 3, 5), seed=0)

    def test_one_pair_constant_h_matches_bessel_moment(self):
        # with h = 1 the r-integral is exactly 1, so the target reduces to
        # int f(t) E[g(rho_t)/rho_t] dt with rho_t = sqrt(t) * |N(0, I_3)|
        f = smoothed_bump(0.5, 1.5, 0.1)
        g = lambda x: np.minimum(np.asarray(x, float), 1.0)
        F = ExcursionFunctional(
            h=lambda r: np.ones_like(np.asarray(r, float)),
            h_constant_after=0.0,
            pairs=((f, 1.5, g),),
        )
        val, se = target_rhs(F, n_bessel=40_000, dt=0.01, r_grid=np.linspace(0, 8, 200), seed=3)

        def chi3_moment(t):
            # E[min(R, 1)/R] for R = sqrt(t)|Z|, Z three-dimensional standard normal
            dens = lambda y: math.sqrt(2.0 / math.pi) * y * y * math.exp(-y * y / 2.0)
            s = math.sqrt(t)
            a, _ = quad(lambda y: dens(y), 0.0, 1.0 / s)
            b, _ = quad(lambda y: dens(y) / (s * y), 1.0 / s, 40.0)
            return a + b

        expected, _ = quad(lambda t: f(t) * chi3_moment(t), 0.5, 1.5, limit=200)
        assert abs(val - expected) < max(3.0 * se, 2e-3)

    def test_two_pair_decomposition_matches_naive_mesh(self):
        # the prefix decomposition must agree with the explicit double sum
        f1 = smoothed_bump(0.2, 0.8, 0.1)
        f2 = smoothed_bump(0.4, 1.0, 0.1)
        g = lambda x: np.minimum(np.asarray(x, float), 1.0)
        h = smoothed_cutoff(1.0, 1.0)
        F = ExcursionFunctional(h=h, h_constant_after=2.0, pairs=((f1, 0.8, g), (f2, 1.0, g)))
        r_grid = np.linspace(0, 6, 120)
        val, se = target_rhs(F, n_bessel=400, dt=0.02, r_grid=r_grid, seed=7)

        rng = np.random.default_rng(7)
        times = np.arange(int(math.ceil(1.0 / 0.02)) + 1) * 0.02
        from measura.excursion import _bessel3_at

        rho = _bessel3_at(times, 400, rng)
        w = np.full(times.size, 0.02)
        w[0] = w[-1] = 0.01
        hv = np.array([[np.trapezoid(h(t + r_grid) * levy_hitting_density(a, r_grid), r_grid)
                        + h(2.0) * levy_survival(a, r_grid[-1]) if a > 0 else 0.0
                        for t, a in zip(times, row)] for row in rho])
        naive = []
        for i in range(400):
            total = 0.0
            for j1 in range(times.size):
                for j2 in range(times.size):
                    jb = max(j1, j2)
                    if rho[i, jb] <= 0:
                        continue
                    total += (
                        w[j1] * f1(times[j1]) * g(rho[i, j1])
                        * w[j2] * f2(times[j2]) * g(rho[i, j2])
                        / rho[i, jb] * hv[i, jb]
                    )
            naive.append(total)
        assert val == pytest.approx(float(np.mean(naive)), rel=1e-10)


class TestBesselSemigroup:
    def test_entrance_density_normalizes(self):
        from measura.excursion import _entrance_bin_probs

        edges = np.linspace(0.0, 12.0, 400)
        assert _entrance_bin_probs(edges, 1.0).sum() == pytest.approx(1.0, abs=1e-8)

    def test_entrance_density_mode(self):
        # mode of 2 kappa(1) y^2 exp(-y^2/2) is at sqrt(2)
        ys = np.linspace(0.01, 4.0, 2000)
        dens = 2.0 * kappa(1.0) * ys**2 * np.exp(-(ys**2) / 2.0)
        assert ys[np.argmax(dens)] == pytest.approx(math.sqrt(2.0), abs=2e-3)

    def test_entrance_histogram(self):
        report = bessel_semigroup_check(1.0, 0.0, n_samples=200_000, seed=15)
        assert isinstance(report, BesselCheckReport)
        assert report.ok

    def test_started_above_zero(self):
        report = bessel_semigroup_check(0.7, 1.3, n_samples=150_000, seed=16)
        assert report.exact.sum() == pytest.approx(1.0, abs=1e-3)
        assert report.ok

    def test_large_time_spread(self):
        report = bessel_semigroup_check(25.0, 1.0, n_samples=100_000, seed=17)
        assert report.ok
