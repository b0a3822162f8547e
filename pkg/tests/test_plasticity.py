import math

import numpy as np
import pytest

from fracplast import (EnergyEvaluator, MaterialFailure, MaterialParams,
                       StateHistory, caputo_l1, step)
from fracplast.plasticity import (FAILURE_CUTOFF, damage_newton,
                                  plastic_slip_increment, stress_update,
                                  trial_state, yield_from_resistance,
                                  yield_function)


def make_params(**overrides):
    base = dict(E_pseudo=5.0, beta_E=0.4, K_pseudo=2.0, beta_K=0.6,
                H=0.5, tau_Y=0.05, S=10.0, s_exp=1.0)
    base.update(overrides)
    return MaterialParams(**base)


class TestMaterialParams:
    def test_rejects_nonpositive_constants(self):
        for field in ("E_pseudo", "K_pseudo", "tau_Y", "S", "s_exp"):
            with pytest.raises(ValueError):
                make_params(**{field: 0.0})
            with pytest.raises(ValueError):
                make_params(**{field: -1.0})

    def test_rejects_negative_hardening_modulus(self):
        with pytest.raises(ValueError):
            make_params(H=-0.1)
        assert make_params(H=0.0).H == 0.0

    def test_orders_must_be_strictly_inside_the_interval(self):
        for field in ("beta_E", "beta_K"):
            for bad in (0.0, 1.0, -0.2, 1.3):
                with pytest.raises(ValueError):
                    make_params(**{field: bad})

    def test_frozen(self):
        p = make_params()
        with pytest.raises(AttributeError):
            p.E_pseudo = 1.0


class TestStateHistory:
    def test_starts_with_a_zero_row(self):
        h = StateHistory()
        assert len(h) == 1 and h.n_steps == 0
        for series in (h.eps_total, h.eps_ve, h.eps_vp, h.alpha,
                       h.gamma_increments, h.D, h.tau, h.Y_ve, h.f_trial):
            assert series.shape == (1,) and series[0] == 0.0

    def test_views_are_read_only(self):
        h = StateHistory()
        with pytest.raises(ValueError):
            h.tau[0] = 1.0

    def test_growth_preserves_series(self):
        h = StateHistory(capacity=2)
        for k in range(1, 12):
            h.append(eps_ve=float(k), eps_vp=0.0, alpha=0.0, dgamma=0.0,
                     D=0.0, tau=float(k), Y_ve=-float(k), f_trial=-1.0)
        assert len(h) == 12
        assert h.eps_ve.tolist() == [float(k) for k in range(12)]
        assert h.ve_increments().tolist() == [1.0] * 11

    def test_split_is_stored_exactly(self):
        h = StateHistory()
        h.append(eps_ve=0.1, eps_vp=0.3, alpha=0.0, dgamma=0.0, D=0.0,
                 tau=0.0, Y_ve=0.0, f_trial=-1.0)
        assert h.eps_total[1] == h.eps_ve[1] + h.eps_vp[1]

    def test_rejects_negative_slip(self):
        h = StateHistory()
        with pytest.raises(RuntimeError):
            h.append(eps_ve=0.0, eps_vp=0.0, alpha=0.0, dgamma=-1e-9,
                     D=0.0, tau=0.0, Y_ve=0.0, f_trial=0.0)

    def test_rejects_hardening_out_of_sync(self):
        h = StateHistory()
        with pytest.raises(RuntimeError):
            h.append(eps_ve=0.0, eps_vp=0.0, alpha=0.5, dgamma=0.1,
                     D=0.0, tau=0.0, Y_ve=0.0, f_trial=0.0)

    def test_rejects_decreasing_or_saturated_damage(self):
        h = StateHistory()
        h.append(eps_ve=0.0, eps_vp=0.0, alpha=0.0, dgamma=0.0, D=0.3,
                 tau=0.0, Y_ve=0.0, f_trial=-1.0)
        with pytest.raises(RuntimeError):
            h.append(eps_ve=0.0, eps_vp=0.0, alpha=0.0, dgamma=0.0, D=0.2,
                     tau=0.0, Y_ve=0.0, f_trial=-1.0)
        with pytest.raises(RuntimeError):
            h.append(eps_ve=0.0, eps_vp=0.0, alpha=0.0, dgamma=0.0, D=1.0,
                     tau=0.0, Y_ve=0.0, f_trial=-1.0)

    def test_rejects_positive_energy_release(self):
        h = StateHistory()
        with pytest.raises(RuntimeError):
            h.append(eps_ve=0.0, eps_vp=0.0, alpha=0.0, dgamma=0.0, D=0.0,
                     tau=0.0, Y_ve=0.1, f_trial=0.0)


class TestTrialState:
    def test_zero_target_on_virgin_material(self):
        p = make_params(tau_Y=1.0)
        tau, f = trial_state(StateHistory(), p, 0.0, 0.1)
        assert tau == 0.0
        assert f == -1.0

    def test_first_step_closed_form(self):
        p = make_params(E_pseudo=2.0, beta_E=0.5, tau_Y=1e9)
        dt, e = 0.25, 0.25
        tau, f = trial_state(StateHistory(), p, e, dt)
        want = 2.0 * e / (dt ** 0.5 * math.gamma(1.5))
        assert tau == pytest.approx(want, rel=1e-14)
        assert f == pytest.approx(want - 1e9 * 1.0, rel=1e-14)

    def test_damage_scales_the_trial_stress(self):
        p = make_params()
        h = StateHistory()
        h.append(eps_ve=0.0, eps_vp=0.0, alpha=0.0, dgamma=0.0, D=0.5,
                 tau=0.0, Y_ve=0.0, f_trial=-1.0)
        h0 = StateHistory()
        h0.append(eps_ve=0.0, eps_vp=0.0, alpha=0.0, dgamma=0.0, D=0.0,
                  tau=0.0, Y_ve=0.0, f_trial=-1.0)
        tau_d, _ = trial_state(h, p, 0.25, 0.1)
        tau_0, _ = trial_state(h0, p, 0.25, 0.1)
        assert tau_d == pytest.approx(0.5 * tau_0, rel=1e-15)

    def test_rejects_bad_step_size(self):
        with pytest.raises(ValueError):
            trial_state(StateHistory(), make_params(), 0.1, 0.0)


class TestPlasticSlip:
    def test_hand_value(self):
        p = make_params(E_pseudo=1.0, beta_E=0.5, K_pseudo=1.0, beta_K=0.5,
                        H=0.0)
        got = plastic_slip_increment(1.0, 0.0, p, 1.0)
        # denominator (E + K) / Gamma(1.5) at unit step
        assert got == pytest.approx(math.gamma(1.5) / 2.0, rel=1e-14)

    def test_damage_doubles_the_slip_at_one_half(self):
        p = make_params()
        base = plastic_slip_increment(0.3, 0.0, p, 0.05)
        assert plastic_slip_increment(0.3, 0.5, p, 0.05) == pytest.approx(
            2.0 * base, rel=1e-15)

    def test_rejects_nonpositive_trial_yield(self):
        with pytest.raises(ValueError):
            plastic_slip_increment(0.0, 0.0, make_params(), 0.1)
        with pytest.raises(ValueError):
            plastic_slip_increment(-1.0, 0.0, make_params(), 0.1)

    def test_total_damage_is_failure(self):
        with pytest.raises(MaterialFailure):
            plastic_slip_increment(1.0, 1.0, make_params(), 0.1)


class TestStressUpdate:
    def test_zero_slip_is_identity(self):
        assert stress_update(1.25, 0.0, 0.3, make_params(), 0.1) == 1.25

    def test_moves_toward_zero_without_crossing(self):
        p = make_params(E_pseudo=1.0, beta_E=0.5)
        dt = 1.0
        # shrink by (1-D) E dgamma / Gamma(1.5)
        got = stress_update(2.0, 0.1, 0.0, p, dt)
        assert got == pytest.approx(2.0 - 0.1 / math.gamma(1.5), rel=1e-14)
        got_neg = stress_update(-2.0, 0.1, 0.0, p, dt)
        assert got_neg == pytest.approx(-2.0 + 0.1 / math.gamma(1.5),
                                        rel=1e-14)

    def test_rejects_corrections_from_nothing(self):
        with pytest.raises(ValueError):
            stress_update(0.0, 0.1, 0.0, make_params(), 0.1)
        with pytest.raises(ValueError):
            stress_update(1.0, -0.1, 0.0, make_params(), 0.1)


class TestDamageNewton:
    def test_no_slip_keeps_damage(self):
        assert damage_newton(0.25, 0.0, -5.0, 1.0, 1.0) == 0.25

    def test_hand_root(self):
        # D (1 - D) = 0.09 from a virgin state -> D = 0.1 exactly
        got = damage_newton(0.0, 0.09, -1.0, 1.0, 1.0)
        assert got == pytest.approx(0.1, abs=1e-12)

    def test_matches_quadratic_oracle_on_admissible_samples(self, rng):
        checked = 0
        while checked < 200:
            D_n = float(rng.uniform(0.0, 0.9))
            dgamma = float(rng.uniform(0.0, 0.1))
            Y = -float(rng.uniform(0.0, 2.0))
            s_exp = float(rng.choice([0.5, 1.0, 2.0]))
            drive = dgamma * (-Y) ** s_exp
            disc = (1.0 - D_n) ** 2 - 4.0 * drive
            if disc <= 1e-4:
                continue
            oracle = ((1.0 + D_n) - math.sqrt(disc)) / 2.0
            if oracle >= FAILURE_CUTOFF:
                continue
            got = damage_newton(D_n, dgamma, Y, 1.0, s_exp)
            assert abs(got - oracle) <= 1e-12
            assert got >= D_n
            checked += 1

    def test_overdriven_step_is_failure(self):
        # more driving than the remaining integrity can absorb
        with pytest.raises(MaterialFailure):
            damage_newton(0.0, 1.0, -0.3, 1.0, 1.0)

    def test_root_at_the_cutoff_is_failure(self):
        with pytest.raises(MaterialFailure):
            damage_newton(1.0 - 5e-9, 1e-12, -1e-12, 1.0, 1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            damage_newton(-0.1, 0.0, -1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            damage_newton(0.0, -1.0, -1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            damage_newton(0.0, 0.1, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            damage_newton(0.0, 0.1, -1.0, 0.0, 1.0)


class TestYieldFunction:
    def test_virgin_state_value(self):
        p = make_params(tau_Y=1.0)
        assert yield_function(0.0, [0.0], 0.0, p, 0.1) == -1.0

    def test_memory_part_uses_the_caputo_value(self):
        p = make_params(H=0.25, tau_Y=1.0)
        series = np.array([0.0, 0.05, 0.15])
        mem = caputo_l1(series, p.beta_K, 0.1)
        want = abs(0.7) - (1.0 - 0.2) * (
            1.0 + p.K_pseudo * mem + 0.25 * series[-1])
        assert yield_function(0.7, series, 0.2, p, 0.1) == pytest.approx(
            want, rel=1e-14)

    def test_jensen_convexity_exact_on_dyadic_samples(self, rng):
        # all quantities are dyadic rationals with small numerators, so
        # every product and sum below is float-exact and the convexity
        # inequality of |tau| - (1-D)(tau_Y + R) holds with no tolerance
        n = 10_000
        tau_a = rng.integers(-2048, 2049, size=n) / 64.0
        tau_b = rng.integers(-2048, 2049, size=n) / 64.0
        R_a = rng.integers(-2048, 2049, size=n) / 64.0
        R_b = rng.integers(-2048, 2049, size=n) / 64.0
        theta = rng.integers(0, 1025, size=n) / 1024.0
        D = rng.integers(0, 1024, size=n) / 1024.0
        for k in range(n):
            th = theta[k]
            fa = yield_from_resistance(tau_a[k], R_a[k], D[k], 1.0)
            fb = yield_from_resistance(tau_b[k], R_b[k], D[k], 1.0)
            fm = yield_from_resistance(
                th * tau_a[k] + (1.0 - th) * tau_b[k],
                th * R_a[k] + (1.0 - th) * R_b[k], D[k], 1.0)
            assert fm <= th * fa + (1.0 - th) * fb


def run_path(params, eps_path, dt, mode="direct"):
    h = StateHistory()
    ev = EnergyEvaluator(params.beta_E, params.E_pseudo, dt,
                         len(eps_path), mode=mode)
    for e in eps_path:
        step(h, float(e), params, dt, evaluator=ev)
    return h


class TestStep:
    def test_zero_strain_stays_at_rest(self):
        p = make_params(tau_Y=1.0)
        h = run_path(p, np.zeros(10), 0.1)
        assert np.all(h.tau == 0.0)
        assert np.all(h.D == 0.0)
        assert np.all(h.eps_vp == 0.0)
        assert np.all(h.gamma_increments == 0.0)
        assert np.all(h.f_trial[1:] == -1.0)
        assert h.f_trial[0] == 0.0

    def test_structural_invariants_on_random_paths(self, rng):
        p = make_params()
        for _ in range(5):
            eps = np.cumsum(rng.normal(0.0, 0.02, size=40))
            dt = 0.05
            h = StateHistory()
            ev = EnergyEvaluator(p.beta_E, p.E_pseudo, dt, 40)
            for k, e in enumerate(eps, start=1):
                tau_trial, f_trial = trial_state(h, p, float(e), dt)
                step(h, float(e), p, dt, evaluator=ev)
                assert h.f_trial[k] == f_trial
                # stress keeps the trial direction
                if tau_trial != 0.0:
                    assert h.tau[k] * tau_trial >= 0.0
                    assert abs(h.tau[k]) <= abs(tau_trial)
                if h.gamma_increments[k] > 0.0:
                    # return mapping lands on the yield surface, with
                    # damage frozen at its pre-step value
                    f_next = yield_function(h.tau[k], h.alpha[: k + 1],
                                            h.D[k - 1], p, dt)
                    assert abs(f_next) <= 1e-10 * p.tau_Y
            assert np.all(np.diff(h.D) >= 0.0)
            assert np.all(h.D < 1.0)
            assert np.all(h.gamma_increments >= 0.0)
            assert np.all(h.Y_ve <= 0.0)
            assert np.all(h.eps_total == h.eps_ve + h.eps_vp)
            np.testing.assert_allclose(h.eps_total[1:], eps, rtol=1e-12,
                                       atol=1e-15)
            assert h.n_steps == 40

    def test_plastic_steps_actually_occur(self, rng):
        p = make_params()
        eps = np.cumsum(np.abs(rng.normal(0.0, 0.02, size=40)))
        h = run_path(p, eps, 0.05)
        assert np.any(h.gamma_increments > 0.0)
        assert h.D[-1] > 0.0

    def test_elastic_regime_reduces_to_the_single_element(self, rng):
        # huge yield stress: no plasticity, no damage; the stress must be
        # the pseudo-modulus times the L1 Caputo value of the full strain
        p = make_params(tau_Y=1e9)
        eps = np.cumsum(rng.normal(0.0, 0.02, size=30))
        dt = 0.05
        h = run_path(p, eps, dt)
        assert np.all(h.eps_vp == 0.0) and np.all(h.D == 0.0)
        path = np.concatenate([[0.0], eps])
        for k in range(1, 31):
            want = p.E_pseudo * caputo_l1(path[: k + 1], p.beta_E, dt)
            assert abs(h.tau[k] - want) <= 1e-12 * max(1.0, abs(want))

    def test_negation_symmetry_is_bitwise(self, rng):
        p = make_params()
        eps = np.cumsum(rng.normal(0.0, 0.03, size=35))
        a = run_path(p, eps, 0.05)
        b = run_path(p, -eps, 0.05)
        assert np.array_equal(a.tau, -b.tau)
        assert np.array_equal(a.D, b.D)
        assert np.array_equal(a.alpha, b.alpha)
        assert np.array_equal(a.Y_ve, b.Y_ve)

    def test_undamaged_limit_leaves_stress_untouched(self, rng):
        # with S huge the damage increments underflow below the unit
        # roundoff of (1 - D), so two vastly different S values must give
        # bit-identical stress and hardening series
        eps = np.cumsum(np.abs(rng.normal(0.0, 0.02, size=30)))
        pa = make_params(S=1e30)
        pb = make_params(S=1e300)
        a = run_path(pa, eps, 0.05)
        b = run_path(pb, eps, 0.05)
        assert np.any(a.gamma_increments > 0.0)
        assert a.D[-1] < 1e-16 and b.D[-1] < 1e-250
        assert np.array_equal(a.tau, b.tau)
        assert np.array_equal(a.alpha, b.alpha)

    def test_evaluator_modes_agree_closely(self, rng):
        p = make_params()
        eps = np.cumsum(rng.normal(0.0, 0.02, size=50))
        a = run_path(p, eps, 0.05, mode="direct")
        b = run_path(p, eps, 0.05, mode="fft")
        np.testing.assert_allclose(a.tau, b.tau, rtol=1e-10, atol=1e-13)
        np.testing.assert_allclose(a.D, b.D, rtol=1e-10, atol=1e-13)

    def test_failure_raises_with_step_index_and_keeps_history(self):
        p = make_params(E_pseudo=25.0, beta_E=0.5, K_pseudo=10.0,
                        beta_K=0.5, H=0.0, tau_Y=1.0, S=1e-4, s_exp=1.0)
        dt = 10.0 / 2000.0
        t = np.arange(1, 2001) * dt
        eps = 0.1 * np.sin(2.0 * math.pi * t)
        h = StateHistory()
        ev = EnergyEvaluator(p.beta_E, p.E_pseudo, dt, 2000)
        with pytest.raises(MaterialFailure) as exc:
            for e in eps:
                step(h, float(e), p, dt, evaluator=ev)
        assert exc.value.step_index == h.n_steps + 1
        assert h.n_steps < 2000
        assert np.all(h.D < 1.0)
