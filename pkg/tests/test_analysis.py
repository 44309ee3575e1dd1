import math

import numpy as np
import pytest

from penalty_stab import (
    AnalysisError,
    MeshError,
    ModelParams,
    StateTrajectory,
    TimeGrid,
    assemble,
    energy_monitor,
    epsilon_cauchy_study,
    error_vs_reference,
    fit_decay_rate,
    make_uniform_mesh,
    observed_orders,
    restrict_to_coarse,
    simulate,
)

RNG = np.random.default_rng(321)


def sin_pi(x):
    return np.sin(np.pi * np.asarray(x))


def synthetic_trajectory(times, l2):
    times = np.asarray(times, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    n = times.shape[0]
    return StateTrajectory(
        variant="penalized_feedback", times=times, states=np.zeros((n, 2)),
        controls=np.zeros(n), l2=l2, linf=l2.copy(), l4=l2.copy(),
        h1_semi=l2.copy(), step_reports=[], failed_at=None,
    )


# ---------------------------------------------------------------------------
# decay fits


def test_fit_recovers_exact_exponential():
    t = np.linspace(0.0, 2.0, 101)
    traj = synthetic_trajectory(t, 0.7 * np.exp(-1.5 * t))
    fit = fit_decay_rate(traj, window=(0.0, 2.0))
    assert fit.gamma_fit == pytest.approx(1.5, abs=1e-10)
    assert fit.residual <= 1e-20
    assert fit.n_samples == 101


def test_fit_constant_norms_gives_zero_rate():
    t = np.linspace(0.0, 1.0, 50)
    fit = fit_decay_rate(synthetic_trajectory(t, np.full(50, 0.3)), window=(0.0, 1.0))
    assert fit.gamma_fit == pytest.approx(0.0, abs=1e-13)


def test_fit_default_window_skips_transient():
    t = np.linspace(0.0, 1.0, 201)
    fit = fit_decay_rate(synthetic_trajectory(t, np.exp(-2.0 * t)))
    assert fit.window == pytest.approx((0.1, 1.0))
    assert fit.gamma_fit == pytest.approx(2.0, abs=1e-10)


def test_fit_rejects_too_few_samples():
    t = np.array([0.0, 0.5, 1.0])
    with pytest.raises(AnalysisError):
        fit_decay_rate(synthetic_trajectory(t, np.exp(-t)), window=(0.4, 0.6))


def test_fit_invariant_under_norm_scaling():
    t = np.linspace(0.0, 1.0, 80)
    base = np.exp(-0.8 * t) * (1.0 + 0.01 * np.sin(9.0 * t))
    f1 = fit_decay_rate(synthetic_trajectory(t, base), window=(0.0, 1.0))
    f2 = fit_decay_rate(synthetic_trajectory(t, 123.456 * base), window=(0.0, 1.0))
    assert f1.gamma_fit == pytest.approx(f2.gamma_fit, rel=1e-9)


def test_fit_trims_underflowed_samples():
    t = np.linspace(0.0, 1.0, 11)
    norms = np.exp(-2.0 * t)
    norms[-3:] = 1e-18  # below the 100*eps floor relative to norms[0]
    fit = fit_decay_rate(synthetic_trajectory(t, norms), window=(0.0, 1.0))
    assert fit.n_trimmed == 3
    assert fit.n_samples == 8


# ---------------------------------------------------------------------------
# energy monitor


def test_energy_monitor_zero_trajectory_passes():
    t = np.linspace(0.0, 1.0, 10)
    result = energy_monitor(synthetic_trajectory(t, np.zeros(10)), gamma=0.5)
    assert result.passed and result.first_violation is None


def test_energy_monitor_flags_inflated_tail():
    t = np.linspace(0.0, 1.0, 10)
    norms = np.exp(-t)
    norms[-1] = 2.0
    result = energy_monitor(synthetic_trajectory(t, norms), gamma=0.5)
    assert not result.passed
    assert result.first_violation == 9


def test_energy_monitor_on_real_run():
    params = ModelParams(nu=0.1, alpha=0.13, delta=0.13, r=0.1, epsilon=0.01)
    grid = TimeGrid.from_final_time(1.0 / 1050.0, 0.3)
    traj = simulate(params, make_uniform_mesh(32), sin_pi, grid)
    from penalty_stab import max_decay_rate
    assert energy_monitor(traj, max_decay_rate(params)).passed


def test_energy_monitor_rejects_negative_gamma():
    t = np.linspace(0.0, 1.0, 5)
    with pytest.raises(AnalysisError):
        energy_monitor(synthetic_trajectory(t, np.ones(5)), gamma=-1.0)


# ---------------------------------------------------------------------------
# restriction and reference errors


def test_restrict_identity_on_same_mesh():
    mesh = make_uniform_mesh(8)
    y = RNG.standard_normal(8)
    assert np.array_equal(restrict_to_coarse(y, mesh, mesh), y)


def test_restrict_picks_every_kth_node():
    fine = make_uniform_mesh(2048)
    coarse = make_uniform_mesh(8)
    y = np.arange(2048, dtype=float)
    restricted = restrict_to_coarse(y, fine, coarse)
    assert np.array_equal(restricted, y[255::256])


def test_restrict_reproduces_p1_functions():
    # y(x) = x is linear on every coarse element: restriction keeps it exact
    fine, coarse = make_uniform_mesh(64), make_uniform_mesh(8)
    restricted = restrict_to_coarse(fine.nodes[1:].copy(), fine, coarse)
    assert np.allclose(restricted, coarse.nodes[1:], rtol=1e-15)


def test_restrict_rejects_non_nested():
    with pytest.raises(MeshError):
        restrict_to_coarse(np.zeros(12), make_uniform_mesh(12), make_uniform_mesh(8))


def test_error_vs_reference_identical_solutions():
    fine, coarse = make_uniform_mesh(32), make_uniform_mesh(8)
    y_fine = sin_pi(fine.nodes[1:])
    y_coarse = restrict_to_coarse(y_fine, fine, coarse)
    l2, linf = error_vs_reference(y_coarse, y_fine, assemble(coarse), fine)
    assert l2 == 0.0 and linf == 0.0


def test_error_single_nodal_bump():
    # unit bump at an interior node: linf = 1, l2 = sqrt(e' M e) = sqrt(2h/3)
    fine, coarse = make_uniform_mesh(16), make_uniform_mesh(8)
    y_fine = np.zeros(16)
    y_coarse = np.zeros(8)
    y_coarse[3] = 1.0
    l2, linf = error_vs_reference(y_coarse, y_fine, assemble(coarse), fine)
    assert linf == 1.0
    assert l2 == pytest.approx(math.sqrt(2.0 / (3.0 * 8.0)), rel=1e-14)


def test_error_symmetric_under_sign_of_difference():
    fine, coarse = make_uniform_mesh(16), make_uniform_mesh(8)
    a = RNG.standard_normal(8)
    b_fine = RNG.standard_normal(16)
    b = restrict_to_coarse(b_fine, fine, coarse)
    system = assemble(coarse)
    l2_ab, linf_ab = error_vs_reference(a, b_fine, system, fine)
    e = b - a
    assert l2_ab == pytest.approx(math.sqrt(e @ system.mass.matvec(e)), rel=1e-14)
    assert linf_ab == pytest.approx(np.max(np.abs(e)), rel=1e-15)


# ---------------------------------------------------------------------------
# observed orders


def test_observed_orders_simple_cases():
    assert observed_orders([4e-4, 1e-4], [0.5, 0.25])[0] == pytest.approx(2.0, rel=1e-12)
    assert observed_orders([3e-3, 3e-3], [0.5, 0.25])[0] == pytest.approx(0.0, abs=1e-12)


def test_observed_orders_published_pair():
    order = observed_orders([8.3928e-06, 2.1253e-06], [1.0 / 16.0, 1.0 / 32.0])[0]
    assert order == pytest.approx(1.98, abs=0.005)


def test_observed_orders_exact_power_sequence():
    hs = [2.0 ** -j for j in range(2, 7)]
    errors = [7.3 * h ** 1.5 for h in hs]
    assert np.allclose(observed_orders(errors, hs), 1.5, rtol=1e-12)


def test_observed_orders_zero_error_flagged_not_raised():
    orders = observed_orders([1e-3, 0.0, 1e-5], [0.5, 0.25, 0.125])
    assert np.isnan(orders[0]) and np.isnan(orders[1])


def test_observed_orders_validates_halving():
    with pytest.raises(AnalysisError):
        observed_orders([1e-3, 1e-4], [0.5, 0.3])
    with pytest.raises(AnalysisError):
        observed_orders([1e-3], [0.5])


# ---------------------------------------------------------------------------
# epsilon continuation study


def study_base():
    return ModelParams(nu=0.1, alpha=0.13, delta=0.13, r=0.0, epsilon=1.0)


def test_epsilon_study_repeated_value_gives_zero_diffs():
    grid = TimeGrid(k=0.01, n_steps=10)
    report = epsilon_cauchy_study(study_base(), make_uniform_mesh(8), grid,
                                  [0.01, 0.01], math.sqrt, y0=sin_pi)
    row = report.rows[1]
    assert row.diff_l2 == 0.0
    assert row.diff_linf == 0.0
    assert row.control_diff_linf == 0.0


def test_epsilon_study_control_columns_match_analytics():
    grid = TimeGrid(k=1.0 / 1050.0, n_steps=105)
    report = epsilon_cauchy_study(study_base(), make_uniform_mesh(64), grid,
                                  [1.0, 0.1], math.sqrt, y0=sin_pi)
    first, second = report.rows
    assert first.control_linf == pytest.approx(1.0 / math.pi, rel=1e-9)
    assert second.control_linf == pytest.approx(math.sqrt(0.1) / math.pi, rel=1e-9)
    # the sup-over-time control difference peaks just after t=0; it is bounded
    # below by the t=0 value (1 - sqrt(0.1))/pi = 0.21765 and stays close to it
    floor = (1.0 - math.sqrt(0.1)) / math.pi
    assert floor <= second.control_diff_linf <= 1.03 * floor


def test_epsilon_study_rejects_ascending_list():
    grid = TimeGrid(k=0.01, n_steps=5)
    with pytest.raises(AnalysisError):
        epsilon_cauchy_study(study_base(), make_uniform_mesh(8), grid,
                             [0.01, 0.1], math.sqrt, y0=sin_pi)


def test_epsilon_study_row_fields_populated():
    grid = TimeGrid(k=0.01, n_steps=20)
    report = epsilon_cauchy_study(study_base(), make_uniform_mesh(16), grid,
                                  [0.1, 0.01], math.sqrt, y0=sin_pi)
    assert len(report.rows) == 2
    first = report.rows[0]
    assert first.diff_l2 is None and first.control_diff_linf is None
    assert first.r == pytest.approx(math.sqrt(0.1))
    for row in report.rows:
        assert not row.failed
        assert row.state_l2_sup >= row.state_l2 > 0.0
        assert row.state_linf_sup >= row.state_linf > 0.0


def test_epsilon_study_diffs_nonnegative_and_finite():
    grid = TimeGrid(k=0.01, n_steps=30)
    report = epsilon_cauchy_study(study_base(), make_uniform_mesh(16), grid,
                                  [1.0, 0.1, 0.01], math.sqrt, y0=sin_pi)
    for row in report.rows[1:]:
        assert row.diff_l2 > 0.0 and np.isfinite(row.diff_l2)
        assert row.diff_linf > 0.0 and np.isfinite(row.diff_linf)
