import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semidamp import dynamics as dyn
from semidamp import potentials as pots
from semidamp.errors import EmptyShell, ToleranceExceeded

FAST = dyn.FlowParams(dt=1e-3, t_max=3.0, r_escape=30.0, tol_energy=1e-8)


def test_free_flow_closed_form():
    pot = pots.free_potential()
    traj = dyn.integrate_flow(dyn.PhasePoint(0.3, -0.7), pot, FAST)
    assert np.max(np.abs(traj.xs - (0.3 + 2 * (-0.7) * traj.times))) <= 1e-12
    assert np.max(np.abs(traj.xis - (-0.7))) <= 1e-12


def test_harmonic_closed_form():
    # V1 = x^2 gives xddot = -4x: x(t) = cos 2t, xi(t) = -sin 2t from (1, 0)
    pot = pots.harmonic_potential(1.0)
    traj = dyn.integrate_flow(dyn.PhasePoint(1.0, 0.0), pot, FAST)
    assert np.max(np.abs(traj.xs - np.cos(2 * traj.times))) <= 1e-6
    assert np.max(np.abs(traj.xis + np.sin(2 * traj.times))) <= 1e-6


def test_constant_damping_factors():
    pot = pots.free_potential(pots.constant_damping(0.5), "constant(0.5)")
    params = dyn.FlowParams(dt=1e-3, t_max=1.0, r_escape=50.0)
    traj = dyn.integrate_flow(dyn.PhasePoint(0.0, 1.0), pot, params)
    k = np.argmin(np.abs(traj.times - 1.0))
    assert traj.q_values[k] == pytest.approx(np.exp(-1.0), abs=1e-10)
    assert traj.q1_values[k] == pytest.approx(np.exp(-0.5), abs=1e-10)


def test_energy_examples():
    pot = pots.gaussian_bump_potential(1.0, 1.0)  # V1(0) = 1
    assert dyn.energy(dyn.PhasePoint(0.0, 2.0), pot) == pytest.approx(5.0)
    assert dyn.energy(dyn.PhasePoint(0.4, 0.0), pots.free_potential()) == 0.0


def test_shell_projection():
    pot = pots.double_barrier_potential(2.0, 2.0, 0.4)
    w = dyn.project_to_shell(0.7, 1.0, pot)
    assert dyn.energy(w, pot) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(EmptyShell):
        dyn.project_to_shell(2.0, 0.5, pot)  # barrier top > E


def test_virial_bracket_trivia():
    assert dyn.virial_bracket(dyn.PhasePoint(0.3, 1.0),
                              pots.free_potential()) == pytest.approx(2.0)
    # critical point of a gaussian: grad V1(0) = 0
    pot = pots.gaussian_bump_potential(1.0, 1.0)
    assert dyn.virial_bracket(dyn.PhasePoint(0.0, 1.0), pot) == pytest.approx(2.0)


def test_virial_bracket_flow_derivative_oracle():
    # d/dt (x xi) along the flow at t = 0 equals the bracket
    pot = pots.double_barrier_potential(2.0, 2.0, 0.4)
    w = dyn.PhasePoint(0.8, 0.6)
    params = dyn.FlowParams(dt=1e-3, t_max=0.1, r_escape=30.0)
    delta = 1e-3
    wp = dyn.flow_map(w, delta, pot, params)
    wm = dyn.flow_map(w, -delta, pot, params)
    fd = (wp.x * wp.xi - wm.x * wm.xi) / (2 * delta)
    assert abs(fd - dyn.virial_bracket(w, pot)) <= 1e-6


def test_classification_free_vs_trapped():
    free = pots.free_potential()
    params = dyn.FlowParams(dt=1e-3, t_max=20.0, r_escape=8.0)
    r = dyn.classify_trajectory(dyn.PhasePoint(0.0, 0.5), free, params)
    assert not r.bounded_future and not r.bounded_past

    pot = pots.double_barrier_potential(2.0, 2.0, 0.4,
                                        v2=pots.well_centered_damping(1.0, 1.0))
    r2 = dyn.classify_trajectory(dyn.PhasePoint(0.0, 1.0), pot, params)
    assert r2.bounded_future and r2.bounded_past
    assert r2.meets_O and r2.min_v2_along > 0.0


def test_classification_stability_under_dt_halving():
    pot = pots.double_barrier_potential(2.0, 2.0, 0.4,
                                        v2=pots.well_centered_damping(1.0, 1.0))
    params = dyn.FlowParams(dt=1e-3, t_max=20.0, r_escape=8.0)
    half = dyn.FlowParams(dt=5e-4, t_max=20.0, r_escape=8.0)
    for w in (dyn.PhasePoint(0.0, 1.0), dyn.PhasePoint(0.5, -0.9),
              dyn.PhasePoint(3.5, 1.2)):
        a = dyn.classify_trajectory(w, pot, params)
        b = dyn.classify_trajectory(w, pot, half)
        assert a.meets_O == b.meets_O
        assert a.status_future == b.status_future


def test_damping_condition_verdicts():
    params = dyn.FlowParams(dt=1e-3, t_max=25.0, r_escape=8.0)
    rep = dyn.damping_condition_check(1.0, pots.free_potential(), params,
                                      n_samples=21)
    assert rep.verdict == "no bounded orbits"

    covered = pots.double_barrier_potential(
        2.0, 2.0, 0.4, v2=pots.well_centered_damping(1.0, 1.0))
    rep2 = dyn.damping_condition_check(1.0, covered, params, n_samples=21)
    assert rep2.verdict == "covered"
    assert rep2.min_damping_integral > 0.0

    uncovered = pots.double_barrier_potential(
        2.0, 2.0, 0.4, v2=pots.outside_only_damping(2.0, 1.0))
    rep3 = dyn.damping_condition_check(1.0, uncovered, params, n_samples=21)
    assert rep3.verdict == "uncovered"


def test_damping_condition_empty_shell():
    pot = pots.gaussian_bump_potential(3.0, 8.0)  # V1 > 0.5 over the window
    params = dyn.FlowParams(dt=1e-3, t_max=5.0, r_escape=4.0)
    with pytest.raises(EmptyShell):
        dyn.damping_condition_check(0.2, pot, params, n_samples=9)


def test_escape_correction():
    pot = pots.free_potential()
    params = dyn.FlowParams(dt=1e-3, t_max=5.0, r_escape=50.0)

    def g(x, xi):
        return np.exp(-x**2 - (xi - 0.5) ** 2)

    w = dyn.PhasePoint(0.2, 0.5)
    f0, r0 = dyn.escape_correction(w, pot, g, 0.0, params)
    assert f0 == 0.0 and r0 == 0.0
    f1, r1 = dyn.escape_correction(w, pot, g, 1.0, params)
    assert f1 > 0.0
    assert r1 <= 1e-5

    def g_far(x, xi):
        return np.exp(-((x - 40.0) ** 2) - xi**2)

    f2, _ = dyn.escape_correction(w, pot, g_far, 1.0, params)
    assert f2 <= 1e-12


def test_mourre_symbol_infimum():
    free = pots.free_potential()
    # free: bracket = 2 xi^2 = 2p on the shell
    val = dyn.mourre_symbol_infimum(1.0, 0.0, free, 0.0, shell_samples=51)
    assert val == pytest.approx(2.0, abs=1e-12)

    trapped = pots.double_barrier_potential(
        2.0, 2.0, 0.4, v2=pots.well_centered_damping(1.0, 1.0))
    bad = dyn.mourre_symbol_infimum(1.0, 0.05, trapped, 0.0)
    assert bad < 0.0  # trapping obstruction at the turning points
    good = dyn.mourre_symbol_infimum(1.0, 0.05, trapped, 300.0)
    assert good > 0.0


def test_escape_radius_no_return():
    pot = pots.double_barrier_potential(2.0, 2.0, 0.4)
    r0 = dyn.estimate_escape_radius(pot, 1.0)
    assert r0 >= 2.0
    # an escaping orbit never re-enters once past r_escape
    params = dyn.FlowParams(dt=1e-3, t_max=20.0, r_escape=r0)
    traj = dyn.integrate_flow(dyn.PhasePoint(3.2, 1.2), pot,
                              dyn.FlowParams(dt=1e-3, t_max=20.0,
                                             r_escape=r0, tol_energy=1e-7))
    n_mid = len(traj.times) // 2
    rad = np.abs(traj.xs[n_mid:])
    out = np.flatnonzero(rad > r0)
    if len(out):
        tail = rad[out[0]:]
        assert np.all(np.diff(tail) >= -1e-12)


def test_group_law_on_samples():
    pot = pots.double_barrier_potential(2.0, 2.0, 0.4)
    params = dyn.FlowParams(dt=1e-3, t_max=5.0, r_escape=30.0)
    w = dyn.PhasePoint(0.3, 0.9)
    a = dyn.flow_map(dyn.flow_map(w, 0.75, pot, params), 0.5, pot, params)
    b = dyn.flow_map(w, 1.25, pot, params)
    assert abs(a.x - b.x) + abs(a.xi - b.xi) <= 10 * params.tol_energy


def test_tolerance_exceeded_raised():
    pot = pots.double_barrier_potential(2.0, 2.0, 0.4)
    strict = dyn.FlowParams(dt=5e-2, t_max=10.0, r_escape=30.0,
                            tol_energy=1e-14, method="leapfrog")
    with pytest.raises(ToleranceExceeded):
        dyn.integrate_flow(dyn.PhasePoint(0.0, 1.0), pot, strict)


@settings(max_examples=20, deadline=None)
@given(x0=st.floats(-1.5, 1.5), xi0=st.floats(-1.2, 1.2))
def test_energy_conservation_and_damping_properties(x0, xi0):
    pot = pots.double_barrier_potential(
        2.0, 2.0, 0.4, v2=pots.well_centered_damping(1.0, 1.0))
    params = dyn.FlowParams(dt=2e-3, t_max=2.0, r_escape=40.0)
    traj = dyn.integrate_flow(dyn.PhasePoint(x0, xi0), pot, params)
    assert traj.max_energy_drift <= params.tol_energy
    assert np.all(traj.q_values > 0.0) and np.all(traj.q_values <= 1.0)
    mid = len(traj.times) // 2
    assert np.all(np.diff(traj.q_values[mid:]) <= 1e-14)
    assert np.max(np.abs(traj.q1_values**2 - traj.q_values)) <= 1e-10


def test_q_identically_one_off_support():
    pot = pots.double_barrier_potential(
        2.0, 2.0, 0.4, v2=pots.outside_only_damping(2.0, 1.0))
    params = dyn.FlowParams(dt=1e-3, t_max=10.0, r_escape=8.0)
    traj = dyn.integrate_flow(dyn.PhasePoint(0.0, 1.0), pot, params)
    # trapped orbit never meets the outside-only damping
    assert not traj.flags.meets_O
    assert np.all(traj.q_values == 1.0)
