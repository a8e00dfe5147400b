import math

import numpy as np
import pytest
from hypothesis import Phase, given, settings, strategies as st
from scipy.constants import hbar, mu_0, physical_constants

from oracles.reference import full_pendulum
from spincavity.dynamics import (DynamicsConfig, PhysicalContext, Trajectory, characteristic_time,
                                 derive_dimensionless, dimensionless_sweep, integrate_bloch_cavity,
                                 integrate_rate_equations, pendulum_solution, pulse_delay, rate_seed, sweep)
from spincavity.errors import DarkTransitionError, ValidationError
from spincavity.io import read_csv

muB = physical_constants["Bohr magneton"][0]
SEED = 1e-4 / math.sqrt(2)


def _context(**kw):
    base = dict(N0_eta=1e23, Omega=1e11, s_magnitude=1.0, T2=1e-6, Tc=1e-7, B0_dot=0.03, m=-10, m_prime=8)
    return PhysicalContext(**(base | kw))


def _peak(traj):
    k = int(np.argmax(traj.field_power))
    return traj.field_power[k], traj.tau[k] - traj.tau[0]


# configuration and physical units

@pytest.mark.parametrize("kw", [{"gamma": -1.0}, {"kappa": -0.1}, {"rtol": 0.0}, {"tau_span": (1.0, 0.0)},
                                {"Z0": 1.0, "R0": 0.5 + 0j}, {"v": math.nan}])
def test_config_invariants(kw):
    with pytest.raises(ValidationError):
        DynamicsConfig(**kw)


def test_tipping_angle_seed_sits_on_bloch_sphere():
    h, Z, R = DynamicsConfig(theta0=0.3, Z0=0.8).initial_state()
    assert h == 0
    assert Z**2 + 2 * abs(R) ** 2 == pytest.approx(0.64, rel=1e-14)
    assert abs(R) == pytest.approx(0.8 * math.sin(0.3) / math.sqrt(2))


def test_characteristic_time_formula():
    mu = 2 * muB
    expected = math.sqrt(2 * hbar / (1e23 * 1e11 * mu_0 * mu**2))
    T0 = characteristic_time(1e23, 1e11, 1.0)
    assert T0 == pytest.approx(expected, rel=1e-9)
    assert 5e-9 <= T0 <= 2e-8


def test_characteristic_time_density_scaling():
    assert characteristic_time(2e23, 1e11, 0.3) == pytest.approx(characteristic_time(1e23, 1e11, 0.3) / math.sqrt(2))


def test_dark_transition():
    with pytest.raises(DarkTransitionError):
        characteristic_time(1e23, 1e11, 0.0)
    with pytest.raises(DarkTransitionError):
        derive_dimensionless(_context(s_magnitude=0.0))


def test_sweep_rate_worked_example():
    v = dimensionless_sweep(1e-6, 0.03, -10, 8)
    assert v == pytest.approx(1e-12 * 2 * muB * 0.03 * 18 / hbar, rel=1e-9)
    assert abs(v - 0.1) < 0.01


def test_derive_dimensionless():
    ctx = _context(local_field_beta=0.5, filling_factor=0.5)
    cfg, T0 = derive_dimensionless(ctx, DynamicsConfig(theta0=1e-3))
    assert cfg.gamma == pytest.approx(T0 / 1e-6)
    assert cfg.kappa == pytest.approx(T0 / 1e-7)
    assert cfg.v == pytest.approx(dimensionless_sweep(T0, 0.03, -10, 8))
    assert cfg.beta == pytest.approx(2 * 0.5 / (0.5 * T0 * 1e11))
    assert cfg.theta0 == 1e-3


@pytest.mark.parametrize("kw", [{"N0_eta": 0.0}, {"T2": -1.0}, {"m_prime": -10}, {"volume": 0.0},
                                {"s_magnitude": -1.0}])
def test_physical_context_invariants(kw):
    with pytest.raises(ValidationError):
        _context(**kw)


# coherent system

def test_conservation_at_resonance():
    tr = integrate_bloch_cavity(DynamicsConfig(gamma=0.0, kappa=2.0, v=0.0))
    assert np.abs(tr.bloch_norm() - 1.0).max() < 1e-8


# no shrinking: every example is a full integration and the defect varies smoothly
@settings(max_examples=8, phases=[Phase.explicit, Phase.reuse, Phase.generate])
@given(kappa=st.floats(0.2, 5.0), v=st.floats(0.0, 0.4))
def test_conservation_property(kappa, v):
    tr = integrate_bloch_cavity(DynamicsConfig(gamma=0.0, kappa=kappa, v=v))
    assert np.abs(tr.bloch_norm() - 1.0).max() < 1e-8


def test_unseeded_state_stays_put():
    tr = integrate_bloch_cavity(DynamicsConfig(gamma=0.3, kappa=0.8, v=0.2, theta0=0.0))
    assert np.all(tr.Z == 1.0)
    assert np.all(tr.h == 0) and np.all(tr.R == 0)


def test_field_without_spins_decays_freely():
    cfg = DynamicsConfig(gamma=0.3, kappa=0.8, v=0.2, Z0=0.0, R0=0j, h0=0.01 + 0.02j)
    tr = integrate_bloch_cavity(cfg)
    assert np.all(tr.Z == 0.0)
    expected = (0.01 + 0.02j) * np.exp(-0.4 * (tr.tau - tr.tau[0]))
    assert np.abs(tr.h - expected).max() < 1e-10


def test_exact_resonance_reduces_to_full_pendulum():
    tr = integrate_bloch_cavity(DynamicsConfig(gamma=0.0, kappa=2.0, v=0.0))
    ref = full_pendulum(2.0, 1.0, 1e-4, tr.tau)
    assert np.abs(tr.field_power - ref).max() < 1e-6 * ref.max()


def test_moderate_damping_pulse_against_closed_form():
    # kappa = 2, tau_R = 1: peak 1/(2 tau_R^2) = 0.5 at tau_R ln(2/theta0)
    tr = integrate_bloch_cavity(DynamicsConfig(gamma=0.0, kappa=2.0, v=0.0))
    height, delay = _peak(tr)
    assert height == pytest.approx(0.5, rel=0.05)
    assert delay == pytest.approx(pulse_delay(2.0, 1.0, 1e-4), rel=0.05)


def test_energy_balance():
    tr = integrate_bloch_cavity(DynamicsConfig(gamma=0.0, kappa=1.0, v=0.0))
    leaked = tr.config.kappa * np.trapezoid(tr.intensity, tr.tau)
    stored = tr.intensity[-1]
    emitted = 0.5 * (tr.Z[0] - tr.Z[-1])
    assert leaked + stored == pytest.approx(emitted, rel=0.01)


def test_stronger_damping_delays_onset_and_damps_ringing():
    onsets, ringing = [], []
    for kappa in (0.2, 1.0, 5.0):
        tr = integrate_bloch_cavity(DynamicsConfig(gamma=0.0, kappa=kappa, v=0.2))
        onsets.append(tr.tau[np.argmax(tr.Z < 0.9)])
        I = tr.intensity
        inner = I[1:-1]
        ringing.append(int(np.count_nonzero((inner > I[:-2]) & (inner >= I[2:]) & (inner > 0.01 * I.max()))))
    assert onsets[0] < onsets[1] < onsets[2]
    assert ringing[0] > ringing[1] > ringing[2]


def test_strong_damping_inverts_fully():
    tr = integrate_bloch_cavity(DynamicsConfig(gamma=0.0, kappa=5.0, v=0.2))
    assert tr.Z[-1] < -0.9


def test_dephasing_raises_final_inversion():
    finals = [integrate_bloch_cavity(DynamicsConfig(gamma=g, kappa=0.2, v=0.2)).Z[-1] for g in (0.05, 0.2, 1.0)]
    assert finals[0] < finals[1] < finals[2]


def test_trajectory_shape_and_csv(tmp_path):
    tr = integrate_bloch_cavity(DynamicsConfig(kappa=1.0, v=0.2, tau_span=(-5.0, 5.0), sample_step=0.5))
    assert np.all(np.diff(tr.tau) > 0)
    assert np.all(tr.intensity >= 0)
    assert tr.tau.size == 21
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    header, rows = read_csv(path)
    assert header == ["tau", "Z", "re_R", "im_R", "re_h", "im_h", "intensity"]
    assert len(rows) == 21
    meta = dict(tr.meta_items())
    assert meta["mode"] == "coherent" and "integrator.steps_accepted" in meta


def test_stiff_problem_reports_stiffness():
    from spincavity.errors import StiffnessError

    cfg = DynamicsConfig(gamma=1e18, kappa=1.0, v=0.0, tau_span=(0.0, 1.0))
    with pytest.raises(StiffnessError):
        integrate_bloch_cavity(cfg)


# rate equations

def test_rate_equations_need_dephasing():
    with pytest.raises(ValidationError):
        integrate_rate_equations(DynamicsConfig(gamma=0.0))


def test_rate_equations_must_start_off_resonance():
    with pytest.raises(ValidationError):
        integrate_rate_equations(DynamicsConfig(gamma=1.0, v=0.1, tau_span=(-50.0, 50.0)))


def test_rate_seed():
    assert rate_seed(DynamicsConfig(gamma=1.0, h0=0.2j)) == 0.2j
    assert rate_seed(DynamicsConfig(gamma=1.0, Z0=0.5, theta0=1e-3)) == pytest.approx(0.5e-3 / math.sqrt(2))


def test_zero_field_is_fixed_point():
    tr = integrate_rate_equations(DynamicsConfig(gamma=1.0, kappa=0.1, theta0=0.0))
    assert np.all(tr.h == 0)
    assert np.all(tr.Z == 1.0)


@settings(max_examples=15)
@given(gamma=st.floats(0.5, 5.0), kappa=st.floats(0.0, 1.0), v=st.just(0.0) | st.floats(0.05, 0.3),
       Z0=st.floats(-1.0, 1.0))
def test_rate_inversion_never_changes_sign(gamma, kappa, v, Z0):
    start = -50.0 if v == 0 else min(-50.0, -10 * gamma / v)
    cfg = DynamicsConfig(gamma=gamma, kappa=kappa, v=v, Z0=Z0, theta0=1e-2, tau_span=(start, 100.0))
    tr = integrate_rate_equations(cfg)
    assert np.all(np.sign(tr.Z) == np.sign(Z0))
    assert np.all(np.diff(np.abs(tr.Z)) <= 1e-12)


@pytest.mark.parametrize("gamma,kappa", [(1.0, 0.5), (2.0, 0.2), (0.5, 3.0), (1.0, 2.0)])
def test_small_signal_gain(gamma, kappa):
    cfg = DynamicsConfig(gamma=gamma, kappa=kappa, v=0.0, theta0=1e-9, tau_span=(0.0, 10.0))
    tr = integrate_rate_equations(cfg)
    rate = np.polyfit(tr.tau, np.log(np.abs(tr.h)), 1)[0]
    assert rate == pytest.approx(1 / gamma - kappa / 2, abs=1e-6)


def test_threshold_at_unit_product():
    cfg = DynamicsConfig(gamma=0.5, kappa=4.0, v=0.0, theta0=1e-9, tau_span=(0.0, 20.0))
    tr = integrate_rate_equations(cfg)
    assert np.abs(np.abs(tr.h) / abs(tr.h[0]) - 1).max() < 1e-6


@pytest.mark.parametrize("gamma,kappa,v,tau_end", [
    (5.0, 0.5, 0.0, 150.0),
    (5.0, 0.1, 0.0, 400.0),
    (10.0, 0.05, 0.0, 600.0),
    (5.0, 0.02, 0.05, 400.0),
    (5.0, 0.05, 0.1, 300.0),
    (8.0, 0.02, 0.05, 600.0),
])
def test_rate_equations_agree_with_coherent_system(gamma, kappa, v, tau_end):
    # both runs start from the same small field and no coherence
    start = -50.0 if v == 0 else -10 * gamma / v
    cfg = DynamicsConfig(gamma=gamma, kappa=kappa, v=v, R0=0j, h0=SEED + 0j, tau_span=(start, tau_end))
    full = integrate_bloch_cavity(cfg)
    rate = integrate_rate_equations(cfg)
    assert abs(full.Z[-1] - rate.Z[-1]) < 0.05


def test_sweep_keeps_input_order():
    configs = [DynamicsConfig(gamma=g, kappa=0.2, v=0.2, tau_span=(-20.0, 40.0)) for g in (1.0, 0.05, 0.2)]
    results = sweep(configs, "coherent")
    assert [r.config.gamma for r in results] == [1.0, 0.05, 0.2]
    with pytest.raises(ValidationError):
        sweep(configs, "quantum")


# pendulum oracle

def test_relaxation_time():
    # tau_R = 1, so the peak is 1/2 at tau_R ln(2/theta0)
    delay = math.log(2e4)
    tr = pendulum_solution(2.0, 1.0, 1e-4, np.array([0.0, delay - 0.1, delay, delay + 0.1, 30.0]))
    assert int(np.argmax(tr.field_power)) == 2
    assert tr.field_power[2] == pytest.approx(0.5, rel=1e-12)


def test_overdamped_branch_matches_full_pendulum_at_strong_damping():
    tau = np.linspace(0.0, 250.0, 25001)
    over = pendulum_solution(20.0, 1.0, 1e-4, tau)
    full = pendulum_solution(20.0, 1.0, 1e-4, tau, branch="full")
    h_over, d_over = _peak(over)
    h_full, d_full = _peak(full)
    assert h_over == pytest.approx(h_full, rel=0.02)
    assert d_over == pytest.approx(d_full, rel=0.02)


def test_full_branch_against_independent_integration():
    tau = np.linspace(0.0, 60.0, 601)
    full = pendulum_solution(3.0, 0.7, 1e-3, tau, branch="full")
    assert np.abs(full.field_power - full_pendulum(3.0, 0.7, 1e-3, tau)).max() < 1e-8


def test_degenerate_start_is_flagged():
    tr = pendulum_solution(2.0, 1.0, 0.0, np.linspace(0, 10, 11))
    assert tr.flags["degenerate"]
    assert np.all(tr.h == 0)


@pytest.mark.parametrize("args", [(0.0, 1.0, 1e-4), (1.0, 0.0, 1e-4), (1.0, 1.0, math.pi), (1.0, 1.0, -0.1)])
def test_pendulum_input_checks(args):
    with pytest.raises(ValidationError):
        pendulum_solution(*args, np.linspace(0, 1, 5))


def test_pendulum_branch_name_checked():
    with pytest.raises(ValidationError):
        pendulum_solution(1.0, 1.0, 1e-3, np.linspace(0, 1, 5), branch="under")


def test_trajectory_is_plain_container():
    tr = Trajectory(np.array([0.0, 1.0]), np.ones(2), np.zeros(2, complex), np.array([1j, 0]))
    assert tr.intensity.tolist() == [0.5, 0.0]
    assert tr.field_power.tolist() == [1.0, 0.0]
