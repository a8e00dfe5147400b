import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles.reference import boltzmann_levels, hamiltonian, lzs_schrodinger
from spincavity.crossings import crossing_catalog, crossing_field_h0, scan_avoided_crossing
from spincavity.errors import ValidationError
from spincavity.hysteresis import (AdiabaticLimitWarning, FitConfig, fit_anisotropy_params, lzs_probability,
                                   simulate_hysteresis, step_residual, sweep_w_rate, thermal_populations,
                                   well_populations)
from spincavity.reduction import effective_two_level
from spincavity.spin_model import HBAR, SpinSystemParams

FIT_T, FIT_RATE = 6.0, 0.003


@pytest.fixture(scope="module")
def catalog():
    return crossing_catalog(SpinSystemParams(), (0.0, 1.5))


def test_no_gap_no_transition():
    assert lzs_probability(0.0, 1e-20) == 0.0


def test_forced_half_probability():
    w = 3.7e-21
    delta0 = math.sqrt(2 * HBAR * w * math.log(2) / math.pi)
    assert lzs_probability(delta0, w) == pytest.approx(0.5, rel=1e-12)


def test_zero_sweep_is_adiabatic_limit():
    with pytest.warns(AdiabaticLimitWarning):
        assert lzs_probability(1e-25, 0.0) == 1.0


def test_sign_of_sweep_rate_irrelevant():
    assert lzs_probability(2e-27, -5e-21) == lzs_probability(2e-27, 5e-21)


def test_ground_pair_against_schrodinger_integration():
    p = SpinSystemParams()
    rec = scan_avoided_crossing(p, -10, 8)
    model = effective_two_level(p, rec, 0.03)
    analytic = lzs_probability(model.delta0, model.w_rate)
    numeric = lzs_schrodinger(abs(model.delta0), model.w_rate)[0]
    assert abs(analytic - numeric) < 1e-3


def test_probability_across_three_decades_of_gap():
    w = sweep_w_rate(SpinSystemParams(), -10, 8, 0.03)
    delta0 = np.geomspace(0.01, 10.0, 13) * math.sqrt(HBAR * w)
    numeric = lzs_schrodinger(delta0, w)
    analytic = np.array([lzs_probability(d, w) for d in delta0])
    assert np.abs(analytic - numeric).max() < 1e-3


@given(d1=st.floats(1e-30, 1e-22), d2=st.floats(1e-30, 1e-22), w=st.floats(1e-24, 1e-18))
def test_probability_monotone_in_gap(d1, d2, w):
    lo, hi = sorted((d1, d2))
    assert lzs_probability(lo, w) <= lzs_probability(hi, w)


@given(d=st.floats(1e-30, 1e-22), w1=st.floats(1e-24, 1e-18), w2=st.floats(1e-24, 1e-18))
def test_probability_nonincreasing_in_sweep_rate(d, w1, w2):
    lo, hi = sorted((w1, w2))
    p_slow, p_fast = lzs_probability(d, lo), lzs_probability(d, hi)
    assert 0.0 <= p_fast <= p_slow <= 1.0


def test_sweep_slope_scales_with_level_distance():
    p = SpinSystemParams()
    assert sweep_w_rate(p, -10, 8, 0.03) == pytest.approx(p.mu_tilde * 0.03 * 18)


def test_high_temperature_populations_uniform():
    pops = thermal_populations(SpinSystemParams(), 1.0, 1e9)
    assert np.abs(pops - 1 / 21).max() < 1e-6


def test_low_temperature_populations_on_ground_level():
    pops = thermal_populations(SpinSystemParams(), 1.0, 1e-3)
    assert pops[0] == pytest.approx(1.0)
    assert pops[1:].sum() < 1e-12


def test_populations_against_boltzmann_oracle():
    got = thermal_populations(SpinSystemParams(), 1.4, 2.0)
    assert np.abs(got - boltzmann_levels(1.4, 2.0)).max() < 1e-12


@pytest.mark.parametrize("T", [0.0, -1.0])
def test_nonpositive_temperature_rejected(T):
    with pytest.raises(ValidationError):
        thermal_populations(SpinSystemParams(), 1.0, T)


def test_metastable_well_populations_against_oracle():
    p = SpinSystemParams()
    got = well_populations(p, 1.4, 2.0)
    vals, vecs = np.linalg.eigh(hamiltonian(1.4))
    labels = np.argmax(vecs**2, axis=0) - 10
    keep = labels < 0
    weights = np.exp(-(vals[keep] - vals[keep].min()) / (1.380649e-23 * 2.0))
    expected = np.zeros(21)
    expected[labels[keep] + 10] = weights / weights.sum()
    assert np.abs(got - expected).max() < 1e-10
    assert got[11:].sum() == 0.0


def test_unknown_well_rejected():
    with pytest.raises(ValidationError):
        well_populations(SpinSystemParams(), 1.0, 1.0, "upper")


def test_no_transverse_terms_gives_flat_magnetization():
    p = SpinSystemParams(C_over_kB=0, E_over_kB=0, K_coeff=0)
    res = simulate_hysteresis(p, 0.03, 2.0)
    assert np.ptp(res.magnetization) == 0.0
    assert all(s.height == 0.0 for s in res.step_records)


def test_empty_catalog_rejected():
    with pytest.raises(ValidationError):
        simulate_hysteresis(SpinSystemParams(), 0.03, 1.0, catalog=[])


def test_steps_at_predicted_crossing_fields(catalog):
    p = SpinSystemParams()
    res = simulate_hysteresis(p, 0.03, 2.0, catalog=catalog)
    # transverse terms shift these crossings by about a millitesla at most
    for s in res.step_records:
        assert abs(s.record.B0_star - crossing_field_h0(s.record.m, s.record.m_prime, p)) < 2e-3


def test_largest_low_temperature_step_near_reported_field(catalog):
    res = simulate_hysteresis(SpinSystemParams(), 0.03, 1.0, catalog=catalog)
    biggest = max(res.step_records, key=lambda s: abs(s.height))
    assert (biggest.record.m, biggest.record.m_prime) == (-10, 8)
    assert abs(biggest.record.B0_star - 1.13) < 0.05


def test_magnetization_changes_only_at_crossing_fields(catalog):
    res = simulate_hysteresis(SpinSystemParams(), 0.03, 2.0, catalog=catalog)
    jumps = np.flatnonzero(np.diff(res.magnetization))
    fields = np.array([s.record.B0_star for s in res.step_records])
    for k in jumps:
        lo, hi = res.field_grid[k], res.field_grid[k + 1]
        assert np.any((fields > lo) & (fields <= hi))


def test_csv_export(tmp_path, catalog):
    res = simulate_hysteresis(SpinSystemParams(), 0.03, 2.0, catalog=catalog, n_grid=11)
    path = tmp_path / "h.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "B0_tesla,magnetization"
    assert len(lines) == 12


@settings(max_examples=12)
@given(rate=st.floats(1e-4, 10.0), T=st.floats(0.5, 20.0), rethermalize=st.booleans())
def test_hysteresis_invariants(catalog, rate, T, rethermalize):
    p = SpinSystemParams()
    res = simulate_hysteresis(p, rate, T, catalog=catalog, rethermalize=rethermalize)
    assert np.all(res.populations >= 0)
    assert abs(res.populations.sum() - 1.0) < 1e-12
    assert np.all(np.abs(res.magnetization) <= p.S)
    assert np.all(np.diff(res.magnetization) >= -1e-12)


def _targets(params):
    res = simulate_hysteresis(params, FIT_RATE, FIT_T, catalog=crossing_catalog(params, (0.0, 1.5)), n_grid=2)
    return [(b, h) for b, h in res.steps() if abs(h) > 1e-5]


def test_zero_targets_converge_immediately():
    fit = FitConfig(target_steps=[(0.5, 0.0), (0.9, 0.0), (1.3, 0.0)], initial=(0.0, 0.0, 0.0))
    res = fit_anisotropy_params(fit, SpinSystemParams(), 0.03, 1.0)
    assert res.converged
    assert res.residual == 0.0
    assert res.iterations == 0


def test_reference_parameters_are_local_minimum():
    p = SpinSystemParams()
    targets = _targets(p)
    base = step_residual(p, targets, FIT_RATE, FIT_T)
    # roundoff only: squared target heights are above 1e-10
    assert base < 1e-20
    for name in ("C_over_kB", "E_over_kB", "K_coeff"):
        for factor in (0.9, 1.1):
            trial = p.replace(**{name: getattr(p, name) * factor})
            assert step_residual(trial, targets, FIT_RATE, FIT_T) > base, (name, factor)


def test_fit_needs_three_targets():
    fit = FitConfig(target_steps=[(0.5, 0.0), (0.9, 0.0)])
    with pytest.raises(ValidationError):
        fit_anisotropy_params(fit, SpinSystemParams(), 0.03, 1.0)


@pytest.mark.parametrize("kwargs", [{"target_steps": []}, {"target_steps": [(1, 0)], "xatol": 0.0},
                                    {"target_steps": [(1, 0)], "max_iter": 0}])
def test_fit_config_validation(kwargs):
    with pytest.raises(ValidationError):
        FitConfig(**kwargs)


def test_report_items_are_key_value_pairs():
    fit = FitConfig(target_steps=[(0.5, 0.0), (0.9, 0.0), (1.3, 0.0)], initial=(0.0, 0.0, 0.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        items = dict(fit_anisotropy_params(fit, SpinSystemParams(), 0.03, 1.0).report_items())
    assert set(items) >= {"C_over_kB", "E_over_kB", "K_coeff", "residual", "iterations", "converged"}
