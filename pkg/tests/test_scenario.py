import math

import pytest
from hypothesis import given, strategies as st

from spincavity.builders import spin_params
from spincavity.errors import ValidationError
from spincavity.scenario import COMMANDS, SCHEMA, Scenario, defaults, parse_scenario, serialize


def test_empty_file_gives_default_parameters():
    sc = parse_scenario("", "levels")
    p = spin_params(sc)
    assert (p.S, p.D_over_kB, p.F_over_kB) == (10, 0.56, 1.1e-3)
    assert (p.C_over_kB, p.E_over_kB, p.K_coeff) == (1.36e-5, -4.48e-3, 0.025)
    assert sc.values == defaults()


def test_comments_and_blank_lines_ignored():
    sc = parse_scenario("# header\n\n[dynamics]  # inline\nkappa = 5   # strong\n", "dynamics")
    assert sc["dynamics"]["kappa"] == 5.0


def test_unknown_key_names_nearest():
    with pytest.raises(ValidationError, match=r"line 2: unknown key 'kapa'.*'kappa'"):
        parse_scenario("[dynamics]\nkapa = 1\n", "dynamics")


def test_unknown_section_names_nearest():
    with pytest.raises(ValidationError, match=r"line 1: .*\[dynamcs\].*\[dynamics\]"):
        parse_scenario("[dynamcs]\n", "dynamics")


def test_type_mismatch_reports_line():
    with pytest.raises(ValidationError, match=r"line 3: bad value for field.B_points"):
        parse_scenario("[field]\nB_min = 0\nB_points = many\n", "levels")


def test_negative_gamma_cites_dynamics_invariant():
    with pytest.raises(ValidationError, match="DynamicsConfig"):
        parse_scenario("[dynamics]\ngamma = -1\n", "dynamics")


@pytest.mark.parametrize("text", ["[dynamics]\nkappa = 1\nkappa = 2\n", "kappa = 1\n", "[dynamics]\nkappa\n",
                                  "[dynamics\n", "[dynamics]\nkappa = nan\n", "[field]\nrethermalize = maybe\n",
                                  "[dynamics]\nmode = quantum\n", "[field]\nB_max = -1\n"])
def test_malformed_input_rejected(text):
    with pytest.raises(ValidationError):
        parse_scenario(text, "dynamics")


def test_unknown_command_rejected():
    with pytest.raises(ValidationError):
        Scenario("simulate")


def test_list_and_pair_values():
    sc = parse_scenario("[sweep]\nkappa_values = 0.2, 1, 5\n[fit]\ntargets = 0.45:0.1, 0.9:0.2, 1.3:0.3\n", "dynamics")
    assert sc["sweep"]["kappa_values"] == (0.2, 1.0, 5.0)
    assert sc["fit"]["targets"] == ((0.45, 0.1), (0.9, 0.2), (1.3, 0.3))


def test_round_trip_of_defaults():
    sc = parse_scenario("", "peaks")
    again = parse_scenario(serialize(sc), "peaks")
    assert again == sc
    assert math.pi / 2 == again["dynamics"]["psi"]


@given(kappa=st.floats(1e-3, 1e3), gamma=st.floats(0.0, 1e2), v=st.floats(1e-3, 10.0),
       values=st.lists(st.floats(1e-3, 10.0), max_size=4), command=st.sampled_from(COMMANDS))
def test_round_trip_is_exact(kappa, gamma, v, values, command):
    text = (f"[dynamics]\nkappa = {kappa!r}\ngamma = {gamma!r}\nv = {v!r}\n"
            f"[sweep]\nv_values = {', '.join(map(repr, values))}\n")
    if command == "fit":
        text += "[fit]\ntargets = 0.45:0.1, 0.9:0.2, 1.3:0.3\n"
    sc = parse_scenario(text, command)
    assert parse_scenario(serialize(sc), command) == sc


def test_items_cover_every_key():
    keys = [k for k, _ in parse_scenario("", "levels").items()]
    assert len(keys) == sum(len(v) for v in SCHEMA.values())
    assert "dynamics.kappa" in keys
