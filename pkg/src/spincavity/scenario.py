"""Strict ``key = value`` scenario files with ``[section]`` headers and ``#`` comments.

Every section and key is declared in :data:`SCHEMA` with a type and a default.
Unknown names are rejected with the closest valid spelling; values that do not
parse are reported with their line number. :func:`serialize` writes every key,
defaults included, with 17 significant digits so parse(serialize(s)) == s.
"""

import difflib
import math
from dataclasses import dataclass, field

from .errors import ValidationError
from .io import fmt

COMMANDS = ("levels", "crossings", "hysteresis", "fit", "dynamics", "maser", "t0scan", "peaks")

INF = math.inf

# section -> key -> (type, default)
SCHEMA = {
    "spin": {
        "S": ("float", 10.0),
        "D_over_kB": ("float", 0.56),
        "F_over_kB": ("float", 1.1e-3),
        "C_over_kB": ("float", 1.36e-5),
        "E_over_kB": ("float", -4.48e-3),
        "K_coeff": ("float", 0.025),
        "g_factor": ("float", 2.0),
    },
    "field": {
        "B_min": ("float", 0.0),
        "B_max": ("float", 1.5),
        "B_points": ("int", 1501),
        "sweep_rate": ("float", 0.03),
        "temperature": ("float", 1.0),
        "scan_step": ("float", 1e-3),
        "half_width": ("float", 0.02),
        "rethermalize": ("bool", False),
    },
    "dynamics": {
        "mode": ("choice:coherent,rate", "coherent"),
        "gamma": ("float", 0.0),
        "kappa": ("float", 1.0),
        "v": ("float", 0.2),
        "psi": ("float", math.pi / 2),
        "beta": ("float", 0.0),
        "Z0": ("float", 1.0),
        "R0_re": ("optfloat", None),
        "R0_im": ("optfloat", None),
        "h0_re": ("float", 0.0),
        "h0_im": ("float", 0.0),
        "theta0": ("float", 1e-4),
        "tau_start": ("float", -50.0),
        "tau_end": ("float", 150.0),
        "rtol": ("float", 1e-9),
        "atol": ("float", 1e-12),
        "sample_step": ("float", 0.05),
    },
    "sweep": {
        "gamma_values": ("floats", ()),
        "kappa_values": ("floats", ()),
        "v_values": ("floats", ()),
    },
    "physical": {
        "N0_eta": ("float", 1e23),
        "Omega": ("float", 1e11),
        "s_magnitude": ("optfloat", 1.0),
        "T2": ("float", 7e-9),
        "Tc": ("float", 7e-8),
        "B0_dot": ("float", 0.03),
        "m": ("int", -10),
        "m_prime": ("int", 8),
        "B0": ("float", 1.4),
        "volume": ("optfloat", None),
        "filling_factor": ("float", 1.0),
        "local_field_beta": ("float", 0.0),
    },
    "t0scan": {
        "B0": ("float", 1.4),
        "T_min": ("float", 0.3),
        "T_max": ("float", 2.0),
        "T_points": ("int", 35),
        "density": ("float", 1e26),
        "filling_factor": ("float", 1.0),
        "family_total": ("int", -2),
    },
    "fit": {
        "targets": ("pairs", ()),
        "synthetic": ("bool", False),
        "synthetic_threshold": ("float", 1e-5),
        "initial_C_over_kB": ("float", 1.36e-5),
        "initial_E_over_kB": ("float", -4.48e-3),
        "initial_K_coeff": ("float", 0.025),
        "xatol": ("float", 1e-6),
        "fatol": ("float", 1e-14),
        "max_iter": ("int", 2000),
        "match_window": ("float", 0.01),
        "restarts": ("int", 0),
    },
    "peaks": {
        "mode": ("choice:coherent,rate", "coherent"),
        "gamma": ("float", 0.1),
        "kappa": ("float", 1.0),
        "v_values": ("floats", (0.1, 0.2, 0.4)),
        "tau_end": ("float", 150.0),
    },
}


@dataclass(frozen=True)
class Scenario:
    command: str
    values: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")

    def __getitem__(self, section):
        return self.values[section]

    def items(self):
        """Flat (section.key, value) pairs for metadata echo."""
        return [(f"{sec}.{key}", self.values[sec][key]) for sec in SCHEMA for key in SCHEMA[sec]]


def defaults():
    return {sec: {key: spec[1] for key, spec in keys.items()} for sec, keys in SCHEMA.items()}


def _nearest(name, options):
    match = difflib.get_close_matches(name, list(options), n=1, cutoff=0.0)
    return match[0] if match else None


def _parse_float(text):
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


def _convert(kind, text):
    if kind == "float":
        return _parse_float(text)
    if kind == "optfloat":
        return None if text.lower() == "none" else _parse_float(text)
    if kind == "int":
        return int(text)
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got {text!r}")
    if kind == "floats":
        return tuple(_parse_float(t) for t in text.split(",") if t.strip())
    if kind == "pairs":
        # "B:height, B:height"
        out = []
        for item in text.split(","):
            if not item.strip():
                continue
            b, h = item.split(":")
            out.append((_parse_float(b), _parse_float(h)))
        return tuple(out)
    if kind.startswith("choice:"):
        options = kind[len("choice:"):].split(",")
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    raise AssertionError(kind)


def parse_scenario(text, command, *, seed=None):
    """Parse scenario ``text`` for ``command``; missing keys take their defaults."""
    values = defaults()
    seen = set()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ValidationError(f"line {lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                hint = _nearest(section, SCHEMA)
                raise ValidationError(f"line {lineno}: unknown section [{section}]; did you mean [{hint}]?")
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if section is None:
            raise ValidationError(f"line {lineno}: key outside of any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            hint = _nearest(key, SCHEMA[section])
            raise ValidationError(f"line {lineno}: unknown key {key!r} in [{section}]; nearest valid key is {hint!r}")
        if (section, key) in seen:
            raise ValidationError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        seen.add((section, key))
        kind = SCHEMA[section][key][0]
        try:
            values[section][key] = _convert(kind, value)
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: bad value for {section}.{key} ({kind}): {exc}") from None
    scenario = Scenario(command, values, seed)
    validate(scenario)
    return scenario


def _format(kind, value):
    if value is None:
        return "none"
    if kind == "floats":
        return ", ".join(fmt(float(v)) for v in value)
    if kind == "pairs":
        return ", ".join(f"{fmt(float(b))}:{fmt(float(h))}" for b, h in value)
    return fmt(value)


def serialize(scenario):
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, (kind, _) in keys.items():
            lines.append(f"{key} = {_format(kind, scenario.values[sec][key])}")
        lines.append("")
    return "\n".join(lines)


def validate(scenario):
    """Build every domain object once so invariant violations surface at parse time."""
    from .builders import dynamics_config, fit_config, physical_context, spin_params

    spin_params(scenario)
    dynamics_config(scenario)
    f = scenario["field"]
    if not f["B_max"] > f["B_min"]:
        raise ValidationError("field.B_max must exceed field.B_min")
    if f["B_points"] < 2:
        raise ValidationError("field.B_points must be at least 2")
    if not f["temperature"] > 0:
        raise ValidationError("field.temperature must be positive")
    if not (f["scan_step"] > 0 and f["half_width"] > 0):
        raise ValidationError("field.scan_step and field.half_width must be positive")
    if any(v <= 0 for v in scenario["peaks"]["v_values"]):
        raise ValidationError("peaks.v_values must be positive")
    t = scenario["t0scan"]
    if not (0 < t["T_min"] <= t["T_max"]) or t["T_points"] < 1 or not t["density"] > 0:
        raise ValidationError("t0scan needs 0 < T_min <= T_max, T_points >= 1 and density > 0")
    if scenario.command == "maser":
        physical_context(scenario, s_magnitude=scenario["physical"]["s_magnitude"] or 1.0)
    if scenario.command == "fit":
        fit_config(scenario, targets=scenario["fit"]["targets"] or ((0.0, 0.0),) * 3)
