"""Turn a parsed scenario into library objects."""

import numpy as np

from .dynamics import DynamicsConfig, PhysicalContext
from .errors import ValidationError
from .hysteresis import FitConfig
from .spin_model import SpinSystemParams


def spin_params(scenario):
    s = dict(scenario["spin"])
    S = s.pop("S")
    s["S"] = int(S) if float(S).is_integer() else S
    return SpinSystemParams(**s)


def dynamics_config(scenario, **overrides):
    d = scenario["dynamics"]
    R0 = None
    if d["R0_re"] is not None or d["R0_im"] is not None:
        R0 = complex(d["R0_re"] or 0.0, d["R0_im"] or 0.0)
    try:
        cfg = DynamicsConfig(
            gamma=d["gamma"],
            kappa=d["kappa"],
            v=d["v"],
            psi=d["psi"],
            beta=d["beta"],
            Z0=d["Z0"],
            R0=R0,
            h0=complex(d["h0_re"], d["h0_im"]),
            theta0=d["theta0"],
            tau_span=(d["tau_start"], d["tau_end"]),
            rtol=d["rtol"],
            atol=d["atol"],
            sample_step=d["sample_step"],
        )
        return cfg.replace(**overrides) if overrides else cfg
    except ValidationError as exc:
        raise ValidationError(f"[dynamics] violates DynamicsConfig: {exc}") from None


def field_grid(scenario):
    f = scenario["field"]
    return np.linspace(f["B_min"], f["B_max"], f["B_points"])


def physical_context(scenario, s_magnitude):
    p = scenario["physical"]
    try:
        return PhysicalContext(
            N0_eta=p["N0_eta"],
            Omega=p["Omega"],
            s_magnitude=s_magnitude,
            T2=p["T2"],
            Tc=p["Tc"],
            B0_dot=p["B0_dot"],
            m=p["m"],
            m_prime=p["m_prime"],
            volume=p["volume"],
            filling_factor=p["filling_factor"],
            g_factor=scenario["spin"]["g_factor"],
            local_field_beta=p["local_field_beta"],
        )
    except ValidationError as exc:
        raise ValidationError(f"[physical] violates PhysicalContext: {exc}") from None


def fit_config(scenario, targets):
    f = scenario["fit"]
    fr = scenario["field"]
    if len(targets) < 3:
        raise ValidationError(f"fit needs at least 3 target steps for 3 parameters, got {len(targets)}")
    return FitConfig(
        target_steps=list(targets),
        initial=(f["initial_C_over_kB"], f["initial_E_over_kB"], f["initial_K_coeff"]),
        xatol=f["xatol"],
        fatol=f["fatol"],
        max_iter=f["max_iter"],
        match_window=f["match_window"],
        field_range=(fr["B_min"], fr["B_max"]),
        restarts=f["restarts"],
    )
