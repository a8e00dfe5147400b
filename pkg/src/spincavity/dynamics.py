"""Cavity-coupled Bloch dynamics of one effective level pair in dimensionless form.

Time is measured in units of the collective time T0, the detuning from cavity
resonance grows as ``v * tau``, and the state is (h, Z, R): cavity field
amplitude, inversion and transverse coherence. Two integrators are provided,
the full coherent system and the rate equations obtained by eliminating R
adiabatically, plus the damped-pendulum solution they reduce to at v = gamma = 0.
"""

import cmath
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DarkTransitionError, ValidationError
from .io import write_csv
from .ode import IntegratorStats, dopri45
from .parallel import parallel_map
from .spin_model import HBAR, MU_0, MU_B

TRAJECTORY_HEADER = ["tau", "Z", "re_R", "im_R", "re_h", "im_h", "intensity"]


@dataclass(frozen=True)
class DynamicsConfig:
    """Dimensionless parameters and integration controls.

    ``R0=None`` seeds the coherence from the tipping angle: the Bloch vector
    starts at angle ``theta0`` from the inverted pole, Z = Z0 cos(theta0) and
    R = Z0 sin(theta0) / sqrt(2), so Z^2 + 2|R|^2 = Z0^2 exactly. ``beta`` is the
    lumped local-field coefficient in b = h + beta R exp(-i psi).
    """

    gamma: float = 0.0
    kappa: float = 1.0
    v: float = 0.0
    psi: float = math.pi / 2
    beta: float = 0.0
    Z0: float = 1.0
    R0: complex | None = None
    h0: complex = 0j
    theta0: float = 1e-4
    tau_span: tuple[float, float] = (-50.0, 150.0)
    rtol: float = 1e-9
    atol: float = 1e-12
    sample_step: float = 0.05

    def __post_init__(self):
        for name in ("gamma", "kappa", "v", "psi", "beta", "Z0", "theta0", "rtol", "atol", "sample_step"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.gamma < 0:
            raise ValidationError(f"gamma must be >= 0, got {self.gamma}")
        if self.kappa < 0:
            raise ValidationError(f"kappa must be >= 0, got {self.kappa}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValidationError("rtol and atol must be positive")
        if self.sample_step <= 0:
            raise ValidationError("sample_step must be positive")
        t0, t1 = self.tau_span
        if not (math.isfinite(t0) and math.isfinite(t1) and t1 > t0):
            raise ValidationError(f"tau_span must be a finite increasing pair, got {self.tau_span}")
        z, r = self.initial_state()[1:]
        if z * z + 2 * abs(r) ** 2 > 1 + 1e-12:
            raise ValidationError(f"initial Bloch vector too long: Z0^2 + 2|R0|^2 = {z * z + 2 * abs(r) ** 2:.6g} > 1")

    def initial_state(self):
        """(h, Z, R) at ``tau_span[0]``."""
        if self.R0 is None:
            return complex(self.h0), self.Z0 * math.cos(self.theta0), self.Z0 * math.sin(self.theta0) / math.sqrt(2) + 0j
        return complex(self.h0), float(self.Z0), complex(self.R0)

    def sample_grid(self):
        t0, t1 = self.tau_span
        n = int(round((t1 - t0) / self.sample_step)) + 1
        return np.linspace(t0, t1, max(n, 2))

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class PhysicalContext:
    """Physical inputs that fix the dimensionless parameters of one transition.

    ``N0_eta`` is the active-molecule density times the filling factor (m^-3).
    ``T2`` or ``Tc`` may be ``inf`` for no dephasing or a lossless cavity.
    """

    N0_eta: float
    Omega: float
    s_magnitude: float
    T2: float
    Tc: float
    B0_dot: float
    m: int
    m_prime: int
    volume: float | None = None
    filling_factor: float = 1.0
    g_factor: float = 2.0
    local_field_beta: float = 0.0

    def __post_init__(self):
        for name in ("N0_eta", "Omega", "T2", "Tc", "filling_factor", "g_factor"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(f"{name} must be positive, got {value}")
        if not (math.isfinite(self.s_magnitude) and self.s_magnitude >= 0):
            raise ValidationError(f"s_magnitude must be finite and >= 0, got {self.s_magnitude}")
        if not (math.isfinite(self.B0_dot) and self.B0_dot >= 0):
            raise ValidationError(f"B0_dot must be finite and >= 0, got {self.B0_dot}")
        if self.m == self.m_prime:
            raise ValidationError("m and m_prime must differ")
        if self.volume is not None and not self.volume > 0:
            raise ValidationError(f"volume must be positive, got {self.volume}")

    @property
    def mu_tilde(self):
        return self.g_factor * MU_B

    @property
    def N0(self):
        return self.N0_eta / self.filling_factor


@dataclass
class Trajectory:
    tau: np.ndarray
    Z: np.ndarray
    R: np.ndarray
    h: np.ndarray
    config: DynamicsConfig | None = None
    stats: IntegratorStats | None = None
    mode: str = "coherent"
    flags: dict = field(default_factory=dict)

    @property
    def intensity(self):
        """Photon number per active molecule in the cavity, |h|^2 / 2."""
        return 0.5 * np.abs(self.h) ** 2

    @property
    def field_power(self):
        """|h|^2, the quantity the sech^2 pulse formula describes."""
        return np.abs(self.h) ** 2

    def bloch_norm(self):
        return self.Z**2 + 2 * np.abs(self.R) ** 2

    def rows(self):
        return zip(self.tau, self.Z, self.R.real, self.R.imag, self.h.real, self.h.imag, self.intensity)

    def to_csv(self, path):
        write_csv(path, TRAJECTORY_HEADER, self.rows())

    def meta_items(self):
        items = [("mode", self.mode)]
        if self.config is not None:
            items += [(f"config.{k}", v) for k, v in asdict(self.config).items()]
        if self.stats is not None:
            items += [(f"integrator.{k}", v) for k, v in self.stats.as_items()]
        items += [(f"flag.{k}", v) for k, v in self.flags.items()]
        return items


def characteristic_time(N0_eta, Omega, s_magnitude, g_factor=2.0):
    """T0 = sqrt(2 hbar / (eta N0 Omega mu0 mu~^2 |s|^2)) in seconds."""
    if s_magnitude == 0:
        raise DarkTransitionError("|s| = 0: the transition does not couple to the cavity, T0 is infinite")
    mu = g_factor * MU_B
    return math.sqrt(2 * HBAR / (N0_eta * Omega * MU_0 * mu * mu * s_magnitude**2))


def dimensionless_sweep(T0, B0_dot, m, m_prime, g_factor=2.0):
    return T0 * T0 * g_factor * MU_B * B0_dot * abs(m - m_prime) / HBAR


def derive_dimensionless(ctx, base=None):
    """Return ``(config, T0)`` with gamma, kappa, v and beta set from ``ctx``.

    Fields not fixed by the physics are taken from ``base`` (defaults if None).
    """
    T0 = characteristic_time(ctx.N0_eta, ctx.Omega, ctx.s_magnitude, ctx.g_factor)
    cfg = base if base is not None else DynamicsConfig()
    cfg = cfg.replace(
        gamma=T0 / ctx.T2,
        kappa=T0 / ctx.Tc,
        v=dimensionless_sweep(T0, ctx.B0_dot, ctx.m, ctx.m_prime, ctx.g_factor),
        beta=2 * ctx.local_field_beta / (ctx.filling_factor * T0 * ctx.Omega),
    )
    return cfg, T0


def _bloch_rhs(cfg):
    half_kappa = 0.5 * cfg.kappa
    gamma, v, beta = cfg.gamma, cfg.v, cfg.beta
    e = complex(math.cos(cfg.psi), -math.sin(cfg.psi))  # exp(-i psi)
    ec = e.conjugate()

    def rhs(tau, y):
        h = complex(y[0], y[1])
        R = complex(y[3], y[4])
        Z = y[2]
        Re = R * e
        b = h + beta * Re
        dh = -half_kappa * h + 1j * Re
        dZ = 2.0 * (b.conjugate() * Re).imag
        dR = -1j * v * tau * R - 1j * b * ec * Z - gamma * R
        return np.array([dh.real, dh.imag, dZ, dR.real, dR.imag])

    return rhs


def integrate_bloch_cavity(cfg):
    """Integrate the coherent field/inversion/coherence system over ``cfg.tau_span``."""
    h0, Z0, R0 = cfg.initial_state()
    y0 = [h0.real, h0.imag, Z0, R0.real, R0.imag]
    grid = cfg.sample_grid()
    sol = dopri45(_bloch_rhs(cfg), cfg.tau_span, y0, rtol=cfg.rtol, atol=cfg.atol, t_eval=grid)
    y = sol.y
    return Trajectory(
        tau=sol.t,
        Z=y[:, 2].copy(),
        R=y[:, 3] + 1j * y[:, 4],
        h=y[:, 0] + 1j * y[:, 1],
        config=cfg,
        stats=sol.stats,
        mode="coherent",
    )


def rate_seed(cfg):
    """Initial field amplitude for the rate equations."""
    if cfg.h0 != 0:
        return complex(cfg.h0)
    return cfg.Z0 * cfg.theta0 / math.sqrt(2) + 0j


def integrate_rate_equations(cfg):
    """Integrate the maser rate equations with the coherence eliminated.

    R follows the field adiabatically, R = -i b exp(i psi) Z / (gamma + i v tau),
    and is reconstructed on the output grid.
    """
    if cfg.gamma <= 0:
        raise ValidationError("rate equations need gamma > 0 (the coherence relaxation rate)")
    t_start = cfg.tau_span[0]
    if cfg.v > 0 and cfg.v * t_start > -10 * cfg.gamma:
        raise ValidationError(
            f"rate equations must start off resonance, v*tau_start <= -10*gamma; "
            f"got v*tau_start = {cfg.v * t_start:.6g} with gamma = {cfg.gamma:.6g}"
        )
    gamma, v, half_kappa = cfg.gamma, cfg.v, 0.5 * cfg.kappa
    b0 = rate_seed(cfg)
    grid = cfg.sample_grid()

    if b0 == 0:
        # b = 0 is a fixed point: nothing to integrate
        sol = None
        Z = np.full(grid.size, float(cfg.Z0))
        b = np.zeros(grid.size, complex)
        stats = IntegratorStats()
    else:
        # both equations are multiplicative, so integrate w = log|Z| and
        # u = log b: Z keeps its sign exactly and the field can shrink by many
        # decades off resonance without sinking below atol
        sign = math.copysign(1.0, cfg.Z0) if cfg.Z0 != 0 else 0.0

        def rhs(tau, y):
            Z = sign * math.exp(y[0])
            vt = v * tau
            dw = -math.exp(2.0 * y[1]) * 2.0 * gamma / (gamma * gamma + vt * vt)
            du = -half_kappa + Z / complex(gamma, vt)
            return np.array([dw, du.real, du.imag])

        w0 = math.log(abs(cfg.Z0)) if cfg.Z0 != 0 else 0.0
        y0 = [w0, math.log(abs(b0)), cmath.phase(b0)]
        sol = dopri45(rhs, cfg.tau_span, y0, rtol=cfg.rtol, atol=cfg.atol, t_eval=grid)
        Z = sign * np.exp(sol.y[:, 0])
        b = np.exp(sol.y[:, 1] + 1j * sol.y[:, 2])
        stats = sol.stats
    tau = grid if sol is None else sol.t
    R = -1j * b * np.exp(1j * cfg.psi) * Z / (gamma + 1j * v * tau)
    h = b - cfg.beta * R * np.exp(-1j * cfg.psi)
    return Trajectory(tau=tau, Z=Z, R=R, h=h, config=cfg, stats=stats, mode="rate")


def pulse_delay(kappa, Z0, theta0):
    """Delay of the sech^2 pulse peak after the start, tau_R ln(2/theta0)."""
    return kappa / (2 * Z0) * math.log(2 / theta0)


def pendulum_solution(kappa, Z0, theta0, tau_grid, *, branch="overdamped", rtol=1e-10, atol=1e-13):
    """Damped-pendulum trajectory starting at tipping angle ``theta0`` at ``tau_grid[0]``.

    The Bloch vector angle obeys theta'' + (kappa/2) theta' - Z0 sin(theta) = 0
    with b = theta' / sqrt(2). ``branch="overdamped"`` drops theta'' and gives the
    closed-form pulse |b|^2 = sech^2((tau - tau_d) / tau_R) / (2 tau_R^2),
    tau_R = kappa / (2 Z0); ``branch="full"`` integrates the second-order equation
    from rest (theta' = 0, i.e. an empty cavity).
    """
    if not kappa > 0:
        raise ValidationError(f"kappa must be positive, got {kappa}")
    if not Z0 > 0:
        raise ValidationError(f"Z0 must be positive, got {Z0}")
    if not 0 <= theta0 < math.pi:
        raise ValidationError(f"theta0 must lie in [0, pi), got {theta0}")
    if branch not in ("overdamped", "full"):
        raise ValidationError(f"branch must be 'overdamped' or 'full', got {branch!r}")
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size < 2 or np.any(np.diff(tau) <= 0):
        raise ValidationError("tau_grid must be a strictly increasing 1-D grid")
    cfg_flags = {"branch": branch, "degenerate": theta0 == 0}

    if theta0 == 0:
        theta = np.zeros_like(tau)
        rate = np.zeros_like(tau)
    elif branch == "overdamped":
        tau_r = kappa / (2 * Z0)
        x = (tau - tau[0] - pulse_delay(kappa, Z0, theta0)) / tau_r
        rate = 1.0 / (tau_r * np.cosh(x))
        theta = 2 * np.arctan(np.exp(x))
    else:
        def rhs(t, y):
            return np.array([y[1], Z0 * math.sin(y[0]) - 0.5 * kappa * y[1]])

        sol = dopri45(rhs, (tau[0], tau[-1]), [theta0, 0.0], rtol=rtol, atol=atol, t_eval=tau)
        theta, rate = sol.y[:, 0], sol.y[:, 1]

    return Trajectory(
        tau=tau,
        Z=Z0 * np.cos(theta),
        R=Z0 * np.sin(theta) / math.sqrt(2) + 0j,
        h=rate / math.sqrt(2) + 0j,
        mode=f"pendulum-{branch}",
        flags=cfg_flags,
    )


def sweep(configs, mode="coherent"):
    """Integrate independent configurations concurrently, results in input order."""
    integrate = {"coherent": integrate_bloch_cavity, "rate": integrate_rate_equations}.get(mode)
    if integrate is None:
        raise ValidationError(f"mode must be 'coherent' or 'rate', got {mode!r}")
    return parallel_map(integrate, list(configs))
