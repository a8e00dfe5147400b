"""Landau-Zener-Stueckelberg cascade through the avoided crossings of a sweep.

Each crossing is passed once, in field order, and treated as an isolated LZS
problem; there is no interference between crossings. Populations are carried
per diabatic label m.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize

from .crossings import candidate_pairs, crossing_catalog, crossing_field_h0
from .errors import ValidationError
from .spin_model import HBAR, KB, build_hamiltonian, eigh

log = logging.getLogger(__name__)


class AdiabaticLimitWarning(UserWarning):
    """Zero sweep rate: the crossing is passed adiabatically, P = 1."""


def lzs_probability(delta0, w_rate):
    """Probability of the m -> m' transition for a linear sweep through a gap.

    P = 1 - exp(-pi delta0^2 / (2 hbar |w_rate|)) with ``delta0`` in J and
    ``w_rate`` = dw/dt in J/s. A zero sweep rate returns the adiabatic limit
    P = 1 and emits :class:`AdiabaticLimitWarning`.
    """
    delta0 = abs(delta0)
    w_rate = abs(w_rate)
    if delta0 == 0.0:
        return 0.0
    if w_rate == 0.0:
        warnings.warn("zero sweep rate, returning adiabatic limit P = 1", AdiabaticLimitWarning,
                      stacklevel=2)
        return 1.0
    return -math.expm1(-math.pi * delta0 * delta0 / (2.0 * HBAR * w_rate))


def sweep_w_rate(params, m, m_prime, sweep_rate):
    """|dw/dt| in J/s for pair (m, m') at sweep rate ``sweep_rate`` (T/s)."""
    return abs(params.mu_tilde * sweep_rate * (m - m_prime))


def boltzmann(energies, T):
    if not T > 0:
        raise ValidationError(f"temperature must be > 0 K, got {T}")
    e = np.asarray(energies, dtype=float)
    x = -(e - e.min()) / (KB * T)
    p = np.exp(x)
    return p / p.sum()


def thermal_populations(params, B0, T):
    """Boltzmann populations of the eigenlevels of H_S at ``B0``, ascending energy."""
    vals, _ = eigh(build_hamiltonian(params, B0))
    return boltzmann(vals, T)


def level_labels(vectors, m_values):
    """Assign every eigenvector a distinct diabatic label m (maximal total weight)."""
    rows, cols = linear_sum_assignment(-(vectors**2))
    labels = np.empty(vectors.shape[1])
    labels[cols] = m_values[rows]
    return labels


def well_populations(params, B0, T, well="negative"):
    """Boltzmann populations indexed by m (row ``m + S``), conditional on one well.

    ``well="negative"`` keeps only levels labelled m < 0, the metastable well
    left behind by a prior negative saturation.
    """
    vals, vecs = eigh(build_hamiltonian(params, B0))
    m_values = params.m_values()
    labels = level_labels(vecs, m_values)
    if well == "negative":
        keep = labels < 0
    elif well == "positive":
        keep = labels > 0
    else:
        raise ValidationError(f"unknown well {well!r}")
    pops = np.zeros(params.dim)
    p = boltzmann(vals[keep], T)
    for lab, pk in zip(labels[keep], p):
        pops[params.index(lab)] = pk
    return pops


@dataclass
class StepRecord:
    record: object
    probability: float
    height: float


@dataclass
class HysteresisResult:
    field_grid: np.ndarray
    magnetization: np.ndarray
    step_records: list
    sweep_rate: float
    temperature: float
    populations: np.ndarray = field(repr=False, default=None)

    def steps(self):
        """(B0_star, magnetization jump) for every crossing passed."""
        return [(s.record.B0_star, s.height) for s in self.step_records]

    def write_csv(self, path):
        from .io import write_csv

        write_csv(path, ["B0_tesla", "magnetization"], zip(self.field_grid, self.magnetization))


def _rethermalize(pops, params, B0, T):
    out = pops.copy()
    m_values = params.m_values()
    for well in ("negative", "positive"):
        mask = m_values < 0 if well == "negative" else m_values > 0
        total = pops[mask].sum()
        if total > 0:
            out[mask] = total * well_populations(params, B0, T, well)[mask]
    return out


def simulate_hysteresis(params, sweep_rate, T, field_range=(0.0, 1.5), *, catalog=None,
                        n_grid=1501, rethermalize=False):
    """Magnetization <S_z> per molecule along an up-sweep from the m < 0 well.

    At every catalogued crossing, in field order, a fraction P_mm' of the
    population of m moves to m'. With ``rethermalize`` the population inside
    each well is redistributed thermally after every crossing.
    """
    lo, hi = field_range
    if not hi > lo:
        raise ValidationError(f"empty field range {field_range}")
    if catalog is None:
        catalog = crossing_catalog(params, field_range)
    catalog = sorted((r for r in catalog if lo < r.B0_star <= hi), key=lambda r: r.B0_star)
    if not catalog:
        raise ValidationError("no avoided crossings inside the field range")

    m_values = params.m_values()
    pops = well_populations(params, lo, T, "negative")
    steps = []
    for rec in catalog:
        i, j = params.index(rec.m), params.index(rec.m_prime)
        P = lzs_probability(rec.delta0, sweep_w_rate(params, rec.m, rec.m_prime, sweep_rate))
        moved = pops[i] * P
        before = pops @ m_values
        pops[i] -= moved
        pops[j] += moved
        if rethermalize:
            pops = _rethermalize(pops, params, rec.B0_star, T)
        steps.append(StepRecord(rec, P, float(pops @ m_values - before)))

    grid = np.linspace(lo, hi, n_grid)
    start = float(well_populations(params, lo, T, "negative") @ m_values)
    fields = np.array([s.record.B0_star for s in steps])
    cum = start + np.concatenate([[0.0], np.cumsum([s.height for s in steps])])
    magnetization = cum[np.searchsorted(fields, grid, side="right")]
    return HysteresisResult(grid, magnetization, steps, sweep_rate, T, pops)


@dataclass
class FitConfig:
    """Targets and simplex controls for fitting (C, E, K_coeff) to step heights.

    ``target_steps`` holds (B0 in T, magnetization jump); ``initial`` is
    (C_over_kB, E_over_kB, K_coeff).
    """

    target_steps: list
    initial: tuple = (1.36e-5, -4.48e-3, 0.025)
    xatol: float = 1e-6
    fatol: float = 1e-14
    max_iter: int = 2000
    match_window: float = 0.01
    field_range: tuple = (0.0, 1.5)
    restarts: int = 0
    max_restarts: int = 10

    def __post_init__(self):
        if not self.target_steps:
            raise ValidationError("target_steps must not be empty")
        if not (self.xatol > 0 and self.fatol > 0 and self.max_iter > 0):
            raise ValidationError("fit tolerances and max_iter must be > 0")


@dataclass
class FitResult:
    C_over_kB: float
    E_over_kB: float
    K_coeff: float
    residual: float
    iterations: int
    evaluations: int
    converged: bool
    message: str = ""

    def report_items(self):
        return [
            ("C_over_kB", self.C_over_kB),
            ("E_over_kB", self.E_over_kB),
            ("K_coeff", self.K_coeff),
            ("residual", self.residual),
            ("iterations", self.iterations),
            ("evaluations", self.evaluations),
            ("converged", self.converged),
            ("message", self.message),
        ]


_DEFAULT_SCALE = (1e-5, 1e-3, 1e-2)


def _fit_pairs(params, targets, window, field_range):
    lo, hi = field_range
    fields = np.array([b for b, _ in targets])
    return [
        pr for pr in candidate_pairs(params, (lo, hi))
        if np.min(np.abs(fields - crossing_field_h0(*pr, params))) <= window + 0.02
    ]


def step_residual(params, targets, sweep_rate, T, *, match_window=0.01, field_range=(0.0, 1.5),
                  pairs=None):
    """Sum of squared differences between target and simulated step heights.

    Every simulated jump is credited to the nearest target field, provided it
    lies within ``match_window``.
    """
    if pairs is None:
        pairs = _fit_pairs(params, targets, match_window, field_range)
    catalog = crossing_catalog(params, field_range, pairs=pairs)
    if not catalog:
        return float(sum(h * h for _, h in targets))
    result = simulate_hysteresis(params, sweep_rate, T, field_range, catalog=catalog, n_grid=2)
    target_fields = np.array([b for b, _ in targets])
    sim = np.zeros(len(targets))
    for step in result.step_records:
        dist = np.abs(target_fields - step.record.B0_star)
        k = int(np.argmin(dist))
        if dist[k] <= match_window:
            sim[k] += step.height
    return float(sum((s - h) ** 2 for s, (_, h) in zip(sim, targets)))


def fit_anisotropy_params(fit, base, sweep_rate, T, *, seed=None):
    """Nelder-Mead fit of (C, E, K_coeff) to hysteresis step heights.

    The simplex works in coordinates scaled by the initial guess. Returns a
    :class:`FitResult`; when the simplex stops without meeting the tolerances
    the best point found is returned with ``converged=False``.
    """
    if len(fit.target_steps) < 3:
        raise ValidationError("at least three target steps are needed for three parameters")
    targets = [(float(b), float(h)) for b, h in fit.target_steps]
    x0 = np.array(fit.initial, dtype=float)
    scale = np.where(x0 != 0, np.abs(x0), _DEFAULT_SCALE)
    pairs = _fit_pairs(base, targets, fit.match_window, fit.field_range)
    evaluations = 0

    def objective(x):
        nonlocal evaluations
        evaluations += 1
        C, E, K = x * scale
        trial = base.replace(C_over_kB=C, E_over_kB=E, K_coeff=K)
        return step_residual(trial, targets, sweep_rate, T, match_window=fit.match_window,
                             field_range=fit.field_range, pairs=pairs)

    start = x0 / scale
    f0 = objective(start)
    if f0 <= fit.fatol:
        return FitResult(*x0, residual=f0, iterations=0, evaluations=evaluations,
                         converged=True, message="initial guess meets tolerance")

    starts = [start]
    if fit.restarts:
        rng = np.random.default_rng(seed)
        starts += [start * (1.0 + 0.2 * rng.standard_normal(3)) for _ in range(fit.restarts)]

    best = None
    iterations = 0
    for x_start in starts:
        x = x_start
        prev = np.inf
        # a collapsed simplex is rebuilt around its best vertex until that stops helping
        for _ in range(fit.max_restarts + 1):
            res = minimize(objective, x, method="Nelder-Mead",
                           options={"xatol": fit.xatol, "fatol": fit.fatol,
                                    "maxiter": fit.max_iter})
            iterations += int(res.nit)
            if best is None or res.fun < best.fun:
                best = res
            if res.fun <= fit.fatol or res.fun >= prev * (1.0 - 1e-3):
                break
            prev, x = res.fun, res.x
    C, E, K = best.x * scale
    if not best.success:
        log.warning("simplex stopped without meeting tolerances: %s", best.message)
    return FitResult(float(C), float(E), float(K), residual=float(best.fun),
                     iterations=iterations, evaluations=evaluations,
                     converged=bool(best.success), message=str(best.message))
