"""Quantities reported from trajectories and level catalogs.

dM/dB0 emission peaks versus sweep rate, the temperature scan of the fastest
collective time T0 over a set of transitions, and the energy a pulse leaks out
of the cavity.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import characteristic_time
from .errors import DarkTransitionError, ScanEmptyError, ValidationError
from .hysteresis import well_populations
from .io import write_csv
from .parallel import parallel_map
from .reduction import pair_coupling
from .spin_model import HBAR

PEAK_HEADER = ["v", "peak_abscissa", "peak_height"]
T0_HEADER = ["temperature_K", "m", "m_prime", "T0_seconds"]

# curve values below this fraction of the peak do not count as a sign
SIGN_FLOOR = 1e-3


@dataclass
class PeakReport:
    v: float
    peak_abscissa: float
    peak_height: float
    abscissa: np.ndarray
    curve: np.ndarray

    def sign_changes(self, floor=SIGN_FLOOR):
        """Number of sign flips of the curve, ignoring values below ``floor * |peak|``."""
        significant = self.curve[np.abs(self.curve) > floor * abs(self.peak_height)]
        signs = np.sign(significant)
        return int(np.count_nonzero(signs[1:] != signs[:-1]))

    def row(self):
        return (self.v, self.peak_abscissa, self.peak_height)


def dM_dB0_curve(traj, v):
    """Emission curve -dZ/d(v tau) on a uniform grid of the field offset v tau.

    Emission lowers Z, so it shows up as a positive peak. The reported peak is
    the global extremum of |curve| with its sign.
    """
    if v == 0 or not math.isfinite(v):
        raise ValidationError("dM/dB0 needs a nonzero finite sweep rate v (the field axis is v*tau)")
    tau = np.asarray(traj.tau, dtype=float)
    Z = np.asarray(traj.Z, dtype=float)
    if tau.size < 3:
        raise ValidationError("trajectory too short for a derivative")
    if not (tau[0] < 0 < tau[-1]):
        raise ValidationError("trajectory must span the resonance at tau = 0")
    steps = np.diff(tau)
    if np.ptp(steps) > 1e-9 * steps.mean():
        uniform = np.linspace(tau[0], tau[-1], tau.size)
        Z = np.interp(uniform, tau, Z)
        tau = uniform
    x = v * tau
    curve = -np.gradient(Z, x)
    k = int(np.argmax(np.abs(curve)))
    return PeakReport(float(v), float(x[k]), float(curve[k]), x, curve)


def write_peaks_csv(path, reports):
    write_csv(path, PEAK_HEADER, (r.row() for r in reports))


@dataclass(frozen=True)
class T0ScanRow:
    temperature: float
    m: int
    m_prime: int
    T0_min: float
    candidates: tuple = ()

    def row(self):
        return (self.temperature, self.m, self.m_prime, self.T0_min)


def radiating_family(params, total=-2):
    """Pairs (m, m') with m < 0 < m' and m + m' = ``total``."""
    S = int(params.S)
    return [(m, total - m) for m in range(-S, 0) if 0 < total - m <= S]


def transition_catalog(params, B0, pairs=None):
    """|s| and transition frequency of each pair at ``B0``, computed concurrently."""
    if pairs is None:
        pairs = radiating_family(params)
    return parallel_map(lambda p: pair_coupling(params, B0, p), list(pairs))


def t0_scan(params, B0, T_grid, catalog, *, density, filling_factor=1.0):
    """Smallest T0 over ``catalog`` at each temperature.

    The active density of a pair is ``density`` times the metastable-well
    Boltzmann population of its upper level; its cavity frequency is the
    pair's own transition frequency.
    """
    if not density > 0:
        raise ValidationError(f"density must be positive, got {density}")
    usable = [c for c in catalog if c.s_abs > 0]
    if not usable:
        raise ScanEmptyError("every transition in the catalog has |s| = 0; no pair can radiate")
    rows = []
    for T in T_grid:
        pops = well_populations(params, B0, T)
        best = None
        cands = []
        for c in usable:
            n_active = density * pops[params.index(c.upper)]
            if n_active <= 0:
                continue
            try:
                t0 = characteristic_time(n_active * filling_factor, c.omega, c.s_abs, params.g_factor)
            except DarkTransitionError:
                continue
            cands.append((c.m, c.m_prime, t0))
            if best is None or t0 < best[2]:
                best = (c.m, c.m_prime, t0)
        if best is None:
            raise ScanEmptyError(f"no populated radiating pair at T = {T} K")
        rows.append(T0ScanRow(float(T), best[0], best[1], best[2], tuple(cands)))
    return rows


def switch_temperatures(rows):
    """Temperatures (midpoints) where the best pair changes, with the pairs on both sides."""
    out = []
    for a, b in zip(rows, rows[1:]):
        if (a.m, a.m_prime) != (b.m, b.m_prime):
            out.append((0.5 * (a.temperature + b.temperature), (a.m, a.m_prime), (b.m, b.m_prime)))
    return out


def write_t0_csv(path, rows):
    write_csv(path, T0_HEADER, (r.row() for r in rows))


def leaked_photons(traj):
    """kappa * integral of I d tau: photons per active molecule leaving the cavity."""
    if traj.config is None:
        raise ValidationError("trajectory carries no config, kappa unknown")
    return traj.config.kappa * float(np.trapezoid(traj.intensity, traj.tau))


def emitted_energy(traj, ctx):
    """Energy (J) radiated out of the cavity, hbar Omega N0 V kappa int I d tau."""
    if ctx.volume is None:
        raise ValidationError("emitted energy needs the sample volume")
    return HBAR * ctx.Omega * ctx.N0 * ctx.volume * leaked_photons(traj)
