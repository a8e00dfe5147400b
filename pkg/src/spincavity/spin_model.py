"""Spin operators and the anisotropy Hamiltonian of a single Mn12-Ac molecule.

Energies are handled in joules internally. Anisotropy constants are given in
kelvin (``X_over_kB``) and converted once on access. The transverse linear term
is tied to the applied field, ``K = K_coeff * g * muB * B0``, so it models a
small misalignment of the sweep field with the easy axis.
"""

from dataclasses import dataclass, field, fields, replace
from functools import lru_cache

import numpy as np
from scipy import constants as sc

from .errors import ValidationError
from .linalg import EigenDecomposition, eigh

KB = sc.k
MU_B = sc.physical_constants["Bohr magneton"][0]
HBAR = sc.hbar
MU_0 = sc.mu_0


@dataclass(frozen=True)
class SpinSystemParams:
    """Spin Hamiltonian parameters; defaults are the Mn12-Ac values of the model."""

    S: float = 10
    D_over_kB: float = 0.56
    F_over_kB: float = 1.1e-3
    C_over_kB: float = 1.36e-5
    E_over_kB: float = -4.48e-3
    K_coeff: float = 0.025
    g_factor: float = 2.0

    def __post_init__(self):
        two_s = 2 * self.S
        if not np.isfinite(two_s) or two_s < 1 or abs(two_s - round(two_s)) > 1e-12:
            raise ValidationError(f"S must be a positive integer or half-integer, got {self.S}")
        if not self.D_over_kB > 0:
            raise ValidationError(f"D_over_kB must be > 0 (easy axis), got {self.D_over_kB}")
        if not self.g_factor > 0:
            raise ValidationError(f"g_factor must be > 0, got {self.g_factor}")
        for f in fields(self):
            if not np.isfinite(getattr(self, f.name)):
                raise ValidationError(f"{f.name} must be finite")

    @property
    def dim(self):
        return int(round(2 * self.S)) + 1

    @property
    def D(self):
        return self.D_over_kB * KB

    @property
    def F(self):
        return self.F_over_kB * KB

    @property
    def C(self):
        return self.C_over_kB * KB

    @property
    def E(self):
        return self.E_over_kB * KB

    @property
    def mu_tilde(self):
        """Effective moment g * muB in J/T."""
        return self.g_factor * MU_B

    def m_values(self):
        return np.arange(self.dim) - self.S

    def index(self, m):
        """Row index of |m> in the S_z eigenbasis."""
        i = m + self.S
        if abs(i - round(i)) > 1e-9 or not 0 <= round(i) < self.dim:
            raise ValidationError(f"m={m} is not a level of spin S={self.S}")
        return int(round(i))

    def with_transverse_scale(self, factor):
        """Copy with every term that does not commute with S_z scaled by ``factor``."""
        return replace(
            self,
            C_over_kB=self.C_over_kB * factor,
            E_over_kB=self.E_over_kB * factor,
            K_coeff=self.K_coeff * factor,
        )

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class SpinOperators:
    dim: int
    m: np.ndarray
    Sz: np.ndarray
    Sx: np.ndarray
    Sy: np.ndarray
    Splus: np.ndarray
    Sminus: np.ndarray = field(repr=False)


@lru_cache(maxsize=8)
def _operators(two_s):
    s = two_s / 2
    dim = two_s + 1
    m = np.arange(dim) - s
    splus = np.zeros((dim, dim))
    for i in range(dim - 1):
        splus[i + 1, i] = np.sqrt(s * (s + 1) - m[i] * (m[i] + 1))
    sminus = splus.T.copy()
    sz = np.diag(m)
    sx = 0.5 * (splus + sminus)
    sy = -0.5j * (splus - sminus)
    ops = SpinOperators(dim, m, sz, sx, sy, splus, sminus)
    for arr in (m, sz, sx, sy, splus, sminus):
        arr.setflags(write=False)
    return ops


def build_spin_operators(S):
    """Matrices of S_z, S_x, S_y, S_+ and S_- in the basis |m>, m = -S..S.

    Basis row ``i`` holds ``m = i - S``; ``S_+`` raises the row index by one.
    The returned arrays are read-only and shared between calls.
    """
    two_s = 2 * S
    if not np.isfinite(two_s) or two_s < 1 or abs(two_s - round(two_s)) > 1e-12:
        raise ValidationError(f"S must be a positive integer or half-integer, got {S}")
    return _operators(int(round(two_s)))


def build_hamiltonian(params, B0):
    """Full spin Hamiltonian H_S = H0 + H1 at longitudinal field ``B0`` (tesla), in joules.

    H0 = -D Sz^2 - F Sz^4 - g muB B0 Sz is diagonal; H1 = C(S+^4 + S-^4)
    + (E/2)(S+^2 + S-^2) + (K/2)(S+ + S-) with K = K_coeff g muB B0.
    """
    if not np.isfinite(B0):
        raise ValidationError(f"B0 must be finite, got {B0}")
    ops = build_spin_operators(params.S)
    m = ops.m
    zeeman = params.mu_tilde * B0
    h = np.diag(-params.D * m**2 - params.F * m**4 - zeeman * m)
    sp2 = ops.Splus @ ops.Splus
    sp4 = sp2 @ sp2
    k = params.K_coeff * zeeman
    h1 = params.C * sp4 + 0.5 * params.E * sp2 + 0.5 * k * ops.Splus
    h += h1 + h1.T
    return h


def diagonalize(params, B0):
    """Eigenlevels of H_S at ``B0``."""
    return eigh(build_hamiltonian(params, B0))


__all__ = [
    "KB",
    "MU_B",
    "HBAR",
    "MU_0",
    "SpinSystemParams",
    "SpinOperators",
    "EigenDecomposition",
    "build_spin_operators",
    "build_hamiltonian",
    "diagonalize",
    "eigh",
]
