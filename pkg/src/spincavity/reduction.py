"""Block reduction of H_S onto one level pair (van Vleck / des Cloizeaux).

With P0 the projector on {|m>, |m'>} and P the projector on the two exact
eigenstates grown out of them, the unitary

    U = (P0 P P0)^{-1/2} P0 P + (Q0 Q Q0)^{-1/2} Q0 Q,   Q = 1 - P, Q0 = 1 - P0,

maps the exact pair subspace onto span{|m>, |m'>}. ``U H_S U^T`` is then block
diagonal and its 2x2 pair block carries the exact pair eigenvalues.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ProjectionMismatchError, ReductionError, ValidationError
from .linalg import eigh, inv_sqrt_on_range
from .spin_model import build_hamiltonian, build_spin_operators

SEPARATION_FACTOR = 10.0
PROJECTION_FLOOR = 1e-8


@dataclass(frozen=True)
class EffectiveTwoLevel:
    """Two-level model of one avoided crossing.

    ``w_rate`` is dw/dt (J/s) for the sweep rate it was built with,
    w = -g muB dB0/dt (t - t0)(m - m'). ``s`` is the off-diagonal element of
    (S~x + S~y)/sqrt(2) in the pair block, ``s_prime`` half its diagonal
    difference, ``psi`` the phase of ``s``.
    """

    m: int
    m_prime: int
    B0_star: float
    epsilon0: float
    delta0: complex
    w_rate: float
    s: complex
    s_prime: float
    psi: float

    def hamiltonian(self, w):
        """2x2 effective Hamiltonian at detuning ``w`` (J), basis (|m>, |m'>)."""
        return np.array(
            [[self.epsilon0 + 0.5 * w, 0.5 * self.delta0],
             [0.5 * np.conj(self.delta0), self.epsilon0 - 0.5 * w]]
        )


def _pair_block(params_dim_s, pair):
    S = (params_dim_s - 1) / 2
    i, j = (int(round(m + S)) for m in pair)
    if not (0 <= i < params_dim_s and 0 <= j < params_dim_s) or i == j:
        raise ValidationError(f"invalid level pair {pair} for dimension {params_dim_s}")
    return i, j


def vanvleck_unitary(H, pair, *, check_separation=True):
    """Orthogonal U block-diagonalizing ``H`` on the pair {|m>, |m'>}.

    The exact pair subspace is spanned by the two eigenvectors of ``H`` with the
    largest weight on |m>, |m'>. With ``check_separation`` the pair must be
    separated from every other level by at least ten times its own splitting.

    Raises:
        ReductionError: a third level intrudes on the pair.
        ProjectionMismatchError: P0 P P0 is singular on the pair subspace.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    i, j = _pair_block(n, pair)
    vals, vecs = eigh(H)
    weight = vecs[i] ** 2 + vecs[j] ** 2
    a, b = np.argpartition(weight, -2)[-2:]
    a, b = (a, b) if a < b else (b, a)

    if check_separation:
        gap = vals[b] - vals[a]
        others = np.delete(vals, [a, b])
        if others.size:
            dist = min(np.abs(others - vals[a]).min(), np.abs(others - vals[b]).min())
            if dist < SEPARATION_FACTOR * gap:
                raise ReductionError(
                    f"pair {pair}: nearest other level at {dist:.3e} J is within "
                    f"{SEPARATION_FACTOR:g}x the pair splitting {gap:.3e} J"
                )

    phi = vecs[:, [a, b]]
    P = phi @ phi.T
    P0 = np.zeros((n, n))
    P0[i, i] = P0[j, j] = 1.0
    eye = np.eye(n)
    Q, Q0 = eye - P, eye - P0

    pp = P0 @ P @ P0
    inv_p, min_p = inv_sqrt_on_range(pp, rank_tol=1e-14)
    if min_p < PROJECTION_FLOOR or np.linalg.matrix_rank(pp, tol=1e-12) < 2:
        raise ProjectionMismatchError(
            f"pair {pair}: exact pair states have vanishing overlap with |m>, |m'> "
            f"(smallest eigenvalue of P0 P P0 = {min_p:.3e})"
        )
    qq = Q0 @ Q @ Q0
    inv_q, min_q = inv_sqrt_on_range(qq, rank_tol=1e-14)
    if min_q < PROJECTION_FLOOR:
        raise ProjectionMismatchError(
            f"pair {pair}: complement projection is singular ({min_q:.3e})"
        )
    return inv_p @ P0 @ P + inv_q @ Q0 @ Q


def block_residual(U, H, pair):
    """Largest |element| of U H U^T coupling the pair block to its complement."""
    n = H.shape[0]
    i, j = _pair_block(n, pair)
    He = U @ H @ U.T
    rest = [k for k in range(n) if k not in (i, j)]
    return float(np.abs(He[np.ix_([i, j], rest)]).max())


def effective_block(U, H, pair):
    """2x2 pair block of U H U^T, ordered (|m>, |m'>)."""
    i, j = _pair_block(H.shape[0], pair)
    He = U @ H @ U.T
    return He[np.ix_([i, j], [i, j])]


def effective_coupling(U, pair, S=None):
    """Transverse coupling of the pair to a circularly symmetric cavity field.

    S~ = U S U^T is restricted to the pair block; with A = (S~x + S~y)/sqrt(2)
    returns ``(s, s_prime, psi)`` where s = A[m, m'], s_prime = (A[m, m] -
    A[m', m'])/2 and psi = arg(s).
    """
    n = U.shape[0]
    if S is None:
        S = (n - 1) / 2
    ops = build_spin_operators(S)
    i, j = _pair_block(n, pair)
    A = U @ ((ops.Sx + ops.Sy) / math.sqrt(2.0)) @ U.T
    s = complex(A[i, j])
    s_prime = float(0.5 * (A[i, i] - A[j, j]).real)
    return s, s_prime, cmath.phase(s)


def effective_two_level(params, record, sweep_rate):
    """Reduce H_S at the record's crossing field to the 2x2 model.

    ``sweep_rate`` is dB0/dt in T/s.
    """
    pair = (record.m, record.m_prime)
    H = build_hamiltonian(params, record.B0_star)
    U = vanvleck_unitary(H, pair)
    block = effective_block(U, H, pair)
    s, s_prime, psi = effective_coupling(U, pair, params.S)
    w_rate = -params.mu_tilde * sweep_rate * (record.m - record.m_prime)
    return EffectiveTwoLevel(
        m=record.m,
        m_prime=record.m_prime,
        B0_star=record.B0_star,
        epsilon0=float(0.5 * (block[0, 0] + block[1, 1])),
        delta0=complex(2.0 * block[0, 1]),
        w_rate=float(w_rate),
        s=s,
        s_prime=s_prime,
        psi=psi,
    )


@dataclass(frozen=True)
class PairCoupling:
    """Radiative data of one pair at a fixed field: |s|, frequency and labels."""

    m: int
    m_prime: int
    B0: float
    s_abs: float
    omega: float
    upper: int


def pair_coupling(params, B0, pair):
    """|s| and transition angular frequency (rad/s) of ``pair`` at field ``B0``.

    Away from the crossing the pair is not quasi-degenerate, so the separation
    check of the reduction is skipped; the projection itself stays exact.
    """
    from .spin_model import HBAR

    H = build_hamiltonian(params, B0)
    U = vanvleck_unitary(H, pair, check_separation=False)
    block = effective_block(U, H, pair)
    s, _, _ = effective_coupling(U, pair, params.S)
    w = block[0, 0] - block[1, 1]
    upper = pair[0] if w > 0 else pair[1]
    return PairCoupling(int(pair[0]), int(pair[1]), float(B0), abs(s), abs(w) / HBAR, int(upper))
