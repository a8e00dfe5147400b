"""Dense real-symmetric eigensolver (cyclic Jacobi) and small helpers.

The spin matrices here are 21x21, so a robust Jacobi sweep is cheap and gives
eigenvalues with high relative accuracy, which matters when resolving tunnel
splittings twelve orders of magnitude below the level energies.
"""

from typing import NamedTuple

import numba
import numpy as np

from .errors import ConvergenceError, ValidationError

MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-14


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@numba.njit(cache=True)
def _jacobi_sweeps(a, v, max_sweeps, tol):
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if np.sqrt(2.0 * off) <= tol:
            return sweep, np.sqrt(2.0 * off)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    if r != p and r != q:
                        arp = a[r, p]
                        arq = a[r, q]
                        a[r, p] = arp - s * (arq + tau * arp)
                        a[r, q] = arq + s * (arp - tau * arq)
                        a[p, r] = a[r, p]
                        a[q, r] = a[r, q]
                for r in range(n):
                    vrp = v[r, p]
                    vrq = v[r, q]
                    v[r, p] = vrp - s * (vrq + tau * vrp)
                    v[r, q] = vrq + s * (vrp - tau * vrq)
    off = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            off += a[p, q] * a[p, q]
    return max_sweeps, np.sqrt(2.0 * off)


def eigh(a, *, max_sweeps=MAX_SWEEPS, tol=OFFDIAG_TOL):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in ascending order. Each eigenvector is signed so
    that its largest-magnitude component is positive, which keeps derived
    matrix elements reproducible between runs.

    Raises:
        ValidationError: if ``a`` is not square, real and symmetric to 1e-10.
        ConvergenceError: if the off-diagonal norm stays above
            ``tol * ||a||_F`` after ``max_sweeps`` sweeps.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if np.iscomplexobj(a):
        if np.abs(a.imag).max(initial=0.0) > 0.0:
            raise ValidationError("eigh handles real symmetric matrices only")
        a = a.real
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix contains non-finite entries")
    norm = np.linalg.norm(a)
    if norm == 0.0:
        n = a.shape[0]
        return EigenDecomposition(np.zeros(n), np.eye(n))
    if np.abs(a - a.T).max() > 1e-10 * norm:
        raise ValidationError("matrix is not symmetric within 1e-10 relative")

    work = np.array(0.5 * (a + a.T), dtype=np.float64)
    vecs = np.eye(a.shape[0])
    _, off = _jacobi_sweeps(work, vecs, max_sweeps, tol * norm)
    if off > tol * norm:
        raise ConvergenceError(
            f"Jacobi did not converge in {max_sweeps} sweeps "
            f"(off-diagonal norm {off:.3e}, threshold {tol * norm:.3e})",
            residual=off,
        )
    vals = np.diag(work).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    lead = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[lead, np.arange(vecs.shape[1])])
    vecs *= signs
    return EigenDecomposition(vals, vecs)


def inv_sqrt_on_range(m, rank_tol=1e-12):
    """Pseudo-inverse square root of a positive semi-definite symmetric matrix.

    Eigen-directions with eigenvalue below ``rank_tol`` (relative to the largest)
    are treated as the null space. Returns ``(m^{-1/2}, smallest retained eigenvalue)``.
    """
    vals, vecs = eigh(m)
    top = max(vals.max(), 0.0)
    keep = vals > rank_tol * top
    if not keep.any():
        return np.zeros_like(m), 0.0
    inv = np.zeros_like(vals)
    inv[keep] = 1.0 / np.sqrt(vals[keep])
    return (vecs * inv) @ vecs.T, float(vals[keep].min())
