"""Level crossings of H0 and avoided crossings of the full spin Hamiltonian."""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import BracketingError, TrackingError, ValidationError
from .parallel import parallel_map
from .spin_model import build_hamiltonian, eigh

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CrossingRecord:
    """One avoided crossing between diabatic levels |m> and |m'>.

    ``B0_star`` is the field of minimum gap (T), ``delta0`` the minimum gap and
    ``epsilon0`` the mean energy of the pair there (both J).
    """

    m: int
    m_prime: int
    B0_star: float
    delta0: float
    epsilon0: float

    def __post_init__(self):
        if self.m == self.m_prime:
            raise ValidationError("a crossing needs two distinct levels")
        if self.delta0 < 0:
            raise ValidationError("delta0 must be non-negative")

    def as_dict(self):
        return asdict(self)


def crossing_field_h0(m, m_prime, params):
    """Field (T) where the H0 levels m and m' are degenerate.

    g muB B0 = -D (m + m') (1 + (F/D)(m^2 + m'^2)).
    """
    if m == m_prime:
        raise ValidationError(f"crossing field needs m != m', got m = m' = {m}")
    energy = -params.D * (m + m_prime) * (1.0 + params.F / params.D * (m * m + m_prime * m_prime))
    return energy / params.mu_tilde


def pair_indices(vectors, params, m, m_prime):
    """Indices of the two eigenvectors with the largest weight on span{|m>, |m'>}.

    Returned in ascending energy order (eigenvector columns are sorted by energy).
    """
    i, j = params.index(m), params.index(m_prime)
    weight = vectors[i] ** 2 + vectors[j] ** 2
    a, b = np.argpartition(weight, -2)[-2:]
    return (a, b) if a < b else (b, a)


def pair_gap(params, B0, m, m_prime):
    """Return (gap, mean energy) of the pair levels of H_S at ``B0``."""
    vals, vecs = eigh(build_hamiltonian(params, B0))
    a, b = pair_indices(vecs, params, m, m_prime)
    return vals[b] - vals[a], 0.5 * (vals[a] + vals[b])


def _tracked_gaps(params, grid, m, m_prime):
    i, j = params.index(m), params.index(m_prime)
    gaps = np.empty(len(grid))
    prev = None
    for k, B in enumerate(grid):
        vals, vecs = eigh(build_hamiltonian(params, B))
        if prev is None:
            ia = int(np.argmax(np.abs(vecs[i])))
            ib = int(np.argmax(np.abs(vecs[j])))
            if ia == ib:
                raise TrackingError(
                    f"levels {m} and {m_prime} share one eigenvector at the window edge {B:.6g} T"
                )
        else:
            ov_a = np.abs(prev[0] @ vecs)
            ov_b = np.abs(prev[1] @ vecs)
            ia, ib = int(np.argmax(ov_a)), int(np.argmax(ov_b))
            if ov_a[ia] < 0.5 or ov_b[ib] < 0.5 or ia == ib:
                raise TrackingError(
                    f"lost track of pair ({m}, {m_prime}) near {B:.6g} T "
                    f"(overlaps {ov_a[ia]:.3f}, {ov_b[ib]:.3f}); use a finer grid"
                )
        prev = (vecs[:, ia].copy(), vecs[:, ib].copy())
        gaps[k] = abs(vals[ia] - vals[ib])
    return gaps


def _golden_minimize(func, lo, hi, xtol, slope, gap_rtol=1e-4, max_iter=300):
    """Golden-section search that keeps shrinking until the hyperbolic gap minimum is resolved.

    Stops when the bracket is below ``xtol`` and ``slope * width`` is below
    ``gap_rtol`` times the best gap, or when the bracket reaches float resolution.
    """
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = func(c), func(d)
    for _ in range(max_iter):
        width = hi - lo
        best = min(fc, fd)
        resolution = 8 * np.spacing(max(abs(lo), abs(hi), 1e-300))
        if width <= resolution:
            break
        if width <= xtol and slope * width <= gap_rtol * best:
            break
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = func(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = func(d)
    return (c, fc) if fc <= fd else (d, fd)


def scan_avoided_crossing(params, m, m_prime, B_window=None, *, step=1e-3, xtol=1e-6,
                          half_width=0.02):
    """Locate the avoided crossing of the levels connected to |m> and |m'>.

    The window is scanned on a grid of spacing ``step`` while both levels are
    followed by eigenvector overlap, so labels survive reordering at other
    crossings. The grid minimum of the tracked gap is then refined by golden
    section. By default the window is centred on the H0 prediction.

    Raises:
        TrackingError: consecutive-grid overlap dropped below 0.5.
        BracketingError: the gap minimum sits on the window boundary.
    """
    if m == m_prime:
        raise ValidationError("m and m' must differ")
    if B_window is None:
        centre = crossing_field_h0(m, m_prime, params)
        B_window = (centre - half_width, centre + half_width)
    lo, hi = float(B_window[0]), float(B_window[1])
    if not hi > lo:
        raise ValidationError(f"empty field window {B_window}")

    n = max(int(math.ceil((hi - lo) / step)), 2) + 1
    grid = np.linspace(lo, hi, n)
    gaps = _tracked_gaps(params, grid, m, m_prime)
    k = int(np.argmin(gaps))
    if k == 0 or k == n - 1:
        raise BracketingError(
            f"gap of pair ({m}, {m_prime}) has no interior minimum in [{lo:.6g}, {hi:.6g}] T"
        )

    def gap_at(B):
        return pair_gap(params, B, m, m_prime)[0]

    slope = params.mu_tilde * abs(m - m_prime)
    B_star, delta0 = _golden_minimize(gap_at, grid[k - 1], grid[k + 1], xtol, slope)
    _, eps0 = pair_gap(params, B_star, m, m_prime)
    return CrossingRecord(int(m), int(m_prime), float(B_star), float(delta0), float(eps0))


def candidate_pairs(params, B_range):
    """Pairs (m < 0, m' > 0) whose H0 crossing lies strictly inside ``B_range``."""
    lo, hi = B_range
    S = params.S
    out = []
    for m in np.arange(-S, 0):
        for mp in np.arange(1 if float(S).is_integer() else 0.5, S + 0.5):
            B = crossing_field_h0(m, mp, params)
            if lo < B < hi:
                out.append((B, int(m) if float(m).is_integer() else m,
                            int(mp) if float(mp).is_integer() else mp))
    out.sort()
    return [(m, mp) for _, m, mp in out]


def _scan_with_refinement(params, pair, step, half_width, min_step):
    m, mp = pair
    while True:
        try:
            return scan_avoided_crossing(params, m, mp, step=step, half_width=half_width)
        except TrackingError:
            if step / 10 < min_step:
                raise
            step /= 10
            log.info("retrying pair (%s, %s) with grid step %.1e T", m, mp, step)


def crossing_catalog(params, B_range, *, pairs=None, step=1e-3, half_width=0.02, min_step=1e-6):
    """Scan every avoided crossing with m < 0 < m' predicted inside ``B_range``.

    Records are returned sorted by ``B0_star``. Pairs are scanned concurrently
    (see ``SPINCAVITY_THREADS``); results do not depend on the worker count.
    """
    if pairs is None:
        pairs = candidate_pairs(params, B_range)
    records = parallel_map(
        lambda pr: _scan_with_refinement(params, pr, step, half_width, min_step), pairs
    )
    return sorted(records, key=lambda r: (r.B0_star, r.m, r.m_prime))


@dataclass(frozen=True)
class LevelDiagram:
    B0: np.ndarray
    energies: np.ndarray

    def to_rows(self):
        for B, row in zip(self.B0, self.energies):
            yield [B, *row]

    def header(self):
        return ["B0_tesla"] + [f"E_{i + 1}_joule" for i in range(self.energies.shape[1])]

    def write_csv(self, path):
        from .io import write_csv

        write_csv(path, self.header(), self.to_rows())


def level_diagram(params, B_grid):
    """Ascending eigenvalues of H_S (J) at every field of ``B_grid`` (T)."""
    B_grid = np.asarray(B_grid, dtype=float)
    if B_grid.ndim != 1 or B_grid.size == 0:
        raise ValidationError("B_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(B_grid) < 0):
        raise ValidationError("B_grid must be sorted ascending")
    energies = np.array(parallel_map(lambda B: eigh(build_hamiltonian(params, B)).eigenvalues,
                                     B_grid))
    return LevelDiagram(B_grid, energies)
