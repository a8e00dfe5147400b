"""Adaptive Dormand-Prince 5(4) integrator with PI step control and dense output."""

from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, StiffnessError, ValidationError

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4
# continuous extension, y(t + th) = y + h K^T P [th, th^2, th^3, th^4]
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
ALPHA = 0.7 / 5
BETA = 0.4 / 5
FAC_MIN = 0.2
FAC_MAX = 5.0


@dataclass
class IntegratorStats:
    accepted: int = 0
    rejected: int = 0
    fevals: int = 0
    h_min: float = np.inf
    h_max: float = 0.0

    def as_items(self):
        return [("steps_accepted", self.accepted), ("steps_rejected", self.rejected),
                ("rhs_evaluations", self.fevals), ("h_min", self.h_min), ("h_max", self.h_max)]


@dataclass
class ODESolution:
    t: np.ndarray
    y: np.ndarray
    stats: IntegratorStats
    t_steps: np.ndarray = None
    y_steps: np.ndarray = None


def _norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return np.sqrt(np.mean((err / scale) ** 2))


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dopri45(f, t_span, y0, *, rtol=1e-9, atol=1e-12, t_eval=None, max_steps=2_000_000,
            h_max=np.inf, keep_steps=False):
    """Integrate ``dy/dt = f(t, y)`` over ``t_span`` with the Dormand-Prince pair.

    The fifth-order solution is propagated (local extrapolation) and the
    embedded fourth-order one drives a PI step-size controller. Output at
    ``t_eval`` uses the fourth-order continuous extension; with ``t_eval=None``
    the accepted step points are returned.

    Raises:
        StiffnessError: the step size fell below float resolution of ``t``.
        AccuracyError: ``max_steps`` accepted steps were not enough.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValidationError(f"t_span must be increasing, got {t_span}")
    if not (rtol > 0 and atol > 0):
        raise ValidationError("tolerances must be positive")
    y = np.array(y0, dtype=float)
    n = y.size
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if np.any(np.diff(t_eval) <= 0) or t_eval[0] < t0 or t_eval[-1] > t1:
            raise ValidationError("t_eval must be strictly increasing inside t_span")
        out = np.empty((t_eval.size, n))
        j = 0
        while j < t_eval.size and t_eval[j] == t0:
            out[j] = y
            j += 1

    stats = IntegratorStats()
    K = np.empty((7, n))
    K[0] = f(t0, y)
    stats.fevals += 1
    h = min(_initial_step(f, t0, y, K[0], 1.0, rtol, atol), h_max, t1 - t0)
    stats.fevals += 1
    err_prev = 1e-4
    t = t0
    steps_t = [t0] if (keep_steps or t_eval is None) else None
    steps_y = [y.copy()] if steps_t is not None else None

    while t < t1:
        if stats.accepted >= max_steps:
            raise AccuracyError(
                f"tolerance rtol={rtol:g}, atol={atol:g} not met within {max_steps} steps "
                f"(reached t={t:.6g} of {t1:.6g})"
            )
        h_floor = 16 * np.spacing(max(abs(t), 1.0))
        if h < h_floor:
            raise StiffnessError(
                f"step size {h:.3e} underflowed at t={t:.6g}; the problem looks stiff, "
                "consider the rate-equation mode"
            )
        if t + h > t1 or t1 - (t + h) < h_floor:
            h = t1 - t
        for s in range(1, 7):
            K[s] = f(t + C[s] * h, y + h * (A[s, :s] @ K[:s]))
        stats.fevals += 6
        y_new = y + h * (B5 @ K)
        err = _norm(h * (E @ K), y, y_new, rtol, atol)
        if err <= 1.0:
            t_new = t + h
            if t_eval is not None:
                while j < t_eval.size and t_eval[j] <= t_new:
                    th = (t_eval[j] - t) / h
                    out[j] = y + h * (K.T @ (P @ np.array([th, th * th, th**3, th**4])))
                    j += 1
            stats.accepted += 1
            stats.h_min = min(stats.h_min, h)
            stats.h_max = max(stats.h_max, h)
            t, y = t_new, y_new
            K[0] = K[6]
            if steps_t is not None:
                steps_t.append(t)
                steps_y.append(y.copy())
            err = max(err, 1e-10)
            fac = SAFETY * err ** (-ALPHA) * err_prev**BETA
            h *= min(FAC_MAX, max(FAC_MIN, fac))
            err_prev = err
        else:
            stats.rejected += 1
            h *= max(FAC_MIN, SAFETY * err ** (-1 / 5))
        h = min(h, h_max)

    t_steps = np.array(steps_t) if steps_t is not None else None
    y_steps = np.array(steps_y) if steps_y is not None else None
    if t_eval is None:
        return ODESolution(t_steps, y_steps, stats, t_steps, y_steps)
    return ODESolution(t_eval, out, stats, t_steps, y_steps)
