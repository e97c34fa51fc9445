"""Adaptive explicit Runge-Kutta integration.

Embedded Dormand-Prince 5(4) pair with PI step-size control and the
first-same-as-last optimization. States may carry leading batch axes; the
step size is shared across the batch and controlled by the worst member,
which keeps simultaneously integrated trajectories on a common time grid
(used heavily for finite-difference shooting Jacobians).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StepFailure

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller: h *= safety * err^(-expo1) * err_prev^(beta)
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA


@dataclass
class OdeSolution:
    """Accepted (or requested) sample times and states of one integration."""

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    status: str = "finished"
    n_steps: int = 0
    n_rejected: int = 0
    guard_values: np.ndarray | None = None

    @property
    def t_end(self):
        return self.t[-1]

    @property
    def y_end(self):
        return self.y[-1]


def _error_norm(err, scale):
    e = err / scale
    if e.ndim <= 1:
        return float(np.sqrt(np.mean(e * e))) if e.size else 0.0
    flat = e.reshape(e.shape[0], -1) if e.ndim == 2 else e.reshape(-1, e.shape[-1])
    # per-member RMS over state dims, worst member governs the step
    per = np.sqrt(np.mean(flat * flat, axis=-1))
    return float(np.max(per))


def _initial_step(f, t0, y0, f0, rtol, atol, t_max):
    scale = atol + rtol * np.abs(y0)
    d0 = _error_norm(y0, scale)
    d1 = _error_norm(f0, scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = _error_norm(f1 - f0, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_max)


def integrate_ode(f, t_span, y0, rtol=1e-10, atol=1e-12, *, t_eval=None,
                  guard=None, max_step=np.inf, first_step=None,
                  max_steps=1_000_000, record=True):
    """Integrate dy/dt = f(t, y) over t_span with adaptive steps.

    f : callable(t, y) -> dy/dt, vectorized over the full shape of y.
    t_eval : optional increasing times to land on exactly; when given, only
        those samples are recorded.
    guard : optional callable(t, y) -> float; integration stops with status
        'guard' when it returns a nonpositive margin at an accepted step.
    record : when False, only the final state is kept.

    Returns an OdeSolution; raises StepFailure if the controller stalls.
    """
    t0, tf = float(t_span[0]), float(t_span[1])
    if tf < t0:
        raise ValueError("backward integration not supported; reverse velocities instead")
    y = np.array(y0, dtype=float)
    t = t0
    fcur = np.asarray(f(t, y), dtype=float)

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        eval_idx = 0
        # skip any requested times at/before t0 except an exact hit
        ts_out, ys_out, fs_out = [], [], []
        if eval_idx < t_eval.size and t_eval[eval_idx] <= t0 + 0.0:
            ts_out.append(t0)
            ys_out.append(y.copy())
            fs_out.append(fcur.copy())
            eval_idx += 1
    else:
        ts_out, ys_out, fs_out = [t0], [y.copy()], [fcur.copy()]

    if tf == t0:
        return OdeSolution(np.array(ts_out or [t0]), np.array(ys_out or [y]),
                           np.array(fs_out or [fcur]))

    if guard is not None and guard(t, y) <= 0.0:
        return OdeSolution(np.array([t0]), np.array([y]), np.array([fcur]),
                           status="guard")

    span = tf - t0
    h = first_step if first_step is not None else _initial_step(
        f, t0, y, fcur, rtol, atol, span)
    h = min(h, max_step, span)
    err_prev = 1e-4
    n_steps = n_rejected = 0
    consecutive_rejects = 0
    k = [None] * 7
    status = "finished"

    while t < tf:
        if n_steps >= max_steps:
            raise StepFailure(f"exceeded {max_steps} steps at t={t:.6g}")
        if tf - t <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
            break  # nothing meaningful left to integrate
        h = min(h, max_step, tf - t)
        if t_eval is not None and eval_idx < t_eval.size:
            h = min(h, max(t_eval[eval_idx] - t,
                           32 * np.finfo(float).eps * max(abs(t), 1.0)))
        if h <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise StepFailure(f"step size underflow at t={t:.6g}")

        k[0] = fcur
        for i in range(1, 7):
            acc = _A[i][0] * k[0]
            for j in range(1, i):
                acc = acc + _A[i][j] * k[j]
            k[i] = np.asarray(f(t + _C[i] * h, y + h * acc), dtype=float)
        y_new = y + h * (_A[6][0] * k[0] + _A[6][2] * k[2] + _A[6][3] * k[3]
                         + _A[6][4] * k[4] + _A[6][5] * k[5])
        # stage 7 is f at the new point (FSAL)
        f_new = k[6] = np.asarray(f(t + h, y_new), dtype=float)
        err_vec = h * (_E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3]
                       + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k[6])
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _error_norm(err_vec, scale)
        n_steps += 1

        if not np.isfinite(err) or err > 1.0:
            n_rejected += 1
            consecutive_rejects += 1
            if consecutive_rejects > 60:
                raise StepFailure(f"60 consecutive rejected steps at t={t:.6g}")
            if not np.isfinite(err):
                h *= 0.1
            else:
                h *= max(_MIN_FACTOR, _SAFETY * err ** (-_EXPO1))
            continue

        consecutive_rejects = 0
        t_new = t + h
        factor = _SAFETY * err ** (-_EXPO1) * err_prev ** _BETA if err > 0 \
            else _MAX_FACTOR
        factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = max(err, 1e-10)
        t, y, fcur = t_new, y_new, f_new
        h = h * factor

        stop = False
        if guard is not None and guard(t, y) <= 0.0:
            status = "guard"
            stop = True
        if t_eval is not None:
            while eval_idx < t_eval.size and t >= t_eval[eval_idx] - 1e-14 * max(abs(t), 1.0):
                ts_out.append(t)
                ys_out.append(y.copy())
                fs_out.append(fcur.copy())
                eval_idx += 1
        elif record or stop or t >= tf:
            ts_out.append(t)
            ys_out.append(y.copy())
            fs_out.append(fcur.copy())
        if stop:
            break

    if not record and t_eval is None:
        ts_out, ys_out, fs_out = [ts_out[0], t], [ys_out[0], y], [fs_out[0], fcur]
    sol = OdeSolution(np.array(ts_out), np.array(ys_out), np.array(fs_out),
                      status=status, n_steps=n_steps, n_rejected=n_rejected)
    return sol


def propagate(f, y0, duration, rtol=1e-10, atol=1e-12, guard=None):
    """End state only; convenience wrapper used by shooting solvers."""
    sol = integrate_ode(f, (0.0, duration), y0, rtol=rtol, atol=atol,
                        guard=guard, record=False)
    if sol.status != "finished":
        raise StepFailure(f"integration stopped early ({sol.status}) at t={sol.t_end:.6g}")
    return sol.y_end


def hermite_eval(t, t0, y0, f0, t1, y1, f1):
    """Cubic Hermite interpolation between two accepted-step samples."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h * h10 * f0 + h01 * y1 + h * h11 * f1
