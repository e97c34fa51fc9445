"""Time integration of the reduced model and mode-switching gait execution."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _fast
from . import dynamics as dyn
from .errors import SingularityApproached, StepFailure, TurningPointMissed
from .integrate import integrate_ode
from .params import ModelParams

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

CSV_HEADER = ["t", "r1", "r2", "dr1", "dr2", "x", "y", "theta", "E", "tau1", "tau2"]


@dataclass(frozen=True)
class SwitchEvent:
    """Instantaneous spring-equilibrium switch at a turning point."""

    t: float
    r_at_switch: np.ndarray
    r_eq_before: np.ndarray
    r_eq_after: np.ndarray
    delta_v: np.ndarray
    speed_at_switch: float
    deviation: float = 0.0

    def as_dict(self):
        return {
            "t": self.t,
            "r_at_switch": list(map(float, self.r_at_switch)),
            "r_eq_before": list(map(float, self.r_eq_before)),
            "r_eq_after": list(map(float, self.r_eq_after)),
            "delta_v": list(map(float, self.delta_v)),
            "speed_at_switch": self.speed_at_switch,
            "deviation": self.deviation,
        }


@dataclass
class Trajectory:
    """Time-stamped shape, pose, energy and torque samples."""

    t: np.ndarray
    r: np.ndarray
    dr: np.ndarray
    pose: np.ndarray
    energy: np.ndarray
    tau: np.ndarray
    params: ModelParams
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    events: list = field(default_factory=list)
    status: str = "finished"

    def __len__(self):
        return self.t.size

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def state(self, i=-1):
        return dyn.ShapeState(self.r[i].copy(), self.dr[i].copy())

    def y7(self, i=-1):
        return np.concatenate([self.r[i], self.dr[i], self.pose[i]])

    def speeds(self):
        return np.linalg.norm(self.dr, axis=1)

    def net_displacement(self):
        d = self.pose[-1, :2] - self.pose[0, :2]
        return float(np.hypot(d[0], d[1]))

    def net_rotation(self):
        return float(self.pose[-1, 2] - self.pose[0, 2])

    def arc_length(self):
        """Path length of the central body's world track."""
        seg = np.diff(self.pose[:, :2], axis=0)
        return float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for i in range(len(self)):
                row = [self.t[i], self.r[i, 0], self.r[i, 1],
                       self.dr[i, 0], self.dr[i, 1],
                       self.pose[i, 0], self.pose[i, 1], self.pose[i, 2],
                       self.energy[i], self.tau[i, 0], self.tau[i, 1]]
                w.writerow([f"{v:.17g}" for v in row])

    def metadata(self):
        return {
            "params": {
                "H": self.params.H,
                "R": self.params.R,
                "masses": list(map(float, self.params.masses)),
                "inertias": list(map(float, self.params.inertias)),
                "k": list(map(float, self.params.k)),
                "r_eq": list(map(float, self.params.r_eq)),
                "g": self.params.g,
            },
            "rtol": self.rtol,
            "atol": self.atol,
            "status": self.status,
            "events": [e.as_dict() for e in self.events],
            "samples": int(len(self)),
        }

    def write_metadata(self, path):
        Path(path).write_text(json.dumps(self.metadata(), indent=2) + "\n")


def _build_trajectory(ts, ys, params, rtol, atol, tau=None, status="finished"):
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    r = ys[:, 0:2]
    dr = ys[:, 2:4]
    pose = ys[:, 4:7]
    if tau is None:
        tau = np.zeros_like(r)
    energy = dyn.total_energy(r, dr, params, check=False)
    return Trajectory(ts, r, dr, pose, energy, tau, params,
                      rtol=rtol, atol=atol, status=status)


def simulate(state, params: ModelParams, duration, pose=(0.0, 0.0, 0.0),
             torque_fn=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
             on_singularity="raise", t_eval=None, record_cap=400_000):
    """Integrate the reduced dynamics with pose reconstruction.

    state : ShapeState or (r, dr) pair.
    torque_fn : optional callable t -> joint torque (2,); zero when omitted.
    on_singularity : 'raise' or 'truncate' when |Q| enters the guard band.

    Returns a Trajectory sampled at accepted integrator steps (or at t_eval).
    """
    if isinstance(state, dyn.ShapeState):
        r0, dr0 = state.r, state.dr
    else:
        r0, dr0 = (np.asarray(v, dtype=float) for v in state)
    dyn.check_nonsingular(r0, params)
    y0 = np.concatenate([r0, dr0, np.asarray(pose, dtype=float)])
    duration = float(duration)

    if torque_fn is None:
        pp = _fast.pack_params(params)
        guard = params.singularity_guard
        if t_eval is not None:
            te = np.asarray(t_eval, dtype=float)
            ys, st, ngood = _fast._propagate_eval(y0, te, rtol, atol, pp,
                                                  guard, 10_000_000)
            if st == _fast.STATUS_FAIL:
                raise StepFailure("adaptive stepping stalled during sampling")
            if st == _fast.STATUS_GUARD:
                if on_singularity == "raise":
                    i = max(ngood - 1, 0)
                    raise SingularityApproached(te[i], ys[i, :2], 0.0)
                te, ys = te[:ngood], ys[:ngood]
            return _build_trajectory(te, ys, params, rtol, atol,
                                     status="finished" if st == 0 else "singularity")
        ts, ys, fs, m, st = _fast._propagate_record(
            y0, duration, rtol, atol, pp, guard, 10_000_000, record_cap)
        ts, ys = ts[:m], ys[:m]
        if st == _fast.STATUS_FAIL:
            raise StepFailure("adaptive stepping stalled")
        if st == _fast.STATUS_GUARD and on_singularity == "raise":
            raise SingularityApproached(ts[-1], ys[-1, :2],
                                        dyn.connection_divisor(ys[-1, :2], params))
        return _build_trajectory(ts, ys, params, rtol, atol,
                                 status="finished" if st == 0 else "singularity")

    # applied-torque path: structured RHS through the generic driver
    tau_of_t = torque_fn

    def f(t, y):
        return dyn.full_rhs(y, np.asarray(tau_of_t(t), dtype=float), params)

    def guard_fn(t, y):
        return abs(dyn.connection_divisor(y[:2], params)) - params.singularity_guard

    sol = integrate_ode(f, (0.0, duration), y0, rtol=rtol, atol=atol,
                        t_eval=t_eval, guard=guard_fn)
    if sol.status == "guard" and on_singularity == "raise":
        raise SingularityApproached(sol.t[-1], sol.y[-1, :2],
                                    dyn.connection_divisor(sol.y[-1, :2], params))
    tau = np.array([tau_of_t(t) for t in sol.t], dtype=float)
    return _build_trajectory(sol.t, sol.y, params, rtol, atol, tau=tau,
                             status="finished" if sol.status == "finished" else "singularity")


def propagate_state(y, params: ModelParams, duration, rtol=DEFAULT_RTOL,
                    atol=DEFAULT_ATOL):
    """End state of an unactuated run; y is the 4- or 7-dim state vector."""
    pp = _fast.pack_params(params)
    ye, st, tr = _fast._propagate(np.asarray(y, dtype=float), float(duration),
                                  rtol, atol, pp, params.singularity_guard,
                                  10_000_000)
    if st == _fast.STATUS_GUARD:
        raise SingularityApproached(tr, ye[:2], dyn.connection_divisor(ye[:2], params))
    if st == _fast.STATUS_FAIL:
        raise StepFailure(f"propagation stalled at t={tr:.6g}")
    return ye


def _speed_slope(y, params, pp):
    """d/dt (|rdot|^2 / 2) = rdot . rddot at a state."""
    out = np.empty(y.shape[0])
    _fast._rhs(np.asarray(y, dtype=float), pp, out)
    return float(y[2] * out[2] + y[3] * out[3])


def _refine_turning_point(t0, y0, t1, params, pp, iters=80):
    """Bisect rdot.rddot between two accepted samples; returns (t*, y*)."""
    lo, hi = 0.0, t1 - t0
    ylo = np.asarray(y0, dtype=float)
    flo = _speed_slope(ylo, params, pp)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ym, st, _ = _fast._propagate(ylo, mid - lo, DEFAULT_RTOL, DEFAULT_ATOL,
                                     pp, params.singularity_guard, 10_000_000)
        fm = _speed_slope(ym, params, pp)
        if fm == 0.0 or hi - lo < 1e-14 * max(1.0, t0 + mid):
            return t0 + mid, ym
        if (fm < 0) == (flo < 0):
            lo, ylo, flo = mid, ym, fm
        else:
            hi = mid
    ym, _, _ = _fast._propagate(ylo, 0.5 * (lo + hi) - lo, DEFAULT_RTOL,
                                DEFAULT_ATOL, pp, params.singularity_guard,
                                10_000_000)
    return t0 + 0.5 * (lo + hi), ym


def detect_turning_points(traj: Trajectory, tol_v=1e-8, refine=True,
                          t_floor=0.0):
    """Times and shapes where all joint velocities vanish.

    Locates minima of the squared joint speed via sign changes of its time
    derivative between samples, refines them by bisection (re-integrating
    short spans), and keeps those with |rdot| < tol_v. Endpoint samples that
    already satisfy the threshold are included. Only valid for trajectories
    of the unactuated system.
    """
    if np.any(np.abs(traj.tau) > 0):
        raise ValueError("turning-point detection expects an unactuated trajectory")
    pp = _fast.pack_params(traj.params)
    n = len(traj)
    ys = np.column_stack([traj.r, traj.dr, traj.pose])
    slopes = np.empty(n)
    out = np.empty(7)
    for i in range(n):
        _fast._rhs(ys[i], pp, out)
        slopes[i] = traj.dr[i, 0] * out[2] + traj.dr[i, 1] * out[3]
    speeds = traj.speeds()

    found = []
    if traj.t[0] >= t_floor and speeds[0] < tol_v:
        found.append((float(traj.t[0]), traj.r[0].copy()))
    for i in range(n - 1):
        if traj.t[i] < t_floor:
            continue
        if slopes[i] < 0.0 <= slopes[i + 1]:
            if refine:
                tstar, ystar = _refine_turning_point(
                    traj.t[i], ys[i], traj.t[i + 1], traj.params, pp)
                if np.hypot(ystar[2], ystar[3]) < tol_v:
                    found.append((float(tstar), ystar[:2].copy()))
            else:
                j = i if speeds[i] <= speeds[i + 1] else i + 1
                if speeds[j] < tol_v:
                    found.append((float(traj.t[j]), traj.r[j].copy()))
    if speeds[-1] < tol_v and slopes[-1] < 0.0:
        if not found or abs(found[-1][0] - traj.t[-1]) > 1e-12:
            found.append((float(traj.t[-1]), traj.r[-1].copy()))
    return found


def _switch_potential_jump(r, eq_before, eq_after, k):
    """Per-spring potential change when the equilibrium switches under
    frozen shape."""
    r = np.asarray(r, dtype=float)
    return 0.5 * k * ((r - eq_after) ** 2 - (r - eq_before) ** 2)


def run_switching_gait(gait, n_periods, params: ModelParams,
                       rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                       switch_tolerance=1e-4, turning_tol=1e-6,
                       pose=(0.0, 0.0, 0.0)):
    """Execute a two-mode switching gait for n_periods.

    `gait` provides eq_a, eq_b (spring equilibria), turning_point P (shared),
    and expected half-periods half_period_a/half_period_b. The system starts
    at rest at P under eq_a, runs to the far turning point, the equilibrium
    switches there, and it returns. Switches are instantaneous and
    state-preserving.

    Returns (Trajectory, [SwitchEvent, ...]).
    """
    eq = [np.asarray(gait.eq_a, dtype=float), np.asarray(gait.eq_b, dtype=float)]
    halves = [float(gait.half_period_a), float(gait.half_period_b)]
    P = np.asarray(gait.turning_point, dtype=float)
    mirror = np.array([-P[1], -P[0]])
    expected_far = [mirror, P]

    y = np.concatenate([P, np.zeros(2), np.asarray(pose, dtype=float)])
    t_base = 0.0
    ts_all, ys_all, E_all = [], [], []
    events = []

    for period in range(int(n_periods)):
        for leg in range(2):
            p_leg = params.with_equilibrium(eq[leg])
            pp = _fast.pack_params(p_leg)
            window = 1.5 * halves[leg]
            ts, ys, fs, m, st = _fast._propagate_record(
                y, window, rtol, atol, pp, params.singularity_guard,
                10_000_000, 400_000)
            ts, ys = ts[:m], ys[:m]
            if st != _fast.STATUS_OK:
                raise StepFailure(f"gait leg integration failed (status {st})")
            # first speed minimum past a quarter of the expected half-period
            slopes = np.empty(m)
            out = np.empty(7)
            for i in range(m):
                _fast._rhs(ys[i], pp, out)
                slopes[i] = ys[i, 2] * out[2] + ys[i, 3] * out[3]
            floor = 0.25 * halves[leg]
            tstar = ystar = None
            for i in range(m - 1):
                if ts[i] >= floor and slopes[i] < 0.0 <= slopes[i + 1]:
                    # interior speed minima are common; accept only rest points
                    tc, yc = _refine_turning_point(ts[i], ys[i], ts[i + 1],
                                                   p_leg, pp)
                    if np.hypot(yc[2], yc[3]) <= turning_tol:
                        tstar, ystar = tc, yc
                        break
            if tstar is None:
                raise TurningPointMissed(
                    f"no rest point (|rdot| <= {turning_tol:.0e}) within "
                    f"{window:.3g} s on leg {leg} of period {period}")
            speed = float(np.hypot(ystar[2], ystar[3]))
            keep = ts < tstar
            seg_t = np.append(ts[keep], tstar)
            seg_y = np.vstack([ys[keep], ystar])
            E_seg = dyn.total_energy(seg_y[:, :2], seg_y[:, 2:4], p_leg,
                                     check=False)
            start = 1 if ts_all else 0  # drop duplicated boundary sample
            ts_all.append(seg_t[start:] + t_base)
            ys_all.append(seg_y[start:])
            E_all.append(E_seg[start:])

            nxt = eq[1 - leg]
            dv = _switch_potential_jump(ystar[:2], eq[leg], nxt, params.k)
            deviation = float(np.linalg.norm(ystar[:2] - expected_far[leg]))
            events.append(SwitchEvent(
                t=float(tstar + t_base), r_at_switch=ystar[:2].copy(),
                r_eq_before=eq[leg].copy(), r_eq_after=nxt.copy(),
                delta_v=dv, speed_at_switch=speed, deviation=deviation))
            if deviation > switch_tolerance and period == 0:
                # shared-turning-point mismatch: gait inputs inconsistent
                raise TurningPointMissed(
                    f"turning point {ystar[:2]} deviates {deviation:.2e} rad "
                    f"from the expected shared point (tolerance {switch_tolerance:.0e})")
            # state-preserving switch: position and velocity continue
            t_base += tstar
            y = ystar.copy()

    ts = np.concatenate(ts_all)
    ys = np.vstack(ys_all)
    E = np.concatenate(E_all)
    traj = Trajectory(ts, ys[:, 0:2], ys[:, 2:4], ys[:, 4:7], E,
                      np.zeros((ts.size, 2)), params, rtol=rtol, atol=atol,
                      events=events)
    return traj, events
