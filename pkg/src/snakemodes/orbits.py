"""Non-brake periodic orbits (NBOs) of the unactuated snake.

These are closed joint-space trajectories whose velocity never vanishes:
they enclose area, so they yield net displacement with zero actuation.
Solutions of a periodic two-point BVP are found by damped multiple-shooting
Gauss-Newton; families spanning an energy range are built by numerical
continuation with the energy constraint replacing the initial-condition
constraints.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from ._fast import (STATUS_OK, _propagate, _propagate_batch,
                    _propagate_record, _rhs, pack_params)
from .errors import (ConvergedToBrakeOrbit, NoConvergence,
                     SingularityApproached, StepFailure)
from .params import ModelParams

BRAKE_SPEED_FILTER = 1e-3   # rad/s; below this a solution is a brake orbit
SOLVE_RTOL = 1e-11
SOLVE_ATOL = 1e-13
FD_STEP = 1e-7
DEFAULT_PATH_GUARD = 1e-3


@dataclass
class PeriodicOrbit:
    """A validated non-brake periodic orbit."""

    r0: np.ndarray
    dr0: np.ndarray
    period: float
    energy: float
    r_eq: np.ndarray
    min_joint_speed: float
    displacement: float
    net_rotation: float
    arc_length: float
    residual: float
    path_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    path_r: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    path_dr: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    @property
    def v_avg(self):
        return self.displacement / self.period

    def initial_state(self):
        return dyn.ShapeState(self.r0.copy(), self.dr0.copy())

    def as_dict(self):
        return {
            "r0": list(map(float, self.r0)),
            "dr0": list(map(float, self.dr0)),
            "period": self.period,
            "energy": self.energy,
            "r_eq": list(map(float, self.r_eq)),
            "min_joint_speed": self.min_joint_speed,
            "displacement": self.displacement,
            "net_rotation": self.net_rotation,
            "arc_length": self.arc_length,
            "residual": self.residual,
        }


@dataclass
class OrbitFamily:
    """Orbits ordered by increasing energy (a natural motion manifold)."""

    orbits: list
    r_eq: np.ndarray
    status_low: str = "bounded"   # "bounded" | "collapsed" | "truncated"
    status_high: str = "bounded"
    collapse_energy: float | None = None

    def __len__(self):
        return len(self.orbits)

    @property
    def energies(self):
        return np.array([o.energy for o in self.orbits])

    def as_dict(self):
        return {
            "r_eq": list(map(float, self.r_eq)),
            "status_low": self.status_low,
            "status_high": self.status_high,
            "collapse_energy": self.collapse_energy,
            "orbits": [o.as_dict() for o in self.orbits],
        }


def ellipse_trajectory_seed(center=0.6, axis_on_d=0.5, axis_normal=0.3,
                            period=4.0, n_segments=8, velocity_scale=1.0):
    """Multiple-shooting node states sampled from a shape-space ellipse.

    The ellipse is centered on the diagonal with one semi-axis along it and
    one normal to it; the first node sits on the diagonal with velocity
    normal to it, matching the BVP initial-condition constraints.
    """
    u_d = np.array([1.0, -1.0]) / np.sqrt(2.0)
    u_n = np.array([1.0, 1.0]) / np.sqrt(2.0)
    c = np.array([center, -center])
    w = 2.0 * np.pi / period
    S = np.zeros((n_segments, 4))
    for j in range(n_segments):
        ph = w * (j * period / n_segments)
        S[j, 0:2] = c + axis_on_d * np.cos(ph) * u_d + axis_normal * np.sin(ph) * u_n
        S[j, 2:4] = velocity_scale * w * (-axis_on_d * np.sin(ph) * u_d
                                          + axis_normal * np.cos(ph) * u_n)
    return S, float(period)


def _ms_residual_and_ends(S, T, pp, guard, rtol, atol, constraint):
    """Residual of the multiple-shooting system plus the segment endpoints."""
    m = S.shape[0]
    ends, status = _propagate_batch(S, T / m, rtol, atol, pp, guard, 2_000_000)
    if np.any(status != STATUS_OK):
        return None, None
    extra = constraint(S, T)
    res = np.empty(4 * m + extra.size)
    for j in range(m):
        res[4 * j:4 * j + 4] = ends[j] - S[(j + 1) % m]
    res[4 * m:] = extra
    return res, ends


def _solve_multiple_shooting(S0, T0, params_eq, constraint, constraint_jac,
                             tol=1e-10, max_iter=60, rtol=SOLVE_RTOL,
                             atol=SOLVE_ATOL, path_guard=DEFAULT_PATH_GUARD,
                             fixed_period=False):
    """Damped Gauss-Newton on the periodic multiple-shooting system.

    constraint(S, T) -> 2 extra residual rows; constraint_jac(S, T) -> their
    dense Jacobian w.r.t. (vec(S), T). With fixed_period=True the period is
    a parameter rather than an unknown, which removes brake orbits from the
    solution set (their period is whatever it is, not T) and pins down one
    member of the orbit family. Returns (S, T, residual_norm).
    """
    pp = pack_params(params_eq)
    guard = path_guard
    S = S0.copy()
    T = float(T0)
    m = S.shape[0]
    n_unknowns = 4 * m + (0 if fixed_period else 1)

    res, ends = _ms_residual_and_ends(S, T, pp, guard, rtol, atol, constraint)
    if res is None:
        raise NoConvergence("seed trajectory hits the singularity guard")
    res_norm = np.linalg.norm(res)

    for it in range(max_iter):
        if res_norm < tol:
            return S, T, res_norm
        # batched finite differences: 4 perturbed copies of every node
        pert = np.repeat(S, 4, axis=0)
        for j in range(m):
            for c in range(4):
                pert[4 * j + c, c] += FD_STEP
        ends_p, status = _propagate_batch(pert, T / m, rtol, atol, pp, guard,
                                          2_000_000)
        if np.any(status != STATUS_OK):
            raise NoConvergence("integration failed in Jacobian assembly",
                                residual=res_norm, iterations=it)
        J = np.zeros((res.size, n_unknowns))
        out = np.empty(4)
        for j in range(m):
            blk = (ends_p[4 * j:4 * j + 4] - ends[j]).T / FD_STEP  # (4 out, 4 in)
            J[4 * j:4 * j + 4, 4 * j:4 * j + 4] = blk
            J[4 * j:4 * j + 4, 4 * ((j + 1) % m):4 * ((j + 1) % m) + 4] -= np.eye(4)
            if not fixed_period:
                _rhs(ends[j], pp, out)
                J[4 * j:4 * j + 4, 4 * m] = out / m
        J[4 * m:, :] = constraint_jac(S, T)[:, :n_unknowns]
        step, *_ = np.linalg.lstsq(J, -res, rcond=None)

        lam = 1.0
        improved = False
        while lam > 1e-4:
            S_try = S + lam * step[:4 * m].reshape(m, 4)
            T_try = T if fixed_period else T + lam * step[4 * m]
            if T_try > 0:
                res_try, ends_try = _ms_residual_and_ends(
                    S_try, T_try, pp, guard, rtol, atol, constraint)
                if res_try is not None:
                    rn = np.linalg.norm(res_try)
                    if rn < res_norm:
                        S, T, res, ends, res_norm = S_try, T_try, res_try, ends_try, rn
                        improved = True
                        break
            lam *= 0.5
        if not improved:
            raise NoConvergence("line search stalled in multiple shooting",
                                residual=res_norm, iterations=it)
    if res_norm < tol:
        return S, T, res_norm
    raise NoConvergence("multiple shooting did not converge",
                        residual=res_norm, iterations=max_iter)


def _diagonal_constraint():
    """Initial point on D, initial velocity normal to D."""

    def constraint(S, T):
        return np.array([S[0, 0] + S[0, 1], S[0, 2] - S[0, 3]])

    def jac(S, T):
        m = S.shape[0]
        J = np.zeros((2, 4 * m + 1))
        J[0, 0] = 1.0
        J[0, 1] = 1.0
        J[1, 2] = 1.0
        J[1, 3] = -1.0
        return J

    return constraint, jac


def _diagonal_energy_constraint(E_target, params_eq):
    """Diagonal-symmetric initial conditions plus a pinned energy level.

    The energy row excludes the trivial rest solution from the Gauss-Newton
    basin; brake orbits remain possible and are filtered afterwards.
    """

    def constraint(S, T):
        E = dyn.total_energy(S[0, 0:2], S[0, 2:4], params_eq, check=False)
        return np.array([S[0, 0] + S[0, 1], S[0, 2] - S[0, 3], E - E_target])

    def jac(S, T):
        m = S.shape[0]
        J = np.zeros((3, 4 * m + 1))
        J[0, 0] = 1.0
        J[0, 1] = 1.0
        J[1, 2] = 1.0
        J[1, 3] = -1.0
        M = dyn.reduced_mass_matrix(S[0, 0:2], params_eq, check=False)
        h = 1e-7
        for c in range(2):
            rp = S[0, 0:2].copy()
            rm = S[0, 0:2].copy()
            rp[c] += h
            rm[c] -= h
            J[2, c] = (dyn.total_energy(rp, S[0, 2:4], params_eq, check=False)
                       - dyn.total_energy(rm, S[0, 2:4], params_eq,
                                          check=False)) / (2 * h)
        J[2, 2:4] = M @ S[0, 2:4]
        return J

    return constraint, jac


def energy_consistent_seed(E_target, params_eq, center=None, axis_on_d=0.5,
                           axis_normal=0.3, n_segments=8, n_dense=600):
    """Multiple-shooting seed on a shape-space ellipse with the speed
    profile a conservative motion at energy E_target would have.

    The seed travels the ellipse with |rdot| = sqrt(2 (E - V) / (t^T M t))
    along the local tangent t, so it slows where the potential is high,
    like the thin natural orbits it approximates. Also returns the
    traversal-time estimate for the period guess. E_target must exceed the
    potential everywhere on the ellipse.
    """
    if center is None:
        center = params_eq.r_eq[0]
    u_d = np.array([1.0, -1.0]) / np.sqrt(2.0)
    u_n = np.array([1.0, 1.0]) / np.sqrt(2.0)
    c = np.array([center, -center])
    ph = np.linspace(0.0, 2.0 * np.pi, n_dense, endpoint=False)
    pts = (c + axis_on_d * np.outer(np.cos(ph), u_d)
           + axis_normal * np.outer(np.sin(ph), u_n))
    tang = (-axis_on_d * np.outer(np.sin(ph), u_d)
            + axis_normal * np.outer(np.cos(ph), u_n))
    seg_len = np.linalg.norm(tang, axis=1) * (2.0 * np.pi / n_dense)
    that = tang / np.linalg.norm(tang, axis=1)[:, None]
    V = dyn.potential_energy(pts, params_eq)
    margin = E_target - V.max()
    if margin <= 0:
        raise ValueError(
            f"E_target {E_target} does not exceed the max potential "
            f"{V.max():.4f} on the seed path")
    M = dyn.reduced_mass_matrix(pts, params_eq, check=False)
    mt = np.einsum("ni,nij,nj->n", that, M, that)
    speed = np.sqrt(2.0 * np.maximum(E_target - V, 0.0) / mt)
    dt = seg_len / speed
    t_cum = np.concatenate([[0.0], np.cumsum(dt)])
    T_est = t_cum[-1]
    S = np.zeros((n_segments, 4))
    for j in range(n_segments):
        idx = int(np.searchsorted(t_cum, j * T_est / n_segments)) % n_dense
        S[j, 0:2] = pts[idx]
        S[j, 2:4] = speed[idx] * that[idx]
    return S, float(T_est)


def _energy_constraint(E_target, anchor_value, params_eq):
    """Energy level plus a phase anchor on the first node's first angle."""

    def constraint(S, T):
        E = dyn.total_energy(S[0, 0:2], S[0, 2:4], params_eq, check=False)
        return np.array([E - E_target, S[0, 0] - anchor_value])

    def jac(S, T):
        m = S.shape[0]
        J = np.zeros((2, 4 * m + 1))
        M = dyn.reduced_mass_matrix(S[0, 0:2], params_eq, check=False)
        h = 1e-7
        for c in range(2):
            rp = S[0, 0:2].copy()
            rm = S[0, 0:2].copy()
            rp[c] += h
            rm[c] -= h
            dE = (dyn.total_energy(rp, S[0, 2:4], params_eq, check=False)
                  - dyn.total_energy(rm, S[0, 2:4], params_eq, check=False)) / (2 * h)
            J[0, c] = dE
        J[0, 2:4] = M @ S[0, 2:4]
        J[1, 0] = 1.0
        return J

    return constraint, jac


def _measure_orbit(S, T, params_eq, residual, n_samples=2000,
                   path_guard=DEFAULT_PATH_GUARD, rtol=SOLVE_RTOL,
                   atol=SOLVE_ATOL):
    """Re-simulate one period with pose and assemble the orbit record."""
    pp = pack_params(params_eq)
    y0 = np.concatenate([S[0, 0:2], S[0, 2:4], np.zeros(3)])
    ts, ys, fs, m, st = _propagate_record(y0, T, rtol, atol, pp, path_guard,
                                          4_000_000, 400_000)
    if st != STATUS_OK:
        raise SingularityApproached(ts[m - 1], ys[m - 1, :2], 0.0)
    ts, ys = ts[:m], ys[:m]
    speeds = np.hypot(ys[:, 2], ys[:, 3])
    min_speed = float(speeds.min())
    d_vec = ys[-1, 4:6] - ys[0, 4:6]
    seg = np.diff(ys[:, 4:6], axis=0)
    orbit = PeriodicOrbit(
        r0=S[0, 0:2].copy(), dr0=S[0, 2:4].copy(), period=float(T),
        energy=float(dyn.total_energy(S[0, 0:2], S[0, 2:4], params_eq,
                                      check=False)),
        r_eq=params_eq.r_eq.copy(), min_joint_speed=min_speed,
        displacement=float(np.hypot(d_vec[0], d_vec[1])),
        net_rotation=float(ys[-1, 6] - ys[0, 6]),
        arc_length=float(np.sum(np.hypot(seg[:, 0], seg[:, 1]))),
        residual=float(residual),
        path_t=ts.copy(), path_r=ys[:, 0:2].copy(), path_dr=ys[:, 2:4].copy())
    return orbit


def solve_nbo(seed_states, period_guess, r_eq_on_d, params: ModelParams,
              tol=1e-10, speed_filter=BRAKE_SPEED_FILTER, max_iter=60,
              path_guard=DEFAULT_PATH_GUARD, period_mode="parameter"):
    """Solve the periodic BVP with diagonal-symmetric initial conditions.

    seed_states : (m, 4) multiple-shooting node states (a full trajectory
        guess, e.g. from ellipse_trajectory_seed or a previous orbit).
    r_eq_on_d : spring equilibrium position on the diagonal (scalar a for
        (a, -a), or the 2-vector itself).
    period_mode : 'parameter' keeps the period fixed at period_guess (one
        orbit per period value, and brake orbits cannot satisfy the system);
        'free' solves for the period as well.

    Raises ConvergedToBrakeOrbit when the converged solution's minimum joint
    speed falls below the filter (the solver finds brake orbits too; they
    are discarded).
    """
    r_eq = (np.asarray(r_eq_on_d, dtype=float) if np.ndim(r_eq_on_d)
            else np.array([float(r_eq_on_d), -float(r_eq_on_d)]))
    params_eq = params.with_equilibrium(r_eq)
    constraint, jac = _diagonal_constraint()
    S, T, res_norm = _solve_multiple_shooting(
        np.asarray(seed_states, dtype=float), period_guess, params_eq,
        constraint, jac, tol=tol, max_iter=max_iter, path_guard=path_guard,
        fixed_period=(period_mode == "parameter"))
    orbit = _measure_orbit(S, T, params_eq, res_norm, path_guard=path_guard)
    if orbit.min_joint_speed <= speed_filter:
        raise ConvergedToBrakeOrbit(orbit.min_joint_speed, speed_filter)
    orbit.node_states = S
    return orbit


def find_nbo(E_target, r_eq_on_d, params: ModelParams, axis_on_d=0.5,
             axis_normal=0.3, n_segments=8, tol=1e-10,
             speed_filter=BRAKE_SPEED_FILTER, path_guard=DEFAULT_PATH_GUARD,
             reject_brake=True):
    """Find a diagonal-symmetric NBO at a prescribed energy level.

    Seeds the BVP with an energy-consistent ellipse traversal and solves
    with the symmetric initial conditions plus the energy pin (free
    period).
    """
    r_eq = (np.asarray(r_eq_on_d, dtype=float) if np.ndim(r_eq_on_d)
            else np.array([float(r_eq_on_d), -float(r_eq_on_d)]))
    params_eq = params.with_equilibrium(r_eq)
    S0, T0 = energy_consistent_seed(E_target, params_eq, axis_on_d=axis_on_d,
                                    axis_normal=axis_normal,
                                    n_segments=n_segments)
    constraint, jac = _diagonal_energy_constraint(float(E_target), params_eq)
    S, T, res_norm = _solve_multiple_shooting(
        S0, T0, params_eq, constraint, jac, tol=tol, path_guard=path_guard)
    orbit = _measure_orbit(S, T, params_eq, res_norm, path_guard=path_guard)
    if reject_brake and orbit.min_joint_speed <= speed_filter:
        raise ConvergedToBrakeOrbit(orbit.min_joint_speed, speed_filter)
    orbit.node_states = S
    return orbit


def _loop_seed_from_points(loop_pts, E_target, params_eq, n_segments):
    """Node states on a closed polyline with an energy-consistent speed
    profile; node 0 is placed at the outer diagonal crossing."""
    n = loop_pts.shape[0]
    nxt = np.roll(loop_pts, -1, axis=0)
    seg = nxt - loop_pts
    seg_len = np.linalg.norm(seg, axis=1)
    ok = seg_len > 1e-14
    that = np.where(ok[:, None], seg / np.where(ok, seg_len, 1.0)[:, None], 0.0)
    V = dyn.potential_energy(loop_pts, params_eq)
    margin = E_target - V.max()
    if margin <= 0:
        raise ValueError(
            f"E_target {E_target} below max potential {V.max():.4f} on loop")
    M = dyn.reduced_mass_matrix(loop_pts, params_eq, check=False)
    mt = np.einsum("ni,nij,nj->n", that, M, that)
    mt = np.where(mt > 1e-12, mt, 1.0)
    speed = np.sqrt(2.0 * (E_target - V) / mt)
    dt = seg_len / speed
    t_cum = np.concatenate([[0.0], np.cumsum(dt)])
    T_est = float(t_cum[-1])

    # start node: diagonal crossing (r1 + r2 = 0) farthest from the origin
    s_diag = loop_pts[:, 0] + loop_pts[:, 1]
    cross = np.nonzero(np.sign(s_diag) != np.sign(np.roll(s_diag, -1)))[0]
    if cross.size:
        start = cross[np.argmax(np.linalg.norm(loop_pts[cross], axis=1))]
    else:
        start = 0
    order = np.roll(np.arange(n), -start)
    t_shift = np.concatenate([[0.0], np.cumsum(dt[order])])

    S = np.zeros((n_segments, 4))
    for j in range(n_segments):
        idx = int(np.searchsorted(t_shift, j * T_est / n_segments))
        idx = order[min(idx, n - 1)]
        S[j, 0:2] = loop_pts[idx]
        S[j, 2:4] = speed[idx] * that[idx]
    return S, T_est


def _diagonal_section_state(a, E, params_eq, sign=1.0):
    """State on the diagonal-crossing section: position (a, -a), velocity
    normal to D with the magnitude fixed by the energy; None if V >= E."""
    r = np.array([float(a), -float(a)])
    V = dyn.potential_energy(r, params_eq)
    if V >= E:
        return None
    u_n = np.array([1.0, 1.0]) / np.sqrt(2.0)
    M = dyn.reduced_mass_matrix(r, params_eq, check=False)
    w = np.sqrt(2.0 * (E - V) / (u_n @ M @ u_n))
    return np.concatenate([r, sign * w * u_n])


def _first_diagonal_return(y0, pp, guard, t_max=40.0, rtol=SOLVE_RTOL,
                           atol=SOLVE_ATOL):
    """First return to the diagonal section with the same crossing sense.

    Returns (state, return time) or (None, reason). Circulating orbits
    cross D twice per loop, once in each sense, so the same-sense return
    closes one full loop.
    """
    ts, ys, fs, m, st = _propagate_record(y0, t_max, rtol, atol, pp, guard,
                                          4_000_000, 400_000)
    if st != STATUS_OK:
        return None, "guard"
    s = ys[:m, 0] + ys[:m, 1]
    v = ys[:m, 2] + ys[:m, 3]
    v_sign = np.sign(y0[2] + y0[3])
    hit = None
    for i in range(1, m - 1):
        if s[i] * s[i + 1] < 0 and v[i] * v_sign > 0:
            hit = i
            break
    if hit is None:
        return None, "no return"
    lo_t, y = ts[hit], ys[hit].copy()
    hi_t = ts[hit + 1]
    side = np.sign(s[hit])
    for _ in range(60):
        mid = 0.5 * (lo_t + hi_t)
        ym, st2, _ = _propagate(y, mid - lo_t, rtol, atol, pp, guard,
                                1_000_000)
        if st2 != STATUS_OK:
            return None, "guard"
        if (ym[0] + ym[1]) * side > 0:
            lo_t, y = mid, ym
        else:
            hi_t = mid
    return y, lo_t


def poincare_perpendicularity(a, E, params_eq, pp=None,
                              path_guard=DEFAULT_PATH_GUARD, sign=1.0):
    """Misalignment u' = dr1 - dr2 at the first same-sense diagonal return
    when starting perpendicular at (a, -a); zeros mark symmetric periodic
    orbits."""
    if pp is None:
        pp = pack_params(params_eq)
    y0 = _diagonal_section_state(a, E, params_eq, sign=sign)
    if y0 is None:
        return None
    y1, t1 = _first_diagonal_return(y0, pp, path_guard)
    if y1 is None:
        return None
    return float(y1[2] - y1[3]), float(t1), y1


def find_nbo_poincare(E_target, r_eq_on_d, params: ModelParams, n_scan=48,
                      n_segments=10, tol=1e-10,
                      speed_filter=BRAKE_SPEED_FILTER,
                      path_guard=DEFAULT_PATH_GUARD, sign=1.0):
    """Locate symmetric NBOs at one energy via the diagonal return map.

    Scans the perpendicular-crossing position along D, bisects sign changes
    of the return misalignment, simulates each candidate loop to seed the
    multiple-shooting BVP, and polishes with the energy-pinned solve.
    Returns a list of validated orbits (possibly empty).
    """
    r_eq = (np.asarray(r_eq_on_d, dtype=float) if np.ndim(r_eq_on_d)
            else np.array([float(r_eq_on_d), -float(r_eq_on_d)]))
    params_eq = params.with_equilibrium(r_eq)
    pp = pack_params(params_eq)
    center = r_eq[0]
    half_width = np.sqrt(2.0 * E_target / (params_eq.k[0] + params_eq.k[1]))
    avals = center + np.linspace(-0.995, 0.995, int(n_scan)) * half_width
    us = []
    for a in avals:
        got = poincare_perpendicularity(a, E_target, params_eq, pp,
                                        path_guard, sign)
        us.append(np.nan if got is None else got[0])
    us = np.array(us)

    orbits_found = []
    for i in range(len(avals) - 1):
        if not (np.isfinite(us[i]) and np.isfinite(us[i + 1])):
            continue
        if us[i] * us[i + 1] >= 0:
            continue
        lo, hi = avals[i], avals[i + 1]
        flo = us[i]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            got = poincare_perpendicularity(mid, E_target, params_eq, pp,
                                            path_guard, sign)
            if got is None:
                break
            if (got[0] < 0) == (flo < 0):
                lo, flo = mid, got[0]
            else:
                hi = mid
            if hi - lo < 1e-12:
                break
        a_star = 0.5 * (lo + hi)
        got = poincare_perpendicularity(a_star, E_target, params_eq, pp,
                                        path_guard, sign)
        if got is None:
            continue
        _, T_loop, _ = got
        y0 = _diagonal_section_state(a_star, E_target, params_eq, sign=sign)
        ts, ys, fs, m, st = _propagate_record(y0, T_loop, SOLVE_RTOL,
                                              SOLVE_ATOL, pp, path_guard,
                                              4_000_000, 400_000)
        if st != STATUS_OK:
            continue
        idx = np.searchsorted(ts[:m], np.linspace(0, T_loop, n_segments,
                                                  endpoint=False))
        S0 = ys[np.clip(idx, 0, m - 1), :4]
        constraint, jac = _diagonal_energy_constraint(float(E_target),
                                                      params_eq)
        try:
            S, T, res_norm = _solve_multiple_shooting(
                S0, T_loop, params_eq, constraint, jac, tol=tol,
                path_guard=path_guard)
            orbit = _measure_orbit(S, T, params_eq, res_norm,
                                   path_guard=path_guard)
        except (NoConvergence, SingularityApproached, StepFailure):
            continue
        if orbit.min_joint_speed <= speed_filter:
            continue
        orbit.node_states = S
        orbits_found.append(orbit)
    return orbits_found


def find_nbo_from_mode(r_eq_on_d, E_mode, params: ModelParams,
                       energy_lift=0.05, offset=0.02, n_segments=10,
                       tol=1e-10, speed_filter=BRAKE_SPEED_FILTER,
                       path_guard=DEFAULT_PATH_GUARD, reject_brake=True):
    """Find an NBO by opening up a brake orbit into a thin loop.

    Shoots the transverse-branch brake orbit at energy E_mode, builds a
    closed loop around its path (offset laterally by `offset` rad), lifts
    the energy by the relative `energy_lift`, and solves the symmetric
    energy-pinned BVP from that seed. Near the collapse regime this lands
    on the thin non-brake orbits directly.
    """
    from .modal import shoot_brake_orbit

    r_eq = (np.asarray(r_eq_on_d, dtype=float) if np.ndim(r_eq_on_d)
            else np.array([float(r_eq_on_d), -float(r_eq_on_d)]))
    params_eq = params.with_equilibrium(r_eq)
    brake = shoot_brake_orbit(r_eq, "g_perp", float(E_mode), params,
                              store_path=True, path_guard=path_guard)
    path = brake.path_r
    tang = np.gradient(path, axis=0)
    tang /= np.linalg.norm(tang, axis=1)[:, None]
    normal = np.stack([-tang[:, 1], tang[:, 0]], axis=-1)
    loop = np.vstack([path + offset * normal, (path - offset * normal)[::-1]])
    E_target = float(E_mode) * (1.0 + float(energy_lift))
    S0, T0 = _loop_seed_from_points(loop, E_target, params_eq, n_segments)
    constraint, jac = _diagonal_energy_constraint(E_target, params_eq)
    S, T, res_norm = _solve_multiple_shooting(
        S0, T0, params_eq, constraint, jac, tol=tol, path_guard=path_guard)
    orbit = _measure_orbit(S, T, params_eq, res_norm, path_guard=path_guard)
    if reject_brake and orbit.min_joint_speed <= speed_filter:
        raise ConvergedToBrakeOrbit(orbit.min_joint_speed, speed_filter)
    orbit.node_states = S
    return orbit


def _resample_nodes(orbit: PeriodicOrbit, m):
    """Node states at m equal time fractions of a stored orbit period."""
    idx = np.searchsorted(orbit.path_t, np.linspace(0, orbit.period, m,
                                                    endpoint=False))
    idx = np.clip(idx, 0, orbit.path_t.size - 1)
    return np.column_stack([orbit.path_r[idx], orbit.path_dr[idx]])


def continue_orbit_to_energy(orbit: PeriodicOrbit, E_target,
                             params: ModelParams, tol=1e-10,
                             speed_filter=BRAKE_SPEED_FILTER,
                             n_segments=None, path_guard=DEFAULT_PATH_GUARD):
    """Re-solve the BVP at a prescribed energy, seeded from a nearby orbit.

    The diagonal initial-condition constraints are replaced by the energy
    level and a phase anchor at the seed's first joint angle.
    """
    params_eq = params.with_equilibrium(orbit.r_eq)
    m = n_segments or max(getattr(orbit, "node_states", np.empty((8, 4))).shape[0], 8)
    S0 = (orbit.node_states if getattr(orbit, "node_states", None) is not None
          and orbit.node_states.shape[0] == m else _resample_nodes(orbit, m))
    # scale velocities toward the requested energy level
    E0 = orbit.energy
    V0 = dyn.potential_energy(S0[:, 0:2], params_eq)
    ke_scale = np.sqrt(np.maximum((E_target - V0) /
                                  np.maximum(E0 - V0, 1e-12), 0.25))
    S0 = S0.copy()
    S0[:, 2:4] *= ke_scale[:, None]
    constraint, jac = _energy_constraint(float(E_target), float(S0[0, 0]),
                                         params_eq)
    S, T, res_norm = _solve_multiple_shooting(
        S0, orbit.period, params_eq, constraint, jac, tol=tol,
        path_guard=path_guard)
    new_orbit = _measure_orbit(S, T, params_eq, res_norm,
                               path_guard=path_guard)
    new_orbit.node_states = S
    if new_orbit.min_joint_speed <= speed_filter:
        raise ConvergedToBrakeOrbit(new_orbit.min_joint_speed, speed_filter)
    return new_orbit


def continue_family(seed: PeriodicOrbit, e_min, e_max, de,
                    params: ModelParams, tol=1e-10,
                    speed_filter=BRAKE_SPEED_FILTER, max_halvings=4,
                    path_guard=DEFAULT_PATH_GUARD):
    """Numerical continuation of an orbit family across an energy range.

    Sweeps up and down from the seed's energy in steps of `de`, re-seeding
    each solve from the previous orbit. A sweep ends at the range bound, on
    repeated convergence failure (flagged 'truncated'), or when solutions
    fall below the brake-orbit speed filter (flagged 'collapsed', with the
    last good energy recorded).
    """
    de = abs(float(de))
    orbits_up, orbits_down = [], []
    status = {"up": "bounded", "down": "bounded"}
    collapse_energy = None

    for direction, store in (("up", orbits_up), ("down", orbits_down)):
        current = seed
        step = de if direction == "up" else -de
        halvings = 0
        while True:
            E_next = current.energy + step
            if direction == "up" and E_next > e_max + 1e-12:
                break
            if direction == "down" and E_next < e_min - 1e-12:
                break
            try:
                nxt = continue_orbit_to_energy(current, E_next, params,
                                               tol=tol,
                                               speed_filter=speed_filter,
                                               path_guard=path_guard)
            except ConvergedToBrakeOrbit:
                status[direction] = "collapsed"
                collapse_energy = E_next
                break
            except (NoConvergence, SingularityApproached, StepFailure):
                if halvings >= max_halvings:
                    status[direction] = "truncated"
                    break
                halvings += 1
                step *= 0.5
                continue
            halvings = 0
            step = de if direction == "up" else -de
            store.append(nxt)
            current = nxt

    orbits = list(reversed(orbits_down)) + [seed] + orbits_up
    return OrbitFamily(orbits=orbits, r_eq=seed.r_eq.copy(),
                       status_low=status["down"], status_high=status["up"],
                       collapse_energy=collapse_energy)


def orbit_displacement(orbit: PeriodicOrbit, params: ModelParams,
                       rtol=SOLVE_RTOL, atol=SOLVE_ATOL):
    """(d, net rotation, arc length, v_avg) via pose reconstruction."""
    params_eq = params.with_equilibrium(orbit.r_eq)
    fresh = _measure_orbit(
        np.concatenate([orbit.r0, orbit.dr0])[None, :],
        orbit.period, params_eq, orbit.residual, rtol=rtol, atol=atol)
    return (fresh.displacement, fresh.net_rotation, fresh.arc_length,
            fresh.displacement / fresh.period)


def export_orbits(orbits, path):
    data = [o.as_dict() for o in orbits]
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def export_family(family: OrbitFamily, path):
    Path(path).write_text(json.dumps(family.as_dict(), indent=2) + "\n")


def load_orbits(path, params: ModelParams):
    """Rebuild orbit records (with fresh path samples) from JSON."""
    data = json.loads(Path(path).read_text())
    out = []
    for d in data:
        params_eq = params.with_equilibrium(np.array(d["r_eq"]))
        S = np.array([d["r0"] + d["dr0"]])
        orbit = _measure_orbit(S, d["period"], params_eq, d["residual"])
        out.append(orbit)
    return out
