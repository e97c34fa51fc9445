"""Jitted kernels for the hot loops (shooting, continuation, gait scans).

These mirror `dynamics.shape_rhs` / `dynamics.full_rhs` (zero applied torque)
and the adaptive Dormand-Prince driver in `integrate.py`, specialized to
scalar states so numba can compile them. The structured numpy implementations
stay the source of truth; tests assert the two paths agree to near machine
precision. Without numba everything still runs (plain Python), just slower.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


def pack_params(params):
    """Flatten ModelParams into the float vector the kernels consume."""
    return np.array([
        params.H, params.R,
        params.masses[0], params.masses[1], params.masses[2],
        params.inertias[0], params.inertias[1], params.inertias[2],
        params.k[0], params.k[1],
        params.r_eq[0], params.r_eq[1],
        params.singularity_guard,
    ])


@njit(cache=True)
def _accel(a1, a2, d1, d2, tau1, tau2, p):
    """Joint accelerations and the connection row values.

    Returns (dd1, dd2, Q, xi_x, xi_theta); mirrors the structured pieces in
    dynamics._body_pieces / bias_forces / forward_dynamics.
    """
    H = p[0]
    R = p[1]
    s1 = np.sin(a1)
    c1 = np.cos(a1)
    s2 = np.sin(a2)
    c2 = np.cos(a2)
    s12 = np.sin(a1 - a2)
    c12 = np.cos(a1 - a2)
    Q = H * s12 + R * (s1 - s2)
    if Q == 0.0:
        # exact singular hit during a trial stage: poison the step so the
        # controller rejects it instead of raising
        Q = np.nan
    RQ = R / Q

    A = np.empty((3, 2))
    A[0, 0] = RQ * (R + H * c2)
    A[0, 1] = RQ * (R + H * c1)
    A[1, 0] = 0.0
    A[1, 1] = 0.0
    A[2, 0] = RQ * s2
    A[2, 1] = RQ * s1

    dQ1 = H * c12 + R * c1
    dQ2 = -H * c12 - R * c2
    dA = np.empty((2, 3, 2))
    for i in range(3):
        for j in range(2):
            dA[0, i, j] = -(dQ1 / Q) * A[i, j]
            dA[1, i, j] = -(dQ2 / Q) * A[i, j]
    dA[0, 0, 1] += RQ * (-H * s1)
    dA[0, 2, 1] += RQ * c1
    dA[1, 0, 0] += RQ * (-H * s2)
    dA[1, 2, 0] += RQ * c2

    # body centers (central frame) and their derivatives
    cb = np.zeros((3, 2))
    cb[1, 0] = -H - R * c1
    cb[1, 1] = R * s1
    cb[2, 0] = H + R * c2
    cb[2, 1] = R * s2
    dc = np.zeros((2, 3, 2))
    dc[0, 1, 0] = R * s1
    dc[0, 1, 1] = R * c1
    dc[1, 2, 0] = -R * s2
    dc[1, 2, 1] = R * c2
    Cp = np.zeros((3, 2, 2))
    Cp[1, 0, 0] = R * s1
    Cp[1, 1, 0] = R * c1
    Cp[2, 0, 1] = -R * s2
    Cp[2, 1, 1] = R * c2
    dCp = np.zeros((2, 3, 2, 2))
    dCp[0, 1, 0, 0] = R * c1
    dCp[0, 1, 1, 0] = -R * s1
    dCp[1, 2, 0, 1] = -R * c2
    dCp[1, 2, 1, 1] = -R * s2
    dphi = np.zeros((3, 2))
    dphi[1, 0] = -1.0
    dphi[2, 1] = 1.0

    M00 = 0.0
    M01 = 0.0
    M11 = 0.0
    h0 = 0.0
    h1 = 0.0
    xith = -(A[2, 0] * d1 + A[2, 1] * d2)
    mb = p[2:5]
    Ib = p[5:8]

    for b in range(3):
        jcx = -cb[b, 1]
        jcy = cb[b, 0]
        W = np.empty((2, 2))
        for j in range(2):
            W[0, j] = -A[0, j] - jcx * A[2, j] + Cp[b, 0, j]
            W[1, j] = -A[1, j] - jcy * A[2, j] + Cp[b, 1, j]
        g0 = -A[2, 0] + dphi[b, 0]
        g1 = -A[2, 1] + dphi[b, 1]

        Wd = np.zeros((2, 2))
        for v in range(2):
            dv = d1 if v == 0 else d2
            djx = -dc[v, b, 1]
            djy = dc[v, b, 0]
            for j in range(2):
                Wd[0, j] += dv * (-dA[v, 0, j] - djx * A[2, j]
                                  - jcx * dA[v, 2, j] + dCp[v, b, 0, j])
                Wd[1, j] += dv * (-dA[v, 1, j] - djy * A[2, j]
                                  - jcy * dA[v, 2, j] + dCp[v, b, 1, j])
        gd0 = -(dA[0, 2, 0] * d1 + dA[1, 2, 0] * d2)
        gd1 = -(dA[0, 2, 1] * d1 + dA[1, 2, 1] * d2)

        ux = W[0, 0] * d1 + W[0, 1] * d2
        uy = W[1, 0] * d1 + W[1, 1] * d2
        accx = Wd[0, 0] * d1 + Wd[0, 1] * d2 + xith * (-uy)
        accy = Wd[1, 0] * d1 + Wd[1, 1] * d2 + xith * ux
        omdot = gd0 * d1 + gd1 * d2

        m = mb[b]
        Iv = Ib[b]
        M00 += m * (W[0, 0] * W[0, 0] + W[1, 0] * W[1, 0]) + Iv * g0 * g0
        M01 += m * (W[0, 0] * W[0, 1] + W[1, 0] * W[1, 1]) + Iv * g0 * g1
        M11 += m * (W[0, 1] * W[0, 1] + W[1, 1] * W[1, 1]) + Iv * g1 * g1
        h0 += m * (W[0, 0] * accx + W[1, 0] * accy) + Iv * g0 * omdot
        h1 += m * (W[0, 1] * accx + W[1, 1] * accy) + Iv * g1 * omdot

    rhs0 = tau1 - h0 - p[8] * (a1 - p[10])
    rhs1 = tau2 - h1 - p[9] * (a2 - p[11])
    det = M00 * M11 - M01 * M01
    dd1 = (M11 * rhs0 - M01 * rhs1) / det
    dd2 = (M00 * rhs1 - M01 * rhs0) / det
    xi_x = -(A[0, 0] * d1 + A[0, 1] * d2)
    return dd1, dd2, Q, xi_x, xith


@njit(cache=True)
def _rhs(y, p, out):
    """Unactuated RHS; shape-only (len 4) or with pose (len 7)."""
    dd1, dd2, Q, xi_x, xith = _accel(y[0], y[1], y[2], y[3], 0.0, 0.0, p)
    out[0] = y[2]
    out[1] = y[3]
    out[2] = dd1
    out[3] = dd2
    if y.shape[0] == 7:
        th = y[6]
        out[4] = np.cos(th) * xi_x
        out[5] = np.sin(th) * xi_x
        out[6] = xith
    return Q


# Dormand-Prince 5(4) coefficients (same tableau as integrate.py)
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

STATUS_OK = 0
STATUS_GUARD = 1
STATUS_FAIL = 2


@njit(cache=True)
def _guard_bad(y, Q, qguard):
    """Singularity guard: |Q| inside the band or a joint angle at +-pi."""
    if abs(Q) < qguard:
        return True
    if abs(y[0]) >= np.pi or abs(y[1]) >= np.pi:
        return True
    return False


@njit(cache=True)
def _step_kernel(t, y, f0, h, p, ks, ynew, yerr):
    """One DOPRI5 step; fills ynew/yerr, returns Q at the new point."""
    n = y.shape[0]
    ytmp = np.empty(n)
    for i in range(n):
        ytmp[i] = y[i] + h * _A21 * f0[i]
    _rhs(ytmp, p, ks[1])
    for i in range(n):
        ytmp[i] = y[i] + h * (_A31 * f0[i] + _A32 * ks[1, i])
    _rhs(ytmp, p, ks[2])
    for i in range(n):
        ytmp[i] = y[i] + h * (_A41 * f0[i] + _A42 * ks[1, i] + _A43 * ks[2, i])
    _rhs(ytmp, p, ks[3])
    for i in range(n):
        ytmp[i] = y[i] + h * (_A51 * f0[i] + _A52 * ks[1, i] + _A53 * ks[2, i]
                              + _A54 * ks[3, i])
    _rhs(ytmp, p, ks[4])
    for i in range(n):
        ytmp[i] = y[i] + h * (_A61 * f0[i] + _A62 * ks[1, i] + _A63 * ks[2, i]
                              + _A64 * ks[3, i] + _A65 * ks[4, i])
    _rhs(ytmp, p, ks[5])
    for i in range(n):
        ynew[i] = y[i] + h * (_B1 * f0[i] + _B3 * ks[2, i] + _B4 * ks[3, i]
                              + _B5 * ks[4, i] + _B6 * ks[5, i])
    Qn = _rhs(ynew, p, ks[6])
    for i in range(n):
        yerr[i] = h * (_E1 * f0[i] + _E3 * ks[2, i] + _E4 * ks[3, i]
                       + _E5 * ks[4, i] + _E6 * ks[5, i] + _E7 * ks[6, i])
    return Qn


@njit(cache=True)
def _propagate(y0, T, rtol, atol, p, qguard, max_steps):
    """Integrate to exactly t=T; returns (y_end, status, t_reached)."""
    n = y0.shape[0]
    y = y0.copy()
    f0 = np.empty(n)
    Q0 = _rhs(y, p, f0)
    if _guard_bad(y, Q0, qguard):
        return y, STATUS_GUARD, 0.0
    if T == 0.0:
        return y, STATUS_OK, 0.0

    # initial step heuristic
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, T)

    ks = np.empty((7, n))
    ynew = np.empty(n)
    yerr = np.empty(n)
    t = 0.0
    err_prev = 1e-4
    rejects = 0
    steps = 0
    while t < T:
        if steps >= max_steps:
            return y, STATUS_FAIL, t
        remaining = T - t
        if remaining <= 1e-14 * max(abs(t), 1.0):
            return y, STATUS_OK, T
        if h > remaining:
            h = remaining
        if h <= 1e-14 * max(abs(t), 1.0):
            return y, STATUS_FAIL, t
        Qn = _step_kernel(t, y, f0, h, p, ks, ynew, yerr)
        steps += 1
        err = 0.0
        bad = False
        for i in range(n):
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            e = yerr[i] / sc
            err += e * e
            if not np.isfinite(e):
                bad = True
        err = np.sqrt(err / n)
        if bad or err > 1.0:
            rejects += 1
            if rejects > 60:
                return y, STATUS_FAIL, t
            if bad:
                h *= 0.1
            else:
                fac = 0.9 * err ** (-0.17)
                if fac < 0.2:
                    fac = 0.2
                h *= fac
            continue
        rejects = 0
        t += h
        for i in range(n):
            y[i] = ynew[i]
            f0[i] = ks[6, i]
        if _guard_bad(y, Qn, qguard):
            return y, STATUS_GUARD, t
        if err > 0.0:
            fac = 0.9 * err ** (-0.17) * err_prev ** 0.04
        else:
            fac = 10.0
        if fac > 10.0:
            fac = 10.0
        if fac < 0.2:
            fac = 0.2
        err_prev = max(err, 1e-10)
        h *= fac
    return y, STATUS_OK, t


@njit(cache=True)
def _propagate_batch(Y0, T, rtol, atol, p, qguard, max_steps):
    B, n = Y0.shape
    out = np.empty((B, n))
    status = np.empty(B, dtype=np.int64)
    for b in range(B):
        yb, st, _ = _propagate(Y0[b], T, rtol, atol, p, qguard, max_steps)
        out[b] = yb
        status[b] = st
    return out, status


@njit(cache=True)
def _propagate_record(y0, T, rtol, atol, p, qguard, max_steps, cap):
    """Integrate recording accepted steps; returns (ts, ys, fs, m, status).

    Arrays are preallocated with capacity `cap`; m is the sample count.
    If the capacity is hit, integration keeps going but only the final
    state is appended at the end (status stays OK).
    """
    n = y0.shape[0]
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    fs = np.empty((cap, n))
    y = y0.copy()
    f0 = np.empty(n)
    Q0 = _rhs(y, p, f0)
    ts[0] = 0.0
    ys[0] = y
    fs[0] = f0
    m = 1
    if _guard_bad(y, Q0, qguard):
        return ts, ys, fs, m, STATUS_GUARD
    if T == 0.0:
        return ts, ys, fs, m, STATUS_OK

    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, T)

    ks = np.empty((7, n))
    ynew = np.empty(n)
    yerr = np.empty(n)
    t = 0.0
    err_prev = 1e-4
    rejects = 0
    steps = 0
    status = STATUS_OK
    while t < T:
        if steps >= max_steps:
            status = STATUS_FAIL
            break
        remaining = T - t
        if remaining <= 1e-14 * max(abs(t), 1.0):
            t = T
            break
        if h > remaining:
            h = remaining
        if h <= 1e-14 * max(abs(t), 1.0):
            status = STATUS_FAIL
            break
        Qn = _step_kernel(t, y, f0, h, p, ks, ynew, yerr)
        steps += 1
        err = 0.0
        bad = False
        for i in range(n):
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            e = yerr[i] / sc
            err += e * e
            if not np.isfinite(e):
                bad = True
        err = np.sqrt(err / n)
        if bad or err > 1.0:
            rejects += 1
            if rejects > 60:
                status = STATUS_FAIL
                break
            if bad:
                h *= 0.1
            else:
                fac = 0.9 * err ** (-0.17)
                if fac < 0.2:
                    fac = 0.2
                h *= fac
            continue
        rejects = 0
        t += h
        for i in range(n):
            y[i] = ynew[i]
            f0[i] = ks[6, i]
        if m < cap:
            ts[m] = t
            ys[m] = y
            fs[m] = f0
            m += 1
        if _guard_bad(y, Qn, qguard):
            status = STATUS_GUARD
            break
        if err > 0.0:
            fac = 0.9 * err ** (-0.17) * err_prev ** 0.04
        else:
            fac = 10.0
        if fac > 10.0:
            fac = 10.0
        if fac < 0.2:
            fac = 0.2
        err_prev = max(err, 1e-10)
        h *= fac
    if ts[m - 1] < t:
        ts[m - 1] = t
        ys[m - 1] = y
        fs[m - 1] = f0
    return ts, ys, fs, m, status


@njit(cache=True)
def _propagate_eval(y0, teval, rtol, atol, p, qguard, max_steps):
    """Integrate landing exactly on the increasing times in teval.

    Returns (ys at teval, status, n_good); the first row corresponds to
    teval[0] (which may be 0).
    """
    n = y0.shape[0]
    m = teval.shape[0]
    out = np.empty((m, n))
    y = y0.copy()
    f0 = np.empty(n)
    Q0 = _rhs(y, p, f0)
    if _guard_bad(y, Q0, qguard):
        return out, STATUS_GUARD, 0
    idx = 0
    if teval[0] <= 0.0:
        out[0] = y
        idx = 1

    T = teval[m - 1]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, T)

    ks = np.empty((7, n))
    ynew = np.empty(n)
    yerr = np.empty(n)
    t = 0.0
    err_prev = 1e-4
    rejects = 0
    steps = 0
    while idx < m:
        if steps >= max_steps:
            return out, STATUS_FAIL, idx
        target = teval[idx]
        if h > target - t:
            h = target - t
        if h <= 1e-15 * max(abs(t), 1.0):
            # landed on the target within roundoff
            out[idx] = y
            idx += 1
            continue
        Qn = _step_kernel(t, y, f0, h, p, ks, ynew, yerr)
        steps += 1
        err = 0.0
        bad = False
        for i in range(n):
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            e = yerr[i] / sc
            err += e * e
            if not np.isfinite(e):
                bad = True
        err = np.sqrt(err / n)
        if bad or err > 1.0:
            rejects += 1
            if rejects > 60:
                return out, STATUS_FAIL, idx
            if bad:
                h *= 0.1
            else:
                fac = 0.9 * err ** (-0.17)
                if fac < 0.2:
                    fac = 0.2
                h *= fac
            continue
        rejects = 0
        t += h
        for i in range(n):
            y[i] = ynew[i]
            f0[i] = ks[6, i]
        if t >= target - 1e-14 * max(abs(target), 1.0):
            out[idx] = y
            idx += 1
        if _guard_bad(y, Qn, qguard):
            return out, STATUS_GUARD, idx
        if err > 0.0:
            fac = 0.9 * err ** (-0.17) * err_prev ** 0.04
        else:
            fac = 10.0
        if fac > 10.0:
            fac = 10.0
        if fac < 0.2:
            fac = 0.2
        err_prev = max(err, 1e-10)
        h *= fac
    return out, STATUS_OK, idx
