"""Nonlinear normal modes, generators, and two-mode switching gaits.

A brake orbit is a periodic oscillation with two rest points (turning
points). The set of turning points reachable from one equilibrium, swept
over energy, forms that equilibrium's generator curves; for equilibria on
the diagonal D (alpha1 = -alpha2) one branch runs along D and one starts
orthogonal to it. Intersections between generator curves of two equilibria
are shared turning points where the spring equilibrium can be switched to
hop between modes, which is what produces net locomotion.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import dynamics as dyn
from ._fast import (STATUS_FAIL, STATUS_GUARD, STATUS_OK, _propagate,
                    _propagate_batch, _propagate_record, _rhs, pack_params)
from .errors import (NoConvergence, SingularityApproached, SnakeModesError,
                     StepFailure)
from .params import ModelParams

_MIRROR = np.array([[0.0, -1.0], [-1.0, 0.0]])

SHOOT_RTOL = 1e-11
SHOOT_ATOL = 1e-13
FD_STEP = 1e-7
# orbits whose path brings |Q| below this are treated as singularity-bound
DEFAULT_PATH_GUARD = 0.01


def mirror_across_diagonal(pts):
    """Reflection (a1, a2) -> (-a2, -a1) that fixes the diagonal D."""
    return np.asarray(pts, dtype=float) @ _MIRROR.T


def diagonal_point(a):
    """Equilibrium (a, -a) on D."""
    return np.array([float(a), -float(a)])


def linear_modes(r_eq, params: ModelParams):
    """Small-oscillation frequencies and mass-orthonormal eigenvectors.

    Returns [(omega, vec), ...] sorted by frequency. For equilibria on D the
    slower mode is transverse to D (seeds the orthogonal generator branch)
    and the faster one lies along D.
    """
    r_eq = np.asarray(r_eq, dtype=float)
    dyn.check_nonsingular(r_eq, params)
    M = dyn.reduced_mass_matrix(r_eq, params, check=False)
    w2, vecs = scipy.linalg.eigh(params.K, M)
    out = []
    for i in range(2):
        out.append((float(np.sqrt(w2[i])), vecs[:, i].copy()))
    return out


def branch_direction(r_eq, params: ModelParams, branch):
    """Unit seed direction for a generator branch at a D-equilibrium."""
    modes = linear_modes(r_eq, params)
    u_par = np.array([1.0, -1.0]) / np.sqrt(2.0)
    best = None
    for om, v in modes:
        along = abs(v @ u_par) / np.linalg.norm(v)
        score = along if branch == "g_par" else 1.0 - along
        if best is None or score > best[0]:
            best = (score, om, v)
    _, om, v = best
    v = v / np.linalg.norm(v)
    ref = u_par if branch == "g_par" else np.array([1.0, 1.0]) / np.sqrt(2.0)
    if v @ ref < 0:
        v = -v
    return om, v


@dataclass
class BrakeOrbit:
    """Half oscillation between two turning points of one mode."""

    r_eq: np.ndarray
    branch: str
    energy: float
    turning_point: np.ndarray
    far_point: np.ndarray
    half_period: float
    residual: float
    path_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    path_r: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    @property
    def mirror_is_far(self):
        return bool(np.linalg.norm(
            mirror_across_diagonal(self.turning_point) - self.far_point) < 1e-6)


def _shoot_step(z, pp, params_eq, E_target, rtol, atol, guard):
    """Residual, Jacobian and endpoint for the brake-orbit Newton step."""
    P = z[:2]
    T = z[2]
    Y0 = np.array([
        [P[0], P[1], 0.0, 0.0],
        [P[0] + FD_STEP, P[1], 0.0, 0.0],
        [P[0], P[1] + FD_STEP, 0.0, 0.0],
    ])
    Yend, status = _propagate_batch(Y0, T, rtol, atol, pp, guard, 2_000_000)
    if status[0] == STATUS_GUARD:
        raise SingularityApproached(T, Yend[0, :2], 0.0)
    if np.any(status != STATUS_OK):
        raise StepFailure("shooting integration failed")
    dr_end = Yend[0, 2:4]
    V = dyn.potential_energy(P, params_eq)
    res = np.array([dr_end[0], dr_end[1], V - E_target])
    out = np.empty(4)
    _rhs(Yend[0], pp, out)
    J = np.empty((3, 3))
    J[0:2, 0] = (Yend[1, 2:4] - dr_end) / FD_STEP
    J[0:2, 1] = (Yend[2, 2:4] - dr_end) / FD_STEP
    J[0:2, 2] = out[2:4]
    J[2, 0:2] = params_eq.k * (P - params_eq.r_eq)
    J[2, 2] = 0.0
    return res, J, Yend[0]


def _shoot_residual_only(z, pp, guard, rtol, atol):
    y0 = np.array([z[0], z[1], 0.0, 0.0])
    yend, st, _ = _propagate(y0, z[2], rtol, atol, pp, guard, 2_000_000)
    if st != STATUS_OK:
        return None
    return yend


def shoot_brake_orbit(r_eq, branch, E_target, params: ModelParams, seed=None,
                      side=1, tol=1e-10, max_iter=50, rtol=SHOOT_RTOL,
                      atol=SHOOT_ATOL, store_path=True,
                      path_guard=DEFAULT_PATH_GUARD):
    """Newton shooting for a brake orbit at a prescribed energy.

    Unknowns are the turning point P and the half period; residuals are the
    joint velocities after integrating from rest at P plus the energy
    condition V(P) = E_target. `seed` overrides the linear-mode initial
    guess with (P0, T0).
    """
    if E_target <= 0:
        raise ValueError("E_target must be positive")
    r_eq = np.asarray(r_eq, dtype=float)
    p_eq = params.with_equilibrium(r_eq)
    pp = pack_params(p_eq)
    if seed is None:
        om, v = branch_direction(r_eq, params, branch)
        v = side * v
        amp = np.sqrt(2.0 * E_target / (v @ (p_eq.k * v)))
        z = np.array([r_eq[0] + amp * v[0], r_eq[1] + amp * v[1], np.pi / om])
    else:
        P0, T0 = seed
        z = np.array([P0[0], P0[1], float(T0)])

    res_norm = np.inf
    for it in range(max_iter):
        res, J, y_end = _shoot_step(z, pp, p_eq, E_target, rtol, atol, path_guard)
        res_norm = np.linalg.norm(res)
        if res_norm < tol:
            break
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular shooting Jacobian",
                                residual=res_norm, iterations=it) from exc
        lam = 1.0
        improved = False
        while lam > 1e-4:
            z_try = z + lam * step
            if z_try[2] > 0:
                y_try = _shoot_residual_only(z_try, pp, path_guard, rtol, atol)
                if y_try is not None:
                    V = dyn.potential_energy(z_try[:2], p_eq)
                    rn = np.linalg.norm([y_try[2], y_try[3], V - E_target])
                    if rn < res_norm:
                        improved = True
                        break
            lam *= 0.5
        if not improved:
            raise NoConvergence("line search stalled in brake-orbit shooting",
                                residual=res_norm, iterations=it)
        z = z + lam * step
    else:
        raise NoConvergence("brake-orbit shooting did not converge",
                            residual=res_norm, iterations=max_iter)

    res, _, y_end = _shoot_step(z, pp, p_eq, E_target, rtol, atol, path_guard)
    orbit = BrakeOrbit(
        r_eq=r_eq.copy(), branch=branch, energy=float(E_target),
        turning_point=z[:2].copy(), far_point=y_end[:2].copy(),
        half_period=float(z[2]), residual=float(np.linalg.norm(res)))
    if store_path:
        y0 = np.array([z[0], z[1], 0.0, 0.0])
        ts, ys, fs, m, st = _propagate_record(
            y0, z[2], rtol, atol, pp, path_guard, 2_000_000, 100_000)
        orbit.path_t = ts[:m].copy()
        orbit.path_r = ys[:m, :2].copy()
    return orbit


@dataclass
class Generator:
    """Turning-point curve of one mode family, parameterized by energy."""

    r_eq: np.ndarray
    branch: str
    energies: np.ndarray
    turning_points: np.ndarray
    far_points: np.ndarray
    half_periods: np.ndarray
    residuals: np.ndarray
    status: str = "complete"

    def __len__(self):
        return self.energies.size

    @property
    def mirror_turning_points(self):
        """The symmetric sub-curve obtained by reflecting across D."""
        return mirror_across_diagonal(self.turning_points)

    def as_dict(self):
        return {
            "r_eq": list(map(float, self.r_eq)),
            "branch": self.branch,
            "status": self.status,
            "samples": [
                {"energy": float(e), "turning_point": [float(p[0]), float(p[1])],
                 "half_period": float(T)}
                for e, p, T in zip(self.energies, self.turning_points,
                                   self.half_periods)
            ],
        }


def trace_generator(r_eq, branch, params: ModelParams, energy_range=(2e-3, 2.0),
                    n_steps=36, side=1, tol=1e-10, max_halvings=6,
                    store_paths=False, path_guard=DEFAULT_PATH_GUARD):
    """Numerical continuation of a generator curve in energy.

    Energies follow a geometric grid from the linear regime upward; each
    shooting solve is seeded from the previous turning point with the
    amplitude rescaled by sqrt(E ratio). On failure the energy step is
    halved; if the halving budget runs out the curve is truncated and
    flagged.
    """
    r_eq = np.asarray(r_eq, dtype=float) if np.ndim(r_eq) else diagonal_point(r_eq)
    if r_eq.shape != (2,):
        r_eq = diagonal_point(float(np.asarray(r_eq).ravel()[0]))
    e_lo, e_hi = energy_range
    grid = list(np.geomspace(e_lo, e_hi, n_steps))
    energies, points, fars, halfs, resid = [], [], [], [], []
    status = "complete"
    prev = None  # (E, P, T)
    halvings = 0
    orbits = []
    while grid:
        E = grid.pop(0)
        if prev is None:
            seed = None
        else:
            E0, P0, T0 = prev
            scale = np.sqrt(E / E0)
            seed = (r_eq + (P0 - r_eq) * scale, T0)
        try:
            orb = shoot_brake_orbit(r_eq, branch, E, params, seed=seed,
                                    side=side, tol=tol, store_path=store_paths,
                                    path_guard=path_guard)
        except (NoConvergence, StepFailure, SingularityApproached):
            if prev is None or halvings >= max_halvings:
                status = "truncated"
                break
            halvings += 1
            grid.insert(0, 0.5 * (prev[0] + E))
            continue
        halvings = 0
        energies.append(orb.energy)
        points.append(orb.turning_point)
        fars.append(orb.far_point)
        halfs.append(orb.half_period)
        resid.append(orb.residual)
        orbits.append(orb)
        prev = (orb.energy, orb.turning_point, orb.half_period)
    gen = Generator(
        r_eq=r_eq, branch=branch,
        energies=np.array(energies), turning_points=np.array(points).reshape(-1, 2),
        far_points=np.array(fars).reshape(-1, 2),
        half_periods=np.array(halfs), residuals=np.array(resid), status=status)
    if store_paths:
        gen.orbits = orbits
    return gen


def _segment_intersections(pa, pb):
    """All intersection points between two polylines, with segment indices.

    Vectorized orientation tests over every segment pair; returns a list of
    (point, ia, sa, ib, sb) with segment-local parameters in [0, 1].
    """
    if len(pa) < 2 or len(pb) < 2:
        return []
    a0 = pa[:-1][:, None, :]
    a1 = pa[1:][:, None, :]
    b0 = pb[None, :-1, :]
    b1 = pb[None, 1:, :]
    da = a1 - a0
    db = b1 - b0
    denom = da[..., 0] * db[..., 1] - da[..., 1] * db[..., 0]
    diff = b0 - a0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (diff[..., 0] * db[..., 1] - diff[..., 1] * db[..., 0]) / denom
        u = (diff[..., 0] * da[..., 1] - diff[..., 1] * da[..., 0]) / denom
    hit = (np.abs(denom) > 1e-14) & (s >= 0.0) & (s <= 1.0) & (u >= 0.0) & (u <= 1.0)
    out = []
    for ia, ib in np.argwhere(hit):
        pt = pa[ia] + s[ia, ib] * (pa[ia + 1] - pa[ia])
        out.append((pt, int(ia), float(s[ia, ib]), int(ib), float(u[ia, ib])))
    return out


@dataclass
class SharedTurningPoint:
    """A refined common turning point of two mode families."""

    point: np.ndarray
    mirror_point: np.ndarray
    eq_a: np.ndarray
    eq_b: np.ndarray
    half_period_a: float
    half_period_b: float
    energy_a: float
    energy_b: float
    residual: float


def _refine_shared_point(P0, Ta0, Tb0, pa, pb, params, tol=1e-10, max_iter=30,
                         rtol=SHOOT_RTOL, atol=SHOOT_ATOL,
                         path_guard=DEFAULT_PATH_GUARD):
    """Newton solve: P is a rest-to-rest endpoint for both equilibria.

    Unknowns (P, T_a, T_b); residuals are the four joint velocities after
    integrating from rest at P under each spring equilibrium.
    """
    ppa = pack_params(pa)
    ppb = pack_params(pb)
    guard = path_guard
    z = np.array([P0[0], P0[1], Ta0, Tb0])

    def batch(z):
        P = z[:2]
        Y0 = np.array([
            [P[0], P[1], 0.0, 0.0],
            [P[0] + FD_STEP, P[1], 0.0, 0.0],
            [P[0], P[1] + FD_STEP, 0.0, 0.0],
        ])
        Ya, sa = _propagate_batch(Y0, z[2], rtol, atol, ppa, guard, 2_000_000)
        Yb, sb = _propagate_batch(Y0, z[3], rtol, atol, ppb, guard, 2_000_000)
        if np.any(sa != STATUS_OK) or np.any(sb != STATUS_OK):
            return None
        return Ya, Yb

    res_norm = np.inf
    for it in range(max_iter):
        got = batch(z)
        if got is None:
            raise NoConvergence("integration failed while refining intersection",
                                residual=res_norm, iterations=it)
        Ya, Yb = got
        res = np.array([Ya[0, 2], Ya[0, 3], Yb[0, 2], Yb[0, 3]])
        res_norm = np.linalg.norm(res)
        if res_norm < tol:
            break
        J = np.zeros((4, 4))
        J[0:2, 0] = (Ya[1, 2:4] - Ya[0, 2:4]) / FD_STEP
        J[0:2, 1] = (Ya[2, 2:4] - Ya[0, 2:4]) / FD_STEP
        J[2:4, 0] = (Yb[1, 2:4] - Yb[0, 2:4]) / FD_STEP
        J[2:4, 1] = (Yb[2, 2:4] - Yb[0, 2:4]) / FD_STEP
        out = np.empty(4)
        _rhs(Ya[0], ppa, out)
        J[0:2, 2] = out[2:4]
        _rhs(Yb[0], ppb, out)
        J[2:4, 3] = out[2:4]
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Jacobian refining intersection",
                                residual=res_norm, iterations=it) from exc
        lam = 1.0
        improved = False
        while lam > 1e-3:
            z_try = z + lam * step
            if z_try[2] > 0 and z_try[3] > 0:
                got = batch(z_try)
                if got is not None:
                    Ya_t, Yb_t = got
                    rn = np.linalg.norm([Ya_t[0, 2], Ya_t[0, 3],
                                         Yb_t[0, 2], Yb_t[0, 3]])
                    if rn < res_norm:
                        improved = True
                        break
            lam *= 0.5
        if not improved:
            raise NoConvergence("line search stalled refining intersection",
                                residual=res_norm, iterations=it)
        z = z + lam * step
    else:
        raise NoConvergence("intersection refinement did not converge",
                            residual=res_norm, iterations=max_iter)
    got = batch(z)
    Ya, Yb = got
    far_a = Ya[0, :2]
    P = z[:2]
    return SharedTurningPoint(
        point=P.copy(), mirror_point=far_a.copy(),
        eq_a=pa.r_eq.copy(), eq_b=pb.r_eq.copy(),
        half_period_a=float(z[2]), half_period_b=float(z[3]),
        energy_a=float(dyn.potential_energy(P, pa)),
        energy_b=float(dyn.potential_energy(P, pb)),
        residual=float(np.linalg.norm([Ya[0, 2], Ya[0, 3], Yb[0, 2], Yb[0, 3]])))


def intersect_generators(gen_a: Generator, gen_b: Generator,
                         params: ModelParams, refine=True, dedup_tol=1e-4,
                         path_guard=DEFAULT_PATH_GUARD):
    """Shared turning points of two generator families.

    Intersects both sub-curves (traced and mirrored) of each family,
    refines every geometric hit by local re-shooting under both equilibria,
    and deduplicates points that coincide within dedup_tol (mirror-image
    pairs count as one).
    """
    if np.allclose(gen_a.r_eq, gen_b.r_eq, atol=1e-12):
        raise ValueError("generators from identical equilibria overlap in a "
                         "continuum; intersection requires distinct equilibria")
    pa = params.with_equilibrium(gen_a.r_eq)
    pb = params.with_equilibrium(gen_b.r_eq)
    curves_a = [(gen_a.turning_points, gen_a.half_periods)]
    curves_b = [(gen_b.turning_points, gen_b.half_periods)]
    if gen_a.branch == "g_perp":
        curves_a.append((gen_a.mirror_turning_points, gen_a.half_periods))
    if gen_b.branch == "g_perp":
        curves_b.append((gen_b.mirror_turning_points, gen_b.half_periods))

    found = []
    for pts_a, Ta in curves_a:
        for pts_b, Tb in curves_b:
            for pt, ia, sa, ib, sb in _segment_intersections(pts_a, pts_b):
                Ta0 = Ta[ia] * (1 - sa) + Ta[ia + 1] * sa
                Tb0 = Tb[ib] * (1 - sb) + Tb[ib + 1] * sb
                if refine:
                    try:
                        sp = _refine_shared_point(pt, Ta0, Tb0, pa, pb, params,
                                                  path_guard=path_guard)
                    except (NoConvergence, SingularityApproached, StepFailure):
                        continue
                else:
                    sp = SharedTurningPoint(
                        point=pt.copy(),
                        mirror_point=mirror_across_diagonal(pt),
                        eq_a=pa.r_eq.copy(), eq_b=pb.r_eq.copy(),
                        half_period_a=float(Ta0), half_period_b=float(Tb0),
                        energy_a=float(dyn.potential_energy(pt, pa)),
                        energy_b=float(dyn.potential_energy(pt, pb)),
                        residual=np.nan)
                found.append(sp)

    kept = []
    for sp in found:
        cand = (sp.point, mirror_across_diagonal(sp.point))
        dup = False
        for other in kept:
            if (np.linalg.norm(cand[0] - other.point) < dedup_tol
                    or np.linalg.norm(cand[1] - other.point) < dedup_tol):
                dup = True
                break
        if not dup:
            kept.append(sp)
    return kept


@dataclass
class NnmGait:
    """Two-mode switching gait built on a shared pair of turning points."""

    eq_a: np.ndarray
    eq_b: np.ndarray
    turning_point: np.ndarray
    mirror_point: np.ndarray
    half_period_a: float
    half_period_b: float
    energy_a: float
    energy_b: float
    switch_energy: float
    period: float
    displacement: float = np.nan
    net_rotation: float = np.nan
    arc_length: float = np.nan
    residual: float = np.nan

    @property
    def v_avg(self):
        return self.displacement / self.period

    def as_dict(self):
        return {
            "eq_a": list(map(float, self.eq_a)),
            "eq_b": list(map(float, self.eq_b)),
            "turning_point": list(map(float, self.turning_point)),
            "mirror_point": list(map(float, self.mirror_point)),
            "half_period_a": self.half_period_a,
            "half_period_b": self.half_period_b,
            "energy_a": self.energy_a,
            "energy_b": self.energy_b,
            "switch_energy": self.switch_energy,
            "period": self.period,
            "displacement": self.displacement,
            "net_rotation": self.net_rotation,
            "arc_length": self.arc_length,
            "residual": self.residual,
        }


def build_gait(shared: SharedTurningPoint, params: ModelParams):
    """Assemble an NnmGait record (switch cost, period) from a shared point."""
    from .efficiency import switch_energy

    _, per_period = switch_energy(shared.point, shared.eq_a, shared.eq_b, params)
    return NnmGait(
        eq_a=shared.eq_a.copy(), eq_b=shared.eq_b.copy(),
        turning_point=shared.point.copy(), mirror_point=shared.mirror_point.copy(),
        half_period_a=shared.half_period_a, half_period_b=shared.half_period_b,
        energy_a=shared.energy_a, energy_b=shared.energy_b,
        switch_energy=per_period,
        period=shared.half_period_a + shared.half_period_b,
        residual=shared.residual)


def evaluate_gait_displacement(gait: NnmGait, params: ModelParams):
    """Simulate one switching period and fill in world-motion figures."""
    from .sim import run_switching_gait

    traj, events = run_switching_gait(gait, 1, params)
    gait.displacement = traj.net_displacement()
    gait.net_rotation = traj.net_rotation()
    gait.arc_length = traj.arc_length()
    return traj


def enumerate_nnm_gaits(sample_count, params: ModelParams,
                        range_on_D=(0.21, 1.3), energy_range=(2e-3, 2.0),
                        n_energy=36, dedup_tol=1e-4, evaluate=True,
                        refine=True, progress=None,
                        path_guard=DEFAULT_PATH_GUARD):
    """Scan equilibria on D, intersect all generator pairs, build gaits.

    Returns (gaits, generators, failures); failures is a list of
    (description, exception string) for items that were skipped.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    a_vals = np.linspace(range_on_D[0], range_on_D[1], int(sample_count))
    generators = []
    failures = []
    for idx, a in enumerate(a_vals):
        try:
            gen = trace_generator(diagonal_point(a), "g_perp", params,
                                  energy_range=energy_range, n_steps=n_energy,
                                  path_guard=path_guard)
        except SnakeModesError as exc:
            failures.append((f"generator a={a:.6f}", str(exc)))
            gen = None
        generators.append(gen)
        if progress is not None:
            progress("generator", idx + 1, len(a_vals))

    gaits = []
    n = len(a_vals)
    total_pairs = n * (n - 1) // 2
    done = 0
    for i in range(n):
        gi = generators[i]
        if gi is None or len(gi) < 2:
            continue
        # bounding boxes let distant pairs be skipped cheaply
        pts_i = np.vstack([gi.turning_points, gi.mirror_turning_points])
        lo_i, hi_i = pts_i.min(axis=0), pts_i.max(axis=0)
        for j in range(i + 1, n):
            done += 1
            gj = generators[j]
            if gj is None or len(gj) < 2:
                continue
            pts_j = np.vstack([gj.turning_points, gj.mirror_turning_points])
            lo_j, hi_j = pts_j.min(axis=0), pts_j.max(axis=0)
            if np.any(lo_i > hi_j) or np.any(lo_j > hi_i):
                continue
            try:
                shared = intersect_generators(gi, gj, params, refine=refine,
                                              dedup_tol=dedup_tol,
                                              path_guard=path_guard)
            except SnakeModesError as exc:
                failures.append((f"pair ({i},{j})", str(exc)))
                continue
            for sp in shared:
                gaits.append(build_gait(sp, params))
            if progress is not None and done % 500 == 0:
                progress("pairs", done, total_pairs)

    # global dedup across pairs (rare near-tangent duplicates)
    unique = []
    for g in gaits:
        dup = False
        for other in unique:
            if (np.allclose(g.eq_a, other.eq_a) and np.allclose(g.eq_b, other.eq_b)
                    and (np.linalg.norm(g.turning_point - other.turning_point)
                         < dedup_tol
                         or np.linalg.norm(
                             mirror_across_diagonal(g.turning_point)
                             - other.turning_point) < dedup_tol)):
                dup = True
                break
        if not dup:
            unique.append(g)
    gaits = unique

    if evaluate:
        ok = []
        for idx, g in enumerate(gaits):
            try:
                evaluate_gait_displacement(g, params)
                ok.append(g)
            except SnakeModesError as exc:
                failures.append((f"gait {idx}", str(exc)))
            if progress is not None and (idx + 1) % 100 == 0:
                progress("evaluate", idx + 1, len(gaits))
        gaits = ok
    return gaits, generators, failures


def export_generators(generators, path):
    data = [g.as_dict() for g in generators if g is not None]
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def export_gaits(gaits, path):
    data = [g.as_dict() for g in gaits]
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def load_gaits(path):
    data = json.loads(Path(path).read_text())
    out = []
    for d in data:
        out.append(NnmGait(
            eq_a=np.array(d["eq_a"]), eq_b=np.array(d["eq_b"]),
            turning_point=np.array(d["turning_point"]),
            mirror_point=np.array(d["mirror_point"]),
            half_period_a=d["half_period_a"], half_period_b=d["half_period_b"],
            energy_a=d["energy_a"], energy_b=d["energy_b"],
            switch_energy=d["switch_energy"], period=d["period"],
            displacement=d.get("displacement", np.nan),
            net_rotation=d.get("net_rotation", np.nan),
            arc_length=d.get("arc_length", np.nan),
            residual=d.get("residual", np.nan)))
    return out
