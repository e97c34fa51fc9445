"""Parameter-scaling relations and path-integral oracles.

The joint-space path of a natural gait is invariant under simultaneous
scaling of stiffness, mass and link length; only the traversal time and the
world-frame size change. The closed forms below let gait figures be
predicted at new parameters without re-solving, and the two quadratures
provide independent routes to the half period and the displacement for
testing the simulated values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import dynamics as dyn
from .errors import PathTooCoarse
from .params import ModelParams


@dataclass(frozen=True)
class ParamScaling:
    """Multiplicative parameter change (new / old)."""

    k_ratio: float = 1.0
    m_ratio: float = 1.0
    l_ratio: float = 1.0

    def __post_init__(self):
        if min(self.k_ratio, self.m_ratio, self.l_ratio) <= 0:
            raise ValueError("scaling ratios must be positive")

    def compose(self, other: "ParamScaling") -> "ParamScaling":
        return ParamScaling(self.k_ratio * other.k_ratio,
                            self.m_ratio * other.m_ratio,
                            self.l_ratio * other.l_ratio)


def scale_gait(T, d, v_avg, E, s: ParamScaling):
    """Transform (period, displacement, average speed, energy) under s.

    T scales with l sqrt(m/k), d with l, v with sqrt(k/m), E with k.
    """
    if min(T, d, v_avg, E) < 0:
        raise ValueError("gait figures must be nonnegative")
    f_t = s.l_ratio * np.sqrt(s.m_ratio / s.k_ratio)
    return (T * f_t,
            d * s.l_ratio,
            v_avg * np.sqrt(s.k_ratio / s.m_ratio),
            E * s.k_ratio)


def _path_spline(path_r, min_samples):
    path_r = np.asarray(path_r, dtype=float)
    if path_r.shape[0] < min_samples:
        raise PathTooCoarse(
            f"need at least {min_samples} path samples, got {path_r.shape[0]}")
    seg = np.linalg.norm(np.diff(path_r, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 1e-13])
    path_r = path_r[keep]
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(
        np.diff(path_r, axis=0), axis=1))])
    s = arc / arc[-1]
    return CubicSpline(s, path_r, axis=0)


def landau_half_period(orbit, params: ModelParams, n_quad=160,
                       min_samples=50):
    """Half period of a brake orbit from its path alone.

    One-dimensional energy balance along the fixed joint-space curve gives
    dt = sqrt(r'^T M r' / (2 (E - V))) ds; the inverse-square-root endpoint
    singularities (the turning points) are removed by substituting
    s = sin^2(u) and integrating in u with Gauss-Legendre nodes.

    `orbit` provides path_r (samples from one turning point to the other),
    energy, and r_eq.
    """
    spline = _path_spline(orbit.path_r, min_samples)
    params_eq = params.with_equilibrium(orbit.r_eq)
    E0 = float(orbit.energy)

    u_nodes, u_weights = np.polynomial.legendre.leggauss(int(n_quad))
    u = 0.25 * np.pi * (u_nodes + 1.0)
    w = 0.25 * np.pi * u_weights
    s = np.sin(u) ** 2
    jac = np.sin(2.0 * u)

    r = spline(s)
    rp = spline(s, 1)
    M = dyn.reduced_mass_matrix(r, params_eq, check=False)
    num = np.einsum("ni,nij,nj->n", rp, M, rp)
    V = dyn.potential_energy(r, params_eq)
    denom = 2.0 * np.maximum(E0 - V, 0.0)
    good = denom > 0
    integrand = np.zeros_like(s)
    integrand[good] = np.sqrt(num[good] / denom[good])
    return float(np.sum(w * jac * integrand))


def displacement_from_path(path_r, params: ModelParams, n_quad=8,
                           min_samples=4):
    """Forward body-frame displacement accumulated along a joint-space path.

    Line integral of the longitudinal connection row: d = -int [A(r) dr]_x.
    Exact for any traversal speed of the same path; linear in the link
    length. For a closed circulating path this is the per-period advance of
    the central body along its own axis; a retraced (out-and-back) path
    cancels to zero.
    """
    path_r = np.asarray(path_r, dtype=float)
    if path_r.shape[0] < min_samples:
        raise PathTooCoarse(
            f"need at least {min_samples} path samples, got {path_r.shape[0]}")
    dyn.check_nonsingular(path_r, params)
    # composite Gauss-Legendre on each polyline segment of a spline fit
    seg = np.linalg.norm(np.diff(path_r, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 1e-13])
    path_r = path_r[keep]
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(
        np.diff(path_r, axis=0), axis=1))])
    s_knots = arc / arc[-1]
    spline = CubicSpline(s_knots, path_r, axis=0)
    nodes, weights = np.polynomial.legendre.leggauss(int(n_quad))
    total = 0.0
    for s0, s1 in zip(s_knots[:-1], s_knots[1:]):
        h = 0.5 * (s1 - s0)
        s_mid = 0.5 * (s0 + s1)
        s_eval = s_mid + h * nodes
        r = spline(s_eval)
        rp = spline(s_eval, 1)
        A, _ = dyn._connection_raw(r, params)
        integrand = -np.einsum("nj,nj->n", A[:, 0, :], rp)
        total += h * np.sum(weights * integrand)
    return float(total)


def predicted_params(params: ModelParams, s: ParamScaling) -> ModelParams:
    """ModelParams after the scaling (inertias follow m l^2)."""
    return params.rescaled(k_ratio=s.k_ratio, m_ratio=s.m_ratio,
                           l_ratio=s.l_ratio)
