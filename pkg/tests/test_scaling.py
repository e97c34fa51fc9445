"""Scaling relations and path-integral oracles."""
import numpy as np
import pytest

from snakemodes import dynamics as dyn
from snakemodes import modal, orbits, scaling
from snakemodes.errors import PathTooCoarse
from snakemodes.params import ModelParams
from snakemodes.sim import simulate

P = ModelParams()


class TestScaleGait:
    def test_identity(self):
        out = scaling.scale_gait(2.0, 0.5, 0.25, 1.5, scaling.ParamScaling())
        assert out == (2.0, 0.5, 0.25, 1.5)

    def test_stiffness_quadruple(self):
        T, d, v, E = scaling.scale_gait(2.0, 0.5, 0.25, 1.5,
                                        scaling.ParamScaling(k_ratio=4.0))
        assert T == pytest.approx(1.0)
        assert d == pytest.approx(0.5)
        assert v == pytest.approx(0.5)
        assert E == pytest.approx(6.0)

    def test_group_action(self):
        s1 = scaling.ParamScaling(2.0, 0.5, 3.0)
        s2 = scaling.ParamScaling(1.5, 4.0, 0.25)
        base = (2.0, 0.5, 0.25, 1.5)
        once = scaling.scale_gait(*scaling.scale_gait(*base, s1), s2)
        combined = scaling.scale_gait(*base, s1.compose(s2))
        assert np.allclose(once, combined, rtol=1e-15)

    def test_nnm_resimulation_matches_prediction(self):
        s = scaling.ParamScaling(k_ratio=4.0, m_ratio=0.5, l_ratio=2.0)
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                        0.5, P)
        T_pred, _, _, E_pred = scaling.scale_gait(orbit.half_period, 1.0, 1.0,
                                                  orbit.energy, s)
        p2 = scaling.predicted_params(P, s)
        orbit2 = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                         E_pred, p2)
        assert abs(orbit2.half_period - T_pred) / T_pred < 1e-3
        # shape path is parameter-invariant
        from test_orbits import polyline_hausdorff

        assert polyline_hausdorff(orbit.path_r, orbit2.path_r) < 1e-4


class TestLandauHalfPeriod:
    def test_linear_limit(self):
        om, _ = modal.branch_direction(modal.diagonal_point(0.6), P, "g_perp")
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                        1e-4, P)
        T = scaling.landau_half_period(orbit, P)
        assert abs(T - np.pi / om) / (np.pi / om) < 0.01

    def test_matches_shooting_at_finite_amplitude(self):
        for E in (0.2, 0.5, 1.5):
            orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6),
                                            "g_perp", E, P)
            T = scaling.landau_half_period(orbit, P)
            assert abs(T - orbit.half_period) / orbit.half_period < 1e-3

    def test_scaling_factor(self):
        # the quadrature inherits the l sqrt(m/k) factor exactly
        s = scaling.ParamScaling(k_ratio=3.0, m_ratio=2.0, l_ratio=1.0)
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                        0.4, P)
        T1 = scaling.landau_half_period(orbit, P)
        p2 = scaling.predicted_params(P, s)
        import dataclasses

        orbit2 = dataclasses.replace(orbit, energy=orbit.energy * s.k_ratio)
        T2 = scaling.landau_half_period(orbit2, p2)
        factor = s.l_ratio * np.sqrt(s.m_ratio / s.k_ratio)
        assert T2 / T1 == pytest.approx(factor, rel=1e-9)

    def test_path_too_coarse(self):
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                        0.4, P)
        import dataclasses

        sparse = dataclasses.replace(orbit, path_r=orbit.path_r[::200])
        with pytest.raises(PathTooCoarse):
            scaling.landau_half_period(sparse, P)


class TestDisplacementFromPath:
    def test_retraced_path_cancels(self):
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                        0.5, P)
        loop = np.vstack([orbit.path_r, orbit.path_r[::-1]])
        assert abs(scaling.displacement_from_path(loop, P)) < 1e-12

    def test_matches_time_domain_integral(self):
        found = orbits.find_nbo_poincare(1.0, 1.4, P)
        oval = [o for o in found if o.displacement > 1e-3][0]
        p_eq = P.with_equilibrium(oval.r_eq)
        ts = np.linspace(0.0, oval.period, 4001)
        traj = simulate((oval.r0, oval.dr0), p_eq, oval.period, t_eval=ts)
        A, _ = dyn._connection_raw(traj.r, p_eq)
        xi_x = -np.einsum("nj,nj->n", A[:, 0, :], traj.dr)
        from scipy.integrate import simpson

        bvi_time = simpson(xi_x, x=traj.t)
        bvi_path = scaling.displacement_from_path(traj.r, p_eq)
        assert abs(bvi_path - bvi_time) < 1e-6

    def test_linear_in_link_length(self):
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                        0.5, P)
        p2 = P.rescaled(l_ratio=2.0)
        d1 = scaling.displacement_from_path(orbit.path_r, P)
        d2 = scaling.displacement_from_path(orbit.path_r, p2)
        assert d2 == pytest.approx(2.0 * d1, rel=1e-12)

    def test_too_few_points(self):
        with pytest.raises(PathTooCoarse):
            scaling.displacement_from_path(np.array([[0.5, -0.5],
                                                     [0.6, -0.4]]), P)


class TestPathInvarianceUnderScaling:
    def test_nbo_figures_transform_as_predicted(self):
        s = scaling.ParamScaling(k_ratio=4.0, m_ratio=0.5, l_ratio=2.0)
        found = orbits.find_nbo_poincare(1.0, 1.4, P)
        oval = [o for o in found if o.displacement > 1e-3][0]
        T_pred, d_pred, v_pred, E_pred = scaling.scale_gait(
            oval.period, oval.displacement, oval.v_avg, oval.energy, s)
        p2 = scaling.predicted_params(P, s)
        found2 = orbits.find_nbo_poincare(E_pred, 1.4, p2)
        oval2 = [o for o in found2 if o.displacement > 1e-3][0]
        assert abs(oval2.period - T_pred) / T_pred < 1e-3
        assert abs(oval2.displacement - d_pred) / d_pred < 1e-3
        from test_orbits import polyline_hausdorff

        assert polyline_hausdorff(oval.path_r, oval2.path_r) < 1e-4
