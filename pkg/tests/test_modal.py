"""Brake-orbit shooting, generator continuation, intersections, gaits."""
import json

import numpy as np
import pytest

from snakemodes import dynamics as dyn
from snakemodes import modal
from snakemodes.params import ModelParams
from snakemodes.sim import simulate

P = ModelParams()
U_D = np.array([1.0, -1.0]) / np.sqrt(2.0)
U_N = np.array([1.0, 1.0]) / np.sqrt(2.0)


class TestLinearModes:
    def test_frequencies_positive_and_orthonormal(self):
        modes = modal.linear_modes(modal.diagonal_point(0.6), P)
        assert all(om > 0 for om, _ in modes)
        M = dyn.reduced_mass_matrix(modal.diagonal_point(0.6), P)
        V = np.column_stack([v for _, v in modes])
        gram = V.T @ M @ V
        assert np.abs(gram - np.eye(2)).max() < 1e-12

    def test_diagonal_equilibrium_mode_directions(self):
        om_perp, v_perp = modal.branch_direction(modal.diagonal_point(0.6), P,
                                                 "g_perp")
        om_par, v_par = modal.branch_direction(modal.diagonal_point(0.6), P,
                                               "g_par")
        assert abs(abs(v_perp @ U_N) - 1.0) < 1e-12
        assert abs(abs(v_par @ U_D) - 1.0) < 1e-12
        assert om_par > om_perp

    def test_small_amplitude_period_matches_linearization(self):
        for branch in ("g_perp", "g_par"):
            om, _ = modal.branch_direction(modal.diagonal_point(0.6), P,
                                           branch)
            orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), branch,
                                            1e-5, P, store_path=False)
            assert abs(orbit.half_period - np.pi / om) / (np.pi / om) < 0.01


class TestShootBrakeOrbit:
    def test_low_energy_limit_along_eigenvector(self):
        r_eq = modal.diagonal_point(0.6)
        _, v = modal.branch_direction(r_eq, P, "g_perp")
        orbit = modal.shoot_brake_orbit(r_eq, "g_perp", 1e-6, P,
                                        store_path=False)
        dp = orbit.turning_point - r_eq
        dp /= np.linalg.norm(dp)
        assert min(np.abs(dp - v).max(), np.abs(dp + v).max()) < 1e-3

    def test_energy_condition_and_residual(self):
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                        0.5, P)
        p_eq = P.with_equilibrium(orbit.r_eq)
        V = dyn.potential_energy(orbit.turning_point, p_eq)
        assert abs(V - orbit.energy) / orbit.energy < 1e-8
        assert orbit.residual < 1e-9

    def test_resimulation_keeps_turning_velocity_small(self):
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.55), "g_perp",
                                        0.3, P, store_path=False)
        p_eq = P.with_equilibrium(orbit.r_eq)
        y = np.concatenate([orbit.turning_point, np.zeros(2)])
        from snakemodes.sim import propagate_state

        worst = 0.0
        for _ in range(10):
            y = propagate_state(y, p_eq, orbit.half_period,
                                rtol=1e-12, atol=1e-14)
            worst = max(worst, float(np.hypot(y[2], y[3])))
        assert worst < 1e-6

    def test_parallel_modes_are_straight_lines(self):
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_par",
                                        0.5, P)
        dev = orbit.path_r - orbit.r_eq
        off_diag = dev - np.outer(dev @ U_D, U_D)
        assert np.abs(off_diag).max() < 1e-6

    def test_far_point_is_mirror_for_transverse_branch(self):
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.7), "g_perp",
                                        0.8, P, store_path=False)
        mirror = modal.mirror_across_diagonal(orbit.turning_point)
        assert np.abs(orbit.far_point - mirror).max() < 1e-6

    def test_back_and_forth_cycle_has_no_net_displacement(self):
        orbit = modal.shoot_brake_orbit(modal.diagonal_point(0.6), "g_perp",
                                        0.5, P, store_path=False)
        p_eq = P.with_equilibrium(orbit.r_eq)
        traj = simulate((orbit.turning_point, np.zeros(2)), p_eq,
                        2.0 * orbit.half_period, rtol=1e-12, atol=1e-14)
        assert traj.net_displacement() < 1e-6


class TestTraceGenerator:
    def test_starts_orthogonal_to_diagonal(self):
        gen = modal.trace_generator(0.6, "g_perp", P,
                                    energy_range=(1e-4, 0.5), n_steps=12)
        d0 = gen.turning_points[0] - gen.r_eq
        d0 /= np.linalg.norm(d0)
        assert abs(abs(d0 @ U_N) - 1.0) < 1e-3

    def test_continuity_and_energy_order(self):
        gen = modal.trace_generator(0.6, "g_perp", P,
                                    energy_range=(2e-3, 2.0), n_steps=25)
        assert np.all(np.diff(gen.energies) > 0)
        steps = np.linalg.norm(np.diff(gen.turning_points, axis=0), axis=1)
        assert steps.max() < 0.25

    def test_mirror_symmetry_of_subcurves(self):
        # the reflected curve consists of the far turning points
        gen = modal.trace_generator(0.6, "g_perp", P,
                                    energy_range=(2e-3, 1.5), n_steps=15)
        assert np.abs(gen.mirror_turning_points - gen.far_points).max() < 1e-6

    def test_residuals_small(self):
        gen = modal.trace_generator(0.8, "g_perp", P,
                                    energy_range=(2e-3, 1.0), n_steps=10)
        assert gen.residuals.max() < 1e-9


class TestIntersections:
    def test_identical_equilibria_rejected(self):
        gen = modal.trace_generator(0.6, "g_perp", P,
                                    energy_range=(2e-3, 0.5), n_steps=8)
        with pytest.raises(ValueError):
            modal.intersect_generators(gen, gen, P)

    def test_known_intersection_refines_to_shared_turning_point(self):
        g1 = modal.trace_generator(0.6, "g_perp", P,
                                   energy_range=(2e-3, 3.0), n_steps=30,
                                   path_guard=1e-3)
        g2 = modal.trace_generator(0.65, "g_perp", P,
                                   energy_range=(2e-3, 3.0), n_steps=30,
                                   path_guard=1e-3)
        shared = modal.intersect_generators(g1, g2, P, path_guard=1e-3)
        assert len(shared) >= 1
        sp = shared[0]
        assert sp.residual < 1e-9
        # integrate from rest at P under each equilibrium: both come to
        # rest again (shared turning point of both mode families)
        for eq, T in ((sp.eq_a, sp.half_period_a), (sp.eq_b, sp.half_period_b)):
            p_eq = P.with_equilibrium(eq)
            from snakemodes.sim import propagate_state

            y = propagate_state(np.concatenate([sp.point, np.zeros(2)]),
                                p_eq, T, rtol=1e-12, atol=1e-14)
            assert np.hypot(y[2], y[3]) < 1e-6
        mirror = modal.mirror_across_diagonal(sp.point)
        assert np.abs(sp.mirror_point - mirror).max() < 1e-6


class TestEnumerateGaits:
    def test_minimal_scan_produces_valid_gaits(self):
        gaits, gens, failures = modal.enumerate_nnm_gaits(
            3, P, range_on_D=(0.58, 0.68), energy_range=(2e-3, 3.0),
            n_energy=24, evaluate=True, path_guard=1e-3)
        assert len(gaits) >= 1
        for g in gaits:
            assert g.residual < 1e-9
            assert abs(g.net_rotation) < 1e-4
            assert g.displacement > 0
            assert np.isfinite(g.v_avg)
            # D-symmetric pair of switching points
            assert np.abs(modal.mirror_across_diagonal(g.turning_point)
                          - g.mirror_point).max() < 1e-6

    def test_gait_export_roundtrip(self, tmp_path):
        gaits, _, _ = modal.enumerate_nnm_gaits(
            2, P, range_on_D=(0.6, 0.65), energy_range=(2e-3, 3.0),
            n_energy=24, evaluate=False, path_guard=1e-3)
        assert gaits
        out = tmp_path / "gaits.json"
        modal.export_gaits(gaits, out)
        loaded = modal.load_gaits(out)
        assert len(loaded) == len(gaits)
        assert np.allclose(loaded[0].turning_point, gaits[0].turning_point)
        data = json.loads(out.read_text())
        assert "switch_energy" in data[0]
