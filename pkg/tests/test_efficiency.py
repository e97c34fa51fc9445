"""Cost of transport, switch energy, friction model, gait evaluations."""
import numpy as np
import pytest

from snakemodes import dynamics as dyn
from snakemodes import efficiency as eff
from snakemodes import orbits
from snakemodes.errors import ZeroDisplacement
from snakemodes.params import FrictionParams, ModelParams
from snakemodes.sim import Trajectory, simulate

P = ModelParams()
FP = FrictionParams()


@pytest.fixture(scope="module")
def oval():
    found = orbits.find_nbo_poincare(1.0, 1.4, P)
    return [o for o in found if o.displacement > 1e-3][0]


class TestCot:
    def test_zero_energy(self):
        assert eff.cot(0.0, 1.0, P) == 0.0

    def test_direct_substitution(self):
        # 1 J over 1 m with 3 kg at 9.81 m/s^2
        assert eff.cot(1.0, 1.0, P) == pytest.approx(0.03398, abs=5e-6)

    def test_zero_displacement_rejected(self):
        with pytest.raises(ZeroDisplacement):
            eff.cot(1.0, 0.0, P)

    def test_conservative_nbo_is_free(self, oval):
        ev = eff.evaluate_nbo(oval, P)
        assert ev.loss_model == "conservative"
        assert ev.e_req == 0.0
        assert ev.cot == 0.0
        assert ev.check(P)


class TestSwitchEnergy:
    def test_no_switch_no_cost(self):
        dv, per = eff.switch_energy(np.array([0.2, -0.2]),
                                    np.array([0.1, -0.1]),
                                    np.array([0.1, -0.1]), P)
        assert np.allclose(dv, 0.0)
        assert per == 0.0

    def test_direct_substitution(self):
        # k=10, alpha=0.2, equilibrium 0 -> 0.6 in the first joint
        dv, per = eff.switch_energy(np.array([0.2, 0.0]),
                                    np.array([0.0, 0.0]),
                                    np.array([0.6, 0.0]), P)
        assert dv[0] == pytest.approx(0.5 * 10 * (0.16 - 0.04), abs=1e-12)
        assert dv[0] == pytest.approx(0.6, abs=1e-12)


class TestQuadrature:
    def test_zero_torque_zero_energy(self):
        t = np.linspace(0, 1, 101)
        tau = np.zeros((101, 2))
        dr = np.ones((101, 2))
        assert eff.absolute_work_from_samples(t, tau, dr) == 0.0

    def test_kink_split_is_exact_for_sawtooth(self):
        # |sin| over one period: integral is 4
        t = np.linspace(0, 2 * np.pi, 20001)
        g = np.sin(t)[:, None]
        val = eff.absolute_work_from_samples(t, g, np.ones_like(g))
        assert val == pytest.approx(4.0, rel=1e-7)

    def test_adaptive_halving_converges(self):
        gait = eff.EllipticalGait(center=1.2, axis_on_d=0.9, axis_normal=0.8)
        T = 8.0

        def power(t):
            tau, r, dr = eff.baseline_torques(gait, t, T, P)
            return tau * dr

        val, err = eff.absolute_work_adaptive(power, T, tol=1e-10)
        assert err < 1e-8 * max(1.0, val)

    def test_baseline_energy_exceeds_net_work(self):
        # absolute-power counting overestimates |net work|
        gait = eff.EllipticalGait()
        T = 10.0
        ts = np.linspace(0, T, 4001)
        tau, r, dr = eff.baseline_torques(gait, ts, T, P)
        e_abs = eff.absolute_work_from_samples(ts, tau, dr)
        net = np.trapezoid((tau * dr).sum(axis=1), ts)
        assert e_abs >= abs(net)
        # rigid-snake drive over a closed cycle does no net work
        assert abs(net) < 1e-6 * e_abs


class TestFrictionModel:
    def test_rest_gives_zero(self):
        tau = eff.friction_loss_torque(np.array([0.5, -0.5]), np.zeros(2),
                                       FP, P)
        assert np.allclose(tau, 0.0, atol=1e-15)

    def test_damping_component_direct(self):
        # compensation torque for pure damping at rdot = (1, -1)
        r = np.array([0.5, -0.5])
        dr = np.array([1.0, -1.0])
        fp = FrictionParams(rolling_resistance=0.0, joint_damping=0.023)
        tau_comp = eff.compensation_torque(r, dr, fp, P)
        assert np.allclose(tau_comp, [0.023, -0.023], atol=1e-15)

    def test_loss_power_identity(self, oval):
        # -(tau_f + tau_d) . rdot equals the independently assembled
        # dissipation rate mu sum|v_b| + c |rdot|^2
        p_eq = P.with_equilibrium(oval.r_eq)
        ts = np.linspace(0, oval.period, 301)
        traj = simulate((oval.r0, oval.dr0), p_eq, oval.period, t_eval=ts)
        tau = eff.friction_loss_torque(traj.r, traj.dr, FP, p_eq)
        p_tau = -np.einsum("ni,ni->n", tau, traj.dr)
        p_direct = eff.dissipated_power(traj.r, traj.dr, FP, p_eq)
        assert np.abs(p_tau - p_direct).max() < 1e-9 * max(p_direct.max(), 1.0)

    def test_zero_friction_costs_nothing(self, oval):
        ev = eff.evaluate_nbo(oval, P, friction=FrictionParams(0.0, 0.0))
        assert ev.e_req == pytest.approx(0.0, abs=1e-12)


class TestEvaluations:
    def test_nbo_with_friction(self, oval):
        ev = eff.evaluate_nbo(oval, P, friction=FP)
        assert ev.loss_model == "friction"
        assert ev.e_req > 0
        assert ev.cot > 0
        assert ev.check(P)

    def test_friction_energy_time_reversal_invariant(self, oval):
        p_eq = P.with_equilibrium(oval.r_eq)
        ts = np.linspace(0, oval.period, 2001)
        traj = simulate((oval.r0, oval.dr0), p_eq, oval.period, t_eval=ts)
        fwd = eff.absolute_work_from_samples(
            traj.t, eff.compensation_torque(traj.r, traj.dr, FP, p_eq),
            traj.dr)
        traj_b = simulate((traj.r[-1], -traj.dr[-1]), p_eq, oval.period,
                          t_eval=ts)
        bwd = eff.absolute_work_from_samples(
            traj_b.t, eff.compensation_torque(traj_b.r, traj_b.dr, FP, p_eq),
            traj_b.dr)
        assert bwd == pytest.approx(fwd, rel=1e-6)

    def test_rolling_cost_depends_on_path_not_speed(self):
        # same shape path traversed at two speeds: pure rolling resistance
        # charges the same energy per cycle
        fp = FrictionParams(rolling_resistance=0.03, joint_damping=0.0)
        gait = eff.EllipticalGait()

        def synthetic(T, n=4001):
            ts = np.linspace(0, T, n)
            r, dr, _ = gait.kinematics(ts, T)
            pose = np.zeros((n, 3))
            return Trajectory(ts, r, dr, pose, np.zeros(n),
                              np.zeros((n, 2)), P)

        e1 = eff.absolute_work_from_samples(
            synthetic(5.0).t,
            eff.compensation_torque(synthetic(5.0).r, synthetic(5.0).dr, fp, P),
            synthetic(5.0).dr)
        e2 = eff.absolute_work_from_samples(
            synthetic(20.0).t,
            eff.compensation_torque(synthetic(20.0).r, synthetic(20.0).dr, fp, P),
            synthetic(20.0).dr)
        assert e2 == pytest.approx(e1, rel=1e-6)

    def test_baseline_conservative_scales_quadratically(self):
        gait = eff.EllipticalGait(center=1.2, axis_on_d=0.9, axis_normal=0.8)
        ev1 = eff.evaluate_baseline(gait, 0.05, P)
        ev2 = eff.evaluate_baseline(gait, 0.1, P)
        assert ev2.cot / ev1.cot == pytest.approx(4.0, rel=1e-3)
        assert ev1.check(P) and ev2.check(P)

    def test_baseline_displacement_independent_of_speed(self):
        gait = eff.EllipticalGait()
        ev1 = eff.evaluate_baseline(gait, 0.1, P)
        ev2 = eff.evaluate_baseline(gait, 0.4, P)
        assert ev1.d == pytest.approx(ev2.d, rel=1e-12)
        assert ev1.T == pytest.approx(4.0 * ev2.T, rel=1e-12)

    def test_evaluation_csv(self, tmp_path, oval):
        evs = [eff.evaluate_nbo(oval, P),
               eff.evaluate_nbo(oval, P, friction=FP)]
        out = tmp_path / "eval.csv"
        eff.write_evaluations(evs, out)
        lines = out.read_text().strip().splitlines()
        assert lines[0].split(",") == eff.EVALUATION_HEADER
        assert len(lines) == 3

    def test_evaluate_with_friction_on_trajectory(self, oval):
        p_eq = P.with_equilibrium(oval.r_eq)
        ts = np.linspace(0, oval.period, 2001)
        traj = simulate((oval.r0, oval.dr0), p_eq, oval.period, t_eval=ts)
        ev = eff.evaluate_with_friction(traj, FP, P, gait_type="nbo")
        ref = eff.evaluate_nbo(oval, P, friction=FP, n_samples=2000)
        assert ev.e_req == pytest.approx(ref.e_req, rel=1e-4)
