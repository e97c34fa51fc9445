"""Adaptive Runge-Kutta driver tests against closed forms and scipy."""
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from snakemodes.errors import StepFailure
from snakemodes.integrate import hermite_eval, integrate_ode


def test_linear_oscillator_closed_form():
    w = 2.3

    def f(t, y):
        return np.array([y[1], -w * w * y[0]])

    sol = integrate_ode(f, (0.0, 7.0), np.array([1.0, 0.0]),
                        rtol=1e-11, atol=1e-13)
    assert abs(sol.y_end[0] - np.cos(w * 7.0)) < 1e-8
    assert abs(sol.y_end[1] + w * np.sin(w * 7.0)) < 1e-8


def test_matches_scipy_on_nonlinear_system():
    def f(t, y):
        return np.array([y[1], -np.sin(y[0]) - 0.1 * y[1] ** 3])

    y0 = np.array([1.2, 0.0])
    mine = integrate_ode(f, (0.0, 12.0), y0, rtol=1e-10, atol=1e-12)
    ref = solve_ivp(f, (0.0, 12.0), y0, rtol=1e-12, atol=1e-14,
                    method="DOP853")
    assert np.abs(mine.y_end - ref.y[:, -1]).max() < 1e-8


def test_tolerance_tightening_converges():
    def f(t, y):
        return np.array([y[1], -np.sin(y[0])])

    y0 = np.array([2.0, 0.1])
    ref = integrate_ode(f, (0.0, 10.0), y0, rtol=1e-13, atol=1e-14).y_end
    errs = []
    for rtol in (1e-6, 1e-8, 1e-10):
        sol = integrate_ode(f, (0.0, 10.0), y0, rtol=rtol, atol=rtol * 1e-2)
        errs.append(np.abs(sol.y_end - ref).max())
    assert errs[1] < errs[0]
    assert errs[2] < errs[1]


def test_t_eval_exact_times():
    f = lambda t, y: np.array([np.cos(t)])
    ts = np.linspace(0.0, 3.0, 7)
    sol = integrate_ode(f, (0.0, 3.0), np.zeros(1), t_eval=ts,
                        rtol=1e-11, atol=1e-13)
    assert np.allclose(sol.t, ts, atol=1e-12)
    assert np.abs(sol.y[:, 0] - np.sin(ts)).max() < 1e-9


def test_batched_states_match_individual():
    def f(t, y):
        out = np.empty_like(y)
        out[..., 0] = y[..., 1]
        out[..., 1] = -y[..., 0] - 0.3 * y[..., 1]
        return out

    Y0 = np.array([[1.0, 0.0], [0.8, 0.3], [0.2, -0.4]])
    batch = integrate_ode(f, (0.0, 5.0), Y0, rtol=1e-10, atol=1e-12)
    for i in range(3):
        single = integrate_ode(f, (0.0, 5.0), Y0[i], rtol=1e-11, atol=1e-13)
        assert np.abs(batch.y_end[i] - single.y_end).max() < 1e-7


def test_guard_stops_integration():
    # the guard is a stopping check at accepted steps, so localization is
    # only as fine as the step size
    f = lambda t, y: np.array([1.0])
    sol = integrate_ode(f, (0.0, 10.0), np.zeros(1), max_step=0.05,
                        guard=lambda t, y: 2.0 - y[0])
    assert sol.status == "guard"
    assert 2.0 <= sol.y_end[0] < 2.1
    assert sol.t_end < 10.0


def test_step_failure_on_finite_time_blowup():
    f = lambda t, y: np.array([y[0] ** 2])
    with pytest.raises(StepFailure):
        integrate_ode(f, (0.0, 3.0), np.array([1.0]), rtol=1e-8, atol=1e-10,
                      max_steps=20000)


def test_hermite_interpolation_on_cubic():
    # exact for polynomials up to degree three
    poly = lambda t: 2 * t**3 - t**2 + 0.5 * t - 1
    dpoly = lambda t: 6 * t**2 - 2 * t + 0.5
    t0, t1 = 0.3, 1.1
    for t in np.linspace(t0, t1, 9):
        v = hermite_eval(t, t0, poly(t0), dpoly(t0), t1, poly(t1), dpoly(t1))
        assert abs(v - poly(t)) < 1e-12


def test_fast_kernel_driver_matches_python_driver():
    from snakemodes import _fast
    from snakemodes import dynamics as dyn
    from snakemodes.params import ModelParams

    p = ModelParams(r_eq=np.array([0.3, -0.3]))
    pp = _fast.pack_params(p)
    y0 = np.array([0.45, -0.18, 0.0, 0.2])
    ye, st, _ = _fast._propagate(y0, 6.0, 1e-11, 1e-13, pp, 1e-9, 10**6)
    assert st == _fast.STATUS_OK
    f = lambda t, y: dyn.shape_rhs(y, np.zeros(2), p)
    ref = integrate_ode(f, (0.0, 6.0), y0, rtol=1e-11, atol=1e-13)
    assert np.abs(ye - ref.y_end).max() < 1e-8
