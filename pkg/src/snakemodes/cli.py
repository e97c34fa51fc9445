"""Command-line front end: snake-modes <validate|simulate|find|eval|scale>.

All outputs are plain CSV/JSON so any plotting stack can consume them.
Commands are deterministic for fixed inputs and seeds; per-item failures in
batch commands are recorded in a manifest instead of aborting the run.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import efficiency as eff
from . import fullcoords as fc
from . import modal, orbits, scaling, sim
from .errors import SnakeModesError
from .params import FrictionParams, ModelParams, load_params


def _get_params(args) -> ModelParams:
    if getattr(args, "params", None):
        return load_params(args.params)
    return ModelParams()


def _parse_range(text):
    lo, hi = (float(v) for v in text.split(":"))
    return lo, hi


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def _jobs(args):
    env = os.environ.get("SNAKE_MODES_JOBS")
    if env:
        return max(1, int(env))
    return max(1, getattr(args, "jobs", 1) or 1)


# ---------------------------------------------------------------------------
# validate

def cmd_validate(args):
    params = _get_params(args)
    rng = np.random.default_rng(args.seed)
    checks = []

    def run(name, fn):
        try:
            fn()
            checks.append((name, True, ""))
            print(f"  ok: {name}")
        except Exception as exc:
            checks.append((name, False, str(exc)))
            print(f"FAIL: {name}: {exc}")

    def connection_consistency():
        n = args.samples
        r = rng.uniform(-2.6, 2.6, (4 * n, 2))
        r = r[np.abs(dyn.connection_divisor(r, params)) > 0.05][:n]
        theta = rng.uniform(-np.pi, np.pi)
        A1, _ = dyn._connection_raw(r, params)
        A2 = fc.connection_from_constraints(r, params, theta=theta)
        err = np.abs(A1 - A2).max()
        if err > 1e-10:
            raise AssertionError(f"connection vs constraint null space: {err:.2e}")

    def reduced_vs_dae():
        from .integrate import integrate_ode
        r0 = np.array([0.45, -0.2])
        dr0 = np.array([0.3, -0.1])
        y7 = np.concatenate([r0, dr0, np.zeros(3)])
        traj = sim.simulate((r0, dr0), params, 1.0)
        state0 = fc.reduced_to_full_state(r0, dr0, np.zeros(3), params)
        sol = integrate_ode(lambda t, y: fc.dae_state_rhs(y, np.zeros(2), params),
                            (0.0, 1.0), state0, rtol=1e-10, atol=1e-12)
        qf = sol.y[-1]
        rf = traj.r[-1]
        err = max(np.abs(qf[3:5] - rf).max(),
                  np.abs(qf[:3] - traj.pose[-1]).max())
        if err > 1e-6:
            raise AssertionError(f"reduced vs DAE after 1 s: {err:.2e}")

    def energy_conservation():
        r0 = params.r_eq + np.array([0.12, -0.08])
        traj = sim.simulate((r0, np.zeros(2)), params, 10.0)
        E = traj.energy
        drift = np.abs(E - E[0]).max() / max(abs(E[0]), 1e-12)
        if drift > 1e-6:
            raise AssertionError(f"energy drift {drift:.2e} over 10 s")

    run("connection matches constraint null space", connection_consistency)
    run("reduced flow matches multiplier DAE", reduced_vs_dae)
    run("unactuated energy conservation", energy_conservation)

    failed = [c for c in checks if not c[1]]
    if failed:
        print(f"validation FAILED at: {failed[0][0]}")
        return 1
    print("all validation checks passed")
    return 0


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args):
    params = _get_params(args)
    state = (np.array([args.r1, args.r2]), np.array([args.dr1, args.dr2]))
    traj = sim.simulate(state, params, args.duration, rtol=args.rtol,
                        atol=args.atol)
    out = Path(args.out)
    traj.to_csv(out)
    traj.write_metadata(out.with_suffix(".json"))
    print(f"wrote {out} ({len(traj)} samples) and {out.with_suffix('.json')}")
    return 0


# ---------------------------------------------------------------------------
# find

def _find_generators(args, params):
    lo, hi = _parse_range(args.range)
    e_lo, e_hi = _parse_range(args.energy_range)
    avals = np.linspace(lo, hi, args.samples)
    gens, manifest = [], []
    for a in avals:
        try:
            gen = modal.trace_generator(a, args.branch, params,
                                        energy_range=(e_lo, e_hi),
                                        n_steps=args.energy_steps)
            gens.append(gen)
            manifest.append({"id": f"a={a:.6f}", "status": "ok",
                             "points": len(gen), "curve": gen.status})
        except SnakeModesError as exc:
            manifest.append({"id": f"a={a:.6f}", "status": "error",
                             "error": str(exc)})
    modal.export_generators(gens, args.out)
    return manifest


def _find_gaits(args, params):
    lo, hi = _parse_range(args.range)
    e_lo, e_hi = _parse_range(args.energy_range)
    gaits, gens, failures = modal.enumerate_nnm_gaits(
        args.samples, params, range_on_D=(lo, hi), energy_range=(e_lo, e_hi),
        n_energy=args.energy_steps, evaluate=not args.no_evaluate,
        progress=(lambda what, i, n:
                  print(f"  {what}: {i}/{n}", file=sys.stderr))
        if args.progress else None)
    modal.export_gaits(gaits, args.out)
    manifest = [{"id": fid, "status": "error", "error": msg}
                for fid, msg in failures]
    manifest.append({"id": "summary", "status": "ok", "gaits": len(gaits)})
    print(f"found {len(gaits)} gaits ({len(failures)} item failures)")
    return manifest


def _find_nbo(args, params):
    if args.seed_mode == "ellipse":
        params_eq = params.with_equilibrium(
            np.array([args.req, -args.req]))
        seed, T0 = orbits.energy_consistent_seed(
            args.energy, params_eq, center=args.req,
            axis_on_d=args.axis_d, axis_normal=args.axis_n)
        orbit = orbits.solve_nbo(seed, T0, args.req, params,
                                 period_mode="free")
        found = [orbit]
    else:
        found = orbits.find_nbo_poincare(args.energy, args.req, params)
        found = [o for o in found if o.displacement >= args.min_displacement]
    if not found:
        print("no orbit found")
        return [{"id": "nbo", "status": "error", "error": "no orbit found"}]
    orbits.export_orbits(found, args.out)
    for o in found:
        print(f"orbit: T={o.period:.6f} E={o.energy:.6f} d={o.displacement:.6f} "
              f"min|dr|={o.min_joint_speed:.2e}")
    return [{"id": "nbo", "status": "ok", "count": len(found)}]


def _find_family(args, params):
    found = orbits.find_nbo_poincare(args.energy, args.req, params)
    found = [o for o in found if o.displacement >= args.min_displacement]
    if not found:
        print("no seed orbit found")
        return [{"id": "family", "status": "error", "error": "no seed orbit"}]
    fam = orbits.continue_family(found[0], args.emin, args.emax, args.de,
                                 params)
    orbits.export_family(fam, args.out)
    print(f"family: {len(fam)} orbits, E in "
          f"[{fam.energies.min():.4f}, {fam.energies.max():.4f}], "
          f"low={fam.status_low} high={fam.status_high}")
    return [{"id": "family", "status": "ok", "orbits": len(fam)}]


def cmd_find(args):
    params = _get_params(args)
    dispatch = {
        "nnm-generators": _find_generators,
        "nnm-gaits": _find_gaits,
        "nbo": _find_nbo,
        "nbo-family": _find_family,
    }
    manifest = dispatch[args.what](args, params)
    if args.manifest:
        _write_json(args.manifest, manifest)
    return 0


# ---------------------------------------------------------------------------
# eval

def cmd_eval(args):
    params = _get_params(args)
    friction = FrictionParams(args.rolling, args.damping) \
        if args.loss == "friction" else None
    evaluations = []
    traj_dir = Path(args.traj_dir) if args.traj_dir else None
    if traj_dir:
        traj_dir.mkdir(parents=True, exist_ok=True)

    if args.gaits:
        gaits = modal.load_gaits(args.gaits)
        for i, gait in enumerate(gaits):
            gid = f"nnm-{i:05d}"
            try:
                if not np.isfinite(gait.displacement):
                    traj = modal.evaluate_gait_displacement(gait, params)
                if args.loss == "conservative":
                    ev = eff.evaluate_nnm_gait(gait, params, gait_id=gid)
                else:
                    traj, _ = sim.run_switching_gait(gait, 1, params)
                    ev = eff.evaluate_with_friction(traj, friction, params,
                                                    gait_id=gid,
                                                    gait_type="nnm")
                    ev.e_req += gait.switch_energy
                    ev.cot = eff.cot(ev.e_req, ev.d, params)
                evaluations.append(ev)
                if traj_dir:
                    traj, _ = sim.run_switching_gait(gait, 1, params)
                    traj.to_csv(traj_dir / f"{gid}.csv")
            except SnakeModesError as exc:
                evaluations.append(eff.GaitEvaluation(
                    gait_id=gid, gait_type="nnm", loss_model=args.loss,
                    e_req=np.nan, d=np.nan, T=np.nan, v_avg=np.nan,
                    cot=np.nan, arc_length=np.nan))
                print(f"{gid}: error: {exc}", file=sys.stderr)

    if args.family:
        data = json.loads(Path(args.family).read_text())
        for i, od in enumerate(data["orbits"]):
            gid = f"nbo-{i:05d}"
            try:
                params_eq = params.with_equilibrium(np.array(od["r_eq"]))
                orbit = orbits._measure_orbit(
                    np.array([od["r0"] + od["dr0"]]), od["period"], params_eq,
                    od["residual"])
                ev = eff.evaluate_nbo(orbit, params, friction=friction,
                                      gait_id=gid)
                evaluations.append(ev)
                if traj_dir:
                    ts = np.linspace(0, orbit.period, 2001)
                    traj = sim.simulate((orbit.r0, orbit.dr0), params_eq,
                                        orbit.period, t_eval=ts)
                    traj.to_csv(traj_dir / f"{gid}.csv")
            except SnakeModesError as exc:
                print(f"{gid}: error: {exc}", file=sys.stderr)

    if args.baseline:
        gait = eff.EllipticalGait(center=args.baseline_center,
                                  axis_on_d=args.baseline_axis_d,
                                  axis_normal=args.baseline_axis_n)
        for v in args.velocities:
            gid = f"baseline-v{v:g}"
            ev = eff.evaluate_baseline(gait, v, params, friction=friction,
                                       gait_id=gid)
            evaluations.append(ev)

    eff.write_evaluations(evaluations, args.out)
    print(f"wrote {len(evaluations)} evaluations to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# scale

def cmd_scale(args):
    params = _get_params(args)
    s = scaling.ParamScaling(args.k_ratio, args.m_ratio, args.l_ratio)
    scaled_params = scaling.predicted_params(params, s)
    report = {"k_ratio": args.k_ratio, "m_ratio": args.m_ratio,
              "l_ratio": args.l_ratio, "items": []}

    if args.mode == "nnm":
        orbit = modal.shoot_brake_orbit(
            modal.diagonal_point(args.eq), "g_perp", args.energy, params)
        T_pred, _, _, E_pred = scaling.scale_gait(
            orbit.half_period, 1.0, 1.0, orbit.energy, s)
        orbit2 = modal.shoot_brake_orbit(
            modal.diagonal_point(args.eq), "g_perp", E_pred, scaled_params)
        report["items"].append({
            "type": "nnm", "eq": args.eq, "energy": args.energy,
            "half_period_old": orbit.half_period,
            "half_period_predicted": T_pred,
            "half_period_resimulated": orbit2.half_period,
            "rel_error": abs(orbit2.half_period - T_pred) / T_pred,
        })
    else:
        found = orbits.find_nbo_poincare(args.energy, args.eq, params)
        found = [o for o in found if o.displacement > 1e-3]
        if not found:
            print("no NBO seed found")
            return 1
        o = found[0]
        T_pred, d_pred, v_pred, E_pred = scaling.scale_gait(
            o.period, o.displacement, o.v_avg, o.energy, s)
        found2 = orbits.find_nbo_poincare(E_pred, args.eq, scaled_params)
        found2 = [q for q in found2 if q.displacement > 1e-3 * s.l_ratio]
        o2 = found2[0]
        report["items"].append({
            "type": "nbo", "eq": args.eq, "energy": args.energy,
            "period_old": o.period, "period_predicted": T_pred,
            "period_resimulated": o2.period,
            "displacement_old": o.displacement,
            "displacement_predicted": d_pred,
            "displacement_resimulated": o2.displacement,
            "rel_error_T": abs(o2.period - T_pred) / T_pred,
            "rel_error_d": abs(o2.displacement - d_pred) / d_pred,
        })
    _write_json(args.out, report)
    worst = max(it.get("rel_error", it.get("rel_error_T", 0.0))
                for it in report["items"])
    print(f"scale report written to {args.out}; worst relative error {worst:.2e}")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="snake-modes",
        description="Gait synthesis and efficiency evaluation for the "
                    "elastic kinematic snake")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="key-value model parameter file")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomized spot checks")
    common.add_argument("--jobs", type=int, default=1,
                        help="parallel workers (env SNAKE_MODES_JOBS overrides)")

    p = sub.add_parser("validate", parents=[common],
                       help="run model invariant checks")
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("simulate", parents=[common],
                       help="integrate the unactuated model")
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--r2", type=float, required=True)
    p.add_argument("--dr1", type=float, default=0.0)
    p.add_argument("--dr2", type=float, default=0.0)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--rtol", type=float, default=sim.DEFAULT_RTOL)
    p.add_argument("--atol", type=float, default=sim.DEFAULT_ATOL)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("find", parents=[common],
                       help="compute generators, gaits, orbits, families")
    p.add_argument("what", choices=["nnm-generators", "nnm-gaits", "nbo",
                                    "nbo-family"])
    p.add_argument("--range", default="0.21:1.3",
                   help="equilibrium scan range on the diagonal, lo:hi")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--branch", default="g_perp",
                   choices=["g_perp", "g_par"])
    p.add_argument("--energy-range", default="0.002:6.0")
    p.add_argument("--energy-steps", type=int, default=44)
    p.add_argument("--energy", type=float, default=1.0,
                   help="energy level for nbo / seed for nbo-family")
    p.add_argument("--req", type=float, default=1.4,
                   help="spring equilibrium position on the diagonal")
    p.add_argument("--seed-mode", default="poincare",
                   choices=["poincare", "ellipse"])
    p.add_argument("--axis-d", type=float, default=0.2)
    p.add_argument("--axis-n", type=float, default=0.45)
    p.add_argument("--min-displacement", type=float, default=1e-3)
    p.add_argument("--emin", type=float, default=0.3)
    p.add_argument("--emax", type=float, default=12.0)
    p.add_argument("--de", type=float, default=0.25)
    p.add_argument("--no-evaluate", action="store_true")
    p.add_argument("--progress", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.set_defaults(fn=cmd_find)

    p = sub.add_parser("eval", parents=[common],
                       help="evaluate gaits under a loss model")
    p.add_argument("--gaits", help="gait JSON from `find nnm-gaits`")
    p.add_argument("--family", help="family JSON from `find nbo-family`")
    p.add_argument("--baseline", action="store_true",
                   help="evaluate the elliptical baseline gait")
    p.add_argument("--baseline-center", type=float, default=1.2)
    p.add_argument("--baseline-axis-d", type=float, default=0.9)
    p.add_argument("--baseline-axis-n", type=float, default=0.8)
    p.add_argument("--velocities", type=float, nargs="+",
                   default=[0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument("--loss", default="conservative",
                   choices=["conservative", "friction"])
    p.add_argument("--rolling", type=float, default=0.03)
    p.add_argument("--damping", type=float, default=0.023)
    p.add_argument("--traj-dir")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("scale", parents=[common],
                       help="scaling prediction vs re-simulation report")
    p.add_argument("--mode", default="nnm", choices=["nnm", "nbo"])
    p.add_argument("--eq", type=float, default=0.6)
    p.add_argument("--energy", type=float, default=0.5)
    p.add_argument("--k-ratio", type=float, default=4.0)
    p.add_argument("--m-ratio", type=float, default=0.5)
    p.add_argument("--l-ratio", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_scale)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SnakeModesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
