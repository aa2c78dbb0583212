"""Command-line entry point.

    wsnlife validate SCENARIO
    wsnlife simulate SCENARIO [--policy p1|p2|p3] [--epsilon E[,E...]] [--seed S]
                              [--delta D] [--threshold F] [--out-dir DIR]
    wsnlife sweep-epsilon SCENARIO --epsilon 0.5,1,8 [...]
    wsnlife tpbvp SCENARIO [--out-dir DIR]

Flags override scenario fields, which override built-in defaults.
Exit status: 0 success, 2 parse/validation/config error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, ParseError, ShootingDiverged, ValidationError, WsnError
from .scenario import load_scenario
from .simulation import run_simulation
from .tpbvp import ShootingUnknowns, shoot
from .trace import simulation_summary, write_json, write_sweep, write_tpbvp_trace, write_trace
from .trajectory import RandomWalk

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
DEFAULT_OUT = "wsnlife-out"

log = logging.getLogger("wsnlife")


def _epsilons(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from exc


def _apply_overrides(sc, args):
    pc = sc.sim.policy
    if getattr(args, "policy", None):
        pc = replace(pc, policy=args.policy)
    sim = replace(sc.sim, policy=pc)
    if getattr(args, "delta", None) is not None:
        sim = replace(sim, delta=args.delta)
    if getattr(args, "threshold", None) is not None:
        sim = replace(sim, death_threshold_fraction=args.threshold)
    traj = sc.trajectory
    if getattr(args, "seed", None) is not None:
        if not isinstance(traj, RandomWalk):
            raise ConfigError("--seed only applies to random_walk trajectories")
        traj = RandomWalk(traj.start, traj.step_length, args.seed, traj.step_time)
    return replace(sc, sim=sim, trajectory=traj)


def _out_dir(sc, args):
    d = Path(args.out_dir or sc.output.get("out_dir") or DEFAULT_OUT)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _tag(eps):
    return f"{eps:g}".replace(".", "p")


def _run_one(sc, policy, out, name):
    sim = replace(sc.sim, policy=policy)
    res = run_simulation(sc.topology, sc.energies, sc.trajectory, sc.params, sim)
    write_trace(res, sc.topology.n_nodes, out / f"{name}.csv")
    write_json(simulation_summary(sc, res, policy), out / f"{name}.summary.json")
    return res


def _sweep(sc, eps_list, out):
    rows = []
    for eps in eps_list:
        pc = replace(sc.sim.policy, policy="p2", epsilon=eps)
        res = _run_one(sc, pc, out, f"trace_eps{_tag(eps)}")
        rows.append((eps, res.lifetime, res.termination_reason))
    write_sweep(rows, out / "sweep.csv")
    print(f"{'epsilon':>10}  {'lifetime':>14}  reason")
    for eps, T, reason in rows:
        print(f"{eps:>10g}  {T:>14.6f}  {reason}")
    return rows


def cmd_validate(args):
    sc = load_scenario(args.scenario)
    n = sc.topology.n_nodes
    print(f"{args.scenario}: ok ({n} nodes, base {sc.base}, trajectory "
          f"{type(sc.trajectory).__name__}, policy {sc.sim.policy.policy})")
    return EXIT_OK


def cmd_simulate(args):
    sc = _apply_overrides(load_scenario(args.scenario), args)
    out = _out_dir(sc, args)
    if args.epsilon and len(args.epsilon) > 1:
        _sweep(sc, args.epsilon, out)
        return EXIT_OK
    pc = sc.sim.policy
    if args.epsilon:
        pc = replace(pc, epsilon=args.epsilon[0])
    res = _run_one(sc, pc, out, "trace")
    print(f"T = {res.lifetime:.6f}  ({res.termination_reason}, {res.steps} steps, policy {pc.policy})")
    return EXIT_OK


def cmd_sweep(args):
    sc = _apply_overrides(load_scenario(args.scenario), args)
    eps = args.epsilon or [sc.sim.policy.epsilon]
    _sweep(sc, eps, _out_dir(sc, args))
    return EXIT_OK


def cmd_tpbvp(args):
    sc = load_scenario(args.scenario)
    if not sc.trajectory.parametric:
        raise ConfigError(f"tpbvp needs a parametric trajectory, got {type(sc.trajectory).__name__}")
    out = _out_dir(sc, args)
    opts = dict(sc.tpbvp)
    guess = opts.pop("guess", None)
    if guess is not None:
        guess = ShootingUnknowns(**guess)
    try:
        r = shoot(sc.topology, sc.energies, sc.trajectory, sc.params, guess, **opts)
    except ShootingDiverged as exc:
        b = exc.best
        print(f"shooting diverged: best residual {exc.residual_norm:.3e} at T={b.T:.6f} nu={b.nu:.6f} "
              f"mu_x={b.mu_x:.6f} mu_y={b.mu_y:.6f}", file=sys.stderr)
        write_json({"converged": False, "residual_norm": exc.residual_norm, "T": b.T, "nu": b.nu,
                    "mu_x": b.mu_x, "mu_y": b.mu_y}, out / "tpbvp.summary.json")
        return EXIT_SOLVER
    u = r.unknowns
    write_tpbvp_trace(r.trace, out / "tpbvp.csv")
    write_json({"converged": True, "T": u.T, "nu": u.nu, "mu_x": u.mu_x, "mu_y": u.mu_y,
                "residual": r.residual.tolist(), "residual_norm": r.residual_norm,
                "iterations": r.iterations, "scenario": sc.name}, out / "tpbvp.summary.json")
    print(f"T = {u.T:.6f}  nu = {u.nu:.6f}  mu_x = {u.mu_x:.6f}  mu_y = {u.mu_y:.6f}  "
          f"residual = {r.residual_norm:.3e}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="wsnlife", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, eps_help):
        p.add_argument("scenario")
        p.add_argument("--policy", choices=["p1", "p2", "p3"])
        p.add_argument("--epsilon", type=_epsilons, help=eps_help)
        p.add_argument("--seed", type=int, help="random-walk seed")
        p.add_argument("--delta", type=float, help="time step")
        p.add_argument("--threshold", type=float, help="death threshold as a fraction of initial energy")
        p.add_argument("--out-dir")

    p = sub.add_parser("validate", help="parse and validate a scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run the lifetime simulation")
    common(p, "epsilon for P2; a comma list runs a sweep")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-epsilon", help="P2 lifetime for several epsilon values")
    common(p, "comma-separated epsilon values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tpbvp", help="shooting solve for a known parametric trajectory")
    p.add_argument("scenario")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_tpbvp)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ValidationError, ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WsnError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
