"""Scenario documents (YAML).

A scenario holds the energy constants, the node table, the source
trajectory and the simulation/policy settings.  Field names follow the
model symbols.  Example::

    name: line3
    energy: {c_s: 0.0001, c_f: 0.05, c_r: 0.05, c_e: 0.0, beta: 2.0}
    base: 2
    nodes:
      - {id: 0, x: 0.0, y: 0.0, range: .inf, energy: 80.0}
      - {id: 1, x: 10.0, y: 0.0, range: .inf, energy: 80.0}
      - {id: 2, x: 20.0, y: 0.0, range: .inf}
    trajectory: {type: stationary, x: 0.0, y: 0.0}
    simulation: {delta: 1.0, threshold: 0.0, max_steps: 1000000}
    policy: {name: p1}

Trajectory types: ``stationary`` (x, y), ``constant_velocity`` (start, vx,
vy), ``circular`` (center, radius, angular_rate, phase), ``random_walk``
(start, step_length, step_time, seed; headings from SplitMix64, see
:mod:`wsnlife.trajectory`) and ``waypoints`` (points as ``[t, x, y]``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from .errors import ParseError, ValidationError
from .model import EnergyParams, Position, Topology
from .policies import POLICIES, PolicyConfig
from .simulation import SimulationConfig
from .trajectory import Circular, ConstantVelocity, RandomWalk, Stationary, Trajectory, Waypoints

POLICY_KEYS = {
    "epsilon": "epsilon",
    "nu_init": "nu_init",
    "nu_damping": "nu_damping",
    "nu_tol": "nu_tol",
    "nu_max_iter": "nu_max_iter",
    "multistart": "multistart_count",
    "pg_max_iter": "pg_max_iter",
    "pg_tol": "pg_tol",
    "seed": "seed",
}
INT_KEYS = {"nu_max_iter", "multistart", "pg_max_iter", "seed", "max_steps", "n_steps", "max_iter"}


@dataclass
class Scenario:
    name: str
    params: EnergyParams
    topology: Topology
    energies: np.ndarray
    trajectory: Trajectory
    sim: SimulationConfig
    tpbvp: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @property
    def base(self):
        return self.topology.base


# -- reading ------------------------------------------------------------------


class _Reader:
    """Collects every problem instead of stopping at the first."""

    def __init__(self):
        self.errors = []

    def fail(self, where, msg):
        self.errors.append(f"{where}: {msg}")

    def number(self, d, key, where, default=None, integer=False, required=False):
        if not isinstance(d, dict) or key not in d or d[key] is None:
            if required:
                self.fail(f"{where}.{key}", "missing")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{where}.{key}", f"expected a number, got {v!r}")
            return default
        if integer:
            if isinstance(v, float) and not v.is_integer():
                self.fail(f"{where}.{key}", "expected an integer")
                return default
            return int(v)
        return float(v)

    def point(self, d, key, where, required=True):
        v = d.get(key) if isinstance(d, dict) else None
        if v is None:
            if required:
                self.fail(f"{where}.{key}", "missing")
            return None
        if not (isinstance(v, (list, tuple)) and len(v) == 2
                and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
            self.fail(f"{where}.{key}", "expected [x, y]")
            return None
        if not all(math.isfinite(c) for c in v):
            self.fail(f"{where}.{key}", "coordinates must be finite")
            return None
        return Position(float(v[0]), float(v[1]))


def _trajectory(rd: _Reader, d):
    where = "trajectory"
    if not isinstance(d, dict):
        rd.fail(where, "missing or not a mapping")
        return None
    kind = d.get("type")
    try:
        if kind == "stationary":
            x = rd.number(d, "x", where, required=True)
            y = rd.number(d, "y", where, required=True)
            return None if None in (x, y) else Stationary(Position(x, y))
        if kind == "constant_velocity":
            p = rd.point(d, "start", where)
            vx = rd.number(d, "vx", where, required=True)
            vy = rd.number(d, "vy", where, required=True)
            return None if None in (p, vx, vy) else ConstantVelocity(p, vx, vy)
        if kind == "circular":
            c = rd.point(d, "center", where)
            r = rd.number(d, "radius", where, required=True)
            w = rd.number(d, "angular_rate", where, required=True)
            ph = rd.number(d, "phase", where, default=0.0)
            return None if None in (c, r, w) else Circular(c, r, w, ph)
        if kind == "random_walk":
            p = rd.point(d, "start", where)
            L = rd.number(d, "step_length", where, required=True)
            st = rd.number(d, "step_time", where, default=1.0)
            seed = rd.number(d, "seed", where, integer=True, required=True)
            if seed is not None and seed < 0:
                rd.fail(f"{where}.seed", "must be >= 0")
                return None
            return None if None in (p, L, seed) else RandomWalk(p, L, seed, st)
        if kind == "waypoints":
            pts = d.get("points")
            if not isinstance(pts, list) or not pts:
                rd.fail(f"{where}.points", "expected a non-empty list of [t, x, y]")
                return None
            out = []
            for k, q in enumerate(pts):
                if not (isinstance(q, list) and len(q) == 3
                        and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in q)):
                    rd.fail(f"{where}.points[{k}]", "expected [t, x, y]")
                    return None
                out.append((float(q[0]), Position(float(q[1]), float(q[2]))))
            return Waypoints(tuple(out))
    except ValueError as exc:
        rd.fail(where, str(exc))
        return None
    rd.fail(f"{where}.type", f"unknown trajectory type {kind!r}")
    return None


def scenario_from_dict(doc) -> Scenario:
    rd = _Reader()
    if not isinstance(doc, dict):
        raise ValidationError(["document: expected a mapping at top level"])

    e = doc.get("energy") or {}
    params = None
    kw = {k: rd.number(e, k, "energy", default=getattr(EnergyParams, k)) for k in
          ("c_s", "c_f", "c_r", "c_e", "beta")}
    try:
        params = EnergyParams(**kw)
    except (TypeError, ValueError) as exc:
        rd.fail("energy", str(exc))

    nodes = doc.get("nodes")
    base = doc.get("base")
    table = {}
    if not isinstance(nodes, list) or not nodes:
        rd.fail("nodes", "expected a non-empty list")
        nodes = []
    for k, nd in enumerate(nodes):
        where = f"nodes[{k}]"
        if not isinstance(nd, dict):
            rd.fail(where, "expected a mapping")
            continue
        nid = rd.number(nd, "id", where, integer=True, required=True)
        x = rd.number(nd, "x", where, required=True)
        y = rd.number(nd, "y", where, required=True)
        rng = rd.number(nd, "range", where, default=math.inf)
        en = rd.number(nd, "energy", where)
        if nid is None:
            continue
        if nid in table:
            rd.fail(where, f"duplicate id {nid}")
            continue
        if rng is not None and rng < 0:
            rd.fail(f"{where}.range", "must be >= 0")
        for c, v in (("x", x), ("y", y)):
            if v is not None and not math.isfinite(v):
                rd.fail(f"{where}.{c}", "must be finite")
        table[nid] = (x, y, rng, en)

    if base is None:
        rd.fail("base", "missing base node")
    elif isinstance(base, bool) or not isinstance(base, int):
        rd.fail("base", f"expected an integer id, got {base!r}")
        base = None
    elif base not in table:
        rd.fail("base", f"base id {base} is not in the node table")
    if table:
        ids = sorted(table)
        if ids != list(range(len(ids))):
            rd.fail("nodes", f"ids must be 0..N without gaps, got {ids}")
        if 0 not in table:
            rd.fail("nodes", "missing source node 0")
        if base is not None and ids and base != ids[-1]:
            rd.fail("base", f"base must be the largest id ({ids[-1]})")
        if base == 0:
            rd.fail("base", "source and base must differ")
        for nid, (_, _, _, en) in table.items():
            if nid == base:
                continue
            if en is None:
                rd.fail(f"nodes[id={nid}].energy", "missing initial energy")
            elif not en > 0:
                rd.fail(f"nodes[id={nid}].energy", f"must be > 0, got {en}")

    arcs = doc.get("arcs")
    if arcs is not None:
        if not isinstance(arcs, list) or not all(
                isinstance(a, list) and len(a) == 2 and all(isinstance(c, int) for c in a) for a in arcs):
            rd.fail("arcs", "expected a list of [i, j] pairs")
            arcs = None
        else:
            for i, j in arcs:
                if i not in table or j not in table:
                    rd.fail("arcs", f"arc {[i, j]} references an undefined node")
                elif j == 0:
                    rd.fail("arcs", f"arc {[i, j]} uses the source as a relay")
                elif i == base:
                    rd.fail("arcs", f"arc {[i, j]} transmits from the base")
                elif i == j:
                    rd.fail("arcs", f"arc {[i, j]} is a self loop")

    traj = _trajectory(rd, doc.get("trajectory"))

    s = doc.get("simulation") or {}
    delta = rd.number(s, "delta", "simulation", default=1.0)
    theta = rd.number(s, "threshold", "simulation", default=0.0)
    max_steps = rd.number(s, "max_steps", "simulation", default=1_000_000, integer=True)

    p = doc.get("policy") or {}
    pname = p.get("name", "p1") if isinstance(p, dict) else "p1"
    if pname not in POLICIES:
        rd.fail("policy.name", f"must be one of {POLICIES}")
        pname = "p1"
    pkw = {}
    for key, attr in POLICY_KEYS.items():
        v = rd.number(p, key, "policy", integer=key in INT_KEYS)
        if v is not None:
            pkw[attr] = v

    tp = doc.get("tpbvp") or {}
    tpbvp = {}
    if tp:
        if not isinstance(tp, dict):
            rd.fail("tpbvp", "expected a mapping")
        else:
            for key in ("n_steps", "max_iter", "tol", "accept"):
                v = rd.number(tp, key, "tpbvp", integer=key in INT_KEYS)
                if v is not None:
                    tpbvp[key] = v
            if "variant" in tp:
                if tp["variant"] not in ("printed", "single"):
                    rd.fail("tpbvp.variant", "must be 'printed' or 'single'")
                else:
                    tpbvp["variant"] = tp["variant"]
            if tp.get("guess") is not None:
                g = tp["guess"]
                tpbvp["guess"] = {k: rd.number(g, k, "tpbvp.guess", required=k in ("T", "nu"),
                                               default=0.0) for k in ("T", "nu", "mu_x", "mu_y")}

    out = doc.get("output") or {}
    output = {}
    if isinstance(out, dict):
        if "out_dir" in out:
            output["out_dir"] = str(out["out_dir"])
    else:
        rd.fail("output", "expected a mapping")

    topology = sim = None
    if not rd.errors:
        try:
            policy = PolicyConfig(policy=pname, **pkw)
            sim = SimulationConfig(delta=delta, death_threshold_fraction=theta, policy=policy,
                                   max_steps=max_steps)
        except ValueError as exc:
            rd.fail("simulation/policy", str(exc))
        n = len(table)
        pos = np.array([[table[i][0], table[i][1]] for i in range(n)])
        rng = np.array([table[i][2] for i in range(n)])
        try:
            topology = Topology(pos, rng, None if arcs is None else frozenset(map(tuple, arcs)))
        except ValueError as exc:
            rd.fail("nodes", str(exc))
    if rd.errors:
        raise ValidationError(rd.errors)
    energies = np.array([table[i][3] for i in range(len(table) - 1)], dtype=float)
    return Scenario(name=str(doc.get("name", "scenario")), params=params, topology=topology,
                    energies=energies, trajectory=traj, sim=sim, tpbvp=tpbvp, output=output)


def parse_scenario(text: str) -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                         line=None if mark is None else mark.line + 1) from exc
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -- writing ------------------------------------------------------------------


def _traj_dict(t: Trajectory) -> dict:
    if isinstance(t, Stationary):
        return {"type": "stationary", "x": t.pos.x, "y": t.pos.y}
    if isinstance(t, ConstantVelocity):
        return {"type": "constant_velocity", "start": [t.start.x, t.start.y], "vx": t.vx, "vy": t.vy}
    if isinstance(t, Circular):
        return {"type": "circular", "center": [t.center.x, t.center.y], "radius": t.radius,
                "angular_rate": t.angular_rate, "phase": t.phase}
    if isinstance(t, RandomWalk):
        return {"type": "random_walk", "start": [t.start.x, t.start.y], "step_length": t.step_length,
                "step_time": t.step_time, "seed": t.seed}
    if isinstance(t, Waypoints):
        return {"type": "waypoints", "points": [[tt, p.x, p.y] for tt, p in t.points]}
    raise TypeError(f"cannot serialise {type(t).__name__}")


def scenario_to_dict(sc: Scenario) -> dict:
    topo = sc.topology
    n = topo.n_nodes
    nodes = []
    for i in range(n):
        row = {"id": i, "x": float(topo.positions[i, 0]), "y": float(topo.positions[i, 1]),
               "range": float(topo.ranges[i])}
        if i < n - 1:
            row["energy"] = float(sc.energies[i])
        nodes.append(row)
    pc = sc.sim.policy
    doc = {
        "name": sc.name,
        "energy": {f.name: float(getattr(sc.params, f.name)) for f in fields(EnergyParams)},
        "base": topo.base,
        "nodes": nodes,
    }
    if topo.arcs is not None:
        doc["arcs"] = [list(a) for a in sorted(topo.arcs)]
    doc["trajectory"] = _traj_dict(sc.trajectory)
    doc["simulation"] = {"delta": sc.sim.delta, "threshold": sc.sim.death_threshold_fraction,
                         "max_steps": sc.sim.max_steps}
    pol = {"name": pc.policy}
    for key, attr in POLICY_KEYS.items():
        v = getattr(pc, attr)
        pol[key] = int(v) if key in INT_KEYS else float(v)
    doc["policy"] = pol
    if sc.tpbvp:
        doc["tpbvp"] = dict(sc.tpbvp)
    if sc.output:
        doc["output"] = dict(sc.output)
    return doc


def serialize_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None, width=100)
