"""CSV trace tables and JSON summaries.

Floats are written with ``repr`` so every value round-trips exactly.  The
routing columns cover every candidate arc ``(i, j)`` of the topology, so the
column set is fixed for a given scenario.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _f(v) -> str:
    return repr(float(v))


def arc_columns(n: int):
    return [(i, j) for i in range(n - 1) for j in range(1, n) if i != j]


def trace_header(n: int):
    cols = ["k", "t", "x0", "y0"]
    cols += [f"r_{i}" for i in range(n - 1)]
    cols += [f"I_{i}" for i in range(n - 1)]
    cols += [f"w_{i}_{j}" for i, j in arc_columns(n)]
    cols += [f"alive_{i}" for i in range(n - 1)]
    cols += ["nu", "path"]
    return cols


def write_trace(result, n: int, path) -> None:
    arcs = arc_columns(n)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(trace_header(n))
        for k in range(result.steps):
            W = result.routing[k]
            p = result.paths[k]
            row = [str(k), _f(result.times[k]), _f(result.positions[k, 0]), _f(result.positions[k, 1])]
            row += [_f(v) for v in result.residual[k]]
            row += [_f(v) for v in result.workloads[k, :-1]]
            row += [_f(W[i, j]) for i, j in arcs]
            row += ["1" if a else "0" for a in result.alive[k, :-1]]
            row += ["" if np.isnan(result.nu[k]) else _f(result.nu[k]),
                    "" if p is None else "-".join(map(str, p))]
            wr.writerow(row)


def read_trace(path) -> dict:
    """Load a trace table back into arrays keyed by column name."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for c, name in enumerate(header):
        col = [r[c] for r in body]
        if name == "path":
            out[name] = [tuple(int(v) for v in s.split("-")) if s else None for s in col]
        elif name == "k" or name.startswith("alive_"):
            out[name] = np.array([int(v) for v in col], dtype=int)
        else:
            out[name] = np.array([float(v) if v else np.nan for v in col])
    return out


def routing_from_trace(tr: dict, n: int) -> np.ndarray:
    steps = tr["k"].size
    W = np.zeros((steps, n, n))
    for i, j in arc_columns(n):
        W[:, i, j] = tr[f"w_{i}_{j}"]
    return W


def simulation_summary(sc, result, policy) -> dict:
    topo = sc.topology
    return {
        "scenario": sc.name,
        "lifetime": result.lifetime,
        "termination_reason": result.termination_reason,
        "steps": result.steps,
        "policy": policy.policy,
        "epsilon": policy.epsilon,
        "seed": getattr(sc.trajectory, "seed", None),
        "delta": sc.sim.delta,
        "threshold": sc.sim.death_threshold_fraction,
        "deaths": [list(d) for d in result.deaths],
        "energy": {k: getattr(sc.params, k) for k in ("c_s", "c_f", "c_r", "c_e", "beta")},
        "positions": topo.positions.tolist(),
        "ranges": [float(r) for r in topo.ranges],
        "arcs": None if topo.arcs is None else sorted(list(a) for a in topo.arcs),
        "initial_energy": [float(e) for e in sc.energies],
        "final_residual": [float(e) for e in result.final_residual],
    }


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_sweep(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["epsilon", "lifetime", "termination_reason"])
        for eps, T, reason in rows:
            wr.writerow([_f(eps), _f(T), reason])


def write_tpbvp_trace(trace: dict, path) -> None:
    r = trace["r"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t"] + [f"r_{i}" for i in range(r.shape[1])]
                    + ["x0", "y0", "lambda_x", "lambda_y", "control"])
        for k in range(trace["t"].size):
            wr.writerow([_f(trace["t"][k])] + [_f(v) for v in r[k]]
                        + [_f(trace["x"][k]), _f(trace["y"][k]), _f(trace["lambda_x"][k]),
                           _f(trace["lambda_y"][k]), str(int(trace["control"][k]))])
