"""Per-step routing solvers for the three lifetime definitions.

* ``solve_p1`` keeps the source load minimal (nearest-arc vertex).
* ``solve_p2`` trades source load against relay load through a weight
  ``epsilon`` and a self-consistent multiplier ``nu``.
* ``solve_p3_shortest_path`` minimises total drain via a shortest path on
  per-bit arc energies.

``vertex_oracle`` enumerates every deterministic routing vector and is used
as ground truth on small networks.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateSource, NoRoute, NuDiverged, TooLarge
from .model import (
    EnergyParams,
    NetworkState,
    Position,
    Topology,
    adjacency,
    prune_stranded,
    flow_solve,
    source_distances,
    transmit_costs,
    uniform_rows,
    workloads,
)

POLICIES = ("p1", "p2", "p3")
ORACLE_LIMIT = 10**6
TIE_TOL = 1e-12


class NonConvexWarning(UserWarning):
    """P2 restarts ended at objectives that differ by more than 1e-6."""


@dataclass(frozen=True)
class PolicyConfig:
    policy: str = "p1"
    epsilon: float = 1.0
    nu_init: float = -1.0
    nu_damping: float = 0.5
    nu_tol: float = 1e-6
    nu_max_iter: int = 100
    multistart_count: int = 8
    pg_max_iter: int = 500
    pg_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not self.nu_init < 0:
            raise ValueError("nu_init must be < 0")
        if not 0 < self.nu_damping <= 1:
            raise ValueError("nu_damping must lie in (0, 1]")
        if not self.nu_tol > 0:
            raise ValueError("nu_tol must be > 0")
        if self.multistart_count < 1:
            raise ValueError("multistart_count must be >= 1")


@dataclass
class PolicyOutcome:
    w: np.ndarray
    objective: float
    workloads: np.ndarray
    inflow: np.ndarray
    nu: float | None = None
    path: tuple | None = None
    nonconvex: bool = False
    info: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class _Step:
    A: np.ndarray
    P: np.ndarray
    params: EnergyParams

    @property
    def n(self):
        return self.A.shape[0]


def _prepare(topology: Topology, state: NetworkState, src: Position, params: EnergyParams) -> _Step:
    d0 = source_distances(topology, src)
    A = adjacency(topology, state, d0)
    if not A[0].any():
        raise NoRoute("source has no out-neighbors")
    return _Step(A, transmit_costs(topology, src, params), params)


def _outcome(step: _Step, W, objective, **kw) -> PolicyOutcome:
    G = flow_solve(W)
    I = workloads(W, G, step.P, step.params)
    return PolicyOutcome(W, float(objective(I)), I, G, **kw)


def _drain(I):
    return float(I[:-1].sum())


# -- P1 ---------------------------------------------------------------------


def _p1_from_step(step: _Step) -> PolicyOutcome:
    cand = np.flatnonzero(step.A[0])
    j = int(cand[np.argmin(step.P[0, cand])])
    W = uniform_rows(step.A, range(1, step.n))
    W[0, j] = 1.0
    return _outcome(step, W, lambda I: I[0])


def solve_p1(topology, state, src, params) -> PolicyOutcome:
    """Send everything to the cheapest source arc; relays split uniformly.

    The source objective is linear on the simplex, so the optimum is the
    vertex of the cheapest out-arc (lowest node id on ties).
    """
    return _p1_from_step(_prepare(topology, state, src, params))


# -- P2 ---------------------------------------------------------------------


def nu_residual(I, epsilon: float) -> float:
    """Multiplier implied by the terminal condition when rates equal ``-I``."""
    I = np.asarray(I, dtype=float)
    I0 = I[0]
    if I0 == 0.0:
        raise DegenerateSource("source workload is zero")
    return -(1.0 + 2.0 * epsilon * I[1:-1].sum()) / (2.0 * I0)


def _p2_weights(nu, epsilon):
    if abs(nu) < 1e-9:
        return 0.0, -1.0
    return 1.0, epsilon / nu


def acyclic_mask(topology: Topology, A: np.ndarray) -> np.ndarray:
    """Drop relay-to-relay arcs that do not move strictly closer to the base.

    The result is a DAG (ordered by distance to base, then node id), which
    keeps relay inflows bounded when relay load is being rewarded.
    """
    n = A.shape[0]
    dist = topology.distances[:, -1]
    key = [(dist[i], i) for i in range(n)]
    M = A.copy()
    for i in range(1, n - 1):
        for j in range(1, n - 1):
            if M[i, j] and not key[j] < key[i]:
                M[i, j] = False
    return prune_stranded(M)


def _random_vertex(mask, rng):
    W = np.zeros(mask.shape)
    for i in np.flatnonzero(mask.any(axis=1)):
        cols = np.flatnonzero(mask[i])
        W[i, cols[rng.integers(cols.size)]] = 1.0
    return W


def _round_to_vertex(W, mask, P, c_r, c_e, a0, a1):
    """Row-by-row vertex rounding; never increases a multilinear objective."""
    W = W.copy()
    rows = np.flatnonzero(mask.any(axis=1))
    J = kernels.objective(W, P, c_r, c_e, a0, a1)
    first = True
    for _ in range(W.shape[0] + 1):
        changed = False
        for i in rows:
            old = W[i].copy()
            best_j, best_val = -1, math.inf
            for j in np.flatnonzero(mask[i]):
                W[i] = 0.0
                W[i, j] = 1.0
                val = kernels.objective(W, P, c_r, c_e, a0, a1)
                if val < best_val - TIE_TOL:
                    best_j, best_val = j, val
            cur = old.argmax() if old.max() == 1.0 else -1
            if first or (best_j != cur and best_val < J - TIE_TOL):
                W[i] = 0.0
                W[i, best_j] = 1.0
                changed |= best_j != cur
                J = best_val
            else:
                W[i] = old
        first = False
        if not changed:
            break
    return W, kernels.objective(W, P, c_r, c_e, a0, a1)


def _p2_inner(step: _Step, mask, a0, a1, cfg: PolicyConfig):
    c_r, c_e = step.params.c_r, step.params.c_e
    rng = np.random.default_rng(cfg.seed)
    starts = [uniform_rows(mask)]
    starts += [_random_vertex(mask, rng) for _ in range(cfg.multistart_count - 1)]
    results = []
    for W0 in starts:
        W, _, _ = kernels.pg_descent(W0, mask, step.P, c_r, c_e, a0, a1, cfg.pg_max_iter, cfg.pg_tol)
        results.append(_round_to_vertex(W, mask, step.P, c_r, c_e, a0, a1))
    vals = np.array([J for _, J in results])
    best = int(np.argmin(vals))
    return results[best][0], float(vals[best]), bool(vals.max() - vals.min() > 1e-6)


def solve_p2(topology, state, src, params, cfg: PolicyConfig) -> PolicyOutcome:
    """Relay-aware routing with a self-consistent multiplier.

    For a fixed ``nu`` the routing minimises ``I_0 + (eps/nu) * sum(relay I)``
    by multistart projected gradient (then vertex rounding).  ``nu`` is moved
    by damped fixed-point iteration towards ``nu_residual`` of that routing.
    """
    step = _prepare(topology, state, src, params)
    eps = cfg.epsilon
    if eps == 0.0:
        out = _p1_from_step(step)
        out.nu = nu_residual(out.workloads, 0.0)
        return out
    mask = acyclic_mask(topology, step.A)
    if not mask[0].any():
        raise NoRoute("source has no out-neighbors")

    cache = {}

    def inner(nu):
        a0, a1 = _p2_weights(nu, eps)
        W, _, nonconvex = _p2_inner(step, mask, a0, a1, cfg)
        key = W.tobytes()
        if key not in cache:
            G = flow_solve(W)
            cache[key] = (W, workloads(W, G, step.P, params), G)
        return cache[key], nonconvex

    nu = cfg.nu_init
    history = []
    for it in range(cfg.nu_max_iter):
        (W, I, G), nonconvex = inner(nu)
        target = nu_residual(I, eps)
        history.append((nu, target, W.tobytes()))
        if abs(target - nu) <= cfg.nu_tol:
            a0, a1 = _p2_weights(nu, eps)
            obj = a0 * I[0] + a1 * I[1:-1].sum()
            return PolicyOutcome(W, float(obj), I, G, nu=nu, nonconvex=nonconvex,
                                 info={"nu_iterations": it + 1})
        nu = (1.0 - cfg.nu_damping) * nu + cfg.nu_damping * target

    # limit cycle between vertices: accept any visited routing that is optimal at its own nu
    for key, (W, I, G) in cache.items():
        nu_c = nu_residual(I, eps)
        a0, a1 = _p2_weights(nu_c, eps)
        (W2, I2, _), nonconvex = inner(nu_c)
        here = a0 * I[0] + a1 * I[1:-1].sum()
        there = a0 * I2[0] + a1 * I2[1:-1].sum()
        if here <= there + 1e-12:
            return PolicyOutcome(W, float(here), I, G, nu=nu_c, nonconvex=nonconvex,
                                 info={"nu_iterations": cfg.nu_max_iter, "limit_cycle": True})
    raise NuDiverged(f"nu did not converge in {cfg.nu_max_iter} iterations", nu=nu,
                     history=[(a, b) for a, b, _ in history])


# -- P3 ---------------------------------------------------------------------


def arc_weight(i: int, j: int, topology: Topology, src: Position, params: EnergyParams) -> float:
    """Energy to move one bit across arc ``(i, j)``: transmit at ``i`` plus receive at ``j``."""
    d = source_distances(topology, src)[j] if i == 0 else topology.distances[i, j]
    return float(params.c_r + params.transmit(d))


def _shortest_path(Q: np.ndarray, A: np.ndarray):
    n = A.shape[0]
    target = n - 1
    heap = [(0.0, (0,))]
    done = set()
    while heap:
        cost, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done.add(u)
        if u == target:
            return cost, path
        for v in np.flatnonzero(A[u]):
            v = int(v)
            if v not in done:
                heapq.heappush(heap, (cost + Q[u, v], path + (v,)))
    return math.inf, None


def solve_p3_shortest_path(topology, state, src, params) -> PolicyOutcome:
    """Route everything along the min-energy path to the base.

    Reported objective is total battery drain, which is the path cost minus
    one receive cost (the base's).
    """
    step = _prepare(topology, state, src, params)
    Q = step.P + params.c_r
    cost, path = _shortest_path(Q, step.A)
    if path is None:
        raise NoRoute("base unreachable from the source")
    on_path = set(path[:-1])
    W = uniform_rows(step.A, [i for i in range(1, step.n) if i not in on_path])
    for u, v in zip(path[:-1], path[1:]):
        W[u, v] = 1.0
    out = _outcome(step, W, _drain, path=path)
    out.info["path_cost"] = float(cost)
    return out


# -- oracle -----------------------------------------------------------------


def vertex_oracle(topology, state, src, params, objective="p3", *, nu=None, epsilon=None,
                  acyclic=None, limit=ORACLE_LIMIT) -> PolicyOutcome:
    """Best deterministic routing vector by exhaustive enumeration.

    Only candidates whose flow is nonsingular and fully delivered to the base
    are admissible.  Ties go to the first candidate in lexicographic order of
    (choice of node 0, choice of node 1, ...), choices sorted by node id.
    ``acyclic`` defaults to True for ``"p2"`` to match ``solve_p2``'s arc set.
    """
    step = _prepare(topology, state, src, params)
    if objective == "p1":
        a0, a1 = 1.0, 0.0
    elif objective == "p3":
        a0, a1 = 1.0, 1.0
    elif objective == "p2":
        if nu is None or epsilon is None:
            raise ValueError("p2 oracle needs nu and epsilon")
        a0, a1 = _p2_weights(nu, epsilon)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    if acyclic is None:
        acyclic = objective == "p2"
    mask = acyclic_mask(topology, step.A) if acyclic else step.A
    rows = np.flatnonzero(mask.any(axis=1))
    sizes = mask[rows].sum(axis=1)
    total = math.prod(int(s) for s in sizes)
    if total > limit:
        raise TooLarge(f"{total} deterministic routings exceed the limit {limit}")
    ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    cols = np.concatenate([np.flatnonzero(mask[i]) for i in rows]).astype(np.int64)
    vals = kernels.enumerate_objectives(rows.astype(np.int64), ptr, cols, step.P,
                                        params.c_r, params.c_e, a0, a1, total)
    best = vals.min()
    if not math.isfinite(best):
        raise NoRoute("no deterministic routing delivers to the base")
    idx = int(np.flatnonzero(vals <= best + TIE_TOL)[0])
    digits = np.unravel_index(idx, tuple(int(s) for s in sizes))
    W = np.zeros(mask.shape)
    for r, i in enumerate(rows):
        W[i, cols[ptr[r] + digits[r]]] = 1.0
    out = _outcome(step, W, lambda I: a0 * I[0] + a1 * I[1:-1].sum(), nu=nu)
    out.info["candidates"] = total
    out.info["objectives"] = vals
    return out


def solve(topology, state, src, params, cfg: PolicyConfig) -> PolicyOutcome:
    if cfg.policy == "p1":
        return solve_p1(topology, state, src, params)
    if cfg.policy == "p2":
        return solve_p2(topology, state, src, params, cfg)
    return solve_p3_shortest_path(topology, state, src, params)
