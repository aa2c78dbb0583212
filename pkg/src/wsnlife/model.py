"""Network geometry, flow conservation, workloads and energy bookkeeping.

Nodes are numbered ``0..N``: node 0 is the mobile source, ``1..N-1`` are
static relays and ``N`` is the base station.  A routing vector is a dense
``(N+1, N+1)`` array ``W`` with ``W[i, j]`` the fraction of node ``i``'s
outflow sent to ``j``; rows with no out-neighbors are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import kernels
from .errors import SingularFlow

ROW_TOL = 1e-12


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class EnergyParams:
    """Radio energy model: transmit ``c_f + c_s d**beta``, receive ``c_r``, sense ``c_e`` per bit."""

    c_s: float = 1e-4
    c_f: float = 0.05
    c_r: float = 0.05
    c_e: float = 0.0
    beta: float = 2.0

    def __post_init__(self):
        for name in ("c_s", "c_f", "c_r", "c_e"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")

    def transmit(self, d):
        return self.c_f + self.c_s * np.asarray(d, dtype=float) ** self.beta


@dataclass(frozen=True, eq=False)
class Topology:
    """Static part of the network.

    ``positions[0]`` is a placeholder (the source position comes from its
    trajectory).  ``ranges`` may contain ``inf``.  When ``arcs`` is given it
    replaces range-derived adjacency entirely.
    """

    positions: np.ndarray
    ranges: np.ndarray
    arcs: frozenset | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        rng = np.asarray(self.ranges, dtype=float)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "ranges", rng)
        n = pos.shape[0]
        if pos.ndim != 2 or pos.shape[1] != 2 or n < 2:
            raise ValueError("positions must have shape (N+1, 2) with N >= 1")
        if rng.shape != (n,):
            raise ValueError("ranges must have one entry per node")
        if not np.isfinite(pos[1:]).all():
            raise ValueError("relay and base positions must be finite")
        if (rng < 0).any():
            raise ValueError("ranges must be >= 0")
        if self.arcs is not None:
            arcs = frozenset((int(i), int(j)) for i, j in self.arcs)
            for i, j in arcs:
                if not (0 <= i < n and 0 <= j < n) or i == j:
                    raise ValueError(f"invalid arc {(i, j)}")
                if j == 0:
                    raise ValueError("the source cannot act as a relay")
                if i == n - 1:
                    raise ValueError("the base never transmits")
            object.__setattr__(self, "arcs", arcs)

    @classmethod
    def from_nodes(cls, relays, base, ranges=math.inf, source_range=None, arcs=None):
        relays = [p if isinstance(p, Position) else Position(*p) for p in relays]
        base = base if isinstance(base, Position) else Position(*base)
        pos = np.array([[0.0, 0.0]] + [[p.x, p.y] for p in relays] + [[base.x, base.y]])
        n = pos.shape[0]
        if np.ndim(ranges) == 0:
            rng = np.full(n, float(ranges))
        else:
            rng = np.asarray(ranges, dtype=float)
        if source_range is not None:
            rng = rng.copy()
            rng[0] = source_range
        return cls(pos, rng, arcs)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def base(self) -> int:
        return self.n_nodes - 1

    @cached_property
    def distances(self) -> np.ndarray:
        """Static pairwise distances; row and column 0 are meaningless."""
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Residual energies of nodes ``0..N-1`` at time ``t``.

    A node is alive while ``residual > threshold * initial``; the base is
    always alive.
    """

    t: float
    residual: np.ndarray
    initial: np.ndarray
    threshold: float = 0.0
    alive: np.ndarray = field(default=None)

    def __post_init__(self):
        r = np.maximum(np.asarray(self.residual, dtype=float), 0.0)
        R = np.asarray(self.initial, dtype=float)
        object.__setattr__(self, "residual", r)
        object.__setattr__(self, "initial", R)
        if self.alive is None:
            alive = np.append(r > self.threshold * R, True)
            object.__setattr__(self, "alive", alive)

    @classmethod
    def initial_state(cls, energies, threshold=0.0):
        R = np.asarray(energies, dtype=float)
        if (R <= 0).any():
            raise ValueError("initial energies must be > 0")
        return cls(0.0, R.copy(), R, threshold)


def source_distances(topology: Topology, src: Position) -> np.ndarray:
    """Distance from the source at ``src`` to every node (entry 0 is 0)."""
    d = np.hypot(topology.positions[:, 0] - src.x, topology.positions[:, 1] - src.y)
    d[0] = 0.0
    return d


def adjacency(topology: Topology, state: NetworkState, d0: np.ndarray) -> np.ndarray:
    """Boolean arc matrix after range checks and dead-node pruning."""
    n = topology.n_nodes
    if topology.arcs is not None:
        A = np.zeros((n, n), dtype=bool)
        for i, j in topology.arcs:
            A[i, j] = True
    else:
        D = topology.distances.copy()
        D[0] = d0
        A = D <= topology.ranges[:, None]
        np.fill_diagonal(A, False)
        A[:, 0] = False
        A[-1, :] = False
    alive = state.alive
    A &= alive[:, None] & alive[None, :]
    return prune_stranded(A)


def prune_stranded(A: np.ndarray) -> np.ndarray:
    """Remove every arc touching a node that has no directed path to the base."""
    n = A.shape[0]
    ok = np.zeros(n, dtype=bool)
    ok[-1] = True
    frontier = [n - 1]
    while frontier:
        j = frontier.pop()
        for i in np.flatnonzero(A[:, j] & ~ok):
            ok[i] = True
            frontier.append(int(i))
    return A & ok[:, None] & ok[None, :]


def neighbor_sets(topology: Topology, state: NetworkState, d0: np.ndarray):
    """Out- and in-neighbor sets ``O(i)``, ``I(i)`` as sorted tuples."""
    A = adjacency(topology, state, d0)
    out = [tuple(np.flatnonzero(A[i]).tolist()) for i in range(A.shape[0])]
    inc = [tuple(np.flatnonzero(A[:, i]).tolist()) for i in range(A.shape[0])]
    return out, inc


def transmit_costs(topology: Topology, src: Position, params: EnergyParams) -> np.ndarray:
    """Per-bit transmit cost ``c_f + c_s d**beta`` for every ordered pair."""
    D = topology.distances.copy()
    D[0] = source_distances(topology, src)
    return params.transmit(D)


def uniform_rows(A: np.ndarray, rows=None) -> np.ndarray:
    """Row-stochastic routing spreading each selected row evenly over its arcs."""
    W = np.zeros(A.shape)
    deg = A.sum(axis=1)
    sel = np.arange(A.shape[0]) if rows is None else np.asarray(rows, dtype=int)
    for i in sel:
        if deg[i]:
            W[i, A[i]] = 1.0 / deg[i]
    return W


def check_routing(W: np.ndarray, A: np.ndarray) -> None:
    if (W < 0).any() or (W > 1).any():
        raise ValueError("routing probabilities must lie in [0, 1]")
    if (W[~A] != 0).any():
        raise ValueError("routing weight on a missing arc")
    sums = W.sum(axis=1)
    has = A.any(axis=1)
    if (np.abs(sums[has] - 1.0) > ROW_TOL).any():
        raise ValueError("routing rows must sum to 1")


def flow_solve(W: np.ndarray) -> np.ndarray:
    """Inflow rates ``G`` with ``G[0] = 1`` from the flow conservation system.

    Solved as a dense linear system over the nodes reachable from the source,
    so cyclic routing is allowed as long as mass eventually leaves the cycle.
    """
    G, ok = kernels.inflow(np.ascontiguousarray(W, dtype=float))
    if not ok:
        raise SingularFlow("routing traps flow in a cycle with no exit")
    return G


def relay_workload(i: int, W, G, P, params: EnergyParams) -> float:
    """Battery drain of relay ``i``: its inflow times (forwarding + receive cost)."""
    if G[i] == 0.0:
        return 0.0
    return float(G[i] * (W[i] @ P[i] + params.c_r))


def source_workload(W, P, params: EnergyParams) -> float:
    return float(W[0] @ P[0] + params.c_e)


def workloads(W, G, P, params: EnergyParams) -> np.ndarray:
    """All node workloads; the base entry is always 0."""
    return kernels.workloads(np.ascontiguousarray(W, dtype=float), G, P, params.c_r, params.c_e)


def energy_step(state: NetworkState, I: np.ndarray, delta: float) -> NetworkState:
    """Advance residual energies by one step of length ``delta``, clamping at 0."""
    if not delta > 0:
        raise ValueError("delta must be > 0")
    I = np.asarray(I, dtype=float)[: state.residual.size]
    r = np.maximum(state.residual - I * delta, 0.0)
    alive = np.append(r > state.threshold * state.initial, True)
    # dead nodes stay dead even if a later threshold check would pass
    alive &= state.alive
    return replace(state, t=state.t + delta, residual=r, alive=alive)
