"""Discretised lifetime simulation.

At each step the source position is sampled, dead relays are pruned, the
configured policy is solved for that instant and every battery is drained
for one step.  The run ends when the source crosses its death threshold,
when it has no route left, or after ``max_steps``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoRoute
from .model import EnergyParams, NetworkState, Topology, energy_step
from .policies import PolicyConfig, solve
from .trajectory import Trajectory

log = logging.getLogger(__name__)

SOURCE_DEAD = "SourceDead"
NO_ROUTE = "NoRoute"
MAX_STEPS = "MaxSteps"


@dataclass(frozen=True)
class SimulationConfig:
    delta: float = 1.0
    death_threshold_fraction: float = 0.0
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not 0 <= self.death_threshold_fraction < 1:
            raise ValueError("death_threshold_fraction must lie in [0, 1)")


@dataclass
class SimulationResult:
    """Outcome of one run.

    Per-step arrays share their first axis: row ``k`` holds the step start
    time, source position, routing matrix, workloads, residual energies at
    the *start* of the step and alive flags used for that step.
    """

    lifetime: float
    termination_reason: str
    times: np.ndarray
    positions: np.ndarray
    routing: np.ndarray
    workloads: np.ndarray
    residual: np.ndarray
    alive: np.ndarray
    final_residual: np.ndarray
    deaths: list
    nu: np.ndarray
    paths: list

    @property
    def steps(self) -> int:
        return self.times.size


def run_simulation(topology: Topology, energies, traj: Trajectory, params: EnergyParams,
                   cfg: SimulationConfig) -> SimulationResult:
    n = topology.n_nodes
    R = np.asarray(energies, dtype=float)
    if R.shape != (n - 1,):
        raise ValueError(f"expected {n - 1} initial energies, got {R.shape}")
    theta = cfg.death_threshold_fraction
    state = NetworkState.initial_state(R, theta)
    delta = cfg.delta
    times, positions, routing, loads, resid, alive, nus, paths = [], [], [], [], [], [], [], []
    deaths = []
    memo = {}
    lifetime, reason = None, MAX_STEPS

    for k in range(cfg.max_steps):
        t = k * delta
        state = replace(state, t=t)
        src = traj.position_at(t)
        # solvers see only geometry and the alive set, never residual levels
        key = (src.x, src.y, state.alive.tobytes())
        if key not in memo:
            try:
                memo[key] = solve(topology, state, src, params, cfg.policy)
            except NoRoute:
                lifetime, reason = t, NO_ROUTE
                break
        out = memo[key]
        times.append(t)
        positions.append((src.x, src.y))
        routing.append(out.w)
        loads.append(out.workloads)
        resid.append(state.residual)
        alive.append(state.alive)
        nus.append(np.nan if out.nu is None else out.nu)
        paths.append(out.path)

        r0 = state.residual[0]
        nxt = energy_step(state, out.workloads, delta)
        for i in np.flatnonzero(state.alive[1:-1] & ~nxt.alive[1:-1]) + 1:
            deaths.append((k, int(i)))
            log.debug("relay %d died during step %d", i, k)
        state = nxt
        if not state.alive[0]:
            # linear interpolation on the unclamped drain
            lifetime = t + (r0 - theta * R[0]) / out.workloads[0]
            reason = SOURCE_DEAD
            break

    if lifetime is None:
        lifetime = cfg.max_steps * delta

    return SimulationResult(
        lifetime=float(lifetime),
        termination_reason=reason,
        times=np.array(times),
        positions=np.array(positions).reshape(-1, 2),
        routing=np.array(routing).reshape(-1, n, n),
        workloads=np.array(loads).reshape(-1, n),
        residual=np.array(resid).reshape(-1, n - 1),
        alive=np.array(alive).reshape(-1, n),
        final_residual=state.residual,
        deaths=deaths,
        nu=np.array(nus),
        paths=paths,
    )


def sweep_epsilon(topology, energies, traj, params, cfg: SimulationConfig, epsilons):
    """One P2 run per epsilon on identical inputs; returns ``(eps, T, reason)`` rows."""
    rows = []
    for eps in epsilons:
        pc = replace(cfg.policy, policy="p2", epsilon=float(eps))
        res = run_simulation(topology, energies, traj, params, replace(cfg, policy=pc))
        rows.append((float(eps), res.lifetime, res.termination_reason))
    return rows
