"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--relays 5] [--repeat 5] [--seed 0]
"""

import argparse
import math
import time

import numpy as np

from wsnlife import kernels
from wsnlife.model import EnergyParams, NetworkState, Position, Topology, adjacency, source_distances, transmit_costs
from wsnlife.policies import acyclic_mask


def _setup(n_relays, seed):
    rng = np.random.default_rng(seed)
    relays = [tuple(rng.uniform(-100, 100, 2)) for _ in range(n_relays)]
    topo = Topology.from_nodes(relays, tuple(rng.uniform(-100, 100, 2)))
    src = Position(*rng.uniform(-100, 100, 2))
    st = NetworkState.initial_state(np.full(topo.n_nodes - 1, 80.0))
    A = adjacency(topo, st, source_distances(topo, src))
    P = transmit_costs(topo, src, EnergyParams())
    W = np.zeros(A.shape)
    for i in np.flatnonzero(A.any(axis=1)):
        W[i, A[i]] = 1.0 / A[i].sum()
    return topo, A, P, W


def _best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--relays", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if kernels.numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")

    topo, A, P, W = _setup(args.relays, args.seed)
    mask = acyclic_mask(topo, A)
    rows = np.flatnonzero(A.any(axis=1)).astype(np.int64)
    sizes = A[rows].sum(axis=1)
    ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    cols = np.concatenate([np.flatnonzero(A[i]) for i in rows]).astype(np.int64)
    total = int(np.prod(sizes))
    c_r, c_e = 0.05, 0.0

    cases = {
        "inflow x1000": lambda m: [m.inflow(W) for _ in range(1000)],
        f"enumerate ({total} vertices)": lambda m: m.enumerate_objectives(
            rows, ptr, cols, P, c_r, c_e, 1.0, 1.0, total),
        "pg_descent x20": lambda m: [m.pg_descent(uniform, mask, P, c_r, c_e, 1.0, -0.2, 500, 1e-8)
                                     for _ in range(20)],
    }
    uniform = np.zeros(mask.shape)
    for i in np.flatnonzero(mask.any(axis=1)):
        uniform[i, mask[i]] = 1.0 / mask[i].sum()

    print(f"{args.relays} relays, best of {args.repeat}")
    print(f"{'kernel':<30} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for name, fn in cases.items():
        fn(kernels.numba_impl)  # compile / warm caches
        t_nb = _best_of(lambda: fn(kernels.numba_impl), args.repeat)
        t_np = _best_of(lambda: fn(kernels.numpy_impl), args.repeat)
        print(f"{name:<30} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
