import math

import numpy as np
import pytest

from wsnlife.model import EnergyParams, NetworkState, Position, Topology

PARAMS = EnergyParams(c_s=1e-4, c_f=0.05, c_r=0.05, c_e=0.0, beta=2.0)


def line3(ranges=math.inf):
    """Source slot, relay at (10, 0), base at (20, 0)."""
    return Topology.from_nodes([(10.0, 0.0)], (20.0, 0.0), ranges)


def random_topology(rng, n_relays, box=100.0, full=True):
    relays = [tuple(rng.uniform(-box, box, 2)) for _ in range(n_relays)]
    base = tuple(rng.uniform(-box, box, 2))
    ranges = math.inf if full else rng.uniform(0.6 * box, 2.5 * box)
    topo = Topology.from_nodes(relays, base, ranges, source_range=math.inf)
    src = Position(*rng.uniform(-box, box, 2))
    return topo, src


def fresh_state(topo, energy=80.0):
    return NetworkState.initial_state(np.full(topo.n_nodes - 1, energy))


@pytest.fixture
def params():
    return PARAMS


# acceptance criteria report: test_acceptance.py appends (number, ok, detail)
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
