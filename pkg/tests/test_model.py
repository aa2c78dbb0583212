import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsnlife.errors import SingularFlow
from wsnlife.model import (
    EnergyParams,
    NetworkState,
    Position,
    Topology,
    energy_step,
    flow_solve,
    neighbor_sets,
    relay_workload,
    source_distances,
    source_workload,
    transmit_costs,
    uniform_rows,
    workloads,
)

from conftest import PARAMS, fresh_state, line3, random_topology


@pytest.mark.parametrize("src,node,expected", [
    ((0, 0), (10, 0), 10.0),
    ((0, 0), (3, 4), 5.0),
    ((1, 1), (1, 1), 0.0),
])
def test_source_distances(src, node, expected):
    topo = Topology.from_nodes([node], (50.0, 50.0))
    assert source_distances(topo, Position(*src))[1] == pytest.approx(expected, abs=1e-15)


def test_neighbor_sets_full_connectivity():
    topo = line3()
    out, inc = neighbor_sets(topo, fresh_state(topo), source_distances(topo, Position(0, 0)))
    assert out[0] == (1, 2) and out[1] == (2,) and out[2] == ()
    assert inc[2] == (0, 1) and inc[0] == ()


def test_neighbor_sets_dead_relay_pruned():
    topo = line3()
    st_ = NetworkState(0.0, np.array([80.0, 0.0]), np.array([80.0, 80.0]))
    out, _ = neighbor_sets(topo, st_, source_distances(topo, Position(0, 0)))
    assert out[0] == (2,)


def test_neighbor_sets_out_of_range():
    topo = line3(ranges=[5.0, math.inf, 0.0])
    out, _ = neighbor_sets(topo, fresh_state(topo), source_distances(topo, Position(0, 0)))
    assert out[0] == ()


def test_explicit_arcs_override_ranges():
    topo = Topology.from_nodes([(10, 0)], (20, 0), ranges=0.0, arcs=[(0, 1), (1, 2)])
    out, _ = neighbor_sets(topo, fresh_state(topo), source_distances(topo, Position(0, 0)))
    assert out[0] == (1,) and out[1] == (2,)


def test_relay_with_no_route_to_base_is_stranded():
    # relay 1 can hear the source but cannot reach the base
    topo = Topology.from_nodes([(10, 0)], (20, 0), arcs=[(0, 1), (0, 2)])
    out, _ = neighbor_sets(topo, fresh_state(topo), source_distances(topo, Position(0, 0)))
    assert out[0] == (2,)


@pytest.mark.parametrize("bad", [[(1, 0)], [(2, 1)], [(1, 1)], [(0, 5)]])
def test_invalid_arcs_rejected(bad):
    with pytest.raises(ValueError):
        Topology.from_nodes([(10, 0)], (20, 0), arcs=bad)


def test_flow_chain():
    W = np.zeros((3, 3))
    W[0, 1] = W[1, 2] = 1.0
    np.testing.assert_allclose(flow_solve(W), [1, 1, 1])


def test_flow_diamond():
    W = np.zeros((4, 4))
    W[0, 1] = W[0, 2] = 0.5
    W[1, 3] = W[2, 3] = 1.0
    np.testing.assert_allclose(flow_solve(W), [1, 0.5, 0.5, 1])


def test_flow_absorbing_cycle_is_singular():
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 2] = W[2, 1] = 1.0
    with pytest.raises(SingularFlow):
        flow_solve(W)


def test_flow_leaky_cycle_is_fine():
    W = np.zeros((4, 4))
    W[0, 1] = 1.0
    W[1, 2] = 1.0
    W[2, 1] = W[2, 3] = 0.5
    G = flow_solve(W)
    # relay 1 sees 1 + G_2/2, relay 2 sees G_1: G_1 = 2, G_2 = 2
    np.testing.assert_allclose(G, [1, 2, 2, 1])


def _single_arc(G1):
    W = np.zeros((3, 3))
    W[0, 1] = W[1, 2] = 1.0
    G = np.array([1.0, G1, G1])
    P = transmit_costs(line3(), Position(0, 0), PARAMS)
    return W, G, P


@pytest.mark.parametrize("G1,expected", [(1.0, 0.11), (0.0, 0.0), (0.5, 0.055)])
def test_relay_workload(G1, expected):
    W, G, P = _single_arc(G1)
    assert relay_workload(1, W, G, P, PARAMS) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("w01,w02,expected", [(1, 0, 0.06), (0, 1, 0.09), (0.5, 0.5, 0.075)])
def test_source_workload(w01, w02, expected):
    W = np.zeros((3, 3))
    W[0, 1], W[0, 2] = w01, w02
    P = transmit_costs(line3(), Position(0, 0), PARAMS)
    assert source_workload(W, P, PARAMS) == pytest.approx(expected, abs=1e-15)


def test_source_sensing_cost_added():
    W = np.zeros((3, 3))
    W[0, 2] = 1.0
    p = EnergyParams(c_e=0.01)
    P = transmit_costs(line3(), Position(0, 0), p)
    assert source_workload(W, P, p) == pytest.approx(0.10)


@pytest.mark.parametrize("r,I,expected", [(80.0, 0.11, 79.89), (0.05, 0.11, 0.0), (80.0, 0.0, 80.0)])
def test_energy_step(r, I, expected):
    s = NetworkState.initial_state([r])
    nxt = energy_step(s, np.array([I, 0.0]), 1.0)
    assert nxt.residual[0] == pytest.approx(expected, abs=1e-12)
    assert nxt.t == 1.0


def test_energy_step_dead_stays_dead():
    s = NetworkState(0.0, np.array([5.0, 5.0]), np.array([10.0, 10.0]), threshold=0.0,
                     alive=np.array([True, False, True]))
    nxt = energy_step(s, np.zeros(3), 1.0)
    assert not nxt.alive[1]


def test_params_validation():
    with pytest.raises(ValueError):
        EnergyParams(c_s=-1)
    with pytest.raises(ValueError):
        EnergyParams(beta=0)
    with pytest.raises(ValueError):
        Position(math.nan, 0)


# -- properties ----------------------------------------------------------------


def _random_stochastic(rng, topo, src):
    from wsnlife.model import adjacency
    A = adjacency(topo, fresh_state(topo), source_distances(topo, src))
    W = np.zeros(A.shape)
    for i in np.flatnonzero(A.any(axis=1)):
        v = rng.random(A[i].sum()) * (rng.random(A[i].sum()) < 0.7)
        if v.sum() == 0:
            v[rng.integers(v.size)] = 1.0
        W[i, A[i]] = v / v.sum()
    return A, W


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_relays=st.integers(1, 5))
def test_conservation_property(seed, n_relays):
    rng = np.random.default_rng(seed)
    topo, src = random_topology(rng, n_relays)
    _, W = _random_stochastic(rng, topo, src)
    try:
        G = flow_solve(W)
    except SingularFlow:
        return
    assert abs(G[-1] - 1.0) <= 1e-9
    assert G[0] == 1.0 and (G >= 0).all()


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_relays=st.integers(1, 5),
       node=st.integers(0, 4), bump=st.floats(0.1, 50.0))
def test_workload_increasing_in_distance(seed, n_relays, node, bump):
    rng = np.random.default_rng(seed)
    topo, src = random_topology(rng, n_relays)
    _, W = _random_stochastic(rng, topo, src)
    try:
        G = flow_solve(W)
    except SingularFlow:
        return
    P = transmit_costs(topo, src, PARAMS)
    I = workloads(W, G, P, PARAMS)
    assert (I >= 0).all()
    i = node % (topo.n_nodes - 1)
    used = np.flatnonzero(W[i] > 0)
    if G[i] == 0 or used.size == 0:
        return
    j = used[0]
    d = np.sqrt((P[i, j] - PARAMS.c_f) / PARAMS.c_s)
    P2 = P.copy()
    P2[i, j] = float(PARAMS.transmit(d + bump))
    I2 = workloads(W, G, P2, PARAMS)
    assert I2[i] > I[i]
    others = np.arange(I.size) != i
    np.testing.assert_array_equal(I2[others], I[others])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), steps=st.integers(1, 50))
def test_energy_monotone_and_closed(seed, steps):
    rng = np.random.default_rng(seed)
    topo, src = random_topology(rng, 3)
    _, W = _random_stochastic(rng, topo, src)
    try:
        G = flow_solve(W)
    except SingularFlow:
        return
    I = workloads(W, G, transmit_costs(topo, src, PARAMS), PARAMS)
    s = NetworkState.initial_state(steps * I[:-1] + 1.0)
    drained = 0.0
    prev = s.residual
    for _ in range(steps):
        s = energy_step(s, I, 0.5)
        drained += 0.5 * I[:-1].sum()
        assert (s.residual <= prev).all()
        prev = s.residual
    assert abs((s.initial - s.residual).sum() - drained) <= 1e-9


def test_uniform_rows_is_row_stochastic():
    A = np.array([[0, 1, 1], [0, 0, 1], [0, 0, 0]], dtype=bool)
    W = uniform_rows(A)
    np.testing.assert_allclose(W.sum(axis=1), [1, 1, 0])
