import os
import subprocess
import sys

import numpy as np
import pytest

from wsnlife import kernels
from wsnlife.model import adjacency, source_distances, transmit_costs
from wsnlife.policies import acyclic_mask

from conftest import PARAMS, fresh_state, random_topology

nb = kernels.numba_impl
np_ = kernels.numpy_impl
pytestmark = pytest.mark.skipif(nb is None, reason="numba unavailable")


def _case(seed, n_relays=4):
    rng = np.random.default_rng(seed)
    topo, src = random_topology(rng, n_relays)
    A = adjacency(topo, fresh_state(topo), source_distances(topo, src))
    P = transmit_costs(topo, src, PARAMS)
    W = np.zeros(A.shape)
    for i in np.flatnonzero(A.any(axis=1)):
        v = rng.random(A[i].sum())
        W[i, A[i]] = v / v.sum()
    return topo, A, P, W


@pytest.mark.parametrize("seed", range(10))
def test_inflow_and_workloads_agree(seed):
    _, _, P, W = _case(seed)
    G1, ok1 = nb.inflow(W)
    G2, ok2 = np_.inflow(W)
    assert ok1 == ok2
    np.testing.assert_allclose(G1, G2, rtol=1e-10, atol=1e-12)
    I1 = nb.workloads(W, G1, P, PARAMS.c_r, PARAMS.c_e)
    I2 = np_.workloads(W, G2, P, PARAMS.c_r, PARAMS.c_e)
    np.testing.assert_allclose(I1, I2, rtol=1e-10, atol=1e-12)


def test_inflow_singular_both():
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 2] = W[2, 1] = 1.0
    assert not nb.inflow(W)[1]
    assert not np_.inflow(W)[1]


@pytest.mark.parametrize("seed", range(5))
def test_enumeration_agrees(seed):
    topo, A, P, _ = _case(seed)
    rows = np.flatnonzero(A.any(axis=1)).astype(np.int64)
    sizes = A[rows].sum(axis=1)
    ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    cols = np.concatenate([np.flatnonzero(A[i]) for i in rows]).astype(np.int64)
    total = int(np.prod(sizes))
    v1 = nb.enumerate_objectives(rows, ptr, cols, P, PARAMS.c_r, PARAMS.c_e, 1.0, 1.0, total)
    v2 = np_.enumerate_objectives(rows, ptr, cols, P, PARAMS.c_r, PARAMS.c_e, 1.0, 1.0, total)
    assert np.array_equal(np.isfinite(v1), np.isfinite(v2))
    f = np.isfinite(v1)
    np.testing.assert_allclose(v1[f], v2[f], rtol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_pg_descent_agrees(seed):
    topo, A, P, _ = _case(seed)
    mask = acyclic_mask(topo, A)
    W0 = np.zeros(mask.shape)
    for i in np.flatnonzero(mask.any(axis=1)):
        W0[i, mask[i]] = 1.0 / mask[i].sum()
    args = (mask, P, PARAMS.c_r, PARAMS.c_e, 1.0, -0.2, 500, 1e-8)
    W1, J1, _ = nb.pg_descent(W0, *args)
    W2, J2, _ = np_.pg_descent(W0, *args)
    assert J1 == pytest.approx(J2, rel=1e-8, abs=1e-10)
    assert J1 <= nb.objective(W0, P, PARAMS.c_r, PARAMS.c_e, 1.0, -0.2) + 1e-12


def test_env_flag_selects_numpy():
    code = "from wsnlife import kernels; print(kernels.impl.__name__)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={**os.environ, "WSNLIFE_NUMBA": "0"})
    assert out.stdout.strip().endswith("_numpy")
