"""Vectorised numpy versions of the loop kernels.

Same signatures and return conventions as :mod:`wsnlife.kernels._numba`.
Vertex enumeration runs as batched ``np.linalg`` calls over chunks of
candidate routing matrices instead of one small solve per candidate.
"""

import numpy as np

PIVOT_TOL = 1e-12
NEG_TOL = 1e-12
DELIVER_TOL = 1e-9
ARMIJO = 1e-4
COND_MAX = 1e12
CHUNK = 1 << 14


def _reachable(W):
    n = W.shape[0]
    seen = np.zeros(n, bool)
    seen[0] = True
    pos = W > 0.0
    for _ in range(n):
        nxt = seen | pos[seen].any(axis=0)
        if (nxt == seen).all():
            break
        seen = nxt
    return seen


def inflow(W):
    n = W.shape[0]
    seen = _reachable(W)
    A = np.eye(n) - (W * seen[:, None]).T
    b = np.zeros(n)
    b[0] = 1.0
    if np.linalg.cond(A) > COND_MAX:
        return b, False
    try:
        G = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return b, False
    if (G < -NEG_TOL).any():
        return G, False
    return np.maximum(G, 0.0), True


def workloads(W, G, P, c_r, c_e):
    out = G * ((W * P).sum(axis=1) + c_r)
    out[0] = W[0] @ P[0] + c_e
    out[-1] = 0.0
    return out


def _objective(W, G, P, c_r, c_e, a0, a1):
    I = workloads(W, G, P, c_r, c_e)
    return a0 * I[0] + a1 * I[1:-1].sum()


def objective(W, P, c_r, c_e, a0, a1):
    G, ok = inflow(W)
    if not ok:
        return np.inf
    return _objective(W, G, P, c_r, c_e, a0, a1)


def _batch_objective(W, P, c_r, c_e, a0, a1):
    m, n, _ = W.shape
    pos = W > 0.0
    seen = np.zeros((m, n), bool)
    seen[:, 0] = True
    for _ in range(n):
        seen = seen | np.einsum("mk,mkj->mj", seen, pos)
    A = np.eye(n) - np.transpose(W * seen[:, :, None], (0, 2, 1))
    # deterministic routing: det is exactly 1 on a reachable DAG, 0 when trapped
    ok = np.abs(np.linalg.det(A)) > 0.5
    out = np.full(m, np.inf)
    if not ok.any():
        return out
    b = np.zeros((int(ok.sum()), n, 1))
    b[:, 0, 0] = 1.0
    G = np.linalg.solve(A[ok], b)[:, :, 0]
    good = (G >= -NEG_TOL).all(axis=1) & (G[:, -1] >= 1.0 - DELIVER_TOL)
    G = np.maximum(G, 0.0)
    Wk = W[ok]
    I = G * ((Wk * P).sum(axis=2) + c_r)
    I0 = (Wk[:, 0, :] * P[0]).sum(axis=1) + c_e
    val = a0 * I0 + a1 * I[:, 1:-1].sum(axis=1)
    val[~good] = np.inf
    out[ok] = val
    return out


def enumerate_objectives(rows, ptr, cols, P, c_r, c_e, a0, a1, total):
    n = P.shape[0]
    sizes = tuple(int(s) for s in np.diff(ptr))
    out = np.empty(total)
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK))
        digits = np.stack(np.unravel_index(idx, sizes), axis=1)
        m = idx.size
        W = np.zeros((m, n, n))
        ar = np.arange(m)
        for r, row in enumerate(rows):
            W[ar, row, cols[ptr[r] + digits[:, r]]] = 1.0
        out[start:start + m] = _batch_objective(W, P, c_r, c_e, a0, a1)
    return out


def _project(Y, mask):
    X = np.zeros_like(Y)
    for i in np.flatnonzero(mask.any(axis=1)):
        v = Y[i, mask[i]]
        u = np.sort(v)[::-1]
        css = np.cumsum(u) - 1.0
        t = css / np.arange(1, u.size + 1)
        k = np.flatnonzero(u - t > 0.0)[-1]
        X[i, mask[i]] = np.maximum(v - t[k], 0.0)
    return X


def gradient(W, mask, P, c_r, a0, a1):
    n = W.shape[0]
    G, ok = inflow(W)
    if not ok:
        return np.zeros_like(W), False
    ct = (W * P).sum(axis=1) + c_r
    ct[0] = 0.0
    ct[-1] = 0.0
    try:
        lam = np.linalg.solve(np.eye(n) - W, ct)
    except np.linalg.LinAlgError:
        return np.zeros_like(W), False
    relay = np.zeros(n)
    relay[1:-1] = 1.0
    g = a1 * G[:, None] * (relay[:, None] * P + lam[None, :])
    g[0] += a0 * P[0]
    return np.where(mask, g, 0.0), True


def pg_descent(W0, mask, P, c_r, c_e, a0, a1, max_iter, tol):
    W = W0.copy()
    J = objective(W, P, c_r, c_e, a0, a1)
    step = 1.0
    for it in range(max_iter):
        g, ok = gradient(W, mask, P, c_r, a0, a1)
        if not ok:
            return W, J, it
        if np.max(np.abs(_project(W - g, mask) - W)) < tol:
            return W, J, it
        s = min(2.0 * step, 1e6)
        for _ in range(60):
            Wn = _project(W - s * g, mask)
            Jn = objective(Wn, P, c_r, c_e, a0, a1)
            if Jn <= J + ARMIJO * np.sum(g * (Wn - W)):
                break
            s *= 0.5
        else:
            return W, J, it
        W, J, step = Wn, Jn, s
    return W, J, max_iter
