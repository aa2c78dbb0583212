"""Loop kernels compiled with numba.

Routing matrices are dense ``(n, n)`` float arrays with the source in row 0
and the base in row ``n - 1``.  Every function here has a counterpart with the
same signature in :mod:`wsnlife.kernels._numpy`.
"""

import numpy as np
from numba import njit

PIVOT_TOL = 1e-12
NEG_TOL = 1e-12
DELIVER_TOL = 1e-9
ARMIJO = 1e-4


@njit(cache=True)
def _solve(A, b):
    n = A.shape[0]
    A = A.copy()
    x = b.copy()
    for c in range(n):
        p = c
        best = abs(A[c, c])
        for r in range(c + 1, n):
            if abs(A[r, c]) > best:
                best = abs(A[r, c])
                p = r
        if best < PIVOT_TOL:
            return x, False
        if p != c:
            for k in range(n):
                tmp = A[c, k]
                A[c, k] = A[p, k]
                A[p, k] = tmp
            tmp = x[c]
            x[c] = x[p]
            x[p] = tmp
        for r in range(c + 1, n):
            f = A[r, c] / A[c, c]
            if f != 0.0:
                for k in range(c, n):
                    A[r, k] -= f * A[c, k]
                x[r] -= f * x[c]
    for c in range(n - 1, -1, -1):
        s = x[c]
        for k in range(c + 1, n):
            s -= A[c, k] * x[k]
        x[c] = s / A[c, c]
    return x, True


@njit(cache=True)
def _reachable(W):
    n = W.shape[0]
    seen = np.zeros(n, np.bool_)
    seen[0] = True
    stack = np.empty(n, np.int64)
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        k = stack[top]
        for j in range(n):
            if W[k, j] > 0.0 and not seen[j]:
                seen[j] = True
                stack[top] = j
                top += 1
    return seen


@njit(cache=True)
def inflow(W):
    n = W.shape[0]
    seen = _reachable(W)
    A = np.eye(n)
    for k in range(n):
        if seen[k]:
            for i in range(n):
                A[i, k] -= W[k, i]
    b = np.zeros(n)
    b[0] = 1.0
    G, ok = _solve(A, b)
    if not ok:
        return G, False
    for i in range(n):
        if G[i] < -NEG_TOL:
            return G, False
        if G[i] < 0.0:
            G[i] = 0.0
    return G, True


@njit(cache=True)
def workloads(W, G, P, c_r, c_e):
    n = W.shape[0]
    out = np.zeros(n)
    s = 0.0
    for j in range(n):
        s += W[0, j] * P[0, j]
    out[0] = s + c_e
    for i in range(1, n - 1):
        if G[i] == 0.0:
            continue
        s = 0.0
        for j in range(n):
            s += W[i, j] * P[i, j]
        out[i] = G[i] * (s + c_r)
    return out


@njit(cache=True)
def _objective(W, G, P, c_r, c_e, a0, a1):
    I = workloads(W, G, P, c_r, c_e)
    s = 0.0
    for i in range(1, W.shape[0] - 1):
        s += I[i]
    return a0 * I[0] + a1 * s


@njit(cache=True)
def objective(W, P, c_r, c_e, a0, a1):
    G, ok = inflow(W)
    if not ok:
        return np.inf
    return _objective(W, G, P, c_r, c_e, a0, a1)


@njit(cache=True)
def enumerate_objectives(rows, ptr, cols, P, c_r, c_e, a0, a1, total):
    n = P.shape[0]
    R = rows.shape[0]
    out = np.empty(total)
    digit = np.zeros(R, np.int64)
    W = np.zeros((n, n))
    for r in range(R):
        W[rows[r], cols[ptr[r]]] = 1.0
    for m in range(total):
        G, ok = inflow(W)
        if ok and G[n - 1] >= 1.0 - DELIVER_TOL:
            out[m] = _objective(W, G, P, c_r, c_e, a0, a1)
        else:
            out[m] = np.inf
        r = R - 1
        while r >= 0:
            W[rows[r], cols[ptr[r] + digit[r]]] = 0.0
            digit[r] += 1
            if digit[r] < ptr[r + 1] - ptr[r]:
                W[rows[r], cols[ptr[r] + digit[r]]] = 1.0
                break
            digit[r] = 0
            W[rows[r], cols[ptr[r]]] = 1.0
            r -= 1
    return out


@njit(cache=True)
def _project(Y, mask):
    n = Y.shape[0]
    X = np.zeros_like(Y)
    buf = np.empty(n)
    for i in range(n):
        m = 0
        for j in range(n):
            if mask[i, j]:
                buf[m] = Y[i, j]
                m += 1
        if m == 0:
            continue
        u = np.sort(buf[:m])[::-1]
        css = 0.0
        theta = 0.0
        for k in range(m):
            css += u[k]
            t = (css - 1.0) / (k + 1)
            if u[k] - t > 0.0:
                theta = t
        for j in range(n):
            if mask[i, j]:
                v = Y[i, j] - theta
                X[i, j] = v if v > 0.0 else 0.0
    return X


@njit(cache=True)
def gradient(W, mask, P, c_r, a0, a1):
    n = W.shape[0]
    g = np.zeros_like(W)
    G, ok = inflow(W)
    if not ok:
        return g, False
    ct = np.zeros(n)
    for i in range(1, n - 1):
        s = 0.0
        for j in range(n):
            s += W[i, j] * P[i, j]
        ct[i] = s + c_r
    lam, ok = _solve(np.eye(n) - W, ct)
    if not ok:
        return g, False
    for k in range(n):
        relay = 1 <= k <= n - 2
        for l in range(n):
            if not mask[k, l]:
                continue
            v = a1 * G[k] * lam[l]
            if relay:
                v += a1 * G[k] * P[k, l]
            if k == 0:
                v += a0 * P[0, l]
            g[k, l] = v
    return g, True


@njit(cache=True)
def pg_descent(W0, mask, P, c_r, c_e, a0, a1, max_iter, tol):
    W = W0.copy()
    J = objective(W, P, c_r, c_e, a0, a1)
    step = 1.0
    for it in range(max_iter):
        g, ok = gradient(W, mask, P, c_r, a0, a1)
        if not ok:
            return W, J, it
        Y = _project(W - g, mask)
        if np.max(np.abs(Y - W)) < tol:
            return W, J, it
        s = min(2.0 * step, 1e6)
        accepted = False
        Wn = W
        Jn = J
        for _ in range(60):
            Wn = _project(W - s * g, mask)
            Jn = objective(Wn, P, c_r, c_e, a0, a1)
            if Jn <= J + ARMIJO * np.sum(g * (Wn - W)):
                accepted = True
                break
            s *= 0.5
        if not accepted:
            return W, J, it
        W = Wn
        J = Jn
        step = s
    return W, J, max_iter
