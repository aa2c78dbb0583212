"""Shooting solver for the known-trajectory lifetime problem.

The source follows a parametric motion ``(x', y') = f(x, y)``.  With the
relay energy costates at zero and the source costate ``nu < 0`` constant,
the Hamiltonian is minimised pointwise by the cheapest source arc, so the
forward pass needs only the sign of ``nu``.  The unknowns
``(T, nu, mu_x, mu_y)`` are then fitted to the terminal conditions by damped
Gauss-Newton on a finite-difference Jacobian.

Note that ``mu_x``/``mu_y`` enter only through the transversality equation,
so ``(nu, mu_x, mu_y)`` are fixed only up to a plane.  The Newton step is a
least-norm solve with the ``mu`` columns scaled down by ``MU_SCALE``, so
``mu`` stays at its guess (0 by default) and ``nu`` absorbs the equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NoRoute, ShootingDiverged
from .model import (
    EnergyParams,
    NetworkState,
    Position,
    Topology,
    adjacency,
    flow_solve,
    source_distances,
    transmit_costs,
    uniform_rows,
    workloads,
)
from .trajectory import Parametric

VARIANTS = ("printed", "single")
MU_SCALE = 1e-3


@dataclass
class CostateState:
    lambda_r: np.ndarray
    lambda_x: float
    lambda_y: float


@dataclass
class ShootingUnknowns:
    T: float
    nu: float
    mu_x: float = 0.0
    mu_y: float = 0.0

    def as_array(self):
        return np.array([self.T, self.nu, self.mu_x, self.mu_y], dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(*(float(v) for v in a))


@dataclass
class TerminalValues:
    r0: float
    r0_dot: float
    x_dot: float
    y_dot: float
    lambda_x: float
    lambda_y: float
    dFx: float
    dFy: float
    costate_error: float = 0.0


@dataclass
class ShootingResult:
    unknowns: ShootingUnknowns
    residual: np.ndarray
    residual_norm: float
    iterations: int
    trace: dict = field(repr=False)


def _require_beta2(params):
    if params.beta != 2.0:
        raise ValueError("costate equations are only valid for beta == 2")


def pointwise_control(topology: Topology, state: NetworkState, pos: Position,
                      params: EnergyParams, costates: CostateState) -> np.ndarray:
    """Routing that minimises the Hamiltonian at one instant.

    Only ``-nu * I_0`` depends on the routing, so with ``nu < 0`` this is
    the cheapest-source-arc vertex with uniform relay rows.
    """
    lam = np.asarray(costates.lambda_r, dtype=float)
    if not lam[0] < 0:
        raise ValueError("source costate must be negative")
    if np.any(lam[1:] != 0):
        raise ValueError("relay costates must be zero")
    return _control(topology, state, pos, params)[1]


def _control(topology, state, pos, params):
    A = adjacency(topology, state, source_distances(topology, pos))
    if not A[0].any():
        raise NoRoute(f"source at ({pos.x}, {pos.y}) has no out-neighbors")
    P = transmit_costs(topology, pos, params)
    cand = np.flatnonzero(A[0])
    j = int(cand[np.argmin(P[0, cand])])
    W = uniform_rows(A, range(1, A.shape[0]))
    W[0, j] = 1.0
    return j, W


def costate_rhs(t, lam_xy, w, pos: Position, motion: Parametric, topology: Topology,
                params: EnergyParams, nu: float) -> np.ndarray:
    """Time derivatives of the position costates."""
    _require_beta2(params)
    lx, ly = lam_xy
    J = motion.jacobian(pos.x, pos.y)
    rel = pos.as_array()[None, :] - topology.positions
    pull = 2.0 * params.c_s * nu * (w[0][1:, None] * rel[1:]).sum(axis=0)
    return np.array([
        pull[0] - lx * J[0, 0] - ly * J[1, 0],
        pull[1] - lx * J[0, 1] - ly * J[1, 1],
    ])


def transversality_residual(unknowns: ShootingUnknowns, term: TerminalValues,
                            variant: str = "printed") -> np.ndarray:
    """``[transversality, r_0(T), costate consistency]``.

    ``"printed"`` counts ``nu * r0'`` and the ``mu`` velocity terms twice;
    ``"single"`` is ``H(T)`` plus the explicit time derivative of the
    terminal penalty.
    """
    u = unknowns
    h = -1.0 + u.nu * term.r0_dot + term.lambda_x * term.x_dot + term.lambda_y * term.y_dot
    if variant == "printed":
        eq = (h + u.nu * term.r0_dot + u.mu_x * term.x_dot - u.mu_x * term.dFx
              + u.mu_y * term.y_dot - u.mu_y * term.dFy)
    elif variant == "single":
        eq = h - u.mu_x * term.dFx - u.mu_y * term.dFy
    else:
        raise ValueError(f"variant must be one of {VARIANTS}")
    return np.array([eq, term.r0, term.costate_error])


class _Problem:
    def __init__(self, topology, energies, motion, params):
        if not isinstance(motion, Parametric):
            raise ConfigError("shooting needs a parametric trajectory")
        _require_beta2(params)
        self.topology = topology
        self.R = np.asarray(energies, dtype=float)
        self.motion = motion
        self.params = params
        self.state = NetworkState.initial_state(self.R)
        self._flows = {}

    def vertex(self, t):
        return _control(self.topology, self.state, self.motion.position_at(t), self.params)

    def _flow(self, j, W):
        if j not in self._flows:
            self._flows[j] = flow_solve(W)
        return self._flows[j]

    def rhs(self, y, j, W):
        pos = Position(y[-2], y[-1])
        P = transmit_costs(self.topology, pos, self.params)
        I = workloads(W, self._flow(j, W), P, self.params)
        fx, fy = self.motion.velocity(pos.x, pos.y)
        return np.concatenate([-I[:-1], [fx, fy]])

    def segments(self, t0, t1):
        """Split ``[t0, t1]`` at control switches located by bisection."""
        out = []
        a = t0
        ja, Wa = self.vertex(a)
        while True:
            jb, _ = self.vertex(t1)
            if jb == ja:
                out.append((a, t1, ja, Wa))
                return out
            lo, hi = a, t1
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if self.vertex(mid)[0] == ja:
                    lo = mid
                else:
                    hi = mid
            out.append((a, hi, ja, Wa))
            a = hi
            ja, Wa = self.vertex(a)

    def forward(self, T, n_steps):
        h = T / n_steps
        p0 = self.motion.position_at(0.0)
        y = np.concatenate([self.R, [p0.x, p0.y]])
        ts, ys, js, segs = [0.0], [y.copy()], [], []
        for k in range(n_steps):
            t0, t1 = k * h, T if k == n_steps - 1 else (k + 1) * h
            for a, b, j, W in self.segments(t0, t1):
                y = _rk4(lambda _t, v: self.rhs(v, j, W), a, y, b - a)
                segs.append((a, b, j, W))
                ts.append(b)
                ys.append(y.copy())
                js.append(j)
        return np.array(ts), np.array(ys), js, segs

    def backward(self, segs, nu, mu_x, mu_y):
        lam = np.array([mu_x, mu_y], dtype=float)
        out = [lam.copy()]
        for a, b, j, W in reversed(segs):
            def f(t, v, W=W):
                return costate_rhs(t, v, W, self.motion.position_at(t), self.motion,
                                   self.topology, self.params, nu)
            lam = _rk4(f, b, lam, a - b)
            out.append(lam.copy())
        return np.array(out[::-1])


def _rk4(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _evaluate(prob: _Problem, u: ShootingUnknowns, n_steps, variant, full=False):
    ts, ys, js, segs = prob.forward(u.T, n_steps)
    lam_xy = prob.backward(segs, u.nu, u.mu_x, u.mu_y)
    lam_r = np.zeros(prob.R.size)
    lam_r[0] = u.nu
    # relay costates are identically zero and the source costate is the constant nu
    costate_err = float(np.abs(lam_r[1:]).sum() + abs(lam_r[0] - u.nu))
    a, b, j, W = segs[-1]
    yT = ys[-1]
    dT = prob.rhs(yT, j, W)
    dFx, dFy = prob.motion.terminal_rate(u.T)
    term = TerminalValues(r0=float(yT[0]), r0_dot=float(dT[0]), x_dot=float(dT[-2]),
                          y_dot=float(dT[-1]), lambda_x=float(lam_xy[-1, 0]),
                          lambda_y=float(lam_xy[-1, 1]), dFx=float(dFx), dFy=float(dFy),
                          costate_error=costate_err)
    res = transversality_residual(u, term, variant)
    if not full:
        return res
    trace = {
        "t": ts,
        "r": ys[:, :-2],
        "x": ys[:, -2],
        "y": ys[:, -1],
        "lambda_x": lam_xy[:, 0],
        "lambda_y": lam_xy[:, 1],
        "control": np.array([js[0]] + js),
        "terminal": term,
    }
    return res, trace


def default_guess(topology, energies, motion, params) -> ShootingUnknowns:
    prob = _Problem(topology, energies, motion, params)
    p0 = motion.position_at(0.0)
    j, W = prob.vertex(0.0)
    I0 = float(transmit_costs(topology, p0, params)[0, j] + params.c_e)
    return ShootingUnknowns(T=prob.R[0] / I0, nu=-1.0)


def shoot(topology: Topology, energies, motion: Parametric, params: EnergyParams,
          guess: ShootingUnknowns | None = None, *, n_steps: int = 400, tol: float = 1e-10,
          accept: float = 1e-4, max_iter: int = 50, variant: str = "printed") -> ShootingResult:
    """Fit ``(T, nu, mu_x, mu_y)`` so the terminal residual vanishes.

    Iterates until ``max|residual| <= tol``; if the budget runs out, the best
    iterate is returned when it is within ``accept`` and
    :class:`ShootingDiverged` is raised otherwise.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    prob = _Problem(topology, energies, motion, params)
    if guess is None:
        guess = default_guess(topology, energies, motion, params)
    x = guess.as_array()
    if not (np.isfinite(x).all() and x[0] > 0):
        raise ValueError("guess must be finite with T > 0")

    def F(v):
        try:
            return _evaluate(prob, ShootingUnknowns.from_array(v), n_steps, variant)
        except (NoRoute, FloatingPointError):
            return np.full(3, np.inf)

    f = F(x)
    best_x, best_norm = x.copy(), float(np.max(np.abs(f)))
    it = 0
    for it in range(1, max_iter + 1):
        if best_norm <= tol:
            break
        J = np.empty((3, 4))
        for c in range(4):
            e = 1e-7 * max(1.0, abs(x[c]))
            xp = x.copy()
            xp[c] += e
            J[:, c] = (F(xp) - f) / e
        if not np.isfinite(J).all():
            break
        D = np.array([1.0, 1.0, MU_SCALE, MU_SCALE])
        dx = D * np.linalg.lstsq(J * D, -f, rcond=None)[0]
        norm = float(np.max(np.abs(f)))
        alpha = 1.0
        for _ in range(40):
            xn = x + alpha * dx
            if xn[0] > 0:
                fn = F(xn)
                nn = float(np.max(np.abs(fn)))
                if nn < norm:
                    break
            alpha *= 0.5
        else:
            break
        x, f = xn, fn
        if nn < best_norm:
            best_x, best_norm = x.copy(), nn
    best = ShootingUnknowns.from_array(best_x)
    if not best_norm <= accept:
        raise ShootingDiverged(f"residual {best_norm:.3e} above {accept:.1e} after {it} iterations",
                               best=best, residual_norm=best_norm)
    res, trace = _evaluate(prob, best, n_steps, variant, full=True)
    return ShootingResult(best, res, float(np.max(np.abs(res))), it, trace)
