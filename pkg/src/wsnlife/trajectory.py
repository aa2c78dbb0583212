"""Source-node trajectories.

``Stationary``, ``ConstantVelocity`` and ``Circular`` are parametric motion
families: besides positions they expose the velocity field ``f(x, y)``, its
Jacobian and the closed-form terminal map ``F(T)`` needed by the shooting
solver.  ``RandomWalk`` and ``Waypoints`` only answer position queries.

Random walk headings come from SplitMix64 so that a seed fixes the path
bit-for-bit on any platform::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z ^= z >> 31                      # all arithmetic mod 2**64
    u = (z >> 11) * 2**-53            # uniform in [0, 1)
    heading = 2 * pi * u
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Position

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53


class Trajectory:
    parametric = False

    def position_at(self, t: float) -> Position:
        raise NotImplementedError


class Parametric(Trajectory):
    """Motion ``(x', y') = f(x, y)`` with analytic partials and terminal map."""

    parametric = True

    def velocity(self, x, y):
        raise NotImplementedError

    def jacobian(self, x, y):
        """``[[dfx/dx, dfx/dy], [dfy/dx, dfy/dy]]``."""
        raise NotImplementedError

    def terminal(self, T):
        """Closed-form ``(F_x(T), F_y(T))``."""
        p = self.position_at(T)
        return p.x, p.y

    def terminal_rate(self, T):
        """``(dF_x/dT, dF_y/dT)``."""
        p = self.position_at(T)
        return self.velocity(p.x, p.y)


@dataclass(frozen=True)
class Stationary(Parametric):
    pos: Position

    def position_at(self, t):
        return self.pos

    def velocity(self, x, y):
        return 0.0, 0.0

    def jacobian(self, x, y):
        return np.zeros((2, 2))


@dataclass(frozen=True)
class ConstantVelocity(Parametric):
    start: Position
    vx: float
    vy: float

    def position_at(self, t):
        return Position(self.start.x + self.vx * t, self.start.y + self.vy * t)

    def velocity(self, x, y):
        return self.vx, self.vy

    def jacobian(self, x, y):
        return np.zeros((2, 2))


@dataclass(frozen=True)
class Circular(Parametric):
    """Counter-clockwise for positive ``angular_rate``; starts at angle ``phase``."""

    center: Position
    radius: float
    angular_rate: float
    phase: float = 0.0

    def position_at(self, t):
        a = self.phase + self.angular_rate * t
        return Position(self.center.x + self.radius * math.cos(a),
                        self.center.y + self.radius * math.sin(a))

    def velocity(self, x, y):
        w = self.angular_rate
        return -w * (y - self.center.y), w * (x - self.center.x)

    def jacobian(self, x, y):
        w = self.angular_rate
        return np.array([[0.0, -w], [w, 0.0]])


@dataclass(frozen=True)
class Waypoints(Trajectory):
    """Piecewise-linear path through ``(time, position)`` pairs; holds still outside them."""

    points: tuple

    def __post_init__(self):
        pts = tuple((float(t), p if isinstance(p, Position) else Position(*p)) for t, p in self.points)
        if not pts:
            raise ValueError("at least one waypoint required")
        times = [t for t, _ in pts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def position_at(self, t):
        times = [p[0] for p in self.points]
        if t <= times[0]:
            return self.points[0][1]
        if t >= times[-1]:
            return self.points[-1][1]
        k = bisect.bisect_right(times, t) - 1
        (t0, p0), (t1, p1) = self.points[k], self.points[k + 1]
        a = (t - t0) / (t1 - t0)
        return Position(p0.x + a * (p1.x - p0.x), p0.y + a * (p1.y - p0.y))


@dataclass(frozen=True)
class RandomWalk(Trajectory):
    """Constant-speed walk: every ``step_time`` a fresh heading, ``step_length`` per leg."""

    start: Position
    step_length: float
    seed: int
    step_time: float = 1.0
    _legs: list = field(default_factory=list, init=False, repr=False, compare=False)
    _rng: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.step_time > 0:
            raise ValueError("step_time must be > 0")
        self._legs.append((self.start.x, self.start.y))
        self._rng.append(SplitMix64(self.seed))

    def _vertex(self, k):
        rng = self._rng[0]
        while len(self._legs) <= k:
            x, y = self._legs[-1]
            a = 2.0 * math.pi * rng.uniform()
            self._legs.append((x + self.step_length * math.cos(a), y + self.step_length * math.sin(a)))
        return self._legs[k]

    def position_at(self, t):
        if t < 0:
            raise ValueError("t must be >= 0")
        s = t / self.step_time
        k = int(math.floor(s))
        a = s - k
        x0, y0 = self._vertex(k)
        if a == 0.0:
            return Position(x0, y0)
        x1, y1 = self._vertex(k + 1)
        return Position(x0 + a * (x1 - x0), y0 + a * (y1 - y0))
