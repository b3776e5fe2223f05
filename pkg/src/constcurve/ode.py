"""
Fixed-step classical RK4 with event localization.

Right-hand sides have the signature ``derivative(s, y, args) -> dy`` and an
optional ``post_step(y, args) -> y`` hook runs after every accepted step
(used for frame re-orthonormalization and surface projection). Event
indicators are ``indicator(s, y, args) -> float``.

When ``derivative``, ``post_step`` and ``indicator`` are all ``numba``
jitted functions the stepping loop itself runs compiled; any plain Python
callable selects an equivalent pure-Python loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit
from numba.core.registry import CPUDispatcher

from .errors import EventNotFound, NonFiniteDerivative
from .solvers import Bracket, bisect

_DIRECTIONS = {"rising": 1, "falling": -1, "any": 0}


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-3
    max_length: float = 100.0
    event_tolerance: float = 1e-10
    method: str = "rk4"

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.max_length >= self.step:
            raise ValueError("max_length must be at least one step")
        if not self.event_tolerance > 0:
            raise ValueError("event_tolerance must be positive")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}")


@dataclass(frozen=True)
class EventSpec:
    indicator: Callable
    direction: str = "any"

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {sorted(_DIRECTIONS)}")


@dataclass
class Trajectory:
    s: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.s)


@dataclass
class EventResult:
    trajectory: Trajectory
    event_s: float
    event_state: np.ndarray


@njit(cache=True)
def _identity(y, args):
    return y


# drivers take jitted callables as arguments; numba cannot cache those reliably
@njit
def _rk4_step_jit(f, s, y, h, args):
    k1 = f(s, y, args)
    k2 = f(s + 0.5 * h, y + 0.5 * h * k1, args)
    k3 = f(s + 0.5 * h, y + 0.5 * h * k2, args)
    k4 = f(s + h, y + h * k3, args)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit
def _fixed_loop_jit(f, post, y0, s0, h, n_full, last_h, args):
    n = n_full + (1 if last_h > 0.0 else 0)
    ys = np.empty((n + 1, y0.size))
    ss = np.empty(n + 1)
    ys[0] = y0
    ss[0] = s0
    y = y0.copy()
    for i in range(n):
        hi = h if i < n_full else last_h
        s = s0 + i * h
        y = post(_rk4_step_jit(f, s, y, hi, args), args)
        if not np.all(np.isfinite(y)):
            return ss[: i + 1], ys[: i + 1], False
        ys[i + 1] = y
        ss[i + 1] = s0 + n_full * h + last_h if i == n - 1 else s0 + (i + 1) * h
    return ss, ys, True


@njit
def _event_loop_jit(f, post, ind, direction, y0, s0, h, n_max, args):
    ys = np.empty((n_max + 1, y0.size))
    ss = np.empty(n_max + 1)
    ys[0] = y0
    ss[0] = s0
    y = y0.copy()
    g_prev = ind(s0, y, args)
    for i in range(n_max):
        s = s0 + i * h
        y = post(_rk4_step_jit(f, s, y, h, args), args)
        if not np.all(np.isfinite(y)):
            return ss[: i + 1], ys[: i + 1], 2
        ys[i + 1] = y
        ss[i + 1] = s0 + (i + 1) * h
        g = ind(ss[i + 1], y, args)
        if (direction >= 0 and g_prev < 0.0 and g >= 0.0) or (direction <= 0 and g_prev > 0.0 and g <= 0.0):
            return ss[: i + 2], ys[: i + 2], 0
        g_prev = g
    return ss, ys, 1


def _is_jit(fn) -> bool:
    return isinstance(fn, CPUDispatcher)


def _as_args(args):
    return np.asarray(args if args is not None else (), dtype=float)


def rk4_step(derivative, s: float, y: np.ndarray, h: float, args=()) -> np.ndarray:
    k1 = derivative(s, y, args)
    k2 = derivative(s + 0.5 * h, y + 0.5 * h * k1, args)
    k3 = derivative(s + 0.5 * h, y + 0.5 * h * k2, args)
    k4 = derivative(s + h, y + h * k3, args)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_count(length: float, h: float) -> tuple[int, float]:
    n_full = int(math.floor(length / h * (1.0 + 1e-12)))
    last_h = length - n_full * h
    if last_h <= 1e-9 * h:
        last_h = 0.0
    return n_full, last_h


def integrate_fixed(derivative, state0, s_span, config: IntegratorConfig, *, args=(),
                    post_step=None) -> Trajectory:
    """RK4 with ``config.step`` from ``s_span[0]``; a final partial step lands
    exactly on ``s_span[1]``. Both endpoints are included."""
    s0, s1 = float(s_span[0]), float(s_span[1])
    if not s1 > s0:
        raise ValueError("integration interval must have s1 > s0")
    y0 = np.asarray(state0, dtype=float).copy()
    h = config.step
    n_full, last_h = _step_count(s1 - s0, h)
    a = _as_args(args)
    post = post_step if post_step is not None else _identity

    if _is_jit(derivative) and _is_jit(post):
        ss, ys, ok = _fixed_loop_jit(derivative, post, y0, s0, h, n_full, last_h, a)
        if not ok:
            raise NonFiniteDerivative(f"non-finite state after s = {ss[-1]:.6g}")
        ss[-1] = s1
        return Trajectory(ss, ys)

    n = n_full + (1 if last_h > 0 else 0)
    ys = np.empty((n + 1, y0.size))
    ss = s0 + h * np.arange(n + 1, dtype=float)
    ss[-1] = s1
    ys[0] = y0
    y = y0
    for i in range(n):
        hi = h if i < n_full else last_h
        y = post(rk4_step(derivative, ss[i], y, hi, a), a)
        if not np.all(np.isfinite(y)):
            raise NonFiniteDerivative(f"non-finite state after s = {ss[i]:.6g}")
        ys[i + 1] = y
    return Trajectory(ss, ys)


def hermite(s0, y0, f0, s1, y1, f1, s):
    """Cubic Hermite interpolant of one step, evaluated at ``s``."""
    h = s1 - s0
    t = (s - s0) / h
    t2, t3 = t * t, t * t * t
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * f0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * f1)


def refine_event(derivative, indicator, s0, y0, s1, y1, config: IntegratorConfig, args=(),
                 post_step=None) -> tuple[float, np.ndarray]:
    """Bisect ``indicator`` on the Hermite interpolant of the step [s0, s1]."""
    a = _as_args(args)
    f0 = derivative(s0, y0, a)
    f1 = derivative(s1, y1, a)

    def g(s):
        return indicator(s, hermite(s0, y0, f0, s1, y1, f1, s), a)

    g0, g1 = indicator(s0, y0, a), indicator(s1, y1, a)
    if g1 == 0.0:
        s_star = s1
    else:
        s_star = bisect(g, Bracket(s0, s1, g0, g1), x_tol=config.event_tolerance, max_iter=200)
    state = y1.copy() if s_star == s1 else hermite(s0, y0, f0, s1, y1, f1, s_star)
    if post_step is not None:
        state = post_step(state, a)
    return s_star, state


def integrate_until_event(derivative, state0, event: EventSpec, config: IntegratorConfig, *,
                          s0: float = 0.0, args=(), post_step=None) -> EventResult:
    """Step until ``event.indicator`` crosses zero in ``event.direction``, then
    localize the crossing. The returned trajectory ends at the event state."""
    y0 = np.asarray(state0, dtype=float).copy()
    h = config.step
    n_max = int(math.ceil(config.max_length / h))
    a = _as_args(args)
    post = post_step if post_step is not None else _identity
    direction = _DIRECTIONS[event.direction]

    if _is_jit(derivative) and _is_jit(post) and _is_jit(event.indicator):
        ss, ys, status = _event_loop_jit(derivative, post, event.indicator, direction, y0, float(s0), h, n_max, a)
    else:
        ss, ys, status = _event_loop_py(derivative, post, event.indicator, direction, y0, float(s0), h, n_max, a)
    if status == 2:
        raise NonFiniteDerivative(f"non-finite state after s = {ss[-1]:.6g}")
    if status == 1:
        raise EventNotFound(f"no {event.direction} crossing of the event indicator within length {config.max_length}")

    s_star, state = refine_event(derivative, event.indicator, ss[-2], ys[-2], ss[-1], ys[-1],
                                 config, a, post_step)
    traj = Trajectory(np.append(ss[:-1], s_star), np.vstack([ys[:-1], state]))
    if s_star - ss[-2] <= 1e-12 * h:  # event on the previous grid point
        traj = Trajectory(ss[:-1].copy(), ys[:-1].copy())
        traj.y[-1] = state
        traj.s[-1] = s_star
    return EventResult(traj, s_star, state)


def _event_loop_py(f, post, ind, direction, y0, s0, h, n_max, args):
    ys = np.empty((n_max + 1, y0.size))
    ss = s0 + h * np.arange(n_max + 1, dtype=float)
    ys[0] = y0
    y = y0
    g_prev = ind(s0, y, args)
    for i in range(n_max):
        y = post(rk4_step(f, ss[i], y, h, args), args)
        if not np.all(np.isfinite(y)):
            return ss[: i + 1], ys[: i + 1], 2
        ys[i + 1] = y
        g = ind(ss[i + 1], y, args)
        if (direction >= 0 and g_prev < 0 <= g) or (direction <= 0 and g_prev > 0 >= g):
            return ss[: i + 2], ys[: i + 2], 0
        g_prev = g
    return ss, ys, 1


def locate_crossings(derivative, trajectory: Trajectory, event: EventSpec,
                     config: IntegratorConfig, *, args=(), post_step=None) -> list[tuple[float, np.ndarray]]:
    """All crossings of ``event.indicator`` along an existing trajectory,
    each localized on the Hermite interpolant of its step."""
    a = _as_args(args)
    direction = _DIRECTIONS[event.direction]
    g = np.array([event.indicator(s, y, a) for s, y in zip(trajectory.s, trajectory.y)])
    found = []
    for i in range(len(g) - 1):
        rising = g[i] < 0 <= g[i + 1]
        falling = g[i] > 0 >= g[i + 1]
        if (direction >= 0 and rising) or (direction <= 0 and falling):
            found.append(refine_event(derivative, event.indicator, trajectory.s[i], trajectory.y[i],
                                      trajectory.s[i + 1], trajectory.y[i + 1], config, a, post_step))
    return found
