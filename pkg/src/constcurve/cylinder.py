"""
Constant-curvature curves on a circular cylinder of radius ``R``.

A unit-speed plane curve with tangent angle ``alpha(s)`` is rolled onto the
cylinder by ``(x, y) -> (x, R cos(y/R), R sin(y/R))``. Its space curvature
satisfies ``kappa**2 = sin(alpha)**4 / R**2 + alpha'**2``, which splits into
three regimes:

* ``kappa > 1/R``: ``alpha`` increases monotonically, the plane curve is a
  convex oval symmetric about the normals at ``alpha = 0`` and ``pi/2``.
* ``kappa < 1/R``: ``alpha`` oscillates between ``+-alpha_max`` with
  ``sin(alpha_max)**2 = kappa * R``; the rolled curve is periodic along the
  cylinder axis but not closed.
* ``kappa = 1/R``: ``alpha`` creeps towards ``pi/2`` and the rolled curve
  spirals towards a circle of latitude.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import BadInitialAngle, ImaginaryRate, RegimeViolation
from .geometry import Plane, SampledCurve, concatenate, reflect_curve
from .ode import EventSpec, IntegratorConfig, integrate_fixed, integrate_until_event, locate_crossings


def roll_to_cylinder(planar, R: float) -> SampledCurve:
    """Wrap plane coordinates ``(x, y)`` isometrically onto the cylinder
    around the x-axis. Accepts a :class:`SampledCurve` (its z is ignored) or
    an ``(n, 2)``/``(n, 3)`` array."""
    if not R > 0:
        raise ValueError("cylinder radius must be positive")
    if isinstance(planar, SampledCurve):
        xy, step, meta = planar.samples[:, :2], planar.step, dict(planar.meta)
    else:
        xy = np.asarray(planar, dtype=float)[:, :2]
        step = float(np.mean(np.linalg.norm(np.diff(xy, axis=0), axis=1)))
        meta = {}
    x, y = xy[:, 0], xy[:, 1]
    pts = np.column_stack([x, R * np.cos(y / R), R * np.sin(y / R)])
    meta.update(surface="cylinder", R=R)
    return SampledCurve(pts, step, meta=meta)


def alpha_rate(alpha: float, kappa: float, R: float) -> float:
    """Nonnegative ``alpha'`` from the first-order curvature relation."""
    disc = kappa * kappa - math.sin(alpha) ** 4 / (R * R)
    if disc < 0:
        raise ImaginaryRate(f"kappa = {kappa} is below the normal curvature at alpha = {alpha}")
    return math.sqrt(disc)


def alpha_accel(alpha: float, R: float) -> float:
    return -2.0 * math.sin(alpha) ** 3 * math.cos(alpha) / (R * R)


@njit(cache=True)
def _convex_by_angle(alpha, y, args):
    # state (s, x, y) as functions of alpha
    kappa, R = args[0], args[1]
    sa = math.sin(alpha)
    inv = 1.0 / math.sqrt(kappa * kappa - sa**4 / (R * R))
    out = np.empty(3)
    out[0] = inv
    out[1] = math.cos(alpha) * inv
    out[2] = sa * inv
    return out


@njit(cache=True)
def _convex_by_length(s, y, args):
    # state (x, y, alpha)
    kappa, R = args[0], args[1]
    a = y[2]
    out = np.empty(3)
    out[0] = math.cos(a)
    out[1] = math.sin(a)
    out[2] = math.sqrt(max(kappa * kappa - math.sin(a) ** 4 / (R * R), 0.0))
    return out


@njit(cache=True)
def _second_order(s, y, args):
    # state (x, y, alpha, alpha')
    R = args[1]
    a = y[2]
    out = np.empty(4)
    out[0] = math.cos(a)
    out[1] = math.sin(a)
    out[2] = y[3]
    out[3] = -2.0 * math.sin(a) ** 3 * math.cos(a) / (R * R)
    return out


@njit(cache=True)
def _turning(s, y, args):
    return y[3]


@njit(cache=True)
def _separatrix(s, y, args):
    # state (x, y, eps) with eps = pi/2 - alpha, on the kappa = 1/R level set:
    # eps' = -sqrt(1 - cos(eps)**4) / R, factored to avoid cancellation near 0
    R = args[1]
    e = y[2]
    out = np.empty(3)
    out[0] = math.sin(e)
    out[1] = math.cos(e)
    out[2] = -math.sin(e) * math.sqrt(1.0 + math.cos(e) ** 2) / R
    return out


def _planar(traj_xy: np.ndarray, step: float, meta: dict, **channels) -> SampledCurve:
    pts = np.column_stack([traj_xy[:, 0], traj_xy[:, 1], np.zeros(len(traj_xy))])
    return SampledCurve(pts, step, meta=meta, channels=channels)


def convex_closed_curve(kappa: float, R: float, config: IntegratorConfig = IntegratorConfig()) -> SampledCurve:
    """Closed plane oval (z = 0) whose rolled image has curvature ``kappa``.

    The quarter arc ``alpha: 0 -> pi/2`` is first integrated with ``alpha``
    as the independent variable to get its exact length, then re-integrated
    in arclength with the step adjusted to divide that length, and finally
    mirrored in the normals at its two ends.
    """
    if not R > 0 or not kappa > 1.0 / R:
        raise RegimeViolation(f"convex regime needs kappa > 1/R (kappa={kappa}, R={R})")
    args = (kappa, R)
    by_angle = integrate_fixed(_convex_by_angle, [0.0, 0.0, 0.0], (0.0, math.pi / 2),
                               IntegratorConfig(step=min(config.step, 1e-3)), args=args)
    quarter_len, qx, qy = by_angle.y[-1]
    n = max(4, int(round(quarter_len / config.step)))
    h = quarter_len / n
    traj = integrate_fixed(_convex_by_length, [0.0, 0.0, 0.0], (0.0, quarter_len),
                           IntegratorConfig(step=h, max_length=quarter_len), args=args)
    xy, alpha = traj.y[:, :2], traj.y[:, 2]

    meta = dict(construction="cylinder-convex", kappa=kappa, R=R, quarter_length=quarter_len,
                quarter_end_mismatch=float(np.hypot(xy[-1, 0] - qx, xy[-1, 1] - qy)),
                alpha_end_error=float(alpha[-1] - math.pi / 2))
    quarter = _planar(xy, h, meta)
    half = concatenate([quarter, reflect_curve(quarter, Plane(quarter.samples[-1], [0, 1, 0])).reversed()])
    full = concatenate([half, reflect_curve(half, Plane([0, 0, 0], [1, 0, 0])).reversed()])
    half_alpha = np.concatenate([alpha, (math.pi - alpha)[::-1][1:]])
    full.channels["alpha"] = np.concatenate([half_alpha, (2 * math.pi - half_alpha)[::-1][1:]])
    return full


def oscillating_curve(kappa: float, R: float, n_halfperiods: int = 2,
                      config: IntegratorConfig = IntegratorConfig()) -> SampledCurve:
    """Sine-like plane curve through ``n_halfperiods`` turning points.

    Starts on the oscillation axis with ``alpha = 0, alpha' = kappa`` and
    integrates the second-order equation. Samples stop at the last grid
    point before the final turning event; the turning events themselves are
    reported in ``meta``.
    """
    if not R > 0 or not 0 < kappa < 1.0 / R:
        raise RegimeViolation(f"oscillating regime needs 0 < kappa < 1/R (kappa={kappa}, R={R})")
    if n_halfperiods < 1:
        raise ValueError("n_halfperiods must be at least 1")
    args = (kappa, R)
    y0 = [0.0, 0.0, 0.0, kappa]
    first = integrate_until_event(_second_order, y0, EventSpec(_turning, "falling"), config, args=args)
    h = config.step
    n_steps = int(math.ceil((2 * n_halfperiods - 1) * first.event_s / h)) + 3
    cfg = IntegratorConfig(step=h, max_length=n_steps * h, event_tolerance=config.event_tolerance)
    traj = integrate_fixed(_second_order, y0, (0.0, n_steps * h), cfg, args=args)
    events = locate_crossings(_second_order, traj, EventSpec(_turning, "any"), cfg, args=args)[:n_halfperiods]
    if len(events) < n_halfperiods:
        raise RuntimeError("turning events missing from the periodic trajectory")
    keep = traj.s <= events[-1][0] + 1e-12
    y = traj.y[keep]
    meta = dict(construction="cylinder-oscillating", kappa=kappa, R=R, n_halfperiods=n_halfperiods,
                alpha_max=math.asin(math.sqrt(kappa * R)),
                turning_s=[float(s) for s, _ in events],
                turning_alpha=[float(st[2]) for _, st in events],
                turning_xy=[[float(st[0]), float(st[1])] for _, st in events])
    return _planar(y[:, :2], h, meta, alpha=y[:, 2], alpha_prime=y[:, 3])


def energy_residual(curve: SampledCurve) -> np.ndarray:
    """``kappa^2 - alpha'^2 - sin(alpha)^4 / R^2`` along an oscillating curve."""
    k, R = curve.meta["kappa"], curve.meta["R"]
    a, ap = curve.channels["alpha"], curve.channels["alpha_prime"]
    return k * k - ap * ap - np.sin(a) ** 4 / (R * R)


def asymptotic_spiral(R: float, alpha0: float, length: float,
                      config: IntegratorConfig = IntegratorConfig()) -> SampledCurve:
    """Plane curve for ``kappa = 1/R`` starting at angle ``alpha0``.

    Integrates the first-order relation on the co-angle ``pi/2 - alpha``
    (channel ``co_angle``), which decays exponentially but stays positive
    and fully resolved in floating point. ``alpha0 = pi/2`` gives the
    constant solution, a circle of latitude once rolled.
    """
    if not R > 0:
        raise ValueError("cylinder radius must be positive")
    if not 0 < alpha0 <= math.pi / 2:
        raise BadInitialAngle(f"alpha0 must lie in (0, pi/2], got {alpha0}")
    if not length > 0:
        raise ValueError("length must be positive")
    n = max(4, int(math.ceil(length / config.step)))
    h = length / n
    traj = integrate_fixed(_separatrix, [0.0, 0.0, math.pi / 2 - alpha0], (0.0, length),
                           IntegratorConfig(step=h, max_length=length), args=(1.0 / R, R))
    eps = traj.y[:, 2]
    meta = dict(construction="cylinder-asymptotic", kappa=1.0 / R, R=R, alpha0=alpha0, length=length)
    return _planar(traj.y[:, :2], h, meta, alpha=math.pi / 2 - eps, co_angle=eps, s=traj.s)
