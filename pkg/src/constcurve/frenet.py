"""
Space curves of constant curvature from prescribed torsion.

The Frenet-Serret system used here is

    c' = e1,  e1' = kappa e2,  e2' = -kappa e1 - tau e3,  e3' = tau e2,

with ``tau(s) = b + c sin s + d sin 2s + e sin 3s``. The sign in front of
``tau`` is opposite to the more common convention; a right-handed helix has
negative torsion here.

Symmetries of ``tau`` become symmetries of the curve:

* ``b = 0`` makes ``tau`` odd about every ``s = n pi``, and the normal planes
  there are mirror planes of the curve. They all contain one line, and the
  curve closes when their dihedral angle is a rational multiple of ``pi``.
* ``d = 0`` makes ``tau`` even about every ``s = pi/2 + n pi``, and the
  principal normals there are axes of 180 degree rotations. Once ``b`` is
  adjusted so that these normals meet in a point, closure again reduces to
  a rational angle between neighbours.

Integration uses ``pi / N`` steps with ``N`` even so that all symmetry
points are grid samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import (ClosureNotReached, MaxIterExceeded, NotSkewSymmetric, NotSymmetric, ParallelLines,
                     SearchFailure)
from .geometry import (Frame, Line, Plane, SampledCurve, Screw, closure_report, least_squares_point,
                       line_line_geometry, motion_between_frames, plane_pencil, reflect_points,
                       rotate_points_180, screw_decompose)
from .ode import IntegratorConfig, integrate_fixed
from .solvers import bisect, make_bracket

_INDEX_TOL = 1e-9


@dataclass(frozen=True)
class TorsionPoly:
    """``tau(s) = b + c sin s + d sin 2s + e sin 3s``."""
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    e: float = 0.0

    def __call__(self, s):
        return torsion_eval(self, s)

    def as_array(self) -> np.ndarray:
        return np.array([self.b, self.c, self.d, self.e], dtype=float)

    def replace(self, **kw) -> "TorsionPoly":
        values = dict(b=self.b, c=self.c, d=self.d, e=self.e)
        values.update(kw)
        return TorsionPoly(**values)


def torsion_eval(t: TorsionPoly, s):
    s = np.asarray(s, dtype=float)
    out = t.b + t.c * np.sin(s) + t.d * np.sin(2 * s) + t.e * np.sin(3 * s)
    return float(out) if out.ndim == 0 else out


@njit(cache=True)
def _rhs(s, y, args):
    # args: kappa, b, c, d, e; state: c, e1, e2, e3
    kappa = args[0]
    tau = args[1] + args[2] * math.sin(s) + args[3] * math.sin(2.0 * s) + args[4] * math.sin(3.0 * s)
    out = np.empty(12)
    out[0:3] = y[3:6]
    out[3:6] = kappa * y[6:9]
    out[6:9] = -kappa * y[3:6] - tau * y[9:12]
    out[9:12] = tau * y[6:9]
    return out


@njit(cache=True)
def _gram_schmidt(y, args):
    e1 = y[3:6] / np.linalg.norm(y[3:6])
    e2 = y[6:9] - np.dot(y[6:9], e1) * e1
    e2 = e2 / np.linalg.norm(e2)
    out = y.copy()
    out[3:6] = e1
    out[6:9] = e2
    out[9:12] = np.cross(e1, e2)
    return out


def _args(kappa: float, t: TorsionPoly) -> np.ndarray:
    return np.concatenate([[kappa], t.as_array()])


def frenet_rhs(state, s: float, kappa: float, t: TorsionPoly) -> np.ndarray:
    """Derivative of the 12-vector ``(c, e1, e2, e3)``."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return _rhs(float(s), np.asarray(state, dtype=float), _args(kappa, t))


def initial_state(position=(0.0, 0.0, 0.0), frame: Frame | None = None) -> np.ndarray:
    f = frame or Frame.identity()
    return np.concatenate([np.asarray(position, dtype=float), f.e1, f.e2, f.e3])


def steps_per_pi(step: float) -> int:
    """Even number of steps per ``pi`` closest to, but not coarser than, ``step``."""
    return 2 * int(math.ceil(math.pi / (2.0 * step) - 1e-9))


@dataclass
class FrenetSolution:
    curve: SampledCurve
    kappa: float
    torsion: TorsionPoly
    per_pi: int = field(default=0)

    @property
    def s_end(self) -> float:
        return (len(self.curve) - 1) * self.curve.step

    def index(self, s: float) -> int:
        k = s / self.curve.step
        i = int(round(k))
        if abs(k - i) > _INDEX_TOL * max(1.0, abs(k)) or not 0 <= i < len(self.curve):
            raise ValueError(f"s = {s} is not a sample of this solution")
        return i

    def position(self, s: float) -> np.ndarray:
        return self.curve.samples[self.index(s)]

    def frame(self, s: float) -> Frame:
        return Frame(self.curve.frames[self.index(s)])

    def symmetry_points(self, offset: float) -> list[float]:
        """``offset + n pi`` within ``[0, s_end]``."""
        n_max = int(math.floor((self.s_end - offset) / math.pi + 1e-9))
        return [offset + n * math.pi for n in range(n_max + 1)]


def integrate_frenet(kappa: float, t: TorsionPoly, s_end: float,
                     config: IntegratorConfig = IntegratorConfig()) -> FrenetSolution:
    """RK4 from the origin with the world axes as frame, re-orthonormalized
    after every step. The step is ``pi / N`` with ``N`` even and no coarser
    than ``config.step``; ``s_end`` is rounded up to the next sample so the
    spacing stays uniform."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if not s_end > 0:
        raise ValueError("s_end must be positive")
    n = steps_per_pi(config.step)
    h = math.pi / n
    s_end = math.ceil(s_end / h - 1e-9) * h
    cfg = IntegratorConfig(step=h, max_length=max(s_end, config.max_length))
    traj = integrate_fixed(_rhs, initial_state(), (0.0, s_end), cfg, args=_args(kappa, t),
                           post_step=_gram_schmidt)
    y = traj.y
    frames = np.stack([y[:, 3:6], y[:, 6:9], y[:, 9:12]], axis=-1)
    meta = dict(construction="frenet", kappa=kappa, b=t.b, c=t.c, d=t.d, e=t.e)
    return FrenetSolution(SampledCurve(y[:, :3].copy(), h, frames=frames, meta=meta), kappa, t, n)


def normal_symmetry_planes(sol: FrenetSolution) -> list[Plane]:
    """Normal planes at ``s = n pi``, mirror planes when ``b = 0``."""
    if sol.torsion.b != 0:
        raise NotSkewSymmetric(f"torsion with b = {sol.torsion.b} is not odd about n pi")
    return [Plane(sol.position(s), sol.frame(s).e1) for s in sol.symmetry_points(0.0)]


@dataclass(frozen=True)
class PlaneFamily:
    axis: Line
    angle: float
    axis_consistency: float


def plane_family_angle(sol: FrenetSolution) -> PlaneFamily:
    """Common line and dihedral angle of the mirror planes; ``axis_consistency``
    is the largest distance of any further plane from that line."""
    planes = normal_symmetry_planes(sol)
    if len(planes) < 3:
        raise ValueError("need at least three mirror planes (s_end >= 2 pi)")
    pencil = plane_pencil(planes[0], planes[1])
    axis = pencil.axis
    worst = 0.0
    for pl in planes[2:]:
        # a line lies in a plane iff its direction is orthogonal to the normal
        # and one of its points is on the plane
        off = abs(float(pl.signed_distance(axis.point)))
        tilt = abs(float(np.dot(pl.normal, axis.direction)))
        worst = max(worst, off, tilt)
    return PlaneFamily(axis, pencil.dihedral_angle, worst)


def rotation_symmetry_normals(sol: FrenetSolution) -> list[Line]:
    """Principal normal lines at ``s = pi/2 + n pi``, rotation axes when ``d = 0``."""
    if sol.torsion.d != 0:
        raise NotSymmetric(f"torsion with d = {sol.torsion.d} is not even about pi/2 + n pi")
    return [Line(sol.position(s), sol.frame(s).e2) for s in sol.symmetry_points(math.pi / 2)]


def _normals(kappa: float, t: TorsionPoly, s_end: float, config: IntegratorConfig) -> list[Line]:
    return rotation_symmetry_normals(integrate_frenet(kappa, t, s_end, config))


def normals_gap(kappa: float, b: float, c: float, e: float,
                config: IntegratorConfig = IntegratorConfig()) -> float:
    """Signed distance between the normals at ``pi/2`` and ``3 pi/2``; zero
    where the two normals meet.

    The sign follows the common perpendicular ``n1 x n2``. When the normals
    are nearly parallel (close to the circle) that direction is lost in
    rounding, and the offset is signed against the binormal at ``pi/2``
    instead, oriented to continue ``n1 x n2`` across the helices near the
    circle (where ``n1 x n2`` points against that binormal).
    """
    sol = integrate_frenet(kappa, TorsionPoly(b=b, c=c, e=e), 2 * math.pi, config)
    n1, n2 = rotation_symmetry_normals(sol)[:2]
    geo = line_line_geometry(n1, n2)
    if not geo.degenerate:
        return geo.signed_distance
    return -math.copysign(geo.distance, float(np.dot(n2.point - n1.point, sol.frame(math.pi / 2).e3)))


def common_point(kappa: float, t: TorsionPoly, config: IntegratorConfig = IntegratorConfig(),
                 count: int = 4) -> tuple[np.ndarray, float]:
    """Least-squares common point of the first ``count`` symmetry normals and
    the largest distance from it to any of them."""
    lines = _normals(kappa, t, (count - 0.5) * math.pi, config)[:count]
    return least_squares_point(lines)


def adjust_b(kappa: float, c: float, e: float, bracket: tuple[float, float],
             config: IntegratorConfig = IntegratorConfig(), verify: bool = True) -> float:
    """Constant torsion term for which neighbouring symmetry normals meet."""
    def gap(b):
        return normals_gap(kappa, b, c, e, config)

    b = bisect(gap, make_bracket(gap, *bracket), x_tol=1e-15, f_tol=1e-10)
    if abs(gap(b)) >= 1e-10:
        raise MaxIterExceeded(f"normals gap stalled at {gap(b):.3e} for b = {b!r}")
    if verify:
        _, residual = common_point(kappa, TorsionPoly(b=b, c=c, e=e), config)
        if residual >= 1e-7:
            raise SearchFailure(f"symmetry normals miss their common point by {residual:.3e}")
    return b


def symmetry_angle(sol: FrenetSolution, mode: str) -> float:
    """Dihedral angle of neighbouring mirror planes (``"planes"``) or angle
    in ``(0, pi)`` between neighbouring rotation normals (``"normals"``)."""
    if mode == "planes":
        planes = normal_symmetry_planes(sol)
        return plane_pencil(planes[0], planes[1]).dihedral_angle
    if mode == "normals":
        n1, n2 = rotation_symmetry_normals(sol)[:2]
        geo = line_line_geometry(n1, n2)
        if geo.degenerate:
            raise ParallelLines("neighbouring symmetry normals are parallel")
        return geo.oriented_angle
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class TuneResult:
    value: float
    kappa: float
    torsion: TorsionPoly
    angle: float
    target: float


def tune_parameter(mode: str, kappa: float, torsion: TorsionPoly, free: str, bracket: tuple[float, float],
                   target: tuple[int, int], config: IntegratorConfig = IntegratorConfig(),
                   b_bracket: tuple[float, float] | None = None,
                   require_positive_torsion: bool = False) -> TuneResult:
    """Bisect ``free`` (``"kappa"`` or a torsion coefficient) until the
    symmetry angle equals ``pi p / q`` for ``target = (p, q)``.

    In ``"normals"`` mode ``b`` is re-adjusted over ``b_bracket`` at every
    evaluation. With ``require_positive_torsion`` a result whose torsion
    changes sign is rejected.
    """
    if free not in ("kappa", "b", "c", "d", "e") or (mode == "normals" and free == "b"):
        raise ValueError(f"cannot tune {free!r} in {mode!r} mode")
    if mode not in ("planes", "normals"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "normals" and b_bracket is None:
        raise ValueError("normals mode needs b_bracket")
    p, q = target
    goal = math.pi * p / q

    def member(x) -> tuple[float, TorsionPoly]:
        k, t = (x, torsion) if free == "kappa" else (kappa, torsion.replace(**{free: x}))
        if mode == "normals":
            t = t.replace(b=adjust_b(k, t.c, t.e, b_bracket, config, verify=False))
        return k, t

    def mismatch(x):
        return symmetry_angle(integrate_frenet(*member(x), 2 * math.pi, config), mode) - goal

    x = bisect(mismatch, make_bracket(mismatch, *bracket), x_tol=1e-15, f_tol=1e-9)
    k, t = member(x)
    angle = symmetry_angle(integrate_frenet(k, t, 2 * math.pi, config), mode)
    if abs(angle - goal) >= 1e-9:
        raise MaxIterExceeded(f"angle stalled {angle - goal:.3e} away from the target")
    if mode == "normals":
        _, residual = common_point(k, t, config)
        if residual >= 1e-7:
            raise SearchFailure(f"symmetry normals miss their common point by {residual:.3e}")
    if require_positive_torsion:
        s = np.linspace(0, 2 * math.pi, 2001)
        if np.min(torsion_eval(t, s)) <= 0:
            raise SearchFailure("tuned torsion is not positive")
    return TuneResult(float(x), k, t, angle, goal)


@dataclass
class ClosedCurve:
    curve: SampledCurve
    periods: int


def assemble_closed(kappa: float, t: TorsionPoly, q: int | None = None,
                    config: IntegratorConfig = IntegratorConfig(), position_tol: float = 1e-6,
                    tangent_tol: float = 1e-6, max_periods: int | None = None) -> ClosedCurve:
    """Integrate up to ``4 q pi`` (or ``max_periods pi``) and cut at the first
    multiple ``m pi`` where the curve closes; ``periods`` is ``m``."""
    if q is not None and q < 1:
        raise ValueError("q must be positive")
    m_max = 4 * q if q is not None else max_periods
    if m_max is None or m_max < 1:
        raise ValueError("need q or a positive max_periods")
    sol = integrate_frenet(kappa, t, m_max * math.pi, config)
    n = sol.per_pi
    for m in range(1, m_max + 1):
        part = sol.curve.samples[: m * n + 1]
        rep = closure_report(SampledCurve(part, sol.curve.step))
        if rep.position_gap < position_tol and rep.tangent_gap < tangent_tol:
            curve = SampledCurve(part.copy(), sol.curve.step, frames=sol.curve.frames[: m * n + 1].copy(),
                                 meta=dict(sol.curve.meta, periods=m))
            return ClosedCurve(curve, m)
    raise ClosureNotReached(f"no multiple of pi up to {m_max} pi closes the curve")


def period_holonomy(sol: FrenetSolution, period: float = 2 * math.pi) -> Screw:
    """Screw motion carrying the start point and frame to those at ``period``."""
    m = motion_between_frames(sol.position(0.0), sol.frame(0.0), sol.position(period), sol.frame(period))
    return screw_decompose(m)


def symmetry_residual(sol: FrenetSolution, s1: float, kind: str) -> float:
    """Largest distance between ``c(s1 + u)`` and the image of ``c(s1 - u)``
    under the reflection in the normal plane (``"reflection"``) or the 180
    degree rotation about the principal normal (``"rotation"``) at ``s1``."""
    i = sol.index(s1)
    k = min(i, len(sol.curve) - 1 - i)
    if k < 1:
        raise ValueError("no samples on both sides of s1")
    p = sol.curve.samples
    before, after = p[i - k:i][::-1], p[i + 1:i + k + 1]
    f = sol.frame(s1)
    if kind == "reflection":
        image = reflect_points(before, Plane(p[i], f.e1))
    elif kind == "rotation":
        image = rotate_points_180(before, Line(p[i], f.e2))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return float(np.max(np.linalg.norm(image - after, axis=1)))
