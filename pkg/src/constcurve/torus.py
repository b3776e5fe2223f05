"""
Constant-curvature curves on a torus of revolution.

The torus is ``((A + r cos v) cos u, (A + r cos v) sin u, r sin v)`` with
``A > r > 0`` and unit normal ``N`` pointing into the tube, so meridians
have normal curvature ``+1/r``. A unit-speed curve with acceleration
``kappa_n N + kappa_g (c' x N)`` has space curvature ``kappa`` exactly when
``kappa**2 = kappa_n**2 + kappa_g**2``; since ``kappa_n`` depends only on
the tangent, prescribing ``kappa`` turns this into a second-order ODE.

Two families are built:

* symmetric closed curves (``kappa > max |kappa_n|``), grown from an
  equator until they cross a meridian orthogonally and completed by two
  reflections;
* oscillating curves, where ``kappa`` equals the normal curvature at the
  equator crossing so the geodesic curvature changes sign there, closed by
  shooting on the initial angle until an even number of half-waves fits
  once around.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BadInitialAngle, CurvatureTooSmall, NonFiniteDerivative, NotTangent, NoBracket, OffSurface
from .geometry import Line, Plane, SampledCurve, concatenate, reflect_curve, rotate_curve_180
from .ode import EventSpec, IntegratorConfig, integrate_fixed, integrate_until_event
from .solvers import bisect, scan_for_bracket

_SURFACE_TOL = 1e-6
# kappa_g**2 starts at 0 on the oscillating family and RK4 stage states can
# undershoot it by O(step**2); larger deficits are real failures
_DEFICIT_TOL = 1e-5
# where kappa_g starts at 0 its square root is not Lipschitz in the state
# and RK4 keeps full order only with substeps below _START_RATIO * s
_START_RATIO = 1.0 / 64.0
_START_MIN = 1e-12


@dataclass(frozen=True)
class TorusParams:
    A: float
    r: float

    def __post_init__(self):
        if not self.A > self.r > 0:
            raise ValueError(f"torus needs A > r > 0, got A={self.A}, r={self.r}")

    @property
    def max_normal_curvature(self) -> float:
        """``max |kappa_n|`` over all points and directions."""
        return max(1.0 / self.r, 1.0 / (self.A - self.r))


@njit(cache=True)
def _frame(p, A):
    # u, v, unit normal (into the tube), unit parallel and meridian directions
    u = math.atan2(p[1], p[0])
    rho = math.hypot(p[0], p[1])
    v = math.atan2(p[2], rho - A)
    cu, su, cv, sv = math.cos(u), math.sin(u), math.cos(v), math.sin(v)
    n = np.array([-cv * cu, -cv * su, -sv])
    eu = np.array([-su, cu, 0.0])
    ev = np.array([-sv * cu, -sv * su, cv])
    return u, v, n, eu, ev


@njit(cache=True)
def _kappa_n(p, t, A, r):
    u, v, n, eu, ev = _frame(p, A)
    # only the tangential direction of t matters
    tu = t[0] * eu[0] + t[1] * eu[1]
    tv = t[0] * ev[0] + t[1] * ev[1] + t[2] * ev[2]
    cv = math.cos(v)
    return (tv * tv / r + cv / (A + r * cv) * tu * tu) / (tu * tu + tv * tv)


@njit(cache=True)
def _surface_rhs(s, y, args):
    A, r, kappa, sign_g = args[0], args[1], args[2], args[3]
    p = y[0:3]
    t = y[3:6]
    u, v, n, eu, ev = _frame(p, A)
    kn = _kappa_n(p, t, A, r)
    deficit = kappa * kappa - kn * kn
    out = np.empty(6)
    if deficit < -_DEFICIT_TOL * kappa * kappa:
        out[:] = np.nan
        return out
    kg = math.sqrt(max(deficit, 0.0))
    txn = np.cross(t, n)
    out[0:3] = t
    out[3:6] = kn * n + sign_g * kg * txn
    return out


@njit(cache=True)
def _project(y, args):
    A, r = args[0], args[1]
    p = y[0:3]
    u = math.atan2(p[1], p[0])
    center = np.array([A * math.cos(u), A * math.sin(u), 0.0])
    w = p - center
    q = center + r * w / np.linalg.norm(w)
    n = (center - q) / r
    t = y[3:6] - np.dot(y[3:6], n) * n
    out = np.empty(6)
    out[0:3] = q
    out[3:6] = t / np.linalg.norm(t)
    return out


@njit(cache=True)
def _meridian_component(s, y, args):
    u, v, n, eu, ev = _frame(y[0:3], args[0])
    return y[3] * ev[0] + y[4] * ev[1] + y[5] * ev[2]


def implicit_residual(points, params: TorusParams) -> np.ndarray:
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return (np.hypot(p[:, 0], p[:, 1]) - params.A) ** 2 + p[:, 2] ** 2 - params.r**2


def _check_on_surface(p, params):
    res = abs(float(implicit_residual(p, params)[0]))
    if res > _SURFACE_TOL:
        raise OffSurface(f"point {p} is off the torus (residual {res:.3e})")


def torus_geometry(p, params: TorusParams) -> dict:
    """Unit normal (into the tube) and parameter angles ``(u, v)`` at ``p``."""
    p = np.asarray(p, dtype=float)
    _check_on_surface(p, params)
    u, v, n, eu, ev = _frame(p, params.A)
    return {"normal": n, "uv": (u, v), "parallel": eu, "meridian": ev}


def normal_curvature(p, t, params: TorusParams) -> float:
    """Second fundamental form ``II(t, t)`` for the tube-inward normal."""
    p = np.asarray(p, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_on_surface(p, params)
    n = _frame(p, params.A)[2]
    if abs(np.linalg.norm(t) - 1.0) > _SURFACE_TOL or abs(float(np.dot(t, n))) > _SURFACE_TOL:
        raise NotTangent(f"{t} is not a unit tangent vector at {p}")
    return float(_kappa_n(p, t, params.A, params.r))


def required_geodesic_curvature(kappa: float, kappa_n: float) -> float:
    if kappa < abs(kappa_n):
        raise CurvatureTooSmall(f"kappa = {kappa} is below |kappa_n| = {abs(kappa_n)}")
    return math.sqrt(kappa * kappa - kappa_n * kappa_n)


def surface_ode_rhs(state, kappa: float, sign_g: int, params: TorusParams) -> np.ndarray:
    """Derivative of ``(position, velocity)``: ``(c', kappa_n N + sign_g kappa_g c' x N)``."""
    y = np.asarray(state, dtype=float)
    kn = normal_curvature(y[:3], y[3:], params)
    required_geodesic_curvature(kappa, kn)
    return _surface_rhs(0.0, y, np.array([params.A, params.r, kappa, float(sign_g)]))


def state_curvatures(states, kappa: float, params: TorusParams) -> tuple[np.ndarray, np.ndarray]:
    """``(kappa_n, |kappa_g|)`` recomputed from ``(position, velocity)`` rows."""
    y = np.atleast_2d(states)
    kn = np.array([_kappa_n(row[:3], row[3:], params.A, params.r) for row in y])
    return kn, np.sqrt(np.maximum(kappa * kappa - kn * kn, 0.0))


def signed_geodesic_curvature(curve: SampledCurve, params: TorusParams) -> tuple[np.ndarray, np.ndarray]:
    """Discrete ``(kappa_g, kappa_n)`` at interior samples from central differences."""
    p = curve.samples
    h = curve.step
    acc = (p[2:] - 2 * p[1:-1] + p[:-2]) / h**2
    tan = (p[2:] - p[:-2]) / (2 * h)
    normals = np.array([_frame(q, params.A)[2] for q in p[1:-1]])
    kg = np.einsum("ij,ij->i", acc, np.cross(tan, normals))
    kn = np.einsum("ij,ij->i", acc, normals)
    return kg, kn


@njit(cache=True)
def _rk4_projected(s, y, h, args):
    k1 = _surface_rhs(s, y, args)
    k2 = _surface_rhs(s + 0.5 * h, y + 0.5 * h * k1, args)
    k3 = _surface_rhs(s + 0.5 * h, y + 0.5 * h * k2, args)
    k4 = _surface_rhs(s + h, y + h * k3, args)
    return _project(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), args)


@njit(cache=True)
def _start_grid(y0, h, n_grid, args):
    # states at s = 0, h, ..., n_grid h, substepping geometrically near s = 0
    ys = np.empty((n_grid + 1, y0.size))
    ys[0] = y0
    y = y0.copy()
    s = 0.0
    dh = _START_MIN * h
    while s + dh * (1.0 + _START_RATIO) < h:
        y = _rk4_projected(s, y, dh, args)
        s += dh
        dh = _START_RATIO * s
    y = _rk4_projected(s, y, h - s, args)
    ys[1] = y
    for k in range(1, n_grid):
        m = int(math.ceil(1.0 / (_START_RATIO * k)))
        for j in range(m):
            y = _rk4_projected(k * h + j * h / m, y, h / m, args)
        ys[k + 1] = y
    return ys


def _start(y0, h, args):
    n_grid = int(math.ceil(1.0 / _START_RATIO))
    ys = _start_grid(np.asarray(y0, dtype=float), h, n_grid, np.asarray(args, dtype=float))
    if not np.all(np.isfinite(ys)):
        raise NonFiniteDerivative("non-finite state near the start")
    ind = [_meridian_component(0.0, y, np.asarray(args, dtype=float)) for y in ys]
    if np.any(np.diff(np.sign(ind))):
        raise ValueError(f"step {h} is too coarse to resolve the start of the arc")
    return n_grid * h, ys


def _integrate_arc(y0, args, config: IntegratorConfig, start_mesh: bool = False):
    """Integrate until the tangent meets a meridian orthogonally, then redo
    the arc with a step that divides its length exactly."""
    ev = EventSpec(_meridian_component, "any")
    y0 = np.asarray(y0, dtype=float)
    try:
        if start_mesh:
            s0, ys = _start(y0, config.step, args)
            first = integrate_until_event(_surface_rhs, ys[-1], ev, config, s0=s0,
                                          args=args, post_step=_project)
        else:
            first = integrate_until_event(_surface_rhs, y0, ev, config, args=args, post_step=_project)
        length = first.event_s
        n = max(4, int(round(length / config.step)))
        h = length / n
        cfg = IntegratorConfig(step=h, max_length=length)
        if start_mesh:
            s0, ys = _start(y0, h, args)
            rest = integrate_fixed(_surface_rhs, ys[-1], (s0, length), cfg, args=args, post_step=_project)
            s = np.concatenate([h * np.arange(len(ys) - 1), rest.s])
            y = np.vstack([ys[:-1], rest.y])
        else:
            traj = integrate_fixed(_surface_rhs, y0, (0.0, length), cfg, args=args, post_step=_project)
            s, y = traj.s, traj.y
    except NonFiniteDerivative as exc:
        raise CurvatureTooSmall("prescribed curvature fell below the normal curvature along the arc") from exc
    return s, y, h


def _meridian_mirror(p) -> Plane:
    u = math.atan2(p[1], p[0])
    return Plane([0.0, 0.0, 0.0], [-math.sin(u), math.cos(u), 0.0])


def symmetric_closed_curve(kappa: float, start: str, params: TorusParams,
                           config: IntegratorConfig = IntegratorConfig()) -> SampledCurve:
    """Closed curve symmetric in the equator plane, starting vertically on
    the ``"inner"`` or ``"outer"`` equator with ``kappa_g > 0``."""
    if start not in ("inner", "outer"):
        raise ValueError("start must be 'inner' or 'outer'")
    if not kappa > params.max_normal_curvature:
        raise CurvatureTooSmall(f"symmetric family needs kappa > {params.max_normal_curvature}")
    x0 = params.A + params.r if start == "outer" else params.A - params.r
    y0 = np.array([x0, 0.0, 0.0, 0.0, 0.0, 1.0])
    args = (params.A, params.r, kappa, 1.0)
    s, y, h = _integrate_arc(y0, args, config)

    meta = dict(construction="torus-symmetric", kappa=kappa, A=params.A, r=params.r, start=start,
                quarter_length=float(s[-1]),
                turn_residual=float(_meridian_component(0.0, y[-1], np.asarray(args))))
    quarter = SampledCurve(y[:, :3], h, meta=meta)
    half = concatenate([quarter, reflect_curve(quarter, _meridian_mirror(quarter.samples[-1])).reversed()])
    equator = Plane([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])
    return concatenate([half, reflect_curve(half, equator).reversed()])


@dataclass
class HalfWave:
    arc: SampledCurve
    delta_u: float
    kappa: float


def half_wave(theta0: float, params: TorusParams, config: IntegratorConfig = IntegratorConfig()) -> HalfWave:
    """One half-wave from the outer equator, leaving at angle ``theta0``
    above the equator direction, with ``kappa = |kappa_n(c'(0))|``."""
    if not 0 < theta0 < math.pi / 2:
        raise BadInitialAngle(f"theta0 must lie in (0, pi/2), got {theta0}")
    p0 = np.array([params.A + params.r, 0.0, 0.0])
    t0 = np.array([0.0, math.cos(theta0), math.sin(theta0)])
    kappa = abs(float(_kappa_n(p0, t0, params.A, params.r)))
    # heading away from the equator: bend back towards it
    args = (params.A, params.r, kappa, -1.0)
    s, y, h = _integrate_arc(np.concatenate([p0, t0]), args, config, start_mesh=True)
    quarter = SampledCurve(y[:, :3], h, meta=dict(kappa=kappa, theta0=theta0, quarter_length=float(s[-1])))
    arc = concatenate([quarter, reflect_curve(quarter, _meridian_mirror(quarter.samples[-1])).reversed()])
    delta_u = 2.0 * math.atan2(quarter.samples[-1, 1], quarter.samples[-1, 0])
    return HalfWave(arc, delta_u, kappa)


def oscillating_closed_curve(n_halfwaves: int, params: TorusParams, bracket: tuple[float, float],
                             config: IntegratorConfig = IntegratorConfig(), wraps: int = 1,
                             scan_points: int = 20) -> SampledCurve:
    """Close the oscillating family by shooting on ``theta0`` until
    ``n_halfwaves`` half-waves advance ``2 pi wraps`` around the axis."""
    if n_halfwaves < 2 or n_halfwaves % 2:
        raise ValueError("n_halfwaves must be an even integer >= 2")
    lo, hi = bracket
    target = 2.0 * math.pi * wraps / n_halfwaves

    def mismatch(theta):
        return half_wave(theta, params, config).delta_u - target

    grid = np.linspace(lo, hi, scan_points)
    values = []

    def recorded(theta):
        f = mismatch(theta)
        values.append(f)
        return f

    br = scan_for_bracket(recorded, grid)
    if br is None:
        raise NoBracket(f"delta_u never reaches {target:.6g} for theta0 in [{lo}, {hi}]")
    theta = bisect(mismatch, br, x_tol=1e-15, f_tol=1e-12)
    wave = half_wave(theta, params, config)

    waves = [wave.arc]
    for _ in range(n_halfwaves - 1):
        end = waves[-1].samples[-1]
        axis = Line(end, [end[0], end[1], 0.0])
        waves.append(rotate_curve_180(waves[-1], axis).reversed())
    curve = concatenate(waves)
    scanned = np.diff(values)
    curve.meta = dict(construction="torus-oscillating", kappa=wave.kappa, A=params.A, r=params.r,
                      n_halfwaves=n_halfwaves, wraps=wraps, theta0=theta, delta_u=wave.delta_u,
                      delta_u_error=wave.delta_u - target, halfwave_samples=len(wave.arc),
                      scan_monotone=bool(np.all(scanned > 0) or np.all(scanned < 0)))
    return curve
