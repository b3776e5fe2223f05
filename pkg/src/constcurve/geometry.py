"""
Vector, frame, line and plane primitives plus the discrete verifiers.

Points and vectors are plain ``numpy`` arrays of shape ``(3,)``. A frame is
stored as a 3x3 matrix whose *columns* are ``e1, e2, e3``. Everything in
this module is a pure function of its inputs.

The torsion estimator follows the sign convention of the Frenet system
used by :mod:`constcurve.frenet` (``e2' = -k e1 - t e3``, ``e3' = t e2``),
which is the negative of the textbook convention. A right-handed helix
``(cos t, sin t, t)`` therefore has torsion ``-1/2`` here.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from .errors import DegenerateSamples, NearIdentity, ParallelPlanes

Vec3 = np.ndarray


def _vec(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite vector {a}")
    return a


def _unit(v) -> np.ndarray:
    a = _vec(v)
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ValueError("zero-length direction")
    return a / n


@dataclass(frozen=True)
class Frame:
    """Right-handed orthonormal frame; ``matrix[:, i]`` is ``e_{i+1}``."""

    matrix: np.ndarray

    @classmethod
    def from_vectors(cls, e1, e2, e3) -> "Frame":
        return cls(np.column_stack([_vec(e1), _vec(e2), _vec(e3)]))

    @classmethod
    def identity(cls) -> "Frame":
        return cls(np.eye(3))

    @property
    def e1(self) -> np.ndarray:
        return self.matrix[:, 0]

    @property
    def e2(self) -> np.ndarray:
        return self.matrix[:, 1]

    @property
    def e3(self) -> np.ndarray:
        return self.matrix[:, 2]

    def residual(self) -> float:
        """Largest deviation from orthonormality or from ``det = +1``."""
        return frame_residual(self.matrix)


def frame_residual(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=float)
    ortho = np.max(np.abs(m.T @ m - np.eye(3)))
    return float(max(ortho, abs(np.linalg.det(m) - 1.0)))


@dataclass(frozen=True)
class Line:
    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _vec(self.point))
        object.__setattr__(self, "direction", _unit(self.direction))

    def at(self, t):
        return self.point + np.multiply.outer(t, self.direction)

    def distance_to(self, p) -> float:
        w = _vec(p) - self.point
        return float(np.linalg.norm(w - np.dot(w, self.direction) * self.direction))


@dataclass(frozen=True)
class Plane:
    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _vec(self.point))
        object.__setattr__(self, "normal", _unit(self.normal))

    def signed_distance(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=float) - self.point) @ self.normal


@dataclass(frozen=True)
class RigidMotion:
    """``x -> rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-9 or np.linalg.det(r) < 0:
            raise ValueError("rotation must be orthogonal with det +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", _vec(self.translation))

    @classmethod
    def identity(cls) -> "RigidMotion":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def apply_frame(self, frame: Frame) -> Frame:
        return Frame(self.rotation @ frame.matrix)

    def compose(self, other: "RigidMotion") -> "RigidMotion":
        """``self`` after ``other``."""
        return RigidMotion(self.rotation @ other.rotation,
                           self.rotation @ other.translation + self.translation)


@dataclass
class SampledCurve:
    """Arclength-sampled space curve.

    ``frames`` (optional) has shape ``(n, 3, 3)`` with the frame vectors as
    columns. ``channels`` holds optional per-sample scalars (for example the
    plane rotation angle of a cylinder construction); geometric transforms
    drop them because their meaning is construction specific.
    """

    samples: np.ndarray
    step: float
    frames: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    channels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != 3:
            raise ValueError(f"samples must have shape (n, 3), got {self.samples.shape}")
        if len(self.samples) < 2:
            raise ValueError("a curve needs at least 2 samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite samples")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.frames is not None:
            self.frames = np.asarray(self.frames, dtype=float)
            if self.frames.shape != (len(self.samples), 3, 3):
                raise ValueError("frames must have shape (n, 3, 3)")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.samples, axis=0), axis=1)

    @property
    def arclength(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def spacing_error(self) -> float:
        """Largest relative deviation of a segment length from ``step``."""
        return float(np.max(np.abs(self.segment_lengths / self.step - 1.0)))

    def is_arclength(self, tol: float = 0.02) -> bool:
        return self.spacing_error() <= tol

    def reversed(self) -> "SampledCurve":
        frames = None
        if self.frames is not None:
            # reversing traversal flips tangent and binormal, keeps det = +1
            frames = self.frames[::-1] * np.array([-1.0, 1.0, -1.0])
        return SampledCurve(self.samples[::-1].copy(), self.step, frames, dict(self.meta))

    def with_meta(self, **kw) -> "SampledCurve":
        return replace(self, meta={**self.meta, **kw})


def concatenate(parts: list[SampledCurve], join_tol: float = 1e-9) -> SampledCurve:
    """Join curves end to start, dropping the duplicated joint samples."""
    chunks = [parts[0].samples]
    frames = [parts[0].frames]
    for prev, nxt in zip(parts, parts[1:]):
        gap = np.linalg.norm(prev.samples[-1] - nxt.samples[0])
        if gap > join_tol:
            raise ValueError(f"curves do not join (gap {gap:.3e})")
        chunks.append(nxt.samples[1:])
        frames.append(None if nxt.frames is None else nxt.frames[1:])
    fr = None if any(f is None for f in frames) else np.concatenate(frames)
    return SampledCurve(np.concatenate(chunks), parts[0].step, fr, dict(parts[0].meta))


def reflect_points(points, mirror: Plane) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    d = (p - mirror.point) @ mirror.normal
    return p - 2.0 * np.multiply.outer(d, mirror.normal)


def rotate_points_180(points, axis: Line) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    w = p - axis.point
    along = np.multiply.outer(w @ axis.direction, axis.direction)
    return axis.point + 2.0 * along - w


def reflect_curve(curve: SampledCurve, mirror: Plane) -> SampledCurve:
    """Mirror every sample in ``mirror``. Frames are dropped (a reflection
    would make them left-handed)."""
    return SampledCurve(reflect_points(curve.samples, mirror), curve.step, None, dict(curve.meta))


def rotate_curve_180(curve: SampledCurve, axis: Line) -> SampledCurve:
    """Half-turn of every sample (and frame vector) about ``axis``."""
    frames = None
    if curve.frames is not None:
        d = axis.direction
        along = np.einsum("nij,i->nj", curve.frames, d)
        frames = 2.0 * np.einsum("nj,i->nij", along, d) - curve.frames
    return SampledCurve(rotate_points_180(curve.samples, axis), curve.step, frames, dict(curve.meta))


@dataclass(frozen=True)
class LineLineResult:
    distance: float
    angle: float  # unsigned acute angle in [0, pi/2]
    closest_point_a: np.ndarray
    closest_point_b: np.ndarray
    degenerate: bool  # parallel or identical lines
    oriented_angle: float  # angle between the directions as given, in [0, pi]
    signed_distance: float  # offset of b from a along a.direction x b.direction


def line_line_geometry(a: Line, b: Line, parallel_tol: float = 1e-12) -> LineLineResult:
    w0 = a.point - b.point
    cosab = float(np.dot(a.direction, b.direction))
    d = float(np.dot(a.direction, w0))
    e = float(np.dot(b.direction, w0))
    cross = np.cross(a.direction, b.direction)
    sin2 = float(np.dot(cross, cross))
    oriented = math.atan2(math.sqrt(sin2), cosab)
    acute = min(oriented, math.pi - oriented)
    if sin2 <= parallel_tol:
        t, u = 0.0, e
        pa, pb = a.point, b.point + u * b.direction
        return LineLineResult(float(np.linalg.norm(pa - pb)), acute, pa, pb, True, oriented, 0.0)
    t = (cosab * e - d) / sin2
    u = (e - cosab * d) / sin2
    pa = a.point + t * a.direction
    pb = b.point + u * b.direction
    signed = float(np.dot(b.point - a.point, cross)) / math.sqrt(sin2)
    return LineLineResult(float(np.linalg.norm(pa - pb)), acute, pa, pb, False, oriented, signed)


@dataclass(frozen=True)
class PencilResult:
    axis: Line
    dihedral_angle: float


def plane_pencil(a: Plane, b: Plane) -> PencilResult:
    n = np.cross(a.normal, b.normal)
    nn = np.linalg.norm(n)
    if nn <= 1e-9:
        raise ParallelPlanes("planes are parallel; no intersection line")
    m = np.vstack([a.normal, b.normal, n / nn])
    rhs = np.array([a.normal @ a.point, b.normal @ b.point, (n / nn) @ a.point])
    point = np.linalg.solve(m, rhs)
    angle = math.atan2(nn, float(np.dot(a.normal, b.normal)))
    return PencilResult(Line(point, n), angle)


def motion_between_frames(p0, f0: Frame, p1, f1: Frame) -> RigidMotion:
    """Rigid motion carrying point ``p0`` with frame ``f0`` onto ``p1``/``f1``."""
    rot = f1.matrix @ f0.matrix.T
    return RigidMotion(rot, _vec(p1) - rot @ _vec(p0))


@dataclass(frozen=True)
class Screw:
    axis: Line
    angle: float
    slide: float


def screw_compose(axis: Line, angle: float, slide: float) -> RigidMotion:
    rot = Rotation.from_rotvec(angle * axis.direction).as_matrix()
    q = axis.point
    return RigidMotion(rot, q - rot @ q + slide * axis.direction)


def screw_decompose(m: RigidMotion, min_angle: float = 1e-7) -> Screw:
    """Axis, rotation angle and slide of a rigid motion (Chasles)."""
    rotvec = Rotation.from_matrix(m.rotation).as_rotvec()
    angle = float(np.linalg.norm(rotvec))
    if angle < min_angle:
        raise NearIdentity(f"rotation angle {angle:.3e} too small for a screw axis")
    u = rotvec / angle
    slide = float(np.dot(m.translation, u))
    # axis point: the foot in the plane through the origin orthogonal to u
    lhs = np.vstack([np.eye(3) - m.rotation, u])
    rhs = np.concatenate([m.translation - slide * u, [0.0]])
    point = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    return Screw(Line(point, u), angle, slide)


@dataclass
class Invariants:
    kappa: np.ndarray
    tau: np.ndarray
    s_kappa: np.ndarray
    s_tau: np.ndarray
    degenerate: np.ndarray  # indices into ``kappa`` flagged collinear


def discrete_invariants(curve: SampledCurve, collinear_tol: float = 1e-12) -> Invariants:
    """Curvature from circumscribed circles, torsion from 4-point volumes.

    ``kappa[j]`` belongs to sample ``j + 1``; ``tau[j]`` to the midpoint of
    samples ``j + 1`` and ``j + 2``. Both are second-order accurate in the
    sample spacing.
    """
    p = curve.samples
    if len(p) < 5:
        raise ValueError("discrete invariants need at least 5 samples")
    d = np.diff(p, axis=0)
    seg = np.linalg.norm(d, axis=1)
    a, b = d[:-1], d[1:]
    cr = np.linalg.norm(np.cross(a, b), axis=1)
    chord = np.linalg.norm(p[2:] - p[:-2], axis=1)
    sin_turn = cr / (seg[:-1] * seg[1:])
    degenerate = np.flatnonzero(sin_turn <= collinear_tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = 2.0 * cr / (seg[:-1] * seg[1:] * chord)
    kappa[degenerate] = 0.0
    if degenerate.size:
        warnings.warn(f"{degenerate.size} collinear sample triples; curvature set to 0 there",
                      DegenerateSamples, stacklevel=2)

    dd = np.diff(d, axis=0)
    ddd = np.diff(dd, axis=0)
    vol = np.einsum("ij,ij->i", d[:-2], np.cross(dd[:-1], ddd))
    h = (seg[:-2] + seg[1:-1] + seg[2:]) / 3.0
    kmid = 0.5 * (kappa[:-1] + kappa[1:])
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = -vol / (h**6 * kmid**2)
    bad = np.zeros(len(tau), dtype=bool)
    if degenerate.size:
        bad[np.clip(degenerate, 0, len(tau) - 1)] = True
        bad[np.clip(degenerate - 1, 0, len(tau) - 1)] = True
    tau[bad] = np.nan

    s = np.concatenate([[0.0], np.cumsum(seg)])
    return Invariants(kappa, tau, s[1:-1], 0.5 * (s[1:-2] + s[2:-1]), degenerate)


@dataclass(frozen=True)
class ClosureReport:
    position_gap: float
    tangent_gap: float
    length: float


def _angle_between(u, v) -> float:
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


def closure_report(curve: SampledCurve) -> ClosureReport:
    """Gaps between the curve's start and end.

    End tangents use one-sided second-order differences so that a smoothly
    closed curve reports a tangent gap of order ``step**3`` rather than the
    ``kappa * step`` turn between the first and last chords.
    """
    p = curve.samples
    if len(p) >= 3:
        t0 = -3.0 * p[0] + 4.0 * p[1] - p[2]
        t1 = 3.0 * p[-1] - 4.0 * p[-2] + p[-3]
    else:
        t0 = t1 = p[1] - p[0]
    return ClosureReport(float(np.linalg.norm(p[-1] - p[0])), _angle_between(t0, t1), curve.length)


def set_distance(points, reference) -> float:
    """Largest distance from any of ``points`` to its nearest ``reference`` point."""
    dist, _ = cKDTree(np.asarray(reference, dtype=float)).query(np.asarray(points, dtype=float))
    return float(np.max(dist))


def least_squares_point(lines: list[Line]) -> tuple[np.ndarray, float]:
    """Point minimizing the summed squared distance to ``lines``, and the
    largest distance from that point to any of them."""
    m = np.zeros((3, 3))
    rhs = np.zeros(3)
    for ln in lines:
        proj = np.eye(3) - np.outer(ln.direction, ln.direction)
        m += proj
        rhs += proj @ ln.point
    point = np.linalg.lstsq(m, rhs, rcond=None)[0]
    return point, max(ln.distance_to(point) for ln in lines)
