import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constcurve.errors import (ClosureNotReached, NoBracket, NotSkewSymmetric, NotSymmetric, ParallelLines,
                               ParallelPlanes, SearchFailure)
from constcurve.frenet import (TorsionPoly, adjust_b, assemble_closed, common_point, frenet_rhs,
                               initial_state, integrate_frenet, normal_symmetry_planes, normals_gap,
                               period_holonomy, plane_family_angle, rotation_symmetry_normals,
                               steps_per_pi, symmetry_angle, symmetry_residual, torsion_eval, tune_parameter)
from constcurve.geometry import closure_report, discrete_invariants, frame_residual, line_line_geometry
from constcurve.ode import IntegratorConfig

coef = st.floats(-1.5, 1.5)


def test_torsion_eval_examples():
    assert torsion_eval(TorsionPoly(), 1.3) == 0.0
    t = TorsionPoly(b=0.5, c=1, d=2, e=3)
    s = 0.7
    assert t(s) == pytest.approx(0.5 + math.sin(s) + 2 * math.sin(2 * s) + 3 * math.sin(3 * s))


@given(c=coef, d=coef, e=coef, s=st.floats(-10, 10))
def test_torsion_symmetries(c, d, e, s):
    odd = TorsionPoly(c=c, d=d, e=e)
    assert torsion_eval(odd, -s) == pytest.approx(-torsion_eval(odd, s), abs=1e-12)
    even = TorsionPoly(b=0.3, c=c, e=e)
    assert torsion_eval(even, math.pi / 2 - s) == pytest.approx(torsion_eval(even, math.pi / 2 + s), abs=1e-12)


def test_rhs_example():
    d = frenet_rhs(initial_state(), 0.0, 1.0, TorsionPoly())
    np.testing.assert_array_equal(d[3:6], [0, 1, 0])
    np.testing.assert_array_equal(d[9:12], [0, 0, 0])


@given(k=st.floats(0.1, 3), b=coef, c=coef, s=st.floats(-5, 5))
def test_rhs_is_skew(k, b, c, s):
    # d/ds <e_i, e_j> = <e_i', e_j> + <e_i, e_j'> vanishes for an orthonormal frame
    rng = np.random.default_rng(int(1000 * (k + b + c + s)) % 2**32)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    y = np.concatenate([[0, 0, 0], q[:, 0], q[:, 1], q[:, 2]])
    d = frenet_rhs(y, s, k, TorsionPoly(b=b, c=c))
    e, de = q.T, d[3:].reshape(3, 3)
    gram = de @ e.T + e @ de.T
    assert np.max(np.abs(gram)) < 1e-12


def test_rhs_rejects_nonpositive_kappa():
    with pytest.raises(ValueError):
        frenet_rhs(initial_state(), 0.0, 0.0, TorsionPoly())


def test_sign_convention_lock():
    sol = integrate_frenet(1.0, TorsionPoly(b=1.0), 8.0)
    inv = discrete_invariants(sol.curve)
    assert np.max(np.abs(inv.kappa - 1.0)) < 1e-5
    assert np.max(np.abs(inv.tau - 1.0)) < 1e-5
    # the integrated helix winds left-handed: e3' = +tau e2 turns the binormal towards e2
    flipped = integrate_frenet(1.0, TorsionPoly(b=-1.0), 8.0)
    assert np.max(np.abs(discrete_invariants(flipped.curve).tau + 1.0)) < 1e-5


@pytest.mark.parametrize("kappa,s_end", [(1.0, 2 * math.pi), (2.0, math.pi)])
def test_circles_close(kappa, s_end):
    sol = integrate_frenet(kappa, TorsionPoly(), s_end, IntegratorConfig(step=1e-3))
    assert closure_report(sol.curve).position_gap < 1e-9
    assert np.max(np.linalg.norm(sol.curve.samples, axis=1)) == pytest.approx(2 / kappa, rel=1e-9)


def test_grid_hits_multiples_of_half_pi():
    sol = integrate_frenet(1.0, TorsionPoly(c=0.7), 3 * math.pi, IntegratorConfig(step=2e-3))
    assert steps_per_pi(2e-3) % 2 == 0
    assert sol.curve.step <= 2e-3
    for s in (0.0, math.pi / 2, math.pi, 2.5 * math.pi, 3 * math.pi):
        sol.index(s)
    with pytest.raises(ValueError):
        sol.index(0.1234)


@settings(max_examples=10, deadline=None)
@given(b=coef, c=coef, d=coef, e=coef)
def test_frames_stay_orthonormal(b, c, d, e):
    sol = integrate_frenet(1.3, TorsionPoly(b, c, d, e), 2 * math.pi, IntegratorConfig(step=5e-3))
    assert max(frame_residual(f) for f in sol.curve.frames) < 1e-12


def test_symmetry_planes():
    sol = integrate_frenet(1.0, TorsionPoly(c=0.8), 2 * math.pi)
    planes = normal_symmetry_planes(sol)
    assert len(planes) == 3
    np.testing.assert_allclose(planes[1].point, sol.position(math.pi))
    circle = normal_symmetry_planes(integrate_frenet(1.0, TorsionPoly(), 2 * math.pi))
    assert len(circle) == 3
    with pytest.raises(NotSkewSymmetric):
        normal_symmetry_planes(integrate_frenet(1.0, TorsionPoly(b=0.1), 2 * math.pi))


def test_circle_planes_are_parallel():
    with pytest.raises(ParallelPlanes):
        plane_family_angle(integrate_frenet(1.0, TorsionPoly(), 2 * math.pi))


@pytest.mark.parametrize("kappa,c", [(0.7, 0.4), (1.0, 1.3), (1.6, 2.2), (1.0, -0.9)])
def test_mirror_planes_share_a_line(kappa, c):
    fam = plane_family_angle(integrate_frenet(kappa, TorsionPoly(c=c, e=0.2), 4 * math.pi))
    assert fam.axis_consistency < 1e-7


def test_rotation_normals():
    sol = integrate_frenet(1.0, TorsionPoly(c=0.5, e=0.3), 4 * math.pi)
    normals = rotation_symmetry_normals(sol)
    assert len(normals) == 4
    circle = rotation_symmetry_normals(integrate_frenet(1.0, TorsionPoly(), 2 * math.pi))
    assert line_line_geometry(circle[0], circle[1]).distance < 1e-12
    with pytest.raises(NotSymmetric):
        rotation_symmetry_normals(integrate_frenet(1.0, TorsionPoly(d=0.2), 2 * math.pi))


@pytest.mark.parametrize("b", [0.3, -0.6])
def test_helix_normal_distance(b):
    # kappa = 1, tau = b gives a helix; principal normals cross its axis at right
    # angles, so the axis is their common perpendicular and the distance is the
    # axial advance |b| / sqrt(1 + b^2) per unit length over s = pi
    sol = integrate_frenet(1.0, TorsionPoly(b=b), 2 * math.pi)
    n1, n2 = rotation_symmetry_normals(sol)[:2]
    expected = abs(b) / math.sqrt(1 + b * b) * math.pi
    assert line_line_geometry(n1, n2).distance == pytest.approx(expected, rel=1e-6)


def test_normals_gap_circle_limit():
    assert abs(normals_gap(1.0, 0.0, 0.0, 0.0)) < 1e-12
    assert abs(normals_gap(1.0, 0.2, 0.0, 0.0)) > 1e-3


def test_normals_gap_is_continuous_in_b():
    bs = np.linspace(-1, 1, 50)
    g = np.array([normals_gap(1.0, b, 0.5, 0.0, IntegratorConfig(step=4e-3)) for b in bs])
    jumps = np.abs(np.diff(g))
    assert np.max(jumps) < 10 * np.median(jumps)
    assert g[0] * g[-1] < 0


def test_adjust_b_examples():
    assert adjust_b(1.0, 0.0, 0.0, (-0.5, 0.4)) == pytest.approx(0.0, abs=1e-10)
    b = adjust_b(1.0, 0.5, 0.0, (-0.5, 0.5))
    _, residual = common_point(1.0, TorsionPoly(b=b, c=0.5))
    assert residual < 1e-7
    with pytest.raises(NoBracket):
        adjust_b(1.0, 0.5, 0.0, (0.1, 0.25))


def test_adjust_b_second_root():
    b = adjust_b(1.0, 0.5, 0.0, (-0.4, -0.2))
    assert b == pytest.approx(-0.304, abs=1e-3)
    assert common_point(1.0, TorsionPoly(b=b, c=0.5))[1] < 1e-7


def test_adjust_b_nontrivial_root():
    b = adjust_b(1.0, 1.9, 1.0, (1.4, 1.98))
    assert 1.6 < b < 1.9
    assert common_point(1.0, TorsionPoly(b=b, c=1.9, e=1.0))[1] < 1e-7


def test_symmetry_angle_modes():
    sol = integrate_frenet(1.0, TorsionPoly(c=1.0), 2 * math.pi)
    assert symmetry_angle(sol, "planes") == pytest.approx(math.radians(90.7), abs=0.01)
    with pytest.raises(ParallelLines):
        symmetry_angle(integrate_frenet(1.0, TorsionPoly(), 2 * math.pi), "normals")
    with pytest.raises(ValueError):
        symmetry_angle(sol, "axes")


@pytest.mark.parametrize("target,bracket,periods", [((1, 2), (0.9, 1.1), 4), ((1, 5), (1.5, 2.0), 10)],
                         ids=["90deg", "36deg"])
def test_planes_family_closes(target, bracket, periods):
    tuned = tune_parameter("planes", 1.0, TorsionPoly(), "c", bracket, target)
    assert abs(tuned.angle - math.pi * target[0] / target[1]) < 1e-9
    sol = integrate_frenet(1.0, tuned.torsion, 4 * math.pi)
    fam = plane_family_angle(sol)
    assert fam.axis_consistency < 1e-7
    screw = period_holonomy(sol)
    assert abs(screw.slide) < 1e-7
    assert fam.axis.distance_to(screw.axis.point) < 1e-6
    assert abs(abs(np.dot(fam.axis.direction, screw.axis.direction)) - 1) < 1e-6
    assert screw.angle == pytest.approx(2 * fam.angle, abs=1e-7)
    closed = assemble_closed(1.0, tuned.torsion, target[1])
    assert closed.periods == periods
    inv = discrete_invariants(closed.curve)
    assert np.max(np.abs(inv.kappa - 1.0)) < 1e-3
    inner = slice(5, -5)
    assert np.max(np.abs(inv.tau[inner] - tuned.torsion(inv.s_tau[inner]))) < 1e-2


def test_tune_without_bracket():
    with pytest.raises(NoBracket):
        tune_parameter("planes", 1.0, TorsionPoly(), "c", (0.1, 0.5), (1, 2))
    with pytest.raises(ValueError):
        tune_parameter("normals", 1.0, TorsionPoly(), "c", (0.1, 0.5), (1, 2))


def test_positive_torsion_filter():
    with pytest.raises(SearchFailure):
        tune_parameter("planes", 1.0, TorsionPoly(), "c", (0.9, 1.1), (1, 2), require_positive_torsion=True)


def test_circle_assembles_after_two_periods():
    closed = assemble_closed(1.0, TorsionPoly(), 1)
    assert closed.periods == 2


def test_assemble_reports_failure():
    with pytest.raises(ClosureNotReached):
        assemble_closed(1.0, TorsionPoly(c=0.77), 2, IntegratorConfig(step=5e-3))


@settings(max_examples=10, deadline=None)
@given(k=st.floats(0.5, 2.0), c=coef, d=coef, e=coef)
def test_reflected_continuation(k, c, d, e):
    sol = integrate_frenet(k, TorsionPoly(c=c, d=d, e=e), 2 * math.pi, IntegratorConfig(step=2e-3))
    assert symmetry_residual(sol, math.pi, "reflection") < 1e-7


@settings(max_examples=10, deadline=None)
@given(k=st.floats(0.5, 2.0), b=coef, c=coef, e=coef)
def test_rotated_continuation(k, b, c, e):
    sol = integrate_frenet(k, TorsionPoly(b=b, c=c, e=e), 3 * math.pi, IntegratorConfig(step=2e-3))
    assert symmetry_residual(sol, 1.5 * math.pi, "rotation") < 1e-7


def test_tune_curvature_in_planes_mode():
    tuned = tune_parameter("planes", 1.0, TorsionPoly(c=1.0), "kappa", (0.5, 1.0), (1, 2))
    assert abs(tuned.angle - math.pi / 2) < 1e-9
    assert tuned.torsion.c == 1.0
    assert assemble_closed(tuned.kappa, tuned.torsion, 2).periods == 4
