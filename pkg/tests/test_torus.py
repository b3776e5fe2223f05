import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from constcurve.errors import BadInitialAngle, CurvatureTooSmall, NoBracket, NotTangent, OffSurface
from constcurve.geometry import Plane, closure_report, discrete_invariants, reflect_points, set_distance
from constcurve.ode import IntegratorConfig
from constcurve.torus import (TorusParams, _integrate_arc, half_wave, implicit_residual, normal_curvature,
                              oscillating_closed_curve, required_geodesic_curvature, signed_geodesic_curvature,
                              state_curvatures, surface_ode_rhs, symmetric_closed_curve, torus_geometry)

P = TorusParams(2.0, 1.0)


def embed(u, v, params=P):
    rho = params.A + params.r * math.cos(v)
    return np.array([rho * math.cos(u), rho * math.sin(u), params.r * math.sin(v)])


def fd_normal_curvature(u, v, du, dv, params=P, eps=1e-4):
    """-<dN/dt, t> for the curve (u + t du, v + t dv), normal from cross products of
    finite-difference partials, oriented towards the tube centre."""
    def normal(uu, vv):
        pu = (embed(uu + eps, vv, params) - embed(uu - eps, vv, params)) / (2 * eps)
        pv = (embed(uu, vv + eps, params) - embed(uu, vv - eps, params)) / (2 * eps)
        n = np.cross(pu, pv)
        n /= np.linalg.norm(n)
        centre = params.A * np.array([math.cos(uu), math.sin(uu), 0.0])
        return n if np.dot(centre - embed(uu, vv, params), n) > 0 else -n

    t = (embed(u + eps * du, v + eps * dv, params) - embed(u - eps * du, v - eps * dv, params)) / (2 * eps)
    dn = (normal(u + eps * du, v + eps * dv) - normal(u - eps * du, v - eps * dv)) / (2 * eps)
    return -np.dot(dn, t) / np.dot(t, t), t / np.linalg.norm(t)


def intrinsic_delta_u(theta0, params=P):
    """Half-wave advance from an independent intrinsic formulation: u, v and the
    angle psi between tangent and parallel, solved with an adaptive integrator."""
    A, r = params.A, params.r
    kappa = math.sin(theta0) ** 2 / r + math.cos(theta0) ** 2 / (A + r)

    def f(s, y):
        u, v, psi = y
        rho = A + r * math.cos(v)
        kn = math.sin(psi) ** 2 / r + math.cos(v) * math.cos(psi) ** 2 / rho
        kg = math.sqrt(max(kappa * kappa - kn * kn, 0.0))
        return [math.cos(psi) / rho, math.sin(psi) / r, -math.sin(v) * math.cos(psi) / rho - kg]

    def top(s, y):
        return y[2]
    top.terminal, top.direction = True, -1
    sol = solve_ivp(f, (0, 50), [0.0, 0.0, theta0], events=top, rtol=1e-12, atol=1e-13, method="DOP853")
    return 2 * sol.y_events[0][0][0]


def test_geometry_examples():
    g = torus_geometry([3, 0, 0], P)
    np.testing.assert_allclose(g["normal"], [-1, 0, 0], atol=1e-15)
    assert g["uv"] == pytest.approx((0, 0))
    g = torus_geometry([2, 0, 1], P)
    np.testing.assert_allclose(g["normal"], [0, 0, -1], atol=1e-15)
    assert g["uv"] == pytest.approx((0, math.pi / 2))
    g = torus_geometry([1, 0, 0], P)
    np.testing.assert_allclose(g["normal"], [1, 0, 0], atol=1e-15)
    assert g["uv"] == pytest.approx((0, math.pi))
    with pytest.raises(OffSurface):
        torus_geometry([3.1, 0, 0], P)


def test_params_validation():
    with pytest.raises(ValueError):
        TorusParams(1.0, 1.0)
    assert TorusParams(3.0, 1.0).max_normal_curvature == 1.0
    assert TorusParams(1.5, 1.0).max_normal_curvature == 2.0


def test_normal_curvature_examples():
    assert normal_curvature([3, 0, 0], [0, 0, 1], P) == pytest.approx(1.0)
    assert normal_curvature(embed(0.7, 2.0), torus_geometry(embed(0.7, 2.0), P)["meridian"], P) == pytest.approx(1.0)
    assert normal_curvature([3, 0, 0], [0, 1, 0], P) == pytest.approx(1 / 3)
    assert normal_curvature([1, 0, 0], [0, 1, 0], P) == pytest.approx(-1.0)
    with pytest.raises(NotTangent):
        normal_curvature([3, 0, 0], [1, 0, 0], P)


@settings(max_examples=40, deadline=None)
@given(u=st.floats(-3, 3), v=st.floats(-3, 3), phi=st.floats(0, 2 * math.pi),
       A=st.floats(1.5, 4.0), r=st.floats(0.3, 1.0))
def test_normal_curvature_matches_finite_differences(u, v, phi, A, r):
    params = TorusParams(A, r)
    rho = A + r * math.cos(v)
    # unit-speed direction phi in the (parallel, meridian) plane
    kn_fd, t = fd_normal_curvature(u, v, math.cos(phi) / rho, math.sin(phi) / r, params)
    assert normal_curvature(embed(u, v, params), t, params) == pytest.approx(kn_fd, abs=1e-6)


def test_required_geodesic_curvature():
    assert required_geodesic_curvature(0.7, 0.7) == 0.0
    assert required_geodesic_curvature(5, 3) == 4.0
    with pytest.raises(CurvatureTooSmall):
        required_geodesic_curvature(1, 2)


def test_rhs_on_meridian_at_outer_equator():
    d = surface_ode_rhs([3, 0, 0, 0, 0, 1], 1.0, 1, P)
    np.testing.assert_allclose(d, [0, 0, 1, -1, 0, 0], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(u=st.floats(-3, 3), v=st.floats(-3, 3), phi=st.floats(0, 2 * math.pi), sign=st.sampled_from([-1, 1]))
def test_rhs_acceleration_has_length_kappa_and_is_normal(u, v, phi, sign):
    g = torus_geometry(embed(u, v), P)
    t = math.cos(phi) * g["parallel"] + math.sin(phi) * g["meridian"]
    kappa = 1.2
    acc = surface_ode_rhs(np.concatenate([embed(u, v), t]), kappa, sign, P)[3:]
    assert np.linalg.norm(acc) == pytest.approx(kappa, rel=1e-12)
    assert abs(np.dot(acc, t)) < 1e-12


def test_rhs_rejects_small_curvature():
    with pytest.raises(CurvatureTooSmall):
        surface_ode_rhs([3, 0, 0, 0, 0, 1], 0.5, 1, P)


@pytest.mark.parametrize("start", ["outer", "inner"])
def test_symmetric_closed_curves(start):
    curve = symmetric_closed_curve(1.5, start, P)
    assert closure_report(curve).position_gap < 1e-8
    assert np.max(np.abs(implicit_residual(curve.samples, P))) < 1e-8
    assert np.max(np.abs(discrete_invariants(curve).kappa - 1.5)) < 1e-4
    mirrored = reflect_points(curve.samples, Plane([0, 0, 0], [0, 0, 1]))
    assert set_distance(mirrored, curve.samples) < 1e-8
    assert curve.is_arclength()
    radius = np.hypot(curve.samples[:, 0], curve.samples[:, 1])
    # the curve stays on its side of the tube near the starting equator
    assert (radius[0] > 2.9) if start == "outer" else (radius[0] < 1.1)


def test_symmetric_rejects_small_curvature():
    with pytest.raises(CurvatureTooSmall):
        symmetric_closed_curve(1.0, "outer", P)
    with pytest.raises(ValueError):
        symmetric_closed_curve(1.5, "top", P)


def test_symmetric_state_invariants():
    y0 = np.array([3.0, 0, 0, 0, 0, 1.0])
    s, y, h = _integrate_arc(y0, (2.0, 1.0, 1.5, 1.0), IntegratorConfig(step=1e-3))
    assert np.max(np.abs(np.linalg.norm(y[:, 3:], axis=1) - 1)) < 1e-9
    assert np.max(np.abs(implicit_residual(y[:, :3], P))) < 1e-8
    normals = np.array([torus_geometry(p, P)["normal"] for p in y[:, :3]])
    assert np.max(np.abs(np.einsum("ij,ij->i", normals, y[:, 3:]))) < 1e-8
    # kappa^2 = kappa_g^2 + kappa_n^2 from the two components of the acceleration
    acc = np.array([surface_ode_rhs(row, 1.5, 1, P)[3:] for row in y])
    kn = np.einsum("ij,ij->i", acc, normals)
    kg = np.einsum("ij,ij->i", acc, np.cross(y[:, 3:], normals))
    assert np.max(np.abs(kg**2 + kn**2 - 1.5**2)) < 1e-10
    kn_state, kg_state = state_curvatures(y, 1.5, P)
    np.testing.assert_allclose(kn, kn_state, atol=1e-12)
    np.testing.assert_allclose(kg, kg_state, atol=1e-12)


def test_symmetric_curvature_converges_at_order_two():
    errs = [np.max(np.abs(discrete_invariants(symmetric_closed_curve(1.5, "outer", P, IntegratorConfig(step=h)))
                          .kappa - 1.5)) for h in (4e-3, 2e-3)]
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_half_wave_small_angle_limit():
    assert half_wave(1e-3, P).kappa == pytest.approx(1 / 3, abs=1e-6)


def test_half_wave_geometry():
    wave = half_wave(0.3, P, IntegratorConfig(step=1e-3))
    arc = wave.arc
    assert arc.is_arclength()
    assert np.max(np.abs(implicit_residual(arc.samples, P))) < 1e-8
    mid = len(arc) // 2
    kg, kn = signed_geodesic_curvature(arc, P)
    # |kappa_g| grows away from the equator on the rising quarter
    assert np.all(np.abs(kg[:mid - 1]) > 0)
    assert np.all(np.diff(np.abs(kg[:mid // 2])) > 0)
    np.testing.assert_allclose(kg**2 + kn**2, wave.kappa**2, rtol=1e-4)
    # ends on the equator, heading down at the mirrored angle
    end = arc.samples[-1]
    assert abs(end[2]) < 1e-12
    assert math.atan2(end[1], end[0]) == pytest.approx(wave.delta_u, abs=1e-12)
    tangent = (3 * arc.samples[-1] - 4 * arc.samples[-2] + arc.samples[-3]) / (2 * arc.step)
    g = torus_geometry(end, P)
    angle = math.atan2(np.dot(tangent, g["meridian"]), np.dot(tangent, g["parallel"]))
    assert angle == pytest.approx(-0.3, abs=1e-5)


def test_half_wave_rejects_bad_angle():
    for theta in (0.0, -0.1, math.pi / 2):
        with pytest.raises(BadInitialAngle):
            half_wave(theta, P)


@pytest.mark.parametrize("theta0", [0.4, 1.0, 1.4])
def test_half_wave_matches_intrinsic_oracle(theta0):
    assert half_wave(theta0, P, IntegratorConfig(step=2e-3)).delta_u == pytest.approx(
        intrinsic_delta_u(theta0), abs=1e-7)


def test_half_wave_advance_converges_fast():
    d = [half_wave(1.0, P, IntegratorConfig(step=h)).delta_u for h in (4e-3, 2e-3, 1e-3)]
    assert abs(d[1] - d[2]) < 1e-9


def test_oscillating_closure_six_halfwaves():
    curve = oscillating_closed_curve(6, P, (1.45, 1.54))
    m = curve.meta
    assert abs(m["delta_u_error"]) < 1e-8
    assert m["scan_monotone"]
    assert closure_report(curve).position_gap < 1e-7
    assert np.max(np.abs(implicit_residual(curve.samples, P))) < 1e-8
    assert np.max(np.abs(discrete_invariants(curve).kappa - m["kappa"])) < 1e-4
    kg, _ = signed_geodesic_curvature(curve, P)
    n = m["halfwave_samples"] - 1
    signs = [np.sign(np.median(kg[k * n:(k + 1) * n - 2])) for k in range(6)]
    assert all(a == -b for a, b in zip(signs, signs[1:]))
    # 3-fold symmetry about the torus axis
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    assert set_distance(curve.samples @ rot.T, curve.samples) < 1e-3 * curve.step + 1e-7


def test_oscillating_without_sign_change():
    with pytest.raises(NoBracket):
        oscillating_closed_curve(2, P, (0.2, 1.2), scan_points=5)
    with pytest.raises(ValueError):
        oscillating_closed_curve(5, P, (0.2, 1.2))
