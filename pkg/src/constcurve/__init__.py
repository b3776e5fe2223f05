"""Closed constant-curvature space curves.

Three constructions: planar solutions rolled onto a cylinder
(:mod:`constcurve.cylinder`), curves on a torus with prescribed normal and
geodesic curvature (:mod:`constcurve.torus`), and Frenet-Serret integration
with periodic torsion (:mod:`constcurve.frenet`). Every output is a
:class:`~constcurve.geometry.SampledCurve` that can be checked independently
with :func:`~constcurve.geometry.discrete_invariants` and
:func:`~constcurve.geometry.closure_report`.
"""
from .geometry import (ClosureReport, Frame, Line, Plane, RigidMotion, SampledCurve,
                       closure_report, discrete_invariants)
from .ode import IntegratorConfig

__all__ = [
    "ClosureReport", "Frame", "IntegratorConfig", "Line", "Plane", "RigidMotion",
    "SampledCurve", "closure_report", "discrete_invariants",
]
__version__ = "0.1.0"
