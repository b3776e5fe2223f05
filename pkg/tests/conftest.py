import math

import numpy as np
import pytest

from constcurve.geometry import SampledCurve


def circle_curve(radius: float, step: float, turns: float = 1.0) -> SampledCurve:
    n = int(round(turns * 2 * math.pi * radius / step))
    t = np.arange(n + 1) * step / radius
    pts = np.column_stack([radius * np.cos(t), radius * np.sin(t), np.zeros_like(t)])
    return SampledCurve(pts, step)


def helix_curve(step: float, length: float = 6.0, handed: int = 1) -> SampledCurve:
    """(cos t, handed * sin t, t) sampled by arclength; curvature = |torsion| = 1/2."""
    s = np.arange(int(round(length / step)) + 1) * step
    t = s / math.sqrt(2.0)
    pts = np.column_stack([np.cos(t), handed * np.sin(t), t])
    return SampledCurve(pts, step)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
