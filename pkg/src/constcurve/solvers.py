"""Scalar root finding by sign-change scanning and plain bisection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import MaxIterExceeded, NoBracket


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.f_lo * self.f_hi <= 0:
            raise NoBracket(f"no sign change on [{self.lo}, {self.hi}]: f = {self.f_lo:.3e}, {self.f_hi:.3e}")


def make_bracket(f: Callable[[float], float], lo: float, hi: float) -> Bracket:
    return Bracket(lo, hi, f(lo), f(hi))


def scan_for_bracket(f: Callable[[float], float], grid: Sequence[float]) -> Bracket | None:
    """Leftmost adjacent grid pair over which ``f`` changes sign."""
    xs = list(grid)
    prev_x, prev_f = xs[0], f(xs[0])
    for x in xs[1:]:
        fx = f(x)
        if prev_f * fx <= 0 and not (prev_f == 0 and fx == 0):
            return Bracket(prev_x, x, prev_f, fx)
        prev_x, prev_f = x, fx
    return None


def bisect(f: Callable[[float], float], bracket: Bracket, x_tol: float = 1e-12,
           f_tol: float = 0.0, max_iter: int = 200) -> float:
    """Midpoint bisection.

    Stops when the bracket is narrower than ``x_tol`` (returning its
    midpoint) or when ``|f(x)| <= f_tol`` at an evaluated point. ``f`` is
    only ever evaluated inside the initial bracket.
    """
    lo, hi, f_lo = bracket.lo, bracket.hi, bracket.f_lo
    if f_lo == 0:
        return lo
    if bracket.f_hi == 0:
        return hi
    for _ in range(max_iter):
        if hi - lo <= x_tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket at float resolution
            return mid
        fm = f(mid)
        if abs(fm) <= f_tol:
            return mid
        if (fm < 0) == (f_lo < 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    if hi - lo <= x_tol:
        return 0.5 * (lo + hi)
    raise MaxIterExceeded(f"bisection stopped after {max_iter} iterations; width {hi - lo:.3e}")
