"""Command line entry point: ``constcurve <command> ...``.

Exit codes: 0 success, 1 numerical failure, 2 search failure (no bracket,
event or closure not found), 3 verification failure, 4 invalid arguments.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from fractions import Fraction

import numpy as np

from . import curvefile
from .cylinder import asymptotic_spiral, convex_closed_curve, oscillating_curve, roll_to_cylinder
from .errors import CurveError, DegenerateSamples, SearchFailure
from .frenet import TorsionPoly, assemble_closed, tune_parameter
from .geometry import closure_report, discrete_invariants
from .ode import IntegratorConfig
from .torus import TorusParams, oscillating_closed_curve, symmetric_closed_curve

EXIT_OK, EXIT_NUMERIC, EXIT_SEARCH, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fraction(text: str) -> tuple[int, int]:
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"expected P/Q, got {text!r}") from exc
    if f <= 0:
        raise argparse.ArgumentTypeError("target must be positive")
    return f.numerator, f.denominator


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return x


def _emit(cf: curvefile.CurveFile, out: str | None) -> None:
    if out:
        curvefile.save(cf, out)
        print(f"wrote {out}: {len(cf.samples)} samples, gap {cf.closure.position_gap:.3e}", file=sys.stderr)
    else:
        sys.stdout.write(curvefile.dumps(cf))


def cmd_cylinder(a) -> int:
    cfg = IntegratorConfig(step=a.step)
    critical = 1.0 / a.radius
    if math.isclose(a.kappa, critical, rel_tol=1e-12):
        plane = asymptotic_spiral(a.radius, a.alpha0, a.length, cfg)
        tag = "cylinder-asymptotic"
    elif a.kappa > critical:
        plane, tag = convex_closed_curve(a.kappa, a.radius, cfg), "cylinder-convex"
    else:
        plane = oscillating_curve(a.kappa, a.radius, a.halfperiods, cfg)
        tag = "cylinder-oscillating"
    rolled = roll_to_cylinder(plane, a.radius)
    _emit(curvefile.CurveFile.from_curve(rolled, tag, a.kappa), a.out)
    return EXIT_OK


def cmd_torus(a) -> int:
    params = TorusParams(a.big_radius, a.tube_radius)
    cfg = IntegratorConfig(step=a.step)
    if a.family == "symmetric":
        if a.kappa is None:
            raise UsageError("--kappa is required for the symmetric family")
        curve = symmetric_closed_curve(a.kappa, a.start, params, cfg)
        cf = curvefile.CurveFile.from_curve(curve, f"torus-symmetric-{a.start}", a.kappa)
    else:
        if a.halfwaves is None:
            raise UsageError("--halfwaves is required for the oscillating family")
        curve = oscillating_closed_curve(a.halfwaves, params, tuple(a.bracket), cfg, wraps=a.wraps)
        cf = curvefile.CurveFile.from_curve(curve, "torus-oscillating", curve.meta["kappa"])
    _emit(cf, a.out)
    return EXIT_OK


def _frenet_file(kappa, torsion, closed, tag, **extra) -> curvefile.CurveFile:
    return curvefile.CurveFile.from_curve(closed.curve, tag, kappa, periods=closed.periods, **extra)


def cmd_frenet_planes(a) -> int:
    cfg = IntegratorConfig(step=a.step)
    torsion = TorsionPoly(c=a.c, d=a.d, e=a.e)
    if a.target is None:
        closed = assemble_closed(a.kappa, torsion, config=cfg, max_periods=a.max_periods)
        _emit(_frenet_file(a.kappa, torsion, closed, "frenet-planes"), a.out)
        return EXIT_OK
    if a.tune is None or a.bracket is None:
        raise UsageError("--target needs --tune and --bracket")
    tuned = tune_parameter("planes", a.kappa, torsion, a.tune, tuple(a.bracket), a.target, cfg)
    closed = assemble_closed(tuned.kappa, tuned.torsion, a.target[1], cfg)
    _emit(_frenet_file(tuned.kappa, tuned.torsion, closed, "frenet-planes",
                       angle=tuned.angle, target=tuned.target), a.out)
    return EXIT_OK


def cmd_frenet_normals(a) -> int:
    cfg = IntegratorConfig(step=a.step)
    tuned = tune_parameter("normals", a.kappa, TorsionPoly(c=a.c, e=a.e), a.tune, tuple(a.bracket),
                           a.target, cfg, b_bracket=tuple(a.b_bracket),
                           require_positive_torsion=a.require_positive_torsion)
    closed = assemble_closed(tuned.kappa, tuned.torsion, a.target[1], cfg)
    _emit(_frenet_file(tuned.kappa, tuned.torsion, closed, "frenet-normals",
                       angle=tuned.angle, target=tuned.target), a.out)
    return EXIT_OK


def verify_curve(cf: curvefile.CurveFile, kappa: float, tol: float, closed: bool = True) -> tuple[bool, dict]:
    """Check discrete curvature against ``kappa`` and, for closed curves, the
    end-to-start gap. Uses only the samples."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSamples)
        inv = discrete_invariants(curvefile.CurveFile(cf.construction, kappa, cf.step, cf.samples).to_curve())
    kappa_err = float(np.max(np.abs(inv.kappa - kappa)))
    from .geometry import SampledCurve
    rep = closure_report(SampledCurve(cf.samples, cf.step))
    ok = kappa_err <= tol and (not closed or rep.position_gap <= tol)
    return ok, {"kappa_error": kappa_err, "position_gap": rep.position_gap, "tangent_gap": rep.tangent_gap,
                "length": rep.length, "samples": len(cf.samples)}


def cmd_verify(a) -> int:
    cf = curvefile.load(a.file)
    kappa = cf.kappa if a.kappa is None else a.kappa
    ok, report = verify_curve(cf, kappa, a.tol, closed=not a.open)
    for k, v in report.items():
        print(f"{k}: {v:.6g}" if isinstance(v, float) else f"{k}: {v}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_export(a) -> int:
    cf = curvefile.load(a.file)
    text = curvefile.export(cf, a.format, a.view)
    if a.out:
        curvefile.write_atomic(a.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="constcurve", description="Closed space curves of constant curvature.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--step", type=_positive, default=1e-3, help="arclength step")
        sp.add_argument("--out", help="output CurveFile (default: stdout)")

    c = sub.add_parser("cylinder", help="curve on a circular cylinder")
    c.add_argument("--radius", type=_positive, required=True)
    c.add_argument("--kappa", type=_positive, required=True)
    c.add_argument("--halfperiods", type=int, default=2, help="turning points for kappa < 1/R")
    c.add_argument("--alpha0", type=float, default=0.1, help="initial angle for kappa = 1/R")
    c.add_argument("--length", type=_positive, default=50.0, help="arclength for kappa = 1/R")
    common(c)
    c.set_defaults(func=cmd_cylinder)

    t = sub.add_parser("torus", help="closed curve on a torus")
    t.add_argument("--big-radius", type=_positive, required=True)
    t.add_argument("--tube-radius", type=_positive, required=True)
    t.add_argument("--family", choices=("symmetric", "oscillating"), required=True)
    t.add_argument("--kappa", type=_positive)
    t.add_argument("--start", choices=("inner", "outer"), default="outer")
    t.add_argument("--halfwaves", type=int)
    t.add_argument("--wraps", type=int, default=1)
    t.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"), default=[0.05, 1.56],
                   help="initial angle bracket for the oscillating family")
    common(t)
    t.set_defaults(func=cmd_torus)

    f = sub.add_parser("frenet-planes", help="odd torsion, mirror-plane symmetry")
    f.add_argument("--kappa", type=_positive, required=True)
    f.add_argument("--c", type=float, required=True)
    f.add_argument("--d", type=float, default=0.0)
    f.add_argument("--e", type=float, default=0.0)
    f.add_argument("--target", type=_fraction, help="angle P/Q in units of pi")
    f.add_argument("--tune", choices=("c", "kappa"))
    f.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    f.add_argument("--max-periods", type=int, default=40, help="closure search limit without --target")
    common(f)
    f.set_defaults(func=cmd_frenet_planes)

    n = sub.add_parser("frenet-normals", help="even torsion, rotation-normal symmetry")
    n.add_argument("--kappa", type=_positive, required=True)
    n.add_argument("--c", type=float, required=True)
    n.add_argument("--e", type=float, default=0.0)
    n.add_argument("--target", type=_fraction, required=True)
    n.add_argument("--tune", choices=("c", "e"), required=True)
    n.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"), required=True)
    n.add_argument("--b-bracket", type=float, nargs=2, metavar=("LO", "HI"), default=[-1.0, 1.0])
    n.add_argument("--require-positive-torsion", action="store_true")
    common(n)
    n.set_defaults(func=cmd_frenet_normals)

    v = sub.add_parser("verify", help="check curvature and closure of a CurveFile")
    v.add_argument("file")
    v.add_argument("--kappa", type=_positive, help="expected curvature (default: the declared one)")
    v.add_argument("--tol", type=_positive, default=1e-3)
    v.add_argument("--open", action="store_true", help="skip the closure check")
    v.set_defaults(func=cmd_verify)

    x = sub.add_parser("export", help="convert a CurveFile")
    x.add_argument("file")
    x.add_argument("--format", choices=curvefile.EXPORT_FORMATS, required=True)
    x.add_argument("--view", choices=("xy", "xz", "yz"), default="xy")
    x.add_argument("--out")
    x.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SearchFailure as exc:
        print(f"search failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (ValueError, OSError) as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CurveError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
