"""
Versioned JSON persistence for sampled curves, and one-way exporters.

Every real is written with 17 significant digits, which round-trips IEEE
doubles exactly. Writes go to a temporary file in the target directory and
are moved into place, so readers never see a partial file.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import ClosureReport, SampledCurve, closure_report

SCHEMA_VERSION = 1
EXPORT_FORMATS = ("json", "csv", "obj", "ply", "svg")
_VIEWS = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class CurveFile:
    construction: str
    kappa: float
    step: float
    samples: np.ndarray
    parameters: dict = field(default_factory=dict)
    frames: np.ndarray | None = None
    closure: ClosureReport | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != 3:
            raise ValueError("samples must have shape (n, 3)")
        if self.frames is not None:
            self.frames = np.asarray(self.frames, dtype=float).reshape(len(self.samples), 9)
        if self.closure is None:
            self.closure = closure_report(SampledCurve(self.samples, self.step))

    @classmethod
    def from_curve(cls, curve: SampledCurve, construction: str, kappa: float, **parameters) -> "CurveFile":
        params = {k: float(v) for k, v in curve.meta.items()
                  if isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)}
        params.update({k: float(v) for k, v in parameters.items()})
        frames = None if curve.frames is None else curve.frames.reshape(len(curve), 9)
        return cls(construction, float(kappa), float(curve.step), curve.samples, params, frames)

    def to_curve(self) -> SampledCurve:
        frames = None if self.frames is None else self.frames.reshape(-1, 3, 3)
        meta = dict(self.parameters, construction=self.construction, kappa=self.kappa)
        return SampledCurve(self.samples.copy(), self.step, frames=frames, meta=meta)


def _rows(a) -> str:
    return ",\n    ".join("[" + ", ".join(fmt(x) for x in row) + "]" for row in np.atleast_2d(a))


def dumps(cf: CurveFile) -> str:
    # numbers are formatted by hand so the digit count is fixed
    head = {"schema_version": cf.schema_version, "construction": cf.construction}
    lines = ["{"]
    lines += [f'  {json.dumps(k)}: {json.dumps(v)},' for k, v in head.items()]
    params = ", ".join(f"{json.dumps(k)}: {fmt(v)}" for k, v in sorted(cf.parameters.items()))
    lines.append(f'  "parameters": {{{params}}},')
    lines.append(f'  "kappa": {fmt(cf.kappa)},')
    lines.append(f'  "step": {fmt(cf.step)},')
    c = cf.closure
    lines.append(f'  "closure": {{"position_gap": {fmt(c.position_gap)}, '
                 f'"tangent_gap": {fmt(c.tangent_gap)}, "length": {fmt(c.length)}}},')
    if cf.frames is not None:
        lines.append(f'  "frames": [\n    {_rows(cf.frames)}\n  ],')
    lines.append(f'  "samples": [\n    {_rows(cf.samples)}\n  ]')
    lines.append("}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> CurveFile:
    d = json.loads(text)
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version!r}")
    samples = np.array(d["samples"], dtype=float)
    frames = d.get("frames")
    if frames is not None and len(frames) != len(samples):
        raise ValueError("frames and samples differ in length")
    closure = ClosureReport(**d["closure"]) if "closure" in d else None
    return CurveFile(d["construction"], float(d["kappa"]), float(d["step"]), samples,
                     {k: float(v) for k, v in d.get("parameters", {}).items()},
                     None if frames is None else np.array(frames, dtype=float), closure, version)


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(cf: CurveFile, path) -> None:
    write_atomic(path, dumps(cf))


def load(path) -> CurveFile:
    return loads(Path(path).read_text(encoding="utf-8"))


def to_csv(cf: CurveFile) -> str:
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(cf.samples, axis=0), axis=1))])
    rows = (",".join(fmt(v) for v in (si, *p)) for si, p in zip(s, cf.samples))
    return "s,x,y,z\n" + "\n".join(rows) + "\n"


def to_obj(cf: CurveFile) -> str:
    verts = "\n".join("v " + " ".join(fmt(x) for x in p) for p in cf.samples)
    line = "l " + " ".join(str(i) for i in range(1, len(cf.samples) + 1))
    return f"# {cf.construction}\n{verts}\n{line}\n"


def to_ply(cf: CurveFile) -> str:
    n = len(cf.samples)
    head = ["ply", "format ascii 1.0", f"comment {cf.construction}",
            f"element vertex {n}", "property double x", "property double y", "property double z",
            f"element edge {n - 1}", "property int vertex1", "property int vertex2", "end_header"]
    verts = [" ".join(fmt(x) for x in p) for p in cf.samples]
    edges = [f"{i} {i + 1}" for i in range(n - 1)]
    return "\n".join(head + verts + edges) + "\n"


def to_svg(cf: CurveFile, view: str = "xy", size: float = 512.0, margin: float = 16.0) -> str:
    """Orthographic projection onto ``view`` as a single polyline path, y up."""
    if view not in _VIEWS:
        raise ValueError(f"view must be one of {sorted(_VIEWS)}")
    i, j = _VIEWS[view]
    xy = cf.samples[:, [i, j]]
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    scale = (size - 2 * margin) / max(float(np.max(hi - lo)), 1e-300)
    px = margin + (xy[:, 0] - lo[0]) * scale
    py = size - margin - (xy[:, 1] - lo[1]) * scale
    d = "M " + " L ".join(f"{fmt(a)} {fmt(b)}" for a, b in zip(px, py))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{fmt(size)}" height="{fmt(size)}" '
            f'viewBox="0 0 {fmt(size)} {fmt(size)}">\n'
            f'  <title>{cf.construction} ({view})</title>\n'
            f'  <path d="{d}" fill="none" stroke="black" stroke-width="1"/>\n</svg>\n')


def export(cf: CurveFile, fmt_name: str, view: str = "xy") -> str:
    if fmt_name == "json":
        return dumps(cf)
    if fmt_name == "csv":
        return to_csv(cf)
    if fmt_name == "obj":
        return to_obj(cf)
    if fmt_name == "ply":
        return to_ply(cf)
    if fmt_name == "svg":
        return to_svg(cf, view)
    raise ValueError(f"unknown export format {fmt_name!r}")
