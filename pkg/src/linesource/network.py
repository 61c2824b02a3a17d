"""Geometry of the source set: straight segments, point sources and distance queries.

Points are handled as numpy arrays of shape ``(d,)`` or ``(N, d)``; every
query is vectorised over the leading axis.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from .errors import NetworkParseError, ValidationError

_MIN_LENGTH = 1e-14


def _as_points(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x), single


@dataclass(frozen=True, eq=False)
class Segment:
    """Oriented straight segment from ``a`` to ``b`` carrying an affine intensity.

    The intensity along the segment is ``intensity_base + intensity_slope * s``
    where ``s = tangent . (x - a)`` is arc length measured from ``a``.
    """

    a: np.ndarray
    b: np.ndarray
    intensity_base: float = 1.0
    intensity_slope: float = 0.0

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1 or a.size not in (2, 3):
            raise ValidationError(f"segment endpoints must both be 2D or 3D points, got {a.shape} and {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValidationError("segment endpoints must be finite")
        length = float(np.linalg.norm(b - a))
        if length <= _MIN_LENGTH:
            raise ValidationError("degenerate segment")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "intensity_base", float(self.intensity_base))
        object.__setattr__(self, "intensity_slope", float(self.intensity_slope))
        object.__setattr__(self, "_length", length)
        tangent = (b - a) / length
        tangent.setflags(write=False)
        object.__setattr__(self, "_tangent", tangent)

    @property
    def dim(self) -> int:
        return self.a.size

    @property
    def length(self) -> float:
        return self._length

    @property
    def tangent(self) -> np.ndarray:
        return self._tangent

    def point_at(self, s):
        """Point at arc length ``s`` (scalar or array) from ``a``."""
        s = np.asarray(s, dtype=float)
        return self.a + s[..., None] * self.tangent

    def arclength(self, x) -> np.ndarray:
        """Unclamped projection parameter ``tangent . (x - a)``."""
        x = np.asarray(x, dtype=float)
        return (x - self.a) @ self.tangent

    def distance(self, x):
        """Exact distance from ``x`` to the closed segment."""
        pts, single = _as_points(x)
        s = np.clip(self.arclength(pts), 0.0, self.length)
        d = np.linalg.norm(pts - self.point_at(s), axis=-1)
        return float(d[0]) if single else d

    def intensity(self, x):
        """Source intensity ``base + slope * tangent . (x - a)``."""
        x = np.asarray(x, dtype=float)
        val = self.intensity_base + self.intensity_slope * self.arclength(x)
        return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True, eq=False)
class LineNetwork:
    """Ordered, non-empty collection of segments of a common dimension."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValidationError("empty network")
        dims = {s.dim for s in segs}
        if len(dims) != 1:
            raise ValidationError(f"segments of mixed dimension {sorted(dims)}")
        object.__setattr__(self, "segments", segs)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __getitem__(self, i) -> Segment:
        return self.segments[i]

    @property
    def dim(self) -> int:
        return self.segments[0].dim

    def distance(self, x):
        return distance_to_network(x, self)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        ends = np.array([p for s in self.segments for p in (s.a, s.b)])
        return ends.min(axis=0), ends.max(axis=0)


@dataclass(frozen=True, eq=False)
class PointSource:
    """A 2D point source, i.e. the trace of a line perpendicular to the plane."""

    point: np.ndarray
    intensity: float = 1.0

    def __post_init__(self):
        p = np.array(self.point, dtype=float)
        if p.shape != (2,) or not np.all(np.isfinite(p)):
            raise ValidationError("point source must be a finite 2D point")
        p.setflags(write=False)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "intensity", float(self.intensity))

    @property
    def dim(self) -> int:
        return 2

    def distance(self, x):
        pts, single = _as_points(x)
        d = np.linalg.norm(pts - self.point, axis=-1)
        return float(d[0]) if single else d


SourceSet = Union[LineNetwork, PointSource]


def distance_to_network(x, net: LineNetwork):
    """Minimum over segments of the clamped point-to-segment distance."""
    pts, single = _as_points(x)
    if pts.shape[-1] != net.dim:
        raise ValidationError(f"point dimension {pts.shape[-1]} does not match network dimension {net.dim}")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("non-finite query point")
    best = np.full(pts.shape[0], np.inf)
    for seg in net.segments:
        np.minimum(best, seg.distance(pts), out=best)
    return float(best[0]) if single else best


def intensity_at(seg: Segment, x):
    return seg.intensity(x)


def parse_network(text: Union[str, bytes], dim: int = 3) -> LineNetwork:
    """Parse the 8-column network CSV ``ax,ay,az,bx,by,bz,base,slope``.

    Blank lines and lines starting with ``#`` are skipped. With ``dim=2`` the
    z columns are read but dropped.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if dim not in (2, 3):
        raise ValidationError(f"dim must be 2 or 3, got {dim}")
    segments = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 8:
            raise NetworkParseError(f"line {lineno}: expected 8 fields, found {len(parts)}", lineno)
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise NetworkParseError(f"line {lineno}: non-numeric field in {line!r}", lineno) from None
        if not all(np.isfinite(vals)):
            raise NetworkParseError(f"line {lineno}: non-finite field", lineno)
        a, b = np.array(vals[0:3]), np.array(vals[3:6])
        try:
            segments.append(Segment(a[:dim], b[:dim], vals[6], vals[7]))
        except ValidationError:
            raise ValidationError(f"degenerate segment at line {lineno}") from None
    if not segments:
        raise ValidationError("empty network")
    return LineNetwork(tuple(segments))


def render_network(net: LineNetwork) -> str:
    """Inverse of :func:`parse_network`; floats are written with ``repr``."""
    lines = ["# ax,ay,az,bx,by,bz,base,slope"]
    for seg in net.segments:
        a = list(seg.a) + [0.0] * (3 - seg.dim)
        b = list(seg.b) + [0.0] * (3 - seg.dim)
        fields = a + b + [seg.intensity_base, seg.intensity_slope]
        lines.append(",".join(repr(float(v)) for v in fields))
    return "\n".join(lines) + "\n"


def load_network(path: Union[str, Path], dim: int = 3) -> LineNetwork:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read network file {path}: {exc.strerror}") from exc
    return parse_network(data, dim=dim)


def random_network(n_segments: int, seed: int, lower=0.2, upper=0.8,
                   slope_range=(-0.5, 0.5), dim: int = 3) -> LineNetwork:
    """Seeded synthetic network: endpoints uniform in ``[lower, upper]^dim``,
    base intensity 1 and slopes uniform in ``slope_range``."""
    rng = np.random.default_rng(seed)
    segments = []
    while len(segments) < n_segments:
        a = rng.uniform(lower, upper, dim)
        b = rng.uniform(lower, upper, dim)
        slope = rng.uniform(*slope_range)
        if np.linalg.norm(b - a) < 0.05:
            continue
        segments.append(Segment(a, b, 1.0, slope))
    return LineNetwork(tuple(segments))
