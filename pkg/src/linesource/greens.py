"""Free-space potentials of straight line sources and their gradients.

The single-segment potential solving ``-kappa * Lap G = delta_segment`` is

    G(x) = 1/(4 pi kappa) * ln((r_a + r_b + L) / (r_a + r_b - L)),

with ``r_a = |x - a|``, ``r_b = |x - b|``. The denominator ``r_a + r_b - L``
vanishes quadratically in the distance to the segment, so it is never formed
by subtraction. Writing ``p = tau . (x - a)``, ``q = L - p`` and ``rho`` for the
distance to the carrier line,

    r_a + r_b - L = (r_a - p) + (r_b - q),
    r_a - p = rho^2 / (r_a + p)   if p > 0   else   r_a - p,

and likewise for the ``b`` end. This is finite on the collinear extensions,
where the textbook quotient form degenerates to 0/0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularEvaluationError, ValidationError
from .network import LineNetwork, Segment

SEGMENT = "segment"
INFINITE_LINE = "infinite_line"
KERNEL_KINDS = (SEGMENT, INFINITE_LINE)


@dataclass(frozen=True)
class KernelParams:
    kappa: float = 1.0
    floor_radius: float = 1e-12

    def __post_init__(self):
        if not (self.kappa > 0 and np.isfinite(self.kappa)):
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        if not self.floor_radius >= 0:
            raise ValidationError(f"floor_radius must be non-negative, got {self.floor_radius}")


def _points(x):
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x), x.ndim == 1


def _segment_geometry(pts, seg: Segment):
    d = pts - seg.a
    p = d @ seg.tangent
    perp = d - p[:, None] * seg.tangent
    rho2 = np.einsum("ij,ij->i", perp, perp)
    r_a = np.linalg.norm(d, axis=1)
    r_b = np.linalg.norm(pts - seg.b, axis=1)
    q = seg.length - p
    with np.errstate(divide="ignore", invalid="ignore"):
        t_a = np.where(p > 0, rho2 / (r_a + p), r_a - p)
        t_b = np.where(q > 0, rho2 / (r_b + q), r_b - q)
    # rho2 == 0 with p > 0 gives 0/positive, never 0/0; guard the x == a, x == b corners
    t_a = np.nan_to_num(t_a, nan=0.0)
    t_b = np.nan_to_num(t_b, nan=0.0)
    dist = np.sqrt(np.where(p < 0, r_a**2, np.where(q < 0, r_b**2, rho2)))
    return perp, r_a, r_b, t_a, t_b, dist


def _check_floor(dist, params, clamp, index):
    if clamp:
        return
    bad = dist <= params.floor_radius
    if np.any(bad):
        where = "" if index is None else f" (segment {index})"
        raise SingularEvaluationError(
            f"kernel evaluated within floor radius of the source{where}", segment=index)


def greens_segment(x, seg: Segment, params: KernelParams = KernelParams(), *, clamp=False, index=None):
    """Potential of a unit-intensity segment. ``clamp`` replaces the singular
    error by evaluation at the floor radius (for quadrature of integrable
    ln-singular integrands)."""
    value, _ = _segment_kernel(x, seg, params, clamp, index, want_grad=False)
    return value


def greens_segment_gradient(x, seg: Segment, params: KernelParams = KernelParams(), *, clamp=False, index=None):
    _, grad = _segment_kernel(x, seg, params, clamp, index, want_grad=True)
    return grad


def _segment_kernel(x, seg, params, clamp, index, want_grad):
    if seg.dim != 3:
        raise ValidationError("the segment kernel is defined for 3D segments only")
    pts, single = _points(x)
    perp, r_a, r_b, t_a, t_b, dist = _segment_geometry(pts, seg)
    _check_floor(dist, params, clamp, index)
    L = seg.length
    denom = t_a + t_b
    if clamp:
        fl = params.floor_radius
        denom = np.maximum(denom, max(2.0 * fl * fl / L, np.finfo(float).tiny))
        r_a = np.maximum(r_a, fl if fl > 0 else np.finfo(float).tiny)
        r_b = np.maximum(r_b, fl if fl > 0 else np.finfo(float).tiny)
    c = 1.0 / (4.0 * np.pi * params.kappa)
    value = c * np.log1p(2.0 * L / denom)
    grad = None
    if want_grad:
        # grad r_a + grad r_b, tangential part written without cancellation
        tang = t_b / r_b - t_a / r_a
        normal = 1.0 / r_a + 1.0 / r_b
        dsum = tang[:, None] * seg.tangent + normal[:, None] * perp
        factor = -c * 2.0 * L / ((r_a + r_b + L) * denom)
        grad = factor[:, None] * dsum
    if single:
        value = float(value[0])
        grad = None if grad is None else grad[0]
    return value, grad


def greens_infinite_line(x, axis_point, axis_dir=None, params: KernelParams = KernelParams(), *, clamp=False, index=None):
    """``-(1/(2 pi kappa)) ln r`` with ``r`` the distance to an infinite line.

    In 2D ``axis_dir`` is ignored: the line is normal to the plane and ``r`` is
    the distance to ``axis_point``.
    """
    value, _ = _line_kernel(x, axis_point, axis_dir, params, clamp, index, want_grad=False)
    return value


def greens_infinite_line_gradient(x, axis_point, axis_dir=None, params: KernelParams = KernelParams(), *, clamp=False, index=None):
    _, grad = _line_kernel(x, axis_point, axis_dir, params, clamp, index, want_grad=True)
    return grad


def _line_kernel(x, axis_point, axis_dir, params, clamp, index, want_grad):
    pts, single = _points(x)
    d = pts - np.asarray(axis_point, dtype=float)
    if pts.shape[1] == 3:
        if axis_dir is None:
            raise ValidationError("a 3D infinite line needs a direction")
        t = np.asarray(axis_dir, dtype=float)
        t = t / np.linalg.norm(t)
        d = d - (d @ t)[:, None] * t
    r = np.linalg.norm(d, axis=1)
    _check_floor(r, params, clamp, index)
    if clamp:
        r = np.maximum(r, params.floor_radius if params.floor_radius > 0 else np.finfo(float).tiny)
    c = -1.0 / (2.0 * np.pi * params.kappa)
    value = c * np.log(r)
    grad = (c / r**2)[:, None] * d if want_grad else None
    if single:
        value = float(value[0])
        grad = None if grad is None else grad[0]
    return value, grad


def kernel_value_and_gradient(x, seg: Segment, params: KernelParams, kind: str = SEGMENT, *, clamp=False, index=None):
    """Value and gradient of the per-segment kernel of the chosen kind.

    For ``infinite_line`` the segment only supplies the axis (through ``a``
    along the tangent; in 2D the axis is normal to the plane through ``a``).
    """
    if kind == SEGMENT:
        return _segment_kernel(x, seg, params, clamp, index, want_grad=True)
    if kind == INFINITE_LINE:
        return _line_kernel(x, seg.a, seg.tangent, params, clamp, index, want_grad=True)
    raise ValidationError(f"unknown kernel kind {kind!r}")


def greens_network(x, net: LineNetwork, params: KernelParams = KernelParams(), *, clamp=False):
    """Superposition of segment potentials over the network."""
    pts, single = _points(x)
    total = np.zeros(pts.shape[0])
    for i, seg in enumerate(net.segments):
        total += greens_segment(pts, seg, params, clamp=clamp, index=i)
    return float(total[0]) if single else total


def greens_network_gradient(x, net: LineNetwork, params: KernelParams = KernelParams(), *, clamp=False):
    pts, single = _points(x)
    total = np.zeros(pts.shape)
    for i, seg in enumerate(net.segments):
        total += greens_segment_gradient(pts, seg, params, clamp=clamp, index=i)
    return total[0] if single else total
