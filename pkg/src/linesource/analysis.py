"""Weighted error norms and convergence tables.

The weight is ``r^(2 alpha)`` with ``r`` the distance to the source set; it is
clamped below at ``floor_radius`` so quadrature never divides by zero.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assembly import integrate_over_cells
from .errors import ValidationError
from .femspace import MixedSpace, divergence, evaluate_flux

PRESSURE = "pressure"
FLUX = "flux"


@dataclass(frozen=True)
class ErrorSpec:
    """Which discrete quantity to compare against ``reference`` and with what weight.

    ``reference`` maps points ``(N, d)`` to values ``(N,)`` for the pressure
    or vectors ``(N, d)`` for the flux.
    """

    alpha: float
    quantity: str
    reference: Callable

    def __post_init__(self):
        if not -1.0 <= self.alpha <= 2.0:
            raise ValidationError(f"alpha must lie in [-1, 2], got {self.alpha}")
        if self.quantity not in (PRESSURE, FLUX):
            raise ValidationError(f"quantity must be {PRESSURE!r} or {FLUX!r}, got {self.quantity!r}")


def _weight(source, alpha, floor_radius):
    if source is None or alpha == 0:
        return None

    def w(flat):
        r = np.maximum(source.distance(flat), floor_radius)
        return r ** (2.0 * alpha)

    return w


def weighted_error(solution: np.ndarray, spec: ErrorSpec, source, space: MixedSpace,
                   floor_radius: float = 1e-12, order: int = 4, levels: int = 2) -> float:
    """``sqrt(sum_K int_K r^(2 alpha) |reference - discrete|^2)``.

    ``solution`` holds cell values for the pressure or facet dofs for the
    flux. Cells near ``source`` get the refined rule used in assembly.
    """
    mesh = space.mesh
    weight = _weight(source, spec.alpha, floor_radius)
    solution = np.asarray(solution, dtype=float)

    def integrand(cells, pts):
        m, nq, d = pts.shape
        flat = pts.reshape(-1, d)
        ref = np.asarray(spec.reference(flat), dtype=float)
        if spec.quantity == PRESSURE:
            diff2 = (ref.reshape(m, nq) - solution[cells][:, None]) ** 2
        else:
            diff = ref.reshape(m, nq, d) - evaluate_flux(space, solution, cells, pts)
            diff2 = np.einsum("cqd,cqd->cq", diff, diff)
        if weight is not None:
            diff2 = diff2 * weight(flat).reshape(m, nq)
        return diff2

    per_cell = integrate_over_cells(mesh, integrand, source, order=order, levels=levels)
    return float(np.sqrt(max(per_cell.sum(), 0.0)))


def divergence_error(flux_dofs: np.ndarray, source_density: Callable, source, space: MixedSpace,
                     order: int = 4, levels: int = 2) -> float:
    """``|| div q_h - f ||_{L2}`` for a regular source density ``f``."""
    div = divergence(space, np.asarray(flux_dofs, dtype=float))

    def integrand(cells, pts):
        m, nq, d = pts.shape
        ref = np.asarray(source_density(pts.reshape(-1, d)), dtype=float).reshape(m, nq)
        return (ref - div[cells][:, None]) ** 2

    per_cell = integrate_over_cells(space.mesh, integrand, source, order=order, levels=levels)
    return float(np.sqrt(max(per_cell.sum(), 0.0)))


def conservation_defect(flux_dofs: np.ndarray, space: MixedSpace, b: np.ndarray) -> float:
    """``max_K |(div q_h)_K |K| - b_K|``."""
    integrated = divergence(space, flux_dofs) * space.mesh.volumes
    return float(np.max(np.abs(integrated - b)))


def observed_rates(errors: Sequence[float]) -> list[float]:
    """``log2(e_i / e_{i+1})`` per successive pair; ``nan`` when undefined."""
    errors = [float(e) for e in errors]
    if len(errors) < 2:
        raise ValidationError("need at least two errors to compute a rate")
    out = []
    for e0, e1 in zip(errors[:-1], errors[1:]):
        if e0 > 0 and e1 > 0 and math.isfinite(e0) and math.isfinite(e1):
            out.append(math.log2(e0 / e1))
        else:
            out.append(math.nan)
    return out


def _fmt(x: Optional[float]) -> str:
    if x is None:
        return ""
    if math.isnan(x):
        return "nan"
    return f"{x:.6g}"


@dataclass
class ConvergenceTable:
    """Errors per refinement for one pressure/flux pair, with observed rates."""

    alpha: Optional[float] = None
    h: list = field(default_factory=list)
    error_u: list = field(default_factory=list)
    error_q: list = field(default_factory=list)

    def add(self, h: float, error_u: float, error_q: float) -> None:
        if self.h and not h < self.h[-1]:
            raise ValidationError(f"mesh sizes must decrease, got {h} after {self.h[-1]}")
        self.h.append(float(h))
        self.error_u.append(float(error_u))
        self.error_q.append(float(error_q))

    def __len__(self):
        return len(self.h)

    @property
    def rates_u(self) -> list[float]:
        return observed_rates(self.error_u) if len(self) > 1 else []

    @property
    def rates_q(self) -> list[float]:
        return observed_rates(self.error_q) if len(self) > 1 else []

    def to_csv(self) -> str:
        """``h,error_u,rate_u,error_q,rate_q[,alpha]``; the first row has no rates."""
        buf = io.StringIO()
        header = ["h", "error_u", "rate_u", "error_q", "rate_q"]
        if self.alpha is not None:
            header.append("alpha")
        buf.write(",".join(header) + "\n")
        ru = [None] + self.rates_u
        rq = [None] + self.rates_q
        for i in range(len(self)):
            row = [_fmt(self.h[i]), _fmt(self.error_u[i]), _fmt(ru[i]),
                   _fmt(self.error_q[i]), _fmt(rq[i])]
            if self.alpha is not None:
                row.append(_fmt(self.alpha))
            buf.write(",".join(row) + "\n")
        return buf.getvalue()
