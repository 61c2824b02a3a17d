"""Singular/regular splitting of the line-source problem.

With ``G_i`` the kernel of segment ``i`` and ``F_i = f * phi_i`` the product of
the global intensity factor and the segment's own affine intensity,

    u_s = sum_i F_i G_i,                 q_s = -kappa grad u_s,
    f_r = kappa sum_i (Lap F_i G_i + 2 grad F_i . grad G_i) + g,
    u_r0 = u0 - u_s,

where ``g`` is an optional regular bulk source (zero for a pure line-source
problem). The remainder pair then solves ``q_r = -kappa grad u_r``,
``div q_r = f_r``, ``u_r = u_r0`` on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError
from .fields import ScalarField, as_field, constant, segment_intensity
from .greens import KERNEL_KINDS, SEGMENT, KernelParams, kernel_value_and_gradient
from .network import LineNetwork


@dataclass(frozen=True)
class SplitProblem:
    network: LineNetwork
    f: ScalarField
    u0: ScalarField
    params: KernelParams = KernelParams()
    kernel: str = SEGMENT
    bulk_source: Optional[ScalarField] = None

    def __post_init__(self):
        if self.kernel not in KERNEL_KINDS:
            raise ValidationError(f"unknown kernel kind {self.kernel!r}")
        if self.kernel == SEGMENT and self.network.dim != 3:
            raise ValidationError("the segment kernel needs a 3D network")
        object.__setattr__(self, "f", as_field(self.f))
        object.__setattr__(self, "u0", as_field(self.u0))

    @property
    def dim(self) -> int:
        return self.network.dim

    @property
    def kappa(self) -> float:
        return self.params.kappa

    def intensities(self):
        return [self.f * segment_intensity(seg) for seg in self.network]

    def _terms(self, x, clamp):
        """Yield ``(F, grad F, Lap F, G, grad G)`` per segment at points ``x``."""
        for i, (seg, F) in enumerate(zip(self.network, self.intensities())):
            G, dG = kernel_value_and_gradient(x, seg, self.params, self.kernel, clamp=clamp, index=i)
            yield F._value(x), F._gradient(x), F._laplacian(x), G, dG


def _pts(x):
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x), x.ndim == 1


def _ret(arr, single):
    return (float(arr[0]) if arr.ndim == 1 else arr[0]) if single else arr


def singular_pressure(x, p: SplitProblem, *, clamp=False):
    pts, single = _pts(x)
    total = np.zeros(pts.shape[0])
    for F, _, _, G, _ in p._terms(pts, clamp):
        total += F * G
    return _ret(total, single)


def singular_flux(x, p: SplitProblem, *, clamp=False):
    pts, single = _pts(x)
    total = np.zeros(pts.shape)
    for F, dF, _, G, dG in p._terms(pts, clamp):
        total += dF * G[:, None] + F[:, None] * dG
    return _ret(-p.kappa * total, single)


def remainder_source(x, p: SplitProblem, *, clamp=False):
    """Regular source of the remainder problem (product rule, factor 2 on the cross term)."""
    pts, single = _pts(x)
    total = np.zeros(pts.shape[0])
    for _, dF, lapF, G, dG in p._terms(pts, clamp):
        total += lapF * G + 2.0 * np.einsum("ij,ij->i", dF, dG)
    total *= p.kappa
    if p.bulk_source is not None:
        total += p.bulk_source._value(pts)
    return _ret(total, single)


def remainder_boundary(x, p: SplitProblem, *, clamp=False):
    """Dirichlet data ``u0 - u_s`` of the remainder problem."""
    pts, single = _pts(x)
    val = p.u0._value(pts) - singular_pressure(pts, p, clamp=clamp)
    return _ret(val, single)


def singular_field(p: SplitProblem, *, clamp=False) -> tuple[Callable, Callable]:
    return (lambda x: singular_pressure(x, p, clamp=clamp),
            lambda x: singular_flux(x, p, clamp=clamp))


def reconstruct(u_r: Callable, q_r: Callable, p: SplitProblem, *, clamp=False) -> tuple[Callable, Callable]:
    """Total pressure and flux ``(u_s + u_r, q_s + q_r)`` as point callables."""

    def pressure(x):
        return singular_pressure(x, p, clamp=clamp) + u_r(x)

    def flux(x):
        return singular_flux(x, p, clamp=clamp) + q_r(x)

    return pressure, flux
