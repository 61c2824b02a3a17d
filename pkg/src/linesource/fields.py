"""Smooth scalar fields carrying their own gradient and Laplacian.

All callables take points of shape ``(N, d)`` and return ``(N,)`` values,
``(N, d)`` gradients and ``(N,)`` Laplacians. Single points ``(d,)`` are
accepted by the :class:`ScalarField` methods and return scalars/vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .network import Segment

Array = np.ndarray


@dataclass(frozen=True)
class ScalarField:
    """A scalar field ``f`` with ``grad f`` and ``Lap f``.

    Sums and products propagate derivatives (product rule), so intensity
    factors can be composed without hand-deriving their Laplacians.
    """

    _value: Callable[[Array], Array]
    _gradient: Callable[[Array], Array]
    _laplacian: Callable[[Array], Array]
    name: str = ""

    def _call(self, fn, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return fn(x[None, :])[0]
        return fn(x)

    def value(self, x):
        return self._call(self._value, x)

    def gradient(self, x):
        return self._call(self._gradient, x)

    def laplacian(self, x):
        return self._call(self._laplacian, x)

    __call__ = value

    def __add__(self, other: "ScalarField") -> "ScalarField":
        other = as_field(other)
        return ScalarField(
            lambda x: self._value(x) + other._value(x),
            lambda x: self._gradient(x) + other._gradient(x),
            lambda x: self._laplacian(x) + other._laplacian(x),
            f"({self.name}+{other.name})",
        )

    __radd__ = __add__

    def __neg__(self) -> "ScalarField":
        return self * -1.0

    def __sub__(self, other):
        return self + (-as_field(other))

    def __mul__(self, other) -> "ScalarField":
        if np.isscalar(other):
            c = float(other)
            return ScalarField(
                lambda x: c * self._value(x),
                lambda x: c * self._gradient(x),
                lambda x: c * self._laplacian(x),
                f"{c:g}*{self.name}",
            )
        f, g = self, other

        def grad(x):
            return f._gradient(x) * g._value(x)[:, None] + f._value(x)[:, None] * g._gradient(x)

        def lap(x):
            return (f._laplacian(x) * g._value(x)
                    + 2.0 * np.einsum("ij,ij->i", f._gradient(x), g._gradient(x))
                    + f._value(x) * g._laplacian(x))

        return ScalarField(lambda x: f._value(x) * g._value(x), grad, lap, f"{f.name}*{g.name}")

    __rmul__ = __mul__


def constant(c: float) -> ScalarField:
    c = float(c)
    return ScalarField(
        lambda x: np.full(x.shape[0], c),
        lambda x: np.zeros_like(x),
        lambda x: np.zeros(x.shape[0]),
        f"{c:g}",
    )


def as_field(obj) -> ScalarField:
    return obj if isinstance(obj, ScalarField) else constant(obj)


def affine(offset: float, coefficients, origin=None) -> ScalarField:
    """``offset + coefficients . (x - origin)``."""
    w = np.asarray(coefficients, dtype=float)
    o = np.zeros_like(w) if origin is None else np.asarray(origin, dtype=float)
    return ScalarField(
        lambda x: offset + (x - o) @ w,
        lambda x: np.broadcast_to(w, x.shape).copy(),
        lambda x: np.zeros(x.shape[0]),
        "affine",
    )


def coordinate(axis: int) -> ScalarField:
    def grad(x):
        g = np.zeros_like(x)
        g[:, axis] = 1.0
        return g

    return ScalarField(lambda x: x[:, axis].copy(), grad, lambda x: np.zeros(x.shape[0]), "xyz"[axis])


def quadratic_in(axis: int, a2: float = 1.0, a0: float = 0.0) -> ScalarField:
    """``a2 * x_axis**2 + a0``; with ``axis=2`` this is the ``z^2 + 1`` intensity."""

    def grad(x):
        g = np.zeros_like(x)
        g[:, axis] = 2.0 * a2 * x[:, axis]
        return g

    return ScalarField(
        lambda x: a2 * x[:, axis] ** 2 + a0,
        grad,
        lambda x: np.full(x.shape[0], 2.0 * a2),
        f"{a2:g}*{'xyz'[axis]}^2+{a0:g}",
    )


def segment_intensity(seg: Segment) -> ScalarField:
    """Affine-along-tangent intensity ``base + slope * tau . (x - a)``."""
    return affine(seg.intensity_base, seg.intensity_slope * seg.tangent, seg.a)


def from_callables(value, gradient, laplacian, name="") -> ScalarField:
    return ScalarField(value, gradient, laplacian, name)


def value_only(value, name="") -> ScalarField:
    """Field known only by its values (boundary data, bulk sources).

    Asking for its gradient or Laplacian raises ``NotImplementedError``.
    """

    def missing(x):
        raise NotImplementedError(f"field {name or '<unnamed>'} has no derivative information")

    return ScalarField(value, missing, missing, name)
