"""Solution of the symmetric indefinite block system ``[[A, B^T], [B, 0]]``."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import MixedSystem
from .errors import ConvergenceError, SolverError

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
CONSERVATION_TOL = 1e-12


@dataclass
class SolveReport:
    flux: np.ndarray
    pressure: np.ndarray
    residual: float
    stats: dict = field(default_factory=dict)


def relative_residual(K, x, rhs) -> float:
    nr = np.linalg.norm(rhs)
    r = np.linalg.norm(K @ x - rhs)
    return float(r / nr) if nr > 0 else float(r)


def _direct(K, rhs, stats):
    try:
        lu = spla.splu(K.tocsc(), permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SolverError(f"sparse LU failed on a {K.shape[0]}x{K.shape[0]} system "
                          f"with {K.nnz} nonzeros: {exc}") from exc
    stats["fill"] = int(lu.L.nnz + lu.U.nnz)
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SolverError("sparse LU produced non-finite values (singular system?)")
    return x


def _minres(system: MixedSystem, K, rhs, tol, maxiter, stats):
    dA = system.A.diagonal()
    if np.any(dA <= 0):
        raise SolverError("flux mass matrix has a non-positive diagonal entry")
    S = (system.B @ sp.diags(1.0 / dA) @ system.B.T).tocsc()
    S_lu = spla.splu(S)
    nq = system.n_flux

    def apply(v):
        out = np.empty_like(v)
        out[:nq] = v[:nq] / dA
        out[nq:] = S_lu.solve(v[nq:])
        return out

    M = spla.LinearOperator(K.shape, matvec=apply, dtype=float)
    iters = [0]

    def count(_):
        iters[0] += 1

    # MINRES stops on the preconditioned residual; restart with a tighter
    # tolerance until the true relative residual meets ``tol`` and the
    # divergence rows (local mass balance) hold to ``CONSERVATION_TOL``
    b = system.b
    b_scale = max(float(np.max(np.abs(b))), np.finfo(float).tiny) if b.size else 1.0
    x = np.zeros_like(rhs)
    rtol = tol * 1e-2
    for _ in range(6):
        x, info = spla.minres(K, rhs, x0=x, M=M, rtol=rtol, maxiter=maxiter, callback=count)
        if info < 0:
            raise SolverError(f"MINRES breakdown (info={info})")
        balance = np.max(np.abs(system.B @ x[:nq] - b)) / b_scale if b.size else 0.0
        if relative_residual(K, x, rhs) <= tol and balance <= CONSERVATION_TOL:
            break
        rtol *= 0.01
    stats["balance"] = float(balance)
    stats["iterations"] = iters[0]
    return x


DIRECT_LIMIT = 20_000


def solve_saddle(system: MixedSystem, method: str = "auto", tol: float = RESIDUAL_TOL,
                 maxiter: int = 20_000) -> SolveReport:
    """Solve for ``(q_h, u_h)``; raises if the relative residual exceeds ``tol``.

    ``method`` is ``"direct"`` (sparse LU with a COLAMD fill-reducing
    ordering) or ``"minres"`` (block-diagonal preconditioner built from
    ``diag(A)`` and the approximate Schur complement ``B diag(A)^-1 B^T``).
    ``"auto"`` picks LU below ``DIRECT_LIMIT`` unknowns, where its fill stays
    small, and MINRES above.
    """
    K = system.matrix()
    rhs = system.rhs()
    if method == "auto":
        method = "direct" if K.shape[0] <= DIRECT_LIMIT else "minres"
    stats = {"method": method, "n": K.shape[0], "nnz": int(K.nnz)}
    t0 = time.perf_counter()
    if not np.any(rhs):
        x = np.zeros_like(rhs)
    elif method == "direct":
        x = _direct(K, rhs, stats)
    elif method == "minres":
        x = _minres(system, K, rhs, tol, maxiter, stats)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    stats["seconds"] = time.perf_counter() - t0
    res = relative_residual(K, x, rhs)
    log.debug("solve %s n=%d residual=%.2e in %.2fs", method, K.shape[0], res, stats["seconds"])
    if res > tol:
        raise ConvergenceError(f"relative residual {res:.3e} exceeds {tol:.1e} ({method})")
    nq = system.n_flux
    return SolveReport(flux=x[:nq], pressure=-x[nq:], residual=res, stats=stats)
