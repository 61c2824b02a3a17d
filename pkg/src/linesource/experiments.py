"""Convergence studies with manufactured solutions.

Presets
-------
exp1_standard_2d
    Unit square, point source of intensity 2 at the centre, standard mixed
    method with the measure on the right-hand side. Errors in ``L2_alpha``.
exp2_removal_3d
    Unit cube, vertical line through the centre with intensity ``z^2 + 1``,
    infinite-line kernel, singularity removal. Errors of the remainder.
network_removal_3d
    Unit cube, seeded 20-segment network with affine intensities, segment
    kernel, singularity removal.
custom
    As ``network_removal_3d`` with a user-supplied network file.

For ``kappa != 1`` the exact pressures below are divided by ``kappa`` and the
fluxes are unchanged, so the sources stay fixed.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .analysis import FLUX, PRESSURE, ConvergenceTable, ErrorSpec, conservation_defect, \
    divergence_error, weighted_error
from .assembly import removal_system, standard_system
from .errors import ConsistencyError, LineSourceError, ValidationError
from .femspace import MixedSpace, flux_at_centroids
from .fields import ScalarField, constant, quadratic_in, value_only
from .greens import INFINITE_LINE, SEGMENT, KernelParams
from .mesh import build_box_mesh
from .network import LineNetwork, PointSource, Segment, load_network, parse_network
from .solver import solve_saddle
from .splitting import SplitProblem, remainder_source, singular_flux, singular_pressure
from .vtk import write_vtk

log = logging.getLogger(__name__)

PRESETS = ("exp1_standard_2d", "exp2_removal_3d", "network_removal_3d", "custom")
DEFAULT_LEVELS = {
    "exp1_standard_2d": (16, 32, 64, 128),
    "exp2_removal_3d": (4, 8, 16),
    "network_removal_3d": (2, 4, 8, 16),
    "custom": (2, 4, 8),
}
DEFAULT_ALPHAS = (0.0, 0.5, 1.0)
RECONSTRUCTION_ALPHA = 0.25
NETWORK_SEED = 2024
PREFLIGHT_POINTS = 50
PREFLIGHT_TOL = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    levels: tuple = ()
    alphas: tuple = DEFAULT_ALPHAS
    kappa: float = 1.0
    network: Optional[Path] = None
    out: Optional[Path] = None
    method: str = "auto"

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValidationError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        levels = tuple(int(n) for n in (self.levels or DEFAULT_LEVELS[self.preset]))
        if not levels or any(n < 1 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValidationError(f"levels must be a non-empty increasing list of positive ints, got {levels}")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not (self.kappa > 0 and np.isfinite(self.kappa)):
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        if self.preset == "custom" and self.network is None:
            raise ValidationError("the custom preset needs --network")


@dataclass
class Manufactured:
    """Exact data of one preset.

    ``pressure``/``flux`` are what the discrete solution approximates (the
    full solution for the standard path, the remainder for the removal path);
    ``density`` is the matching regular part of the divergence.
    """

    dim: int
    source: object
    pressure: Callable
    flux: Callable
    density: Callable
    problem: Optional[SplitProblem] = None
    bulk_source: Optional[ScalarField] = None
    u0: Optional[Callable] = None
    total_pressure: Optional[Callable] = None
    total_flux: Optional[Callable] = None

    @property
    def removal(self) -> bool:
        return self.problem is not None


@dataclass
class LevelReport:
    n: int
    h: float
    cells: int
    unknowns: int
    residual: float
    method: str
    iterations: Optional[int]
    conservation: float
    rhs_max: float
    error_div: Optional[float] = None
    seconds: float = 0.0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    tables: dict = field(default_factory=dict)
    levels: list = field(default_factory=list)
    files: list = field(default_factory=list)
    preflight: Optional[float] = None


# -- exact solutions -------------------------------------------------------

def _radial(centre):
    centre = np.asarray(centre, dtype=float)

    def geom(x):
        d = x - centre
        return d, np.linalg.norm(d, axis=1)

    return geom


def exp1_case(kappa: float = 1.0) -> Manufactured:
    """``u = -(1/2pi)(2 ln r - r^2 (1 - ln r)/2)`` around a point source of intensity 2."""
    src = PointSource(np.array([0.5, 0.5]), 2.0)
    geom = _radial(src.point)

    def u(x):
        _, r = geom(x)
        return -(2.0 * np.log(r) - 0.5 * r**2 * (1.0 - np.log(r))) / (2.0 * np.pi * kappa)

    def q(x):
        d, r = geom(x)
        dv = 2.0 / r - 0.5 * r + r * np.log(r)
        return (dv / r)[:, None] * d / (2.0 * np.pi)

    def bulk(x):
        return np.log(geom(x)[1]) / np.pi

    bulk_field = value_only(bulk, "ln(r)/pi")
    return Manufactured(2, src, u, q, bulk, bulk_source=bulk_field, u0=u)


def exp2_case(kappa: float = 1.0) -> Manufactured:
    """Vertical line through the cube centre, intensity ``z^2 + 1``."""
    axis = Segment(np.array([0.5, 0.5, 0.0]), np.array([0.5, 0.5, 1.0]))
    net = LineNetwork((axis,))
    c = np.array([0.5, 0.5])

    def planar(x):
        d = x[:, :2] - c
        return d, np.linalg.norm(d, axis=1)

    def u_r(x):
        _, r = planar(x)
        return r**2 * (1.0 - np.log(r)) / (4.0 * np.pi * kappa)

    def q_r(x):
        d, r = planar(x)
        out = np.zeros_like(x)
        out[:, :2] = -((1.0 - 2.0 * np.log(r)) / (4.0 * np.pi))[:, None] * d
        return out

    def u_exact(x):
        _, r = planar(x)
        f = x[:, 2] ** 2 + 1.0
        return -(f * np.log(r) - 0.5 * r**2 * (1.0 - np.log(r))) / (2.0 * np.pi * kappa)

    bulk = value_only(lambda x: 2.0 * np.log(planar(x)[1]) / np.pi, "2ln(r)/pi")
    params = KernelParams(kappa=kappa)
    problem = SplitProblem(net, quadratic_in(2, 1.0, 1.0), value_only(u_exact, "u"),
                           params, INFINITE_LINE, bulk)

    def total_flux(x):
        return singular_flux(x, problem, clamp=True) + q_r(x)

    def density(x):
        return np.log(planar(x)[1]) / np.pi

    return Manufactured(3, net, u_r, q_r, density, problem, bulk, u_exact, u_exact, total_flux)


def bundled_network() -> LineNetwork:
    """The seeded 20-segment synthetic network shipped with the package."""
    text = resources.files("linesource").joinpath("data", "network20.csv").read_bytes()
    return parse_network(text, dim=3)


def network_case(net: LineNetwork, kappa: float = 1.0) -> Manufactured:
    """Remainder ``u_r = sum_i slope_i/(4 pi kappa) (r_b - r_a)`` for unit global factor."""
    if net.dim != 3:
        raise ValidationError("network presets need a 3D network")
    segs = list(net)

    def u_r(x):
        out = np.zeros(len(x))
        for s in segs:
            r_a = np.linalg.norm(x - s.a, axis=1)
            r_b = np.linalg.norm(x - s.b, axis=1)
            out += s.intensity_slope * (r_b - r_a)
        return out / (4.0 * np.pi * kappa)

    def q_r(x):
        out = np.zeros_like(x)
        for s in segs:
            da, db = x - s.a, x - s.b
            r_a = np.maximum(np.linalg.norm(da, axis=1), 1e-300)
            r_b = np.maximum(np.linalg.norm(db, axis=1), 1e-300)
            out -= s.intensity_slope * (db / r_b[:, None] - da / r_a[:, None])
        return out / (4.0 * np.pi)

    def density(x):
        out = np.zeros(len(x))
        for s in segs:
            r_a = np.maximum(np.linalg.norm(x - s.a, axis=1), 1e-300)
            r_b = np.maximum(np.linalg.norm(x - s.b, axis=1), 1e-300)
            out += s.intensity_slope * (1.0 / r_a - 1.0 / r_b)
        return out / (2.0 * np.pi)

    params = KernelParams(kappa=kappa)
    stub = SplitProblem(net, constant(1.0), constant(0.0), params, SEGMENT)

    def u_exact(x):
        return singular_pressure(x, stub, clamp=True) + u_r(x)

    problem = SplitProblem(net, constant(1.0), value_only(u_exact, "u"), params, SEGMENT)

    def total_flux(x):
        return singular_flux(x, problem, clamp=True) + q_r(x)

    return Manufactured(3, net, u_r, q_r, density, problem, None, u_exact, u_exact, total_flux)


def build_case(config: ExperimentConfig) -> Manufactured:
    if config.preset == "exp1_standard_2d":
        return exp1_case(config.kappa)
    if config.preset == "exp2_removal_3d":
        return exp2_case(config.kappa)
    net = load_network(config.network) if config.network is not None else bundled_network()
    return network_case(net, config.kappa)


# -- checks ----------------------------------------------------------------

def preflight(case: Manufactured, n_points: int = PREFLIGHT_POINTS, step: float = 1e-4,
              seed: int = 0, min_distance: float = 0.05) -> float:
    """Finite-difference ``div q - density`` at seeded points away from the source.

    For the removal path ``density`` is the remainder source built by the
    splitting, so this checks the manufactured remainder against it.
    Raises :class:`ConsistencyError` if the scaled mismatch exceeds the tolerance.
    """
    rng = np.random.default_rng(seed)
    d = case.dim
    pts = []
    while len(pts) < n_points:
        x = rng.uniform(0.05, 0.95, (4 * n_points, d))
        x = x[case.source.distance(x) > min_distance]
        pts.extend(x[: n_points - len(pts)])
    pts = np.array(pts)
    div = np.zeros(n_points)
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        div += (case.flux(pts + e)[:, k] - case.flux(pts - e)[:, k]) / (2.0 * step)
    if case.removal:
        density = remainder_source(pts, case.problem)
    else:
        density = case.density(pts)
    worst = float(np.max(np.abs(div - density) / np.maximum(1.0, np.abs(density))))
    if worst > PREFLIGHT_TOL:
        i = int(np.argmax(np.abs(div - density)))
        raise ConsistencyError(
            f"manufactured flux is inconsistent with the source: div q = {div[i]:.6g} but "
            f"source = {density[i]:.6g} at {pts[i].tolist()} (scaled mismatch {worst:.2e})")
    return worst


def _with_context(exc: LineSourceError, preset: str, n: int) -> LineSourceError:
    msg = exc.args[0] if exc.args else ""
    exc.args = (f"[{preset}, n={n}] {msg}",) + exc.args[1:]
    return exc


# -- driver ----------------------------------------------------------------

def solve_level(case: Manufactured, n: int, kappa: float = 1.0, method: str = "auto"):
    """Mesh, assemble and solve one refinement level; returns ``(space, system, report)``."""
    d = case.dim
    mesh = build_box_mesh(d, np.zeros(d), np.ones(d), n)
    space = MixedSpace(mesh)
    if case.removal:
        system = removal_system(space, case.problem)
    else:
        system = standard_system(space, kappa, case.u0, case.source, case.bulk_source)
    return space, system, solve_saddle(system, method=method)


def _errors(case, space, report, alpha):
    spec_u = ErrorSpec(alpha, PRESSURE, case.pressure)
    spec_q = ErrorSpec(alpha, FLUX, case.flux)
    return (weighted_error(report.pressure, spec_u, case.source, space),
            weighted_error(report.flux, spec_q, case.source, space))


def _total_errors(case, space, report):
    """``u - (u_s + u_h)`` and ``q - (q_s + q_h)`` in ``L2_alpha``, written as the
    exact total minus the singular part compared against the discrete remainder."""
    p = case.problem
    spec_u = ErrorSpec(RECONSTRUCTION_ALPHA, PRESSURE,
                       lambda x: case.total_pressure(x) - singular_pressure(x, p, clamp=True))
    spec_q = ErrorSpec(RECONSTRUCTION_ALPHA, FLUX,
                       lambda x: case.total_flux(x) - singular_flux(x, p, clamp=True))
    return (weighted_error(report.pressure, spec_u, case.source, space),
            weighted_error(report.flux, spec_q, case.source, space))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every level of ``config``; writes CSV and VTK files if ``config.out`` is set."""
    case = build_case(config)
    result = ExperimentResult(config)
    result.preflight = preflight(case)
    log.info("%s: preflight mismatch %.2e", config.preset, result.preflight)

    if case.removal:
        result.tables["remainder"] = ConvergenceTable()
        result.tables["total"] = ConvergenceTable(alpha=RECONSTRUCTION_ALPHA)
        alphas = ()
    else:
        alphas = config.alphas
        for a in alphas:
            result.tables[f"alpha{a:g}"] = ConvergenceTable(alpha=a)

    out = Path(config.out) if config.out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    for n in config.levels:
        t0 = time.perf_counter()
        try:
            space, system, report = solve_level(case, n, config.kappa, config.method)
            mesh = space.mesh
            _ = mesh.diameters, mesh.centroids, mesh.volumes  # warm caches before threads
            level = LevelReport(
                n=n, h=mesh.h, cells=mesh.n_cells, unknowns=report.stats["n"],
                residual=report.residual, method=report.stats["method"],
                iterations=report.stats.get("iterations"),
                conservation=conservation_defect(report.flux, space, system.b),
                rhs_max=float(np.max(np.abs(system.b))) if system.b.size else 0.0)
            if case.removal:
                eu, eq = _errors(case, space, report, 0.0)
                result.tables["remainder"].add(mesh.h, eu, eq)
                result.tables["total"].add(mesh.h, *_total_errors(case, space, report))
                level.error_div = divergence_error(report.flux, case.density, case.source, space)
            else:
                with ThreadPoolExecutor(max_workers=max(1, len(alphas))) as pool:
                    futures = [pool.submit(_errors, case, space, report, a) for a in alphas]
                    for a, fut in zip(alphas, futures):
                        result.tables[f"alpha{a:g}"].add(mesh.h, *fut.result())
            if out is not None:
                result.files += _write_fields(out, config.preset, n, case, space, report)
        except LineSourceError as exc:
            raise _with_context(exc, config.preset, n)
        level.seconds = time.perf_counter() - t0
        log.info("%s n=%d: %d unknowns, residual %.1e, %.1fs", config.preset, n,
                 level.unknowns, level.residual, level.seconds)
        result.levels.append(level)

    if out is not None:
        result.files += write_tables(result, out)
    return result


def _write_fields(out, preset, n, case, space, report):
    mesh = space.mesh
    q_cells = flux_at_centroids(space, report.flux)
    files = [write_vtk(mesh, report.pressure, q_cells, out / f"{preset}_n{n}.vtk",
                       title=f"{preset} n={n} discrete solution")]
    if case.removal:
        c = mesh.centroids
        u_tot = singular_pressure(c, case.problem, clamp=True) + report.pressure
        q_tot = singular_flux(c, case.problem, clamp=True) + q_cells
        files.append(write_vtk(mesh, u_tot, q_tot, out / f"{preset}_n{n}_total.vtk",
                               title=f"{preset} n={n} reconstructed total"))
    return files


def levels_csv(result: ExperimentResult) -> str:
    """Per-level solver diagnostics (no timings, so the bytes are reproducible)."""
    lines = ["n,h,cells,unknowns,residual,iterations,conservation,error_div"]
    for lv in result.levels:
        lines.append(",".join([
            str(lv.n), f"{lv.h:.6g}", str(lv.cells), str(lv.unknowns), f"{lv.residual:.6g}",
            "" if lv.iterations is None else str(lv.iterations),
            f"{lv.conservation:.6g}", "" if lv.error_div is None else f"{lv.error_div:.6g}"]))
    return "\n".join(lines) + "\n"


def write_tables(result: ExperimentResult, out: Path) -> list:
    preset = result.config.preset
    files = []
    for name, table in result.tables.items():
        path = out / f"{preset}_{name}.csv"
        path.write_text(table.to_csv())
        files.append(path)
    path = out / f"{preset}_levels.csv"
    path.write_text(levels_csv(result))
    files.append(path)
    return files
