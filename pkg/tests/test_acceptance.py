"""Acceptance criteria, each run at its stated tolerance.

Every test files a one-line verdict through the ``record`` fixture; the
lines are printed in the terminal summary (and with ``-s`` as they run).
"""

import time

import numpy as np
import pytest

from linesource.assembly import MixedSystem, assemble_boundary_term, assemble_darcy
from linesource.experiments import DEFAULT_LEVELS, ExperimentConfig, run_experiment
from linesource.femspace import MixedSpace, interpolate_flux
from linesource.fields import affine, constant, quadratic_in
from linesource.greens import INFINITE_LINE, KernelParams, greens_segment, greens_segment_gradient
from linesource.mesh import build_box_mesh
from linesource.network import LineNetwork, Segment, random_network
from linesource.solver import solve_saddle
from linesource.splitting import SplitProblem, remainder_source, singular_pressure

from oracles import fd_laplacian_batch, segment_potential_quad

RATE_BAND = (0.85, 1.15)


def _verdict(record, number, name, passed, detail):
    record(number, name, passed, detail)
    print(f"\n[{'PASS' if passed else 'FAIL'}] {number}. {name}: {detail}")
    assert passed, detail


def _in_band(rate, band=RATE_BAND):
    return band[0] <= rate <= band[1]


def _timed_run(preset, **kw):
    t0 = time.perf_counter()
    res = run_experiment(ExperimentConfig(preset, **kw))
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def exp2_run():
    return _timed_run("exp2_removal_3d", levels=(4, 8, 16))


@pytest.fixture(scope="module")
def exp1_run():
    return _timed_run("exp1_standard_2d", levels=(16, 32, 64, 128), alphas=(0.0, 0.5, 1.0))


@pytest.fixture(scope="module")
def network_run():
    return _timed_run("network_removal_3d", levels=(2, 4, 8, 16))


def test_criterion_1_kernel_oracle(record):
    rng = np.random.default_rng(20240)
    t0 = time.perf_counter()
    worst_val = worst_grad = 0.0
    count = 0
    while count < 1000:
        a, b, x = rng.uniform(0, 1, (3, 3))
        seg = Segment(a, b)
        if seg.length < 1e-2 or seg.distance(x) <= 1e-3:
            continue
        kappa = rng.uniform(0.5, 2.0)
        params = KernelParams(kappa=kappa)
        g = greens_segment(x, seg, params)
        worst_val = max(worst_val, abs(g - segment_potential_quad(x, a, b, kappa)))
        grad = greens_segment_gradient(x, seg, params)
        h = 1e-4 * seg.distance(x)
        fd = np.array([(greens_segment(x + h * e, seg, params) - greens_segment(x - h * e, seg, params)) / (2 * h)
                       for e in np.eye(3)])
        worst_grad = max(worst_grad, np.linalg.norm(fd - grad) / np.linalg.norm(grad))
        count += 1
    elapsed = time.perf_counter() - t0
    ok = worst_val <= 1e-8 and worst_grad <= 1e-6 and elapsed < 10.0
    _verdict(record, 1, "kernel oracle equivalence", ok,
             f"max |G - quad| {worst_val:.2e}, max gradient rel err {worst_grad:.2e}, {elapsed:.1f}s")


def _points_away(rng, net, n, min_r=0.05):
    out = []
    while len(out) < n:
        x = rng.uniform(0, 1, (4 * n, 3))
        out.extend(x[net.distance(x) > min_r][: n - len(out)])
    return np.array(out)


def test_criterion_2_splitting_consistency(record):
    rng = np.random.default_rng(7)
    net = random_network(5, seed=11)
    seg = net[0]
    centre = LineNetwork((Segment([0.5, 0.5, 0.0], [0.5, 0.5, 1.0]),))
    kappa = 1.7
    params = KernelParams(kappa=kappa)
    zero_slopes = LineNetwork(tuple(Segment(s.a, s.b, 1.0, 0.0) for s in net))
    cases = {
        "constant": SplitProblem(zero_slopes, constant(2.5), constant(0.0), params),
        "affine-tangent": SplitProblem(LineNetwork((seg,)), affine(1.0, 0.8 * seg.tangent, seg.a),
                                       constant(0.0), params),
        "z^2+1 segment": SplitProblem(net, quadratic_in(2, 1.0, 1.0), constant(0.0), params),
        "z^2+1 line": SplitProblem(centre, quadratic_in(2, 1.0, 1.0), constant(0.0), params, INFINITE_LINE),
    }
    worst = {}
    for name, p in cases.items():
        pts = _points_away(rng, p.network, 200)
        lap = fd_laplacian_batch(lambda y: singular_pressure(y, p), pts, 1e-4)
        worst[name] = float(np.max(np.abs(-kappa * lap + remainder_source(pts, p))))
    ok = max(worst.values()) <= 1e-3
    _verdict(record, 2, "splitting consistency", ok,
             ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def _patch(dim, n, kappa=1.0):
    V = MixedSpace(build_box_mesh(dim, np.zeros(dim), np.ones(dim), n))
    A, B = assemble_darcy(V, kappa)
    g = assemble_boundary_term(V, lambda x: x[:, 0])
    rep = solve_saddle(MixedSystem(A, B, g, np.zeros(V.n_pressure_dofs)))
    u_ref = V.mesh.centroids[:, 0]
    flux = np.zeros(dim)
    flux[0] = -kappa
    q_ref = interpolate_flux(lambda x: np.tile(flux, (len(x), 1)), V)
    eu = np.max(np.abs(rep.pressure - u_ref)) / np.max(np.abs(u_ref))
    eq = np.max(np.abs(rep.flux - q_ref)) / np.max(np.abs(q_ref))
    return eu, eq


def test_criterion_3_patch_test(record):
    worst_u = worst_q = 0.0
    levels = [(2, n) for n in DEFAULT_LEVELS["exp1_standard_2d"]] + \
             [(3, n) for n in sorted(set(DEFAULT_LEVELS["exp2_removal_3d"]) | set(DEFAULT_LEVELS["network_removal_3d"]))]
    for dim, n in levels:
        eu, eq = _patch(dim, n)
        worst_u, worst_q = max(worst_u, eu), max(worst_q, eq)
    ok = worst_u <= 1e-9 and worst_q <= 1e-9
    _verdict(record, 3, "patch test", ok,
             f"{len(levels)} levels, max rel err u {worst_u:.1e}, q {worst_q:.1e}")


def test_criterion_4_exp2_rates(record, exp2_run):
    res, elapsed = exp2_run
    t = res.tables["remainder"]
    ru, rq = t.rates_u[-1], t.rates_q[-1]
    ok = _in_band(ru) and _in_band(rq) and elapsed <= 600
    _verdict(record, 4, "vertical line, removal path", ok,
             f"finest-pair rates u {ru:.3f}, q {rq:.3f}, {elapsed:.0f}s")


def test_criterion_5_exp1_rates(record, exp1_run):
    res, elapsed = exp1_run
    ru = {a: res.tables[f"alpha{a:g}"].rates_u[-1] for a in (0.0, 0.5, 1.0)}
    rq = {a: res.tables[f"alpha{a:g}"].rates_q[-1] for a in (0.0, 0.5, 1.0)}
    ok_u = all(_in_band(r) for r in ru.values())
    ok_q = all(_in_band(rq[a], (a - 0.2, a + 0.25)) for a in (0.5, 1.0)) and rq[0.0] <= 0.15
    ok = ok_u and ok_q and elapsed <= 300
    detail = ", ".join(f"alpha {a:g}: u {ru[a]:.3f} q {rq[a]:.3f}" for a in ru)
    _verdict(record, 5, "point source, standard path", ok, f"finest-pair rates {detail}, {elapsed:.0f}s")


def test_criterion_6_network_rates(record, network_run):
    res, elapsed = network_run
    t = res.tables["remainder"]
    ru, rq = t.rates_u[-1], t.rates_q[-1]
    ok = _in_band(ru) and _in_band(rq) and elapsed <= 900
    _verdict(record, 6, "20-segment network", ok,
             f"finest-pair rates u {ru:.3f}, q {rq:.3f}, {elapsed:.0f}s")


def test_criterion_7_local_conservation(record, exp2_run, network_run):
    worst = 0.0
    count = 0
    for res, _ in (exp2_run, network_run):
        for lv in res.levels:
            worst = max(worst, lv.conservation / lv.rhs_max if lv.rhs_max > 0 else lv.conservation)
            count += 1
    _verdict(record, 7, "local conservation", worst <= 1e-9,
             f"{count} removal-path systems, max defect {worst:.1e} * ||b||_inf")


def test_criterion_8_reconstruction(record, exp2_run):
    res, _ = exp2_run
    t = res.tables["total"]
    ru, rq = t.rates_u[-1], t.rates_q[-1]
    ok = ru >= 0.85
    _verdict(record, 8, "reconstruction convergence", ok,
             f"L2_0.25 finest-pair rate u {ru:.3f} (flux {rq:.3f})")
