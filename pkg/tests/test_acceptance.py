"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines; every
tolerance is pinned here and nowhere else.
"""

import math
import time

import numpy as np
import pytest

from nifrde.fractional_calculus import (
    caputo_derivative_quadrature,
    caputo_dini_estimate,
    rl_kernel,
)
from nifrde.impulsive import ImpulseSchedule, NifrdeProblem, solve_nifrde
from nifrde.lyapunov import (
    DiniEvalContext,
    caputo_fractional_dini,
    dini_fractional,
    quadratic_candidate,
)
from nifrde.problems import (
    build_problem,
    constant_gains,
    exact_curve,
    example8_candidate,
    example8_closed_form,
    example8_field,
    example8_schedule,
    example8_time_factor,
    linear_field,
)
from nifrde.solver import FlowProblem, solve_frde
from nifrde.special_functions import _ml, gamma, ml_array, ml_one, ml_two
from nifrde.stability import (
    IDENTITY_K,
    attraction_time_bound,
    probe_uniform_stability,
    verify_comparison,
    verify_quadratic_corollary,
)
from test_stability import corrupt


def report(n, name, started):
    print(f"\nACCEPTANCE {n} {name}: PASS ({time.time() - started:.1f}s)")


def test_criterion_1_mittag_leffler_identities():
    started = time.time()
    for z in np.arange(-5.0, 5.0 + 0.25, 0.5):
        assert abs(ml_one(1.0, float(z)) - math.exp(z)) <= 1e-10 * abs(math.exp(z))
    assert ml_two(1.0, 2.0, 1.0) == pytest.approx(math.e - 1.0, abs=1e-10)
    assert ml_two(2.0, 1.0, 1.0) == pytest.approx(math.cosh(1.0), abs=1e-10)
    assert time.time() - started < 1.0
    report(1, "Mittag-Leffler identities", started)


def test_criterion_2_relaxation_curve_reproduction():
    started = time.time()
    for q in (0.2, 0.5, 0.8):
        p = FlowProblem(q=q, tau=0.0, t_end=5.0, x0=[0.0], f=lambda t, x: 1.0 - x)
        sol = solve_frde(p, 4096)
        mask = sol.grid >= 0.05
        exact = sol.grid[mask] ** q * ml_array(q, 1.0 + q, -sol.grid[mask] ** q)
        sup = float(np.max(np.abs(sol.values[mask, 0] - exact)))
        assert sup <= 5e-3, f"q={q}: sup error {sup}"
    assert time.time() - started < 30.0
    report(2, "relaxation curve vs t^q E_(q,1+q)(-t^q)", started)


def test_criterion_3_impulsive_linear_closed_form():
    started = time.time()
    # A = -1: product-of-Mittag-Leffler formula at all segment endpoints
    p = build_problem("example1-linear", A=-1.0, x0=1.0)
    traj = solve_nifrde(p, steps_per_unit=1024)
    exact = exact_curve("example1-linear", p, A=-1.0)
    for seg in traj.segments:
        for t, v in ((seg.a, seg.values[0]), (seg.b, seg.values[-1])):
            if seg.kind == "impulse" and t == seg.a and seg.a != seg.b:
                continue
            e = exact(t)
            assert np.max(np.abs(v - e)) / np.max(np.abs(e)) <= 5e-3
    # A = 0: exact gain products
    p0 = build_problem("example1-linear", A=0.0, x0=1.0)
    traj0 = solve_nifrde(p0, steps_per_unit=256)
    exact0 = exact_curve("example1-linear", p0, A=0.0)
    for t, x, _, _ in traj0.points():
        assert np.max(np.abs(x - exact0(t))) <= 1e-10
    assert time.time() - started < 10.0
    report(3, "impulsive linear closed form", started)


def test_criterion_4_backward_difference_coherence():
    started = time.time()
    q, t0, t = 0.5, 0.0, 1.0
    cases = [
        (lambda s: np.asarray(s, float),
         lambda s: np.ones_like(np.asarray(s, float))),
        (lambda s: np.asarray(s, float) ** 2,
         lambda s: 2.0 * np.asarray(s, float)),
        (lambda s: np.array([_ml(q, 1.0, -math.sqrt(si)) for si in
                             np.atleast_1d(np.asarray(s, float))]).reshape(np.shape(s)),
         lambda s: np.array([-si ** -0.5 * _ml(q, q, -math.sqrt(si)) for si in
                             np.atleast_1d(np.asarray(s, float))]).reshape(np.shape(s))),
    ]
    for m, dm in cases:
        quad = float(caputo_derivative_quadrature(m, t0, t, q, dm=dm))
        dini = float(caputo_dini_estimate(m, t0, t, q).value)
        assert abs(dini - quad) <= 1e-4
    assert time.time() - started < 10.0
    report(4, "backward-difference vs quadrature coherence", started)


def test_criterion_5_lyapunov_operator_cross_validation():
    started = time.time()
    V2 = quadratic_candidate()
    lin = linear_field(-1.0)
    worst = 0.0
    for t in np.linspace(0.5, 2.5, 5):
        for x in np.linspace(-1.0, 1.0, 5):
            x = 0.3 if abs(x) < 1e-12 else float(x)
            ctx = DiniEvalContext(t=float(t), x=[x], t0=0.0, x0=[1.0], q=0.5, f=lin)
            rd = dini_fractional(V2, ctx)          # closed form 2 x f
            worst = max(worst, abs(rd.value - rd.closed_form))
            rc = caputo_fractional_dini(V2, ctx)   # + history/kernel terms
            worst = max(worst, abs(rc.value - rc.closed_form))
    V8 = example8_candidate()
    f8 = example8_field()
    sch = example8_schedule()
    for t in np.linspace(1.0, 4.5, 5):
        for x in np.linspace(-1.0, 1.0, 5):
            x = 0.3 if abs(x) < 1e-12 else float(x)
            ctx = DiniEvalContext(t=float(t), x=[x], t0=0.0, x0=[1.0], q=0.5,
                                  f=f8, schedule=sch)
            rd = dini_fractional(V8, ctx)
            worst = max(worst, abs(rd.value - rd.closed_form))
            rc = caputo_fractional_dini(V8, ctx)
            worst = max(worst, abs(rc.value - rc.closed_form))
            # the quadrature-backed closed form agrees with the fully
            # analytic reduction
            assert rc.closed_form == pytest.approx(
                example8_closed_form(float(t), x, 1.0), abs=1e-6)
    assert worst <= 1e-3, f"worst operator mismatch {worst}"
    assert time.time() - started < 60.0
    report(5, "Lyapunov operators vs closed forms (5x5 grids)", started)


def test_criterion_6_initial_data_term_fixes_the_sign():
    started = time.time()
    sch = example8_schedule()
    rng = np.random.default_rng(42)
    x0 = 1.0
    # 100 flow points across the flow intervals, |x| <= |x0|
    pts = []
    while len(pts) < 100:
        k = rng.integers(0, sch.p + 1)
        lo, hi = sch.flow_interval(int(k))
        t = float(rng.uniform(lo + 0.05, hi - 1e-6))
        x = float(rng.uniform(-1.0, 1.0))
        pts.append((t, x))
    closed_vals = np.array([example8_closed_form(t, x, x0) for t, x in pts])
    assert np.all(closed_vals <= 1e-9)
    # ... while the history-free operator changes sign on the same grid
    free_vals = np.array([2.0 * x * x * (2.0 - math.sin(t)) * example8_time_factor(t)
                          for t, x in pts])
    assert free_vals.min() < 0.0 < free_vals.max()
    assert time.time() - started < 30.0
    report(6, "initial-data term makes the derivative one-signed", started)


def test_criterion_7_comparison_suite():
    started = time.time()
    V2 = quadratic_candidate()
    V8 = example8_candidate()
    # example 5/6 share the linear problem; 7 is cubic; 8 uses the weighted
    # candidate (its quadratic candidate is inconclusive by construction)
    t6 = solve_nifrde(build_problem("example6", A=-1.0, x0=1.0), steps_per_unit=512)
    t5 = solve_nifrde(build_problem("example1-linear", A=-0.5, x0=1.0,
                                    gains=(0.8, 0.6)), steps_per_unit=512)
    t7 = solve_nifrde(build_problem("example7", x0=0.5), steps_per_unit=512)
    t8 = solve_nifrde(build_problem("example8", x0=1.0), steps_per_unit=256)
    for traj, V in ((t5, V2), (t6, V2), (t7, V2), (t8, V8)):
        rep = verify_comparison(traj, V)
        assert rep.verdict == "holds" and rep.worst_margin >= -1e-6
    for traj in (t5, t6, t7):
        rep = verify_quadratic_corollary(traj)
        assert rep.verdict == "holds" and rep.worst_margin >= -1e-6
    # mutation check: inflating the tail must flip the verdict
    assert verify_comparison(corrupt(t6), V2).verdict == "violated"
    assert verify_quadratic_corollary(corrupt(t6)).verdict == "violated"
    assert time.time() - started < 60.0
    report(7, "comparison bounds on examples 5-8 + mutation", started)


def test_criterion_8_stability_probe():
    started = time.time()
    sch = ImpulseSchedule(s=(0.0, 2.0, 4.0), t=(1.0, 3.0), horizon=5.0)

    def family(A):
        def build(t0, x0):
            x0 = np.atleast_1d(x0)
            return NifrdeProblem(q=0.5, schedule=sch, f=linear_field(A),
                                 phi=constant_gains((0.5, 0.5)), n=len(x0),
                                 t0=t0, x0=x0)
        return build

    # t0 samples in two distinct flow intervals
    delta, rep = probe_uniform_stability(family(-1.0), epsilon=0.1,
                                         t0_samples=[0.0, 2.5])
    assert delta is not None and delta > 0.0
    delta_bad, rep_bad = probe_uniform_stability(family(1.0), epsilon=0.5,
                                                 t0_samples=[0.0])
    assert delta_bad is None
    assert time.time() - started < 120.0
    report(8, "epsilon-delta probe (stable vs growing control)", started)


def test_criterion_9_attraction_time_bound():
    started = time.time()
    params = [(1.0, 1.0, 0.5, 0.0), (2.0, 1.0, 0.5, 0.0), (1.0, 0.5, 0.3, 1.0),
              (0.7, 0.2, 0.7, 2.0), (1.5, 1.5, 0.5, 0.5), (3.0, 0.1, 0.25, 0.0),
              (0.2, 0.9, 0.9, 4.0), (5.0, 2.0, 0.6, 1.5), (1.0, 1.0, 0.99, 0.0),
              (2.5, 0.3, 0.45, 3.0)]
    for al, ga, q, M in params:
        oracle = (al * q * gamma(q) / ga) ** (1.0 / q) + M
        got = attraction_time_bound(IDENTITY_K, IDENTITY_K, al, ga, q, M)
        assert abs(got - oracle) <= 1e-12 * max(1.0, abs(oracle))
    # monotonicity in alpha (up), gamma (down), M (up, exactly additive)
    grid = np.linspace(0.5, 3.0, 7)
    va = [attraction_time_bound(IDENTITY_K, IDENTITY_K, a, 1.0, 0.5, 0.0) for a in grid]
    vg = [attraction_time_bound(IDENTITY_K, IDENTITY_K, 1.0, g, 0.5, 0.0) for g in grid]
    assert np.all(np.diff(va) > 0) and np.all(np.diff(vg) < 0)
    base = attraction_time_bound(IDENTITY_K, IDENTITY_K, 1.0, 1.0, 0.5, 0.0)
    assert attraction_time_bound(IDENTITY_K, IDENTITY_K, 1.0, 1.0, 0.5, 2.0) \
        == base + 2.0
    report(9, "attraction-time bound arithmetic", started)
