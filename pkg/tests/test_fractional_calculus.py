import math

import numpy as np
import pytest
from scipy.special import gamma as sp_gamma, gammaln

from nifrde.fractional_calculus import (
    DerivativeDomainError,
    FractionalOrderError,
    SampledFunction,
    caputo_derivative_quadrature,
    caputo_dini_estimate,
    gl_weights,
    rl_kernel,
)
from nifrde.special_functions import _ml, gamma


def weight_oracle(q: float, r: int) -> float:
    """(-1)^r C(q, r) straight from the Gamma-function ratio."""
    if r == 0:
        return 1.0
    return math.exp(gammaln(r - q) - gammaln(r + 1)) / sp_gamma(-q)


class TestGlWeights:
    def test_small_case(self):
        w = gl_weights(0.5, 2).w
        assert w[0] == 1.0
        assert w[1] == pytest.approx(-0.5, abs=1e-16)
        assert w[2] == pytest.approx(-0.125, abs=1e-16)

    def test_first_weight_always_one(self):
        for q in (0.1, 0.5, 0.9):
            for N in (1, 7, 100):
                assert gl_weights(q, N).w[0] == 1.0

    def test_recurrence_and_oracle_to_large_r(self):
        q = 0.37
        w = gl_weights(q, 10_000).w
        r = np.arange(1, 10_001)
        rebuilt = w[:-1] * (r - 1 - q) / r
        assert np.max(np.abs(rebuilt - w[1:]) / np.abs(w[1:])) < 1e-15
        for ri in (1, 2, 17, 500, 10_000):
            assert w[ri] == pytest.approx(weight_oracle(q, ri), rel=1e-12)

    def test_signs_and_partial_sums(self):
        q = 0.3
        w = gl_weights(q, 1000).w
        assert np.all(w[1:] < 0.0)
        sums = np.cumsum(w)
        assert np.all(sums > 0.0)
        assert np.all(np.diff(sums) < 0.0)
        # frozen via the Gamma-ratio oracle (sum over r <= 1000, q = 0.3)
        oracle_total = sum(weight_oracle(q, ri) for ri in range(1001))
        assert oracle_total == pytest.approx(0.09697531443548868, rel=1e-10)
        assert sums[-1] == pytest.approx(oracle_total, rel=1e-12)
        # the total keeps decreasing as N grows
        assert gl_weights(q, 4000).w.sum() < sums[-1]

    def test_order_validation(self):
        with pytest.raises(FractionalOrderError):
            gl_weights(0.0, 5)
        with pytest.raises(FractionalOrderError):
            gl_weights(1.0, 5)


class TestRlKernel:
    def test_unit_interval(self):
        for q in (0.2, 0.5, 0.8):
            assert rl_kernel(0.0, 1.0, q) == pytest.approx(1.0 / gamma(1.0 - q), rel=1e-14)

    def test_sqrt_pi_case(self):
        assert rl_kernel(0.0, 1.0, 0.5) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-13)

    def test_shifted(self):
        assert rl_kernel(2.0, 3.0, 0.3) == pytest.approx(1.0 / gamma(0.7), rel=1e-13)

    def test_domain(self):
        with pytest.raises(DerivativeDomainError):
            rl_kernel(1.0, 1.0, 0.5)


def brute_force_power_rule(t: float, q: float) -> float:
    """(1/Gamma(1-q)) Int_0^t (t-s)^(-q) ds on a ~1e5-node graded midpoint mesh."""
    breaks = t * (1.0 - 2.0 ** -np.linspace(0.0, 40.0, 161))
    breaks = np.unique(np.concatenate(([0.0], breaks)))
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        s = np.linspace(lo, hi, 601)
        mid = 0.5 * (s[:-1] + s[1:])
        total += float(np.sum((t - mid) ** -q)) * (hi - lo) / 600.0
    return total / sp_gamma(1.0 - q)


class TestCaputoQuadrature:
    def test_constant_vanishes(self):
        for q in (0.2, 0.5, 0.8):
            v = caputo_derivative_quadrature(lambda s: 3.7, 0.0, 2.0, q,
                                             dm=lambda s: 0.0)
            assert abs(float(v)) < 1e-14

    def test_power_rule(self):
        # analytic power rule, itself validated by the graded-mesh oracle
        analytic = 1.0 / sp_gamma(1.5)
        assert brute_force_power_rule(1.0, 0.5) == pytest.approx(analytic, abs=2e-5)
        v = caputo_derivative_quadrature(lambda s: s, 0.0, 1.0, 0.5,
                                         dm=lambda s: np.ones_like(np.asarray(s, float)))
        assert float(v) == pytest.approx(analytic, rel=1e-10)

    def test_mittag_leffler_eigenfunction(self):
        # D^q of E_q(A s^q) is A E_q(A t^q); derivative A s^{q-1} E_{q,q}(A s^q)
        q, A, t = 0.5, -1.0, 1.0

        def m(s):
            s = np.atleast_1d(np.asarray(s, float))
            return np.array([_ml(q, 1.0, A * si ** q) for si in s]).reshape(np.shape(s))

        def dm(s):
            s = np.atleast_1d(np.asarray(s, float))
            return np.array([A * si ** (q - 1.0) * _ml(q, q, A * si ** q)
                             for si in s]).reshape(np.shape(s))

        v = float(caputo_derivative_quadrature(m, 0.0, t, q, dm=dm))
        assert v == pytest.approx(A * _ml(q, 1.0, A * t ** q), abs=1e-8)

    def test_finite_difference_fallback(self):
        got = float(caputo_derivative_quadrature(lambda s: np.sin(s), 0.0, 2.0, 0.5))
        ref = float(caputo_derivative_quadrature(lambda s: np.sin(s), 0.0, 2.0, 0.5,
                                                 dm=lambda s: np.cos(s)))
        assert got == pytest.approx(ref, abs=1e-10)

    def test_sampled_function_input(self):
        grid = np.linspace(0.0, 1.0, 401)
        sf = SampledFunction(t0=0.0, grid=grid, values=grid ** 2,
                             derivative_values=2.0 * grid)
        v = float(caputo_derivative_quadrature(sf, 0.0, 1.0, 0.5))
        analytic = sp_gamma(3.0) / sp_gamma(2.5)
        assert v == pytest.approx(analytic, rel=1e-6)

    def test_vector_valued(self):
        v = caputo_derivative_quadrature(
            lambda s: np.array([s, s * s]), 0.0, 1.0, 0.5,
            dm=lambda s: np.array([1.0, 2.0 * s]))
        assert v.shape == (2,)
        assert v[0] == pytest.approx(1.0 / sp_gamma(1.5), rel=1e-9)
        assert v[1] == pytest.approx(sp_gamma(3.0) / sp_gamma(2.5), rel=1e-9)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=2)
        f1 = lambda s: np.sin(s)
        f2 = lambda s: np.asarray(s, float) ** 2
        combo = lambda s: a * np.sin(s) + b * np.asarray(s, float) ** 2
        v = float(caputo_derivative_quadrature(combo, 0.0, 1.5, 0.4))
        v1 = float(caputo_derivative_quadrature(f1, 0.0, 1.5, 0.4))
        v2 = float(caputo_derivative_quadrature(f2, 0.0, 1.5, 0.4))
        assert v == pytest.approx(a * v1 + b * v2, abs=1e-10)

    def test_domain_error(self):
        with pytest.raises(DerivativeDomainError):
            caputo_derivative_quadrature(lambda s: s, 1.0, 1.0, 0.5)

    def test_riemann_liouville_relation(self):
        # Caputo = RL - m(t0) * kernel for m(s) = s + c
        q, t0, t, c = 0.5, 0.2, 1.3, 0.7
        cap = float(caputo_derivative_quadrature(
            lambda s: s + c, t0, t, q,
            dm=lambda s: np.ones_like(np.asarray(s, float))))
        rl = ((t - t0) ** (1.0 - q) / sp_gamma(2.0 - q)
              + (t0 + c) * rl_kernel(t0, t, q))
        assert cap == pytest.approx(rl - (t0 + c) * rl_kernel(t0, t, q), abs=1e-5)


class TestCaputoDiniEstimate:
    def test_constant_zero_at_every_h(self):
        est = caputo_dini_estimate(lambda s: 4.2, 0.0, 1.0, 0.5)
        assert np.max(np.abs(est.by_h)) == 0.0
        assert est.value == 0.0

    def test_linear_converges_to_power_rule(self):
        est = caputo_dini_estimate(lambda s: np.asarray(s, float), 0.0, 1.0, 0.5)
        assert float(est.value) == pytest.approx(1.0 / sp_gamma(1.5), abs=1e-6)
        assert est.converged

    def test_matches_quadrature_for_polynomials(self):
        # coherence of the two derivative routes on smooth inputs
        for q in (0.3, 0.5, 0.7):
            for t0, t in ((0.0, 1.0), (0.5, 2.0)):
                for m, dm in (
                    (lambda s: np.asarray(s, float) ** 2,
                     lambda s: 2.0 * np.asarray(s, float)),
                    (lambda s: np.asarray(s, float) ** 3 - np.asarray(s, float),
                     lambda s: 3.0 * np.asarray(s, float) ** 2 - 1.0),
                ):
                    quad = float(caputo_derivative_quadrature(m, t0, t, q, dm=dm))
                    dini = float(caputo_dini_estimate(m, t0, t, q).value)
                    assert dini == pytest.approx(quad, abs=1e-4)

    def test_mittag_leffler_flow(self):
        q = 0.5

        def m(s):
            s = np.atleast_1d(np.asarray(s, float))
            return np.array([_ml(q, 1.0, -math.sqrt(si)) if si > 0 else 1.0
                             for si in s]).reshape(np.shape(s))

        est = caputo_dini_estimate(m, 0.0, 1.0, q)
        assert float(est.value) == pytest.approx(-_ml(q, 1.0, -1.0), abs=1e-4)

    def test_linearity(self):
        rng = np.random.default_rng(11)
        a, b = rng.normal(size=2)
        m1 = lambda s: np.sin(np.asarray(s, float))
        m2 = lambda s: np.asarray(s, float) ** 2
        combo = lambda s: a * np.sin(np.asarray(s, float)) + b * np.asarray(s, float) ** 2
        hs = 1.0 / 2.0 ** np.arange(4, 11)
        e = caputo_dini_estimate(combo, 0.0, 1.0, 0.45, h_sequence=hs)
        e1 = caputo_dini_estimate(m1, 0.0, 1.0, 0.45, h_sequence=hs)
        e2 = caputo_dini_estimate(m2, 0.0, 1.0, 0.45, h_sequence=hs)
        assert np.max(np.abs(e.by_h - (a * e1.by_h + b * e2.by_h))) < 1e-10

    def test_vector_valued(self):
        est = caputo_dini_estimate(lambda s: np.array([s, 2.0 * s]), 0.0, 1.0, 0.5)
        assert est.value.shape == (2,)
        assert est.value[1] == pytest.approx(2.0 * est.value[0], rel=1e-9)

    def test_h_domain_error(self):
        with pytest.raises(DerivativeDomainError):
            caputo_dini_estimate(lambda s: s, 0.0, 1.0, 0.5, h_sequence=[1.5])


class TestSampledFunction:
    def test_invariants(self):
        with pytest.raises(ValueError):
            SampledFunction(t0=0.0, grid=np.array([0.1, 0.2]), values=np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            SampledFunction(t0=0.0, grid=np.array([0.0, 0.0]), values=np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            SampledFunction(t0=0.0, grid=np.array([0.0, 1.0]), values=np.array([1.0]))
