"""Gamma and Mittag-Leffler functions for fractional-order models.

The one- and two-parameter Mittag-Leffler functions

    E_a(z)     = sum_{k>=0} z^k / Gamma(a*k + 1),
    E_{a,b}(z) = sum_{k>=0} z^k / Gamma(a*k + b),

carry every closed-form solution used in this package: the scalar linear
flow D^q x = A x is solved by x0*E_q(A (t-t0)^q), the relaxation problem
D^q x = 1 - x, x(0) = 0 by t^q E_{q,1+q}(-t^q), and the half-order
Riemann-Liouville derivative of sin(t) equals sqrt(t)*E_{2,1.5}(-t^2).

Supported argument range is |z| <= ML_MAX_ARG.  Three evaluation paths
cover it:

* plain power series with exact (math.fsum) accumulation, used whenever the
  largest series term is small enough that double precision keeps full
  accuracy;
* the same series in adaptive extended precision (mpmath) when the
  alternating terms would cancel catastrophically in doubles;
* for orders a < 1 and z < 0, a real integral representation (the Hankel
  loop of the reciprocal Gamma collapsed onto the negative axis).  It is
  cancellation-free and uniformly accurate however large |z| gets, which
  matters because the series needs ~|z|^(1/a) terms there.

All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

import math

import numpy as np
from mpmath import mp
from scipy.special import gamma as _sp_gamma, gammaln as _gammaln, rgamma as _rgamma

from .quad import graded_breaks, panel_nodes

#: Largest |z| accepted by ml_one / ml_two.
ML_MAX_ARG = 50.0

# Natural log of the largest series term tolerated on the float64 path for
# alternating (z < 0) sums: above this, cancellation starts eating the
# ~1e-10 accuracy budget.
_NEG_DOUBLE_LOG_CAP = math.log(1e2)
_OVERFLOW_LOG = 700.0


class SpecialFunctionError(ValueError):
    """Base class for special-function domain problems."""


class GammaPoleError(SpecialFunctionError):
    """Gamma evaluated at a non-positive integer."""


class MLParameterError(SpecialFunctionError):
    """Mittag-Leffler order parameters outside their admissible range."""


class MLRangeError(SpecialFunctionError):
    """Mittag-Leffler argument outside the supported range."""


def gamma(x: float) -> float:
    """Gamma function, rejecting the poles at 0, -1, -2, ..."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise GammaPoleError(f"gamma pole at x={x:g}")
    return float(_sp_gamma(x))


def ml_one(q: float, z: float) -> float:
    """One-parameter Mittag-Leffler E_q(z) for 0 < q <= 1, |z| <= ML_MAX_ARG."""
    if not 0.0 < q <= 1.0:
        raise MLParameterError(f"ml_one needs 0 < q <= 1, got q={q:g}")
    _check_arg(z)
    return _ml(q, 1.0, float(z))


def ml_two(alpha: float, beta: float, z: float) -> float:
    """Two-parameter Mittag-Leffler E_{alpha,beta}(z), |z| <= ML_MAX_ARG."""
    if alpha <= 0.0 or beta <= 0.0:
        raise MLParameterError(
            f"ml_two needs alpha > 0 and beta > 0, got alpha={alpha:g}, beta={beta:g}")
    _check_arg(z)
    return _ml(float(alpha), float(beta), float(z))


def _check_arg(z: float) -> None:
    if not math.isfinite(z):
        raise MLRangeError("Mittag-Leffler argument must be finite")
    if abs(z) > ML_MAX_ARG:
        raise MLRangeError(
            f"|z| = {abs(z):g} exceeds supported range {ML_MAX_ARG:g}")


# ---------------------------------------------------------------------------
# internal evaluation (no range gate; used by the built-in model fields)
# ---------------------------------------------------------------------------

def _series_log_peak(alpha: float, beta: float, z: float) -> tuple[float, float]:
    """Return (k_peak, log of the largest |term|) of the power series."""
    az = abs(z)
    if az <= 1.0:
        return 0.0, -float(_gammaln(beta))
    x_peak = az ** (1.0 / alpha)
    k_peak = max(0.0, (x_peak - beta) / alpha)
    if k_peak == 0.0:
        return 0.0, -float(_gammaln(beta))
    log_peak = k_peak * math.log(az) - float(_gammaln(alpha * k_peak + beta))
    return k_peak, log_peak


def _ml(alpha: float, beta: float, z: float) -> float:
    """E_{alpha,beta}(z) without the public range cap (internal)."""
    if z == 0.0:
        return float(_rgamma(beta))
    k_peak, log_peak = _series_log_peak(alpha, beta, z)
    if z > 0.0:
        # every term positive: the value is at least the peak term
        if log_peak > _OVERFLOW_LOG:
            raise MLRangeError(
                "Mittag-Leffler value exceeds double-precision range "
                f"(alpha={alpha:g}, beta={beta:g}, z={z:g})")
        if k_peak < 20000:
            return _series_double(alpha, beta, z, k_peak)
        raise MLRangeError(
            f"series for alpha={alpha:g}, z={z:g} needs too many terms")
    # z < 0
    if log_peak <= _NEG_DOUBLE_LOG_CAP:
        return _series_double(alpha, beta, z, k_peak)
    if alpha <= 0.95:
        return _ml_neg_integral(alpha, beta, -z)
    if k_peak > 200000:
        raise MLRangeError(
            f"series for alpha={alpha:g}, z={z:g} needs too many terms")
    return _series_mp(alpha, beta, z, k_peak, log_peak)


def _series_tail_bound(alpha: float, beta: float, k_peak: float,
                       log_az: float) -> int:
    """Smallest k past the peak whose term drops 45 e-folds below the max."""
    kmax = int(3.0 * k_peak) + 80
    log_max = (k_peak * log_az - float(_gammaln(alpha * k_peak + beta))
               if k_peak > 0 else -float(_gammaln(beta)))
    while kmax < 2_000_000:
        tail = kmax * log_az - float(_gammaln(alpha * kmax + beta))
        if tail < log_max - 45.0:
            return kmax
        kmax *= 2
    raise MLRangeError("Mittag-Leffler series tail does not decay")


def _series_double(alpha: float, beta: float, z: float, k_peak: float) -> float:
    log_az = math.log(abs(z))
    kmax = _series_tail_bound(alpha, beta, k_peak, log_az)
    k = np.arange(kmax + 1, dtype=float)
    logs = k * log_az - _gammaln(alpha * k + beta)
    terms = np.exp(logs)
    if z < 0.0:
        terms[1::2] *= -1.0
    # trim the negligible tail, then accumulate exactly
    keep = logs >= logs.max() - 45.0
    return math.fsum(terms[keep])


def _series_mp(alpha: float, beta: float, z: float, k_peak: float,
               log_peak: float) -> float:
    digits_peak = max(0.0, log_peak / math.log(10.0))

    def run(dps: int) -> tuple[float, float]:
        with mp.workdps(dps):
            acc = mp.mpf(0)
            term_max = mp.mpf(0)
            zm = mp.mpf(z)
            k = 0
            while True:
                term = zm ** k / mp.gamma(alpha * k + beta)
                acc += term
                term_max = max(term_max, abs(term))
                if k > k_peak and abs(term) < abs(acc) * mp.mpf(10) ** (-dps + 2):
                    break
                if k > 500000:
                    raise MLRangeError("Mittag-Leffler series failed to converge")
                k += 1
            if acc == 0:
                return 0.0, float(term_max)
            return float(acc), float(term_max / abs(acc))

    dps = int(25 + digits_peak)
    value, amplification = run(dps)
    # second pass when the first precision did not leave ~14 clean digits
    needed = int(18 + max(0.0, math.log10(max(amplification, 1.0))))
    if needed > dps - 4:
        value, _ = run(needed + 6)
    return value


def _ml_neg_integral(alpha: float, beta: float, x: float) -> float:
    """E_{alpha,beta}(-x) for 0 < alpha < 1, x > 0 via a real integral.

    Collapsing the Hankel representation onto the negative axis gives

        E_{alpha,beta}(-x) = (1/pi) * Int_0^inf exp(-r) r^(alpha-beta)
            * (r^alpha sin(pi beta) - x sin(pi (alpha-beta)))
            / (r^(2 alpha) + 2 x r^alpha cos(pi alpha) + x^2) dr,

    valid while beta < 1 + alpha (no poles cross the contour for alpha < 1).
    Larger beta is brought into range with
    E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z.
    """
    # keep the first exponent alpha-beta safely above -1
    if beta > 1.0 + alpha - 0.05:
        inner = _ml_neg_integral(alpha, beta - alpha, x)
        return (inner - float(_rgamma(beta - alpha))) / (-x)

    coeff1 = math.sin(math.pi * beta)          # with J(2 alpha - beta)
    coeff2 = -x * math.sin(math.pi * (alpha - beta))  # with J(alpha - beta)
    total = 0.0
    if abs(beta - round(beta)) > 1e-12:
        total += coeff1 * _j_integral(alpha, 2.0 * alpha - beta, x)
    if abs((beta - alpha) - round(beta - alpha)) > 1e-12:
        total += coeff2 * _j_integral(alpha, alpha - beta, x)
    return total / math.pi


def _j_integral(alpha: float, gam: float, x: float) -> float:
    """J(gam) = Int_0^inf exp(-r) r^gam / (r^2a + 2 x r^a cos(pi a) + x^2) dr.

    Substituting r = v^(1/(1+gam)) removes the endpoint power exactly.
    """
    c = 1.0 / (1.0 + gam)
    vmax = 45.0 ** (1.0 + gam)
    breaks = list(graded_breaks(0.0, 1.0, levels_at_a=45))
    v = 2.0
    while v < vmax:
        breaks.append(v)
        v *= 2.0
    breaks.append(v)
    nodes, weights = panel_nodes(np.asarray(breaks), 64)
    r = nodes ** c
    ra = r ** alpha
    denom = ra * ra + 2.0 * x * math.cos(math.pi * alpha) * ra + x * x
    vals = np.exp(-r) / denom
    return c * float(np.dot(weights, vals))


# ---------------------------------------------------------------------------
# vectorized helper for exact-solution curves (internal)
# ---------------------------------------------------------------------------

def ml_array(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """E_{alpha,beta} evaluated on an array of arguments.

    Fast vectorized series where doubles are safe, per-element fallback on
    the scalar paths otherwise.  No public range cap: callers are internal
    exact-solution builders that know their arguments.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    flat = z.ravel()
    res = out.ravel()
    az = np.abs(flat)
    zmax = az.max() if flat.size else 0.0
    k_peak, log_peak = _series_log_peak(alpha, beta, -zmax)
    if zmax == 0.0 or log_peak <= _NEG_DOUBLE_LOG_CAP:
        kmax = (_series_tail_bound(alpha, beta, k_peak, math.log(zmax))
                if zmax > 0.0 else 40)
        k = np.arange(kmax + 1, dtype=float)
        lg = _gammaln(alpha * k + beta)
        sign = np.where(flat[:, None] < 0, (-1.0) ** k[None, :], 1.0)
        logaz = np.log(np.where(az > 0, az, 1.0))  # placeholder for az == 0
        logs = k[None, :] * logaz[:, None] - lg[None, :]
        res[:] = np.sum(sign * np.exp(logs), axis=1)
        res[az == 0] = float(_rgamma(beta))
    else:
        for i, zi in enumerate(flat):
            res[i] = _ml(alpha, beta, float(zi))
    return out
