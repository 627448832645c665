"""Built-in example problems, exact solutions, and config-file loading.

The registry covers the scalar linear flow with multiplicative impulse
gains (with its product-of-Mittag-Leffler exact solution), the fractional
relaxation curve, a cubic damped field, and the half-order equation whose
weighted-quadratic Lyapunov candidate needs the initial-data-aware
derivative operator to certify stability.

Problems are also loadable from JSON: see `load_problem` for the schema.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Callable

import numpy as np

from .impulsive import ImpulseSchedule, NifrdeProblem, Trajectory
from .lyapunov import LyapunovFunction, ProductForm, quadratic_candidate
from .special_functions import _ml, gamma, ml_array

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# named vector fields
# ---------------------------------------------------------------------------

def linear_field(A) -> Callable:
    """f(t, x) = A x with scalar or matrix A."""
    A = np.asarray(A, dtype=float)

    def f(t, x):
        return A @ x if A.ndim == 2 else A * x

    return f


def cubic_field(a: Callable | float) -> Callable:
    """f(t, x) = -a(t) x (1 + x^2), scalar; a(t) >= 0 gives damping."""
    a_fn = a if callable(a) else (lambda t, a0=float(a): a0)

    def f(t, x):
        return -a_fn(t) * x * (1.0 + x * x)

    return f


def example8_time_factor(t: float) -> float:
    """The scalar factor g(t) in f(t, x) = x g(t) of the half-order model:

        g(t) = 0.5 * (-2/sqrt(pi t) + sqrt(t) E_{2,1.5}(-t^2)) / (2 - sin t).

    g is chosen so that -0.5 * RL-derivative(2 - sin t) / (2 - sin t)
    appears in the flow; it is singular (integrable) at t = 0 and changes
    sign later on.
    """
    if t <= 0.0:
        return -math.inf
    rl = rl_half_two_minus_sin(t)
    return -0.5 * rl / (2.0 - math.sin(t))


def rl_half_two_minus_sin(t: float) -> float:
    """Half-order Riemann-Liouville derivative (from 0) of 2 - sin t:
    2/sqrt(pi t) - sqrt(t) E_{2,1.5}(-t^2)."""
    return 2.0 / math.sqrt(math.pi * t) - math.sqrt(t) * _ml(2.0, 1.5, -t * t)


def example8_field() -> Callable:
    def f(t, x):
        return x * example8_time_factor(t)

    return f


_FIELDS = {
    "zero": lambda params: (lambda t, x: np.zeros_like(x)),
    "linear": lambda params: linear_field(params.get("A", -1.0)),
    "cubic": lambda params: cubic_field(params.get("a", 1.0)),
    "example8": lambda params: example8_field(),
}


# ---------------------------------------------------------------------------
# named impulse families
# ---------------------------------------------------------------------------

def constant_gains(gains) -> tuple:
    return tuple((lambda t, y, g=float(g): g * y) for g in gains)


def cos_gains(p: int) -> tuple:
    """phi_k(t, y) = cos(t) y: continuous gains with values in [-1, 1]."""
    return tuple((lambda t, y: math.cos(t) * y) for _ in range(p))


def _impulses_from_config(cfg: dict, p: int) -> tuple:
    name = cfg.get("name", "constant_gain")
    if name == "constant_gain":
        gains = cfg.get("gains", [1.0] * p)
        if len(gains) != p:
            raise ValueError(f"need {p} gains, got {len(gains)}")
        return constant_gains(gains)
    if name == "cos_gain":
        return cos_gains(p)
    raise ValueError(f"unknown impulse family {name!r}")


# ---------------------------------------------------------------------------
# exact solutions
# ---------------------------------------------------------------------------

def linear_impulsive_exact(A: float, q: float, schedule: ImpulseSchedule,
                           gains, t0: float, x0: float) -> Callable[[float], float]:
    """Exact solution of the scalar linear impulsive problem.

    Flow intervals contribute E_q(A (t - start)^q) factors, impulse
    intervals multiply by the active gain a_k(t); the running products are
    accumulated segment by segment.
    """
    gain_fns = [g if callable(g) else (lambda t, c=float(g): c) for g in gains]
    k0 = 0
    while k0 < schedule.p and t0 >= schedule.s[k0 + 1]:
        k0 += 1

    def exact(t: float) -> float:
        level = float(x0)
        start = t0
        for k in range(k0, schedule.p + 1):
            hi = schedule.t[k] if k < schedule.p else schedule.horizon
            if t <= hi:
                return level * _ml(q, 1.0, A * (t - start) ** q)
            left = level * _ml(q, 1.0, A * (hi - start) ** q)
            if k == schedule.p:
                return left
            sk = schedule.s[k + 1]
            if t <= sk:
                return gain_fns[k](t) * left
            level = gain_fns[k](sk) * left
            start = sk
        return level

    return exact


def relaxation_exact(q: float) -> Callable:
    """t -> t^q E_{q,1+q}(-t^q), the unit-relaxation solution (vectorized)."""

    def exact(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        out[pos] = tp ** q * ml_array(q, 1.0 + q, -tp ** q)
        return out

    return exact


def example8_candidate() -> ProductForm:
    """V(t, x) = (2 - sin t) x^2 with analytic weight derivative."""
    return ProductForm(
        m=lambda t: 2.0 - np.sin(t),
        g=lambda x: float(np.dot(np.atleast_1d(x), np.atleast_1d(x))),
        dm=lambda t: -np.cos(t),
        frdg=lambda t, x, fv: 2.0 * float(np.dot(np.atleast_1d(x), np.atleast_1d(fv))),
        name="(2-sin t)*x^2",
    )


def example8_closed_form(t: float, x: float, x0: float) -> float:
    """Initial-data-aware derivative of (2 - sin t) x^2 along the
    half-order model, in its fully reduced analytic form

        2 x^2 (2-sin t) g(t) + x^2 [2/sqrt(pi t) - sqrt(t) E_{2,1.5}(-t^2)]
        - 2 x0^2 / sqrt(pi t),

    which collapses to -2 x0^2 / sqrt(pi t) because the first two terms
    cancel by construction of g."""
    rl = rl_half_two_minus_sin(t)
    term_field = 2.0 * x * x * (2.0 - math.sin(t)) * example8_time_factor(t)
    return term_field + x * x * rl - 2.0 * x0 * x0 / math.sqrt(math.pi * t)


# ---------------------------------------------------------------------------
# built-in registry
# ---------------------------------------------------------------------------

def _default_schedule() -> ImpulseSchedule:
    return ImpulseSchedule(s=(0.0, 2.0, 4.0), t=(1.0, 3.0), horizon=5.0)


def example8_schedule(p: int = 3, horizon: float | None = None) -> ImpulseSchedule:
    s = (0.0,) + tuple((4 * k + 1) * math.pi / 2 for k in range(1, p + 1))
    t = tuple((4 * k - 1) * math.pi / 2 for k in range(1, p + 1))
    if horizon is None:
        horizon = (4 * (p + 1) - 1) * math.pi / 2
    return ImpulseSchedule(s=s, t=t, horizon=horizon)


def build_problem(name: str, **kw) -> NifrdeProblem:
    """Instantiate a built-in problem; keyword overrides: q, A, gains, x0,
    t0, horizon (others depend on the built-in)."""
    q = kw.get("q", 0.5)
    x0 = np.atleast_1d(np.asarray(kw.get("x0", 1.0), dtype=float))
    t0 = float(kw.get("t0", 0.0))

    if name in ("example1-linear", "example6"):
        A = float(kw.get("A", -1.0))
        sch = kw.get("schedule") or _default_schedule()
        if "horizon" in kw:
            sch = ImpulseSchedule(sch.s, sch.t, float(kw["horizon"]))
        gains = kw.get("gains", (0.5,) * sch.p)
        return NifrdeProblem(q=q, schedule=sch, f=linear_field(A),
                             phi=constant_gains(gains), n=len(x0), t0=t0, x0=x0)
    if name == "figure1-relaxation":
        horizon = float(kw.get("horizon", 5.0))
        sch = ImpulseSchedule(s=(0.0,), t=(), horizon=horizon)
        return NifrdeProblem(q=q, schedule=sch, f=lambda t, x: 1.0 - x,
                             phi=(), n=1, t0=t0, x0=np.zeros(1))
    if name == "zero":
        horizon = float(kw.get("horizon", 5.0))
        sch = kw.get("schedule") or ImpulseSchedule(s=(0.0,), t=(), horizon=horizon)
        phi = constant_gains(kw.get("gains", (1.0,) * sch.p))
        return NifrdeProblem(q=q, schedule=sch, f=lambda t, x: np.zeros_like(x),
                             phi=phi, n=len(x0), t0=t0, x0=x0)
    if name == "example7":
        sch = kw.get("schedule") or _default_schedule()
        a = kw.get("a", lambda t: 0.2 * (2.0 + math.sin(t)))
        return NifrdeProblem(q=q, schedule=sch, f=cubic_field(a),
                             phi=cos_gains(sch.p), n=1, t0=t0, x0=x0)
    if name == "example8":
        p = int(kw.get("impulse_count", 3))
        sch = example8_schedule(p, kw.get("horizon"))
        return NifrdeProblem(q=0.5, schedule=sch, f=example8_field(),
                             phi=cos_gains(sch.p), n=1, t0=t0, x0=x0)
    raise KeyError(f"unknown built-in problem {name!r}")


BUILTIN_PROBLEMS = ("example1-linear", "example6", "example7", "example8",
                    "figure1-relaxation", "zero")


def exact_curve(name: str, problem: NifrdeProblem, **kw):
    """Exact-solution callable for built-ins that have one, else None."""
    if name == "example1-linear" or name == "example6":
        A = float(kw.get("A", -1.0))
        gains = kw.get("gains", (0.5,) * problem.schedule.p)
        scalar = linear_impulsive_exact(A, problem.q, problem.schedule, gains,
                                        problem.t0, float(problem.x0[0]))
        return lambda t: np.atleast_1d(scalar(float(t)))
    if name == "figure1-relaxation":
        vec = relaxation_exact(problem.q)
        return lambda t: np.atleast_1d(vec(float(t)))
    if name == "zero":
        x0 = problem.x0.copy()
        return lambda t: x0
    return None


# ---------------------------------------------------------------------------
# JSON configuration
# ---------------------------------------------------------------------------

_CONFIG_DOC = """Problem config schema (JSON object):
{
  "q": 0.5,
  "t0": 0.0,
  "x0": [1.0],
  "schedule": {"s": [0.0, 2.0, 4.0], "t": [1.0, 3.0], "horizon": 5.0},
  "field": {"name": "linear", "A": -1.0},        # zero|linear|cubic|example8
  "impulses": {"name": "constant_gain", "gains": [0.5, 0.5]},  # or cos_gain
  "candidate": {"form": "quadratic"}             # optional; or
               {"form": "weighted_quadratic", "weight": "2-sin(t)"}
}"""


def load_problem(source) -> NifrdeProblem:
    """Build a NifrdeProblem from a JSON file path or an already-parsed dict."""
    cfg = _as_dict(source)
    sch_cfg = cfg["schedule"]
    sch = ImpulseSchedule(s=tuple(sch_cfg["s"]), t=tuple(sch_cfg.get("t", ())),
                          horizon=float(sch_cfg["horizon"]))
    field_cfg = cfg.get("field", {"name": "zero"})
    fname = field_cfg.get("name", "zero")
    if fname not in _FIELDS:
        raise ValueError(f"unknown field {fname!r}; known: {sorted(_FIELDS)}")
    f = _FIELDS[fname](field_cfg)
    phi = _impulses_from_config(cfg.get("impulses", {}), sch.p)
    x0 = np.atleast_1d(np.asarray(cfg.get("x0", [1.0]), dtype=float))
    return NifrdeProblem(q=float(cfg.get("q", 0.5)), schedule=sch, f=f, phi=phi,
                         n=len(x0), t0=float(cfg.get("t0", 0.0)), x0=x0)


_WEIGHTS = {
    "1": (lambda t: 1.0, lambda t: 0.0),
    "2-sin(t)": (lambda t: 2.0 - np.sin(t), lambda t: -np.cos(t)),
}


def load_candidate(cfg: dict) -> LyapunovFunction:
    """Lyapunov candidate from config: quadratic or weighted_quadratic."""
    form = cfg.get("form", "quadratic")
    if form == "quadratic":
        return quadratic_candidate()
    if form == "weighted_quadratic":
        key = cfg.get("weight", "1")
        if key not in _WEIGHTS:
            raise ValueError(f"unknown weight {key!r}; known: {sorted(_WEIGHTS)}")
        m, dm = _WEIGHTS[key]
        return ProductForm(m=m,
                           g=lambda x: float(np.dot(np.atleast_1d(x), np.atleast_1d(x))),
                           dm=dm,
                           frdg=lambda t, x, fv: 2.0 * float(
                               np.dot(np.atleast_1d(x), np.atleast_1d(fv))),
                           name=f"{key}*x^2")
    raise ValueError(f"unknown candidate form {form!r}")


def _as_dict(source) -> dict:
    if isinstance(source, dict):
        return source
    return json.loads(Path(source).read_text())
