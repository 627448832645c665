"""Trajectory-level verification of comparison bounds and stability probes.

Nothing here proves a theorem: hypotheses and conclusions are checked on
finite sample sets along computed trajectories, and verdicts are reported
as margins ("holds" means the worst margin stayed above -tolerance on the
samples).  The epsilon-delta probe likewise certifies behavior on a finite
horizon only.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fractional_calculus import gamma
from .impulsive import ImpulseSchedule, NifrdeProblem, Trajectory, solve_nifrde
from .lyapunov import LyapunovFunction
from .quad import graded_breaks, panel_nodes


@dataclass(frozen=True)
class ClassKFunction:
    """Strictly increasing comparison envelope with a(0) = 0."""

    name: str
    fn: Callable[[float], float]
    inverse: Callable[[float], float] | None = None

    def __call__(self, u: float) -> float:
        return float(self.fn(u))

    def validate(self, grid=None) -> None:
        grid = np.linspace(0.0, 1.0, 33) if grid is None else np.asarray(grid)
        vals = np.array([self.fn(float(u)) for u in grid])
        if grid[0] == 0.0 and abs(vals[0]) > 1e-12:
            raise ValueError(f"{self.name}(0) != 0")
        if np.any(np.diff(vals) <= 0):
            raise ValueError(f"{self.name} is not strictly increasing on the grid")


IDENTITY_K = ClassKFunction("identity", lambda u: u, inverse=lambda v: v)


@dataclass
class StabilityReport:
    name: str
    verdict: str                    # "holds" | "violated" | "inconclusive"
    worst_margin: float
    witness_t: float | None = None
    witness_state: np.ndarray | None = None
    witness_value: float | None = None
    params: dict = field(default_factory=dict)


def _finish(name: str, margin: float, tol: float, wt, wx, wv, params) -> StabilityReport:
    verdict = "violated" if margin < -tol else "holds"
    return StabilityReport(name=name, verdict=verdict, worst_margin=float(margin),
                           witness_t=wt, witness_state=wx, witness_value=wv,
                           params=params)


def verify_comparison(traj: Trajectory, V: LyapunovFunction,
                      tol: float = 1e-6) -> StabilityReport:
    """Check V(t, x(t)) <= V(t0, x0) at every stored trajectory point."""
    p = traj.problem
    bound = V(p.t0, p.x0)
    margin, wt, wx, wv = math.inf, None, None, None
    for t, x, kind, k in traj.points():
        val = V(t, x)
        if bound - val < margin:
            margin, wt, wx, wv = bound - val, t, x.copy(), val
    return _finish("comparison", margin, tol, wt, wx, wv,
                   {"bound": bound, "tol": tol})


def _trajectory_norm_interp(traj: Trajectory) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear interpolant of ||x(t)|| over the stored grid."""
    ts, ns = [], []
    for t, x, _, _ in traj.points():
        ts.append(t)
        ns.append(float(np.linalg.norm(x)))
    ts = np.asarray(ts)
    ns = np.asarray(ns)
    return lambda s: np.interp(s, ts, ns)


def _kernel_integral(norm_of: Callable, c: ClassKFunction, a: float, b: float,
                     T: float, q: float, nodes: int = 24) -> float:
    """Int_a^b (T-s)^(q-1) c(||x(s)||) ds with the u = (T-s)^q substitution."""
    if b <= a:
        return 0.0
    u_lo = (T - b) ** q if T > b else 0.0
    u_hi = (T - a) ** q
    breaks = graded_breaks(u_lo, u_hi, levels_at_a=24 if u_lo == 0.0 else 0,
                           interior=8)
    u, w = panel_nodes(breaks, nodes)
    s = T - u ** (1.0 / q)
    np.clip(s, a, b, out=s)
    norms = norm_of(s)
    try:
        vals = np.asarray(c.fn(norms), dtype=float)
        if vals.shape != norms.shape:
            raise ValueError
    except Exception:
        vals = np.array([c(float(n)) for n in norms])
    return float(np.dot(w, vals)) / q


def verify_comparison_decay(traj: Trajectory, V: LyapunovFunction,
                            c: ClassKFunction, tol: float = 1e-6,
                            max_points_per_segment: int = 64) -> StabilityReport:
    """Check the decay-strengthened bound along the trajectory.

    On the first flow interval the bound is V(t0,x0) minus the kernel
    integral of c(||x||); later flow intervals accumulate the completed
    per-interval integrals, impulse intervals carry the accumulated sum
    only.  Margins are bound minus V(t, x(t)).
    """
    p = traj.problem
    q = p.q
    V0 = V(p.t0, p.x0)
    inv_gq = 1.0 / gamma(q)
    norm_of = _trajectory_norm_interp(traj)
    margin, wt, wx, wv = math.inf, None, None, None
    accumulated = 0.0  # sum of completed flow-interval integrals
    for seg in traj.segments:
        if seg.kind == "flow":
            idx = np.linspace(0, len(seg.grid) - 1,
                              min(len(seg.grid), max_points_per_segment)).astype(int)
            for i in idx:
                t = float(seg.grid[i])
                tail = _kernel_integral(norm_of, c, seg.a, t, t, q) if t > seg.a else 0.0
                bound = V0 - inv_gq * (accumulated + tail)
                val = V(t, seg.values[i])
                if bound - val < margin:
                    margin, wt, wx, wv = bound - val, t, seg.values[i].copy(), val
            accumulated += _kernel_integral(norm_of, c, seg.a, seg.b, seg.b, q)
        else:
            bound = V0 - inv_gq * accumulated
            grid, vals = seg.grid, seg.values
            if len(grid) > 1:
                grid, vals = grid[1:], vals[1:]
            for t, x in zip(grid, vals):
                val = V(float(t), x)
                if bound - val < margin:
                    margin, wt, wx, wv = bound - val, float(t), x.copy(), val
    return _finish("comparison-decay", margin, tol, wt, wx, wv,
                   {"c": c.name, "tol": tol})


def verify_quadratic_corollary(traj: Trajectory, tol: float = 1e-6) -> StabilityReport:
    """Quadratic-candidate comparison: field dissipativity on flow points,
    norm non-expansion on impulse points, and ||x(t)|| <= ||x0|| overall."""
    p = traj.problem
    x0n = float(np.linalg.norm(p.x0))
    margin, wt, wx, wv = math.inf, None, None, None
    checks = {"flow_dissipative": math.inf, "impulse_nonexpanding": math.inf,
              "norm_bounded": math.inf}
    left_limits = {seg.k + 1: seg.values[-1] for seg in traj.segments
                   if seg.kind == "flow"}
    for t, x, kind, k in traj.points():
        if kind == "flow":
            fv = np.atleast_1d(np.asarray(p.f(t, x), dtype=float))
            if np.all(np.isfinite(fv)):
                m = -float(np.dot(x, fv))
                checks["flow_dissipative"] = min(checks["flow_dissipative"], m)
                if m < margin:
                    margin, wt, wx, wv = m, t, x.copy(), -m
        else:
            ref = float(np.linalg.norm(left_limits[k]))
            m = ref - float(np.linalg.norm(x))
            checks["impulse_nonexpanding"] = min(checks["impulse_nonexpanding"], m)
            if m < margin:
                margin, wt, wx, wv = m, t, x.copy(), float(np.linalg.norm(x))
        mb = x0n - float(np.linalg.norm(x))
        checks["norm_bounded"] = min(checks["norm_bounded"], mb)
        if mb < margin:
            margin, wt, wx, wv = mb, t, x.copy(), float(np.linalg.norm(x))
    rep = _finish("quadratic-corollary", margin, tol, wt, wx, wv,
                  {k: v for k, v in checks.items()})
    return rep


@dataclass
class ProbeReport:
    delta: float | None
    epsilon: float
    horizon: float
    verdict: str
    witness_t0: float | None = None
    witness_x0: np.ndarray | None = None
    witness_sup: float | None = None
    tried: list = field(default_factory=list)


def probe_uniform_stability(family: Callable[[float, np.ndarray], NifrdeProblem],
                            epsilon: float,
                            t0_samples: Sequence[float],
                            delta_grid: Sequence[float] | None = None,
                            x0_samples_per_delta: int = 3,
                            steps_per_unit: int = 128,
                            seed: int = 0) -> tuple[float | None, ProbeReport]:
    """Search for the largest delta in the grid certifying ||x|| < epsilon.

    `family(t0, x0)` builds the problem for given initial data.  For each
    candidate delta, initial states are sampled at radii delta*(0.5, 0.9,
    0.99) along quasi-random directions (deterministic under `seed`); delta
    succeeds when every sampled trajectory stays strictly inside epsilon on
    the horizon.  Returns (delta or None, report with the worst witness).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if delta_grid is None:
        delta_grid = epsilon * 0.5 ** np.arange(0, 4)
    delta_grid = sorted((float(d) for d in delta_grid), reverse=True)
    radii = np.array([0.5, 0.9, 0.99])[:max(1, x0_samples_per_delta)]
    rng = np.random.default_rng(seed)

    probe_problem = family(float(t0_samples[0]), np.zeros(1))
    dim = probe_problem.n
    horizon = probe_problem.schedule.horizon

    tried = []
    witness = (None, None, None)
    for delta in delta_grid:
        ok = True
        for t0 in t0_samples:
            for rho in radii:
                if dim == 1:
                    dirs = [np.array([1.0]), np.array([-1.0])]
                else:
                    raw = rng.normal(size=(2, dim))
                    dirs = [v / np.linalg.norm(v) for v in raw]
                for d in dirs:
                    x0 = rho * delta * d
                    problem = family(float(t0), x0)
                    traj = solve_nifrde(problem, steps_per_unit=steps_per_unit)
                    sup = traj.sup_norm()
                    if sup >= epsilon:
                        ok = False
                        witness = (float(t0), x0, sup)
                        break
                if not ok:
                    break
            if not ok:
                break
        tried.append((delta, ok))
        if ok:
            rep = ProbeReport(delta=delta, epsilon=epsilon, horizon=horizon,
                              verdict="holds on horizon", tried=tried)
            return delta, rep
    rep = ProbeReport(delta=None, epsilon=epsilon, horizon=horizon,
                      verdict="no delta in grid", witness_t0=witness[0],
                      witness_x0=witness[1], witness_sup=witness[2], tried=tried)
    return None, rep


def attraction_time_bound(a: ClassKFunction, c: ClassKFunction, alpha: float,
                          gamma_level: float, q: float, M: float) -> float:
    """(a(alpha) q Gamma(q) / c(gamma_level))^(1/q) + M: the waiting time
    after which trajectories started inside alpha have entered gamma_level,
    uniformly in the initial time (M is the total impulse-interval mass)."""
    if not 0.0 < q < 1.0:
        raise ValueError("need 0 < q < 1")
    if M < 0:
        raise ValueError("need M >= 0")
    cg = c(gamma_level)
    if cg <= 0.0:
        raise ValueError("c(gamma_level) must be positive")
    return (a(alpha) * q * gamma(q) / cg) ** (1.0 / q) + M


def schedule_impulse_mass(schedule: ImpulseSchedule) -> float:
    """Total length of the impulse intervals, sum of (s_k - t_k)."""
    return float(sum(sk - tk for sk, tk in zip(schedule.s[1:], schedule.t)))


def reports_to_csv(reports: Sequence[StabilityReport], fmt: str = "csv") -> str:
    """One row per check: name, verdict, worst_margin, witness_t, witness_norm."""
    sep = "\t" if fmt == "tsv" else ","
    out = io.StringIO()
    out.write(sep.join(["name", "verdict", "worst_margin", "witness_t",
                        "witness_norm"]) + "\n")
    for r in reports:
        wn = ("" if r.witness_state is None
              else f"{float(np.linalg.norm(r.witness_state)):.12g}")
        wt = "" if r.witness_t is None else f"{r.witness_t:.12g}"
        out.write(sep.join([r.name, r.verdict, f"{r.worst_margin:.12g}", wt, wn]) + "\n")
    return out.getvalue()
