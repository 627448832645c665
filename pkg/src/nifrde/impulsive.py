"""Piecewise composition of fractional flows and non-instantaneous impulses.

State evolves by the Caputo flow D^q x = f(t, x) on the intervals
(s_k, t_{k+1}] and is overridden by explicit maps x(t) = phi_k(t, x(t_k-0))
on the impulse intervals (t_k, s_k]; each flow restarts at s_k from
phi_k(s_k, x(t_k-0)).  Trajectories are continuous at every s_k (the flow
start value is the stored impulse value, the same float) and may jump at
t_k, where evaluation returns the left limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .solver import FlowProblem, FlowSolution, SolverDivergenceError, solve_frde


class ScheduleDomainError(ValueError):
    """Time outside [t0, horizon], or t0 inside an impulse interval."""


@dataclass(frozen=True)
class ImpulseSchedule:
    """Interleaved point sequences 0 = s_0 < t_1 <= s_1 < t_2 <= ... < horizon.

    `s` holds s_0..s_p, `t` holds t_1..t_p; the final flow interval is
    (s_p, horizon].  p = 0 (no impulses) is allowed.
    """

    s: tuple
    t: tuple
    horizon: float

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(v) for v in self.s))
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))

    @property
    def p(self) -> int:
        return len(self.t)

    def flow_interval(self, k: int, t0: float | None = None) -> tuple[float, float]:
        """The k-th flow interval; the first one starts at t0 when given."""
        lo = self.s[k] if t0 is None or k > 0 else t0
        hi = self.t[k] if k < self.p else self.horizon
        return lo, hi


@dataclass(frozen=True)
class ScheduleCheck:
    ok: bool
    message: str | None = None
    index: int | None = None


def validate_schedule(schedule: ImpulseSchedule) -> ScheduleCheck:
    """Check s_0 = 0 and the interleaving chain; report the first violation."""
    s, t = schedule.s, schedule.t
    if len(s) != len(t) + 1:
        return ScheduleCheck(False, f"need len(s) == len(t)+1, got {len(s)} and {len(t)}")
    if s[0] != 0.0:
        return ScheduleCheck(False, f"s_0 must be 0, got {s[0]:g}", 0)
    for k in range(1, len(s)):
        if not s[k - 1] < t[k - 1]:
            return ScheduleCheck(False, f"s_{k-1} < t_{k} fails: {s[k-1]:g} >= {t[k-1]:g}", k)
        if not t[k - 1] <= s[k]:
            return ScheduleCheck(False, f"t_{k} <= s_{k} fails: {t[k-1]:g} > {s[k]:g}", k)
    if not schedule.horizon > s[-1]:
        return ScheduleCheck(False, f"horizon must exceed s_p: {schedule.horizon:g} <= {s[-1]:g}",
                             len(t))
    return ScheduleCheck(True)


@dataclass(frozen=True)
class SegmentRef:
    kind: str  # "flow" | "impulse"
    k: int


def locate(time: float, schedule: ImpulseSchedule, t0: float = 0.0) -> SegmentRef:
    """Segment containing `time`: flow k on (s_k, t_{k+1}], impulse k on (t_k, s_k].

    t_k itself resolves to flow k-1 (the left-limit convention); s_k to
    impulse k, whose value the following flow shares anyway.
    """
    if time < t0 or time > schedule.horizon:
        raise ScheduleDomainError(
            f"time {time:g} outside [{t0:g}, {schedule.horizon:g}]")
    for k in range(schedule.p, 0, -1):
        if time > schedule.s[k]:
            return SegmentRef("flow", k)
        if time > schedule.t[k - 1]:
            return SegmentRef("impulse", k)
    return SegmentRef("flow", 0)


@dataclass(frozen=True)
class NifrdeProblem:
    """Impulsive fractional IVP: order, schedule, field, impulse maps, data.

    `phi[k-1]` is the map active on (t_k, s_k].  t0 must lie in a flow
    interval [s_k, t_{k+1}); impulse intervals before t0 are skipped.
    """

    q: float
    schedule: ImpulseSchedule
    f: Callable
    phi: tuple
    n: int
    t0: float
    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(self.phi))
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        check = validate_schedule(self.schedule)
        if not check.ok:
            raise ScheduleDomainError(f"invalid schedule: {check.message}")
        if len(self.phi) != self.schedule.p:
            raise ValueError(
                f"need one impulse map per interval: {len(self.phi)} != {self.schedule.p}")
        if len(self.x0) != self.n:
            raise ValueError("x0 dimension mismatch")
        self.start_index()  # raises if t0 sits inside an impulse interval

    def start_index(self) -> int:
        """Index k0 of the flow interval [s_k0, t_{k0+1}) containing t0."""
        sch = self.schedule
        if not sch.s[0] <= self.t0 < sch.horizon:
            raise ScheduleDomainError(f"t0={self.t0:g} outside [0, horizon)")
        for k in range(sch.p, -1, -1):
            lo = sch.s[k]
            hi = sch.t[k] if k < sch.p else sch.horizon
            if lo <= self.t0 < hi:
                return k
        raise ScheduleDomainError(
            f"t0={self.t0:g} lies inside an impulse interval (unsupported)")


@dataclass(frozen=True)
class Segment:
    kind: str  # "flow" | "impulse"
    k: int
    a: float
    b: float
    grid: np.ndarray
    values: np.ndarray  # (len(grid), n)


@dataclass(frozen=True)
class Trajectory:
    """Alternating flow/impulse segments; evaluation uses the left-limit rule."""

    problem: NifrdeProblem
    segments: tuple

    def value(self, time: float) -> np.ndarray:
        p = self.problem
        if time < p.t0 or time > p.schedule.horizon:
            raise ScheduleDomainError(
                f"time {time:g} outside [{p.t0:g}, {p.schedule.horizon:g}]")
        for seg in self.segments:
            if seg.a <= time <= seg.b:
                # at a flow/impulse boundary t_k prefer the flow's (left) value
                if seg.kind == "impulse" and time == seg.a and seg.a != seg.b:
                    continue
                return self._interp(seg, time)
        return self._interp(self.segments[-1], time)

    @staticmethod
    def _interp(seg: Segment, time: float) -> np.ndarray:
        if len(seg.grid) == 1:
            return seg.values[0].copy()
        out = np.array([np.interp(time, seg.grid, seg.values[:, j])
                        for j in range(seg.values.shape[1])])
        return out

    def points(self):
        """Yield (t, x, kind, k) over all segment grid points.

        Impulse segments skip their left endpoint t_k: the solution value
        there is the flow's left limit, not the impulse branch.
        """
        for seg in self.segments:
            grid = seg.grid
            vals = seg.values
            if seg.kind == "impulse" and len(grid) > 1:
                grid, vals = grid[1:], vals[1:]
            for t, x in zip(grid, vals):
                yield float(t), x, seg.kind, seg.k

    def sup_norm(self) -> float:
        return max(float(np.max(np.abs(x))) for _, x, _, _ in self.points())


def left_limit(traj: Trajectory, k: int) -> np.ndarray:
    """Flow value at t_k (right endpoint of the preceding flow segment)."""
    for seg in traj.segments:
        if seg.kind == "flow" and seg.k == k - 1:
            return seg.values[-1].copy()
    raise IndexError(f"no flow segment ends at impulse index k={k}")


def solve_nifrde(problem: NifrdeProblem, steps_per_unit: int = 256) -> Trajectory:
    """Compose the piecewise solution segment by segment.

    Flow segments run the fractional Adams solver; impulse segments sample
    phi_k(t, x(t_k-0)) explicitly (no equation is solved there).  The flow
    restart value at s_k reuses the stored impulse value bit for bit, so
    continuity at s_k is exact.
    """
    if steps_per_unit < 1:
        raise ValueError("steps_per_unit must be positive")
    sch = problem.schedule
    k0 = problem.start_index()
    segments: list[Segment] = []
    state = problem.x0
    start = problem.t0
    for k in range(k0, sch.p + 1):
        hi = sch.t[k] if k < sch.p else sch.horizon
        N = max(8, int(math.ceil(steps_per_unit * (hi - start))))
        flow = FlowProblem(q=problem.q, tau=start, t_end=hi, x0=state, f=problem.f)
        try:
            sol = solve_frde(flow, N)
        except SolverDivergenceError as err:
            raise SolverDivergenceError(
                f"flow segment {k} diverged: {err}", err.index) from err
        segments.append(Segment("flow", k, start, hi, sol.grid, sol.values))
        if k == sch.p:
            break
        y = sol.values[-1]  # left limit at t_{k+1}
        tk, sk = sch.t[k], sch.s[k + 1]
        phi = problem.phi[k]
        if sk == tk:
            grid = np.array([sk])
        else:
            npts = max(2, int(math.ceil(steps_per_unit * (sk - tk))) + 1)
            grid = np.linspace(tk, sk, npts)
        vals = np.stack([np.atleast_1d(np.asarray(phi(float(t), y), dtype=float))
                         for t in grid])
        segments.append(Segment("impulse", k + 1, tk, sk, grid, vals))
        state = vals[-1]
        start = sk
    return Trajectory(problem=problem, segments=tuple(segments))


def check_zero_conditions(problem: NifrdeProblem, samples: int = 25,
                          tol: float = 1e-12) -> bool:
    """Sample f(t, 0) over flow intervals and phi_k(t, 0) over impulse ones.

    True when both vanish everywhere sampled (the standing hypotheses for
    zero-solution stability analyses).
    """
    sch = problem.schedule
    zero = np.zeros(problem.n)
    k0 = problem.start_index()
    for k in range(k0, sch.p + 1):
        lo, hi = sch.flow_interval(k, problem.t0)
        for t in np.linspace(lo, hi, samples)[1:]:
            if np.max(np.abs(np.asarray(problem.f(float(t), zero)))) > tol:
                return False
    for k in range(k0 + 1, sch.p + 1):
        for t in np.linspace(sch.t[k - 1], sch.s[k], samples):
            if np.max(np.abs(np.asarray(problem.phi[k - 1](float(t), zero)))) > tol:
                return False
    return True
