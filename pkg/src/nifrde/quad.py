"""Panel Gauss-Legendre helpers shared by the quadrature-based operators."""

from __future__ import annotations

import numpy as np

_RULE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _RULE_CACHE:
        _RULE_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _RULE_CACHE[n]


def panel_nodes(breaks: np.ndarray, n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an n-point Gauss rule on each panel of `breaks`.

    `breaks` must be non-decreasing; zero-width panels contribute nothing.
    Returns flat arrays (nodes, weights) covering all panels.
    """
    breaks = np.asarray(breaks, dtype=float)
    x, w = _rule(n)
    a = breaks[:-1]
    half = 0.5 * np.diff(breaks)
    mid = a + half
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_breaks(a: float, b: float, levels_at_a: int = 0, levels_at_b: int = 0,
                  interior: int = 1) -> np.ndarray:
    """Panel breakpoints on [a, b], dyadically refined toward either endpoint.

    `levels_at_a` halvings are stacked against a (finest panel width
    (b-a)/2**levels_at_a), same for b; whatever remains in the middle is cut
    into `interior` uniform panels.  Used to resolve integrable endpoint
    singularities with a fixed Gauss rule per panel.
    """
    if b <= a:
        raise ValueError("graded_breaks needs b > a")
    length = b - a
    pts = [a, b]
    if levels_at_a:
        pts.extend(a + length * 0.5 ** j for j in range(1, levels_at_a + 1))
    if levels_at_b:
        pts.extend(b - length * 0.5 ** j for j in range(1, levels_at_b + 1))
    lo = a + length * 0.5 if levels_at_a else a
    hi = b - length * 0.5 if levels_at_b else b
    if hi > lo and interior > 1:
        pts.extend(np.linspace(lo, hi, interior + 1)[1:-1])
    return np.unique(np.clip(np.asarray(pts, dtype=float), a, b))
