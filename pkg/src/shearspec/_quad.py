"""Composite Gauss-Legendre quadrature helpers.

All the analytic machinery in this package reduces to integrals of smooth
functions over unions of intervals (1-D) or over tensor rectangles and
reference triangles (2-D).  Integrands are piecewise smooth with known
breakpoints, so composite Gauss rules with the breakpoints as panel edges
converge at spectral rate and the only tuning knobs are the polynomial
order per panel and a panel-length cap.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

_RULE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _reference_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _RULE_CACHE:
        x, w = leggauss(order)
        _RULE_CACHE[order] = (x, w)
    return _RULE_CACHE[order]


def panel_nodes(breakpoints, order: int = 12, max_panel: float | None = None):
    """Gauss nodes/weights on the union of panels defined by ``breakpoints``.

    breakpoints : increasing 1-D sequence; consecutive pairs are panels.
    max_panel   : if given, panels longer than this are subdivided evenly.

    Returns (nodes, weights) as flat arrays.
    """
    bp = np.asarray(sorted(set(float(b) for b in breakpoints)), dtype=float)
    if bp.size < 2:
        raise ValueError("need at least two distinct breakpoints")
    edges = []
    for a, b in zip(bp[:-1], bp[1:]):
        if max_panel is not None and (b - a) > max_panel:
            k = int(np.ceil((b - a) / max_panel))
            sub = np.linspace(a, b, k + 1)
            edges.extend(zip(sub[:-1], sub[1:]))
        else:
            edges.append((a, b))
    x, w = _reference_rule(order)
    nodes, weights = [], []
    for a, b in edges:
        half = 0.5 * (b - a)
        nodes.append(0.5 * (a + b) + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def integrate_1d(fun, breakpoints, order: int = 12, max_panel: float | None = None) -> float:
    """Integrate a vectorized callable over panels between breakpoints."""
    s, w = panel_nodes(breakpoints, order=order, max_panel=max_panel)
    return float(np.dot(w, fun(s)))


def interval_rule(a: float, b: float, order: int = 48):
    """Single-panel Gauss rule on [a, b]."""
    x, w = _reference_rule(order)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def triangle_rule(order: int = 8):
    """Tensor Gauss rule collapsed onto the reference triangle (Duffy map).

    Returns barycentric-style reference coordinates (xi, eta) with
    xi >= 0, eta >= 0, xi + eta <= 1, and weights summing to 1/2 (the
    reference-triangle area).  Exactness is not polynomial-sharp but the
    rule converges spectrally for smooth integrands, which is all the
    identity checks need.
    """
    x, w = _reference_rule(order)
    u = 0.5 * (x + 1.0)  # map to [0, 1]
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    WU, WV = np.meshgrid(wu, wu, indexing="ij")
    xi = U * (1.0 - V)
    eta = U * V
    weights = WU * WV * U  # Jacobian of the Duffy map
    return xi.ravel(), eta.ravel(), weights.ravel()
