"""Transverse Dirichlet modes of the strip cross-section (0, d).

The cross-section operator -d^2/dt^2 with Dirichlet ends has eigenvalues
(n pi / d)^2 and normalised eigenfunctions sqrt(2/d) sin(n pi t / d).
The ground mode and a handful of derived quantities appear everywhere in
the toolkit, so they live in one place.
"""

from __future__ import annotations

import math

import numpy as np


def mode_energy(d: float, n: int = 1) -> float:
    """n-th transverse eigenvalue (n*pi/d)^2."""
    return (n * math.pi / d) ** 2


def threshold_energy(beta: float, d: float) -> float:
    """Essential-spectrum threshold (1+beta^2)*(pi/d)^2; +inf for infinite slope."""
    if math.isinf(beta):
        return math.inf
    return (1.0 + beta * beta) * mode_energy(d)


def ground_mode(t, d: float):
    """Normalised ground mode sqrt(2/d) sin(pi t / d)."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(2.0 / d) * np.sin(np.pi * t / d)


def ground_mode_deriv(t, d: float):
    t = np.asarray(t, dtype=float)
    return np.sqrt(2.0 / d) * (np.pi / d) * np.cos(np.pi * t / d)


def transverse_mode(t, d: float, n: int):
    t = np.asarray(t, dtype=float)
    return np.sqrt(2.0 / d) * np.sin(n * np.pi * t / d)


def transverse_mode_deriv(t, d: float, n: int):
    t = np.asarray(t, dtype=float)
    return np.sqrt(2.0 / d) * (n * np.pi / d) * np.cos(n * np.pi * t / d)


def ground_log_deriv(t, d: float):
    """chi1'/chi1 = (pi/d) cot(pi t / d); diverges at the walls."""
    t = np.asarray(t, dtype=float)
    th = np.pi * t / d
    return (np.pi / d) * (np.cos(th) / np.sin(th))
