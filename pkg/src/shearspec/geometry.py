"""Shear profiles, strip geometry, and the strong-shearing decomposition.

The strip is Omega = {(x, y) : f(x) < y < f(x) + d}.  Everything spectral
happens in natural coordinates (s, t) where the strip is flat and the slope
f' enters the quadratic form.  A profile is described by its limiting slope
beta plus a compactly supported deficit eps(s) = f'(s) - beta; the deficit
families below cover every shape the pipelines and tests need, each with an
analytic derivative and antiderivative where one exists.

Conventions:
  * f(0) = 0 for every profile,
  * deficits vanish identically outside their support interval,
  * the strong-shearing ("schema") profile stores the multiplier alpha
    inside a ScaledDeficit, with the (c1, c2) bounds referring to the
    unscaled deficit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import erf

from ._quad import integrate_1d

__all__ = [
    "PlateauDeficit",
    "CosineDeficit",
    "GaussianDeficit",
    "IndicatorDeficit",
    "TabulatedDeficit",
    "SumDeficit",
    "ScaledDeficit",
    "ObstructionDeficit",
    "ShearProfile",
    "StripGeometry",
    "SchemaGeometry",
    "BallAreaEstimate",
    "schema_points",
    "ball_intersection_area",
    "excess_integral",
    "two_level_deficit",
    "calibrated_two_level",
]


def _smoothstep(u):
    """Quintic smoothstep: 0 -> 1 on [0, 1] with vanishing first and second
    derivatives at the ends.  Max slope 15/8 at u = 1/2."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def _smoothstep_deriv(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    uc = np.clip(u, 0.0, 1.0)
    d = 30.0 * uc**2 * (1.0 - uc) ** 2
    return np.where(inside, d, 0.0)


class Deficit:
    """Base class: a bounded shear deficit with compact support.

    Subclasses provide vectorized __call__, derivative, antiderivative
    (integral from below the support), and quadrature breakpoints.
    """

    support: tuple[float, float]

    def __call__(self, s):  # pragma: no cover - interface
        raise NotImplementedError

    def derivative(self, s):
        raise NotImplementedError(
            f"{type(self).__name__} does not provide a derivative"
        )

    def antiderivative(self, s):
        raise NotImplementedError

    def breakpoints(self) -> list[float]:
        return [self.support[0], self.support[1]]

    def describe(self) -> dict:
        return {"shape": type(self).__name__, "support": list(self.support)}


def _check_support(support):
    lo, hi = float(support[0]), float(support[1])
    if not hi > lo:
        raise ValueError(f"deficit support must be a nondegenerate interval, got {support}")
    return lo, hi


@dataclass(frozen=True, eq=False)
class PlateauDeficit(Deficit):
    """Mollified indicator: flat level with raised-cosine shoulders.

    The canonical 'bump' of the toolkit.  shoulder is the fraction of the
    total width taken by each cosine ramp; shoulder -> 0 recovers the sharp
    indicator, shoulder = 0.5 a pure cosine arch.
    """

    amplitude: float
    support: tuple[float, float]
    shoulder: float = 0.05

    def __post_init__(self):
        _check_support(self.support)
        if not 0.0 < self.shoulder <= 0.5:
            raise ValueError("shoulder fraction must lie in (0, 0.5]")

    def _geometry(self):
        lo, hi = self.support
        w = self.shoulder * (hi - lo)
        return lo, hi, w

    def __call__(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi, w = self._geometry()
        out = np.zeros_like(s)
        up = (s >= lo) & (s < lo + w)
        mid = (s >= lo + w) & (s <= hi - w)
        down = (s > hi - w) & (s <= hi)
        out[up] = 0.5 * (1.0 - np.cos(np.pi * (s[up] - lo) / w))
        out[mid] = 1.0
        out[down] = 0.5 * (1.0 - np.cos(np.pi * (hi - s[down]) / w))
        return (self.amplitude * out).reshape(shape)

    def derivative(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi, w = self._geometry()
        out = np.zeros_like(s)
        up = (s >= lo) & (s < lo + w)
        down = (s > hi - w) & (s <= hi)
        out[up] = 0.5 * (np.pi / w) * np.sin(np.pi * (s[up] - lo) / w)
        out[down] = -0.5 * (np.pi / w) * np.sin(np.pi * (hi - s[down]) / w)
        return (self.amplitude * out).reshape(shape)

    def antiderivative(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi, w = self._geometry()

        def ramp_int(u):  # integral of the unit up-ramp from 0 to u in [0, w]
            return 0.5 * u - (w / (2.0 * np.pi)) * np.sin(np.pi * u / w)

        out = np.zeros_like(s)
        ramp_mass = 0.5 * w
        plateau_hi = ramp_mass + (hi - lo - 2.0 * w)

        up = (s > lo) & (s < lo + w)
        mid = (s >= lo + w) & (s <= hi - w)
        down = (s > hi - w) & (s < hi)
        after = s >= hi
        out[up] = ramp_int(s[up] - lo)
        out[mid] = ramp_mass + (s[mid] - lo - w)
        # by symmetry the down-ramp integral from hi-w to s equals
        # ramp_mass - ramp_int(hi - s)
        out[down] = plateau_hi + (ramp_mass - ramp_int(hi - s[down]))
        out[after] = plateau_hi + ramp_mass
        return (self.amplitude * out).reshape(shape)

    def breakpoints(self):
        lo, hi, w = self._geometry()
        return [lo, lo + w, hi - w, hi]

    def describe(self):
        return {
            "shape": "plateau",
            "amplitude": self.amplitude,
            "support": list(self.support),
            "shoulder": self.shoulder,
        }


@dataclass(frozen=True, eq=False)
class CosineDeficit(Deficit):
    """Single raised-cosine arch a*(1 - cos(2 pi u / W))/2 on the support."""

    amplitude: float
    support: tuple[float, float]

    def __post_init__(self):
        _check_support(self.support)

    def __call__(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi = self.support
        W = hi - lo
        inside = (s >= lo) & (s <= hi)
        out = np.zeros_like(s)
        out[inside] = 0.5 * (1.0 - np.cos(2.0 * np.pi * (s[inside] - lo) / W))
        return (self.amplitude * out).reshape(shape)

    def derivative(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi = self.support
        W = hi - lo
        inside = (s >= lo) & (s <= hi)
        out = np.zeros_like(s)
        out[inside] = (np.pi / W) * np.sin(2.0 * np.pi * (s[inside] - lo) / W)
        return (self.amplitude * out).reshape(shape)

    def antiderivative(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        W = hi - lo
        u = np.clip(s - lo, 0.0, W)
        return self.amplitude * 0.5 * (u - (W / (2.0 * np.pi)) * np.sin(2.0 * np.pi * u / W))

    def describe(self):
        return {
            "shape": "cosine",
            "amplitude": self.amplitude,
            "support": list(self.support),
        }


@dataclass(frozen=True, eq=False)
class GaussianDeficit(Deficit):
    """Gaussian truncated to the support, shifted to vanish continuously
    at the endpoints and rescaled so the peak equals amplitude."""

    amplitude: float
    support: tuple[float, float]
    width: float | None = None

    def __post_init__(self):
        _check_support(self.support)

    def _params(self):
        lo, hi = self.support
        m = 0.5 * (lo + hi)
        sigma = self.width if self.width is not None else (hi - lo) / 8.0
        edge = math.exp(-((hi - m) ** 2) / (2.0 * sigma**2))
        return m, sigma, edge

    def __call__(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi = self.support
        m, sigma, edge = self._params()
        inside = (s >= lo) & (s <= hi)
        out = np.zeros_like(s)
        g = np.exp(-((s[inside] - m) ** 2) / (2.0 * sigma**2))
        out[inside] = (g - edge) / (1.0 - edge)
        return (self.amplitude * out).reshape(shape)

    def derivative(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi = self.support
        m, sigma, edge = self._params()
        inside = (s > lo) & (s < hi)
        out = np.zeros_like(s)
        g = np.exp(-((s[inside] - m) ** 2) / (2.0 * sigma**2))
        out[inside] = g * (-(s[inside] - m) / sigma**2) / (1.0 - edge)
        return (self.amplitude * out).reshape(shape)

    def antiderivative(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        m, sigma, edge = self._params()
        u = np.clip(s, lo, hi)
        root2 = math.sqrt(2.0)
        gauss_part = sigma * math.sqrt(math.pi / 2.0) * (
            erf((u - m) / (sigma * root2)) - erf((lo - m) / (sigma * root2))
        )
        return self.amplitude * (gauss_part - edge * (u - lo)) / (1.0 - edge)

    def describe(self):
        m, sigma, _ = self._params()
        return {
            "shape": "gaussian",
            "amplitude": self.amplitude,
            "support": list(self.support),
            "sigma": sigma,
        }


@dataclass(frozen=True, eq=False)
class IndicatorDeficit(Deficit):
    """Sharp indicator: amplitude on the support, zero outside.

    The derivative is the a.e. derivative (zero); the jump at the edges is
    invisible to it, which is exactly the behaviour the obstruction tests
    rely on.
    """

    amplitude: float
    support: tuple[float, float]

    def __post_init__(self):
        _check_support(self.support)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        return np.where((s >= lo) & (s <= hi), self.amplitude, 0.0)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        return np.zeros_like(s)

    def antiderivative(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        return self.amplitude * np.clip(s - lo, 0.0, hi - lo)

    def describe(self):
        return {
            "shape": "indicator",
            "amplitude": self.amplitude,
            "support": list(self.support),
        }


class TabulatedDeficit(Deficit):
    """Piecewise-linear interpolation of tabulated samples, zero outside."""

    def __init__(self, samples_s, samples_v):
        s = np.asarray(samples_s, dtype=float)
        v = np.asarray(samples_v, dtype=float)
        if s.ndim != 1 or s.size < 2 or s.shape != v.shape:
            raise ValueError("need matching 1-D sample arrays with >= 2 points")
        if not np.all(np.diff(s) > 0):
            raise ValueError("sample abscissae must be strictly increasing")
        self._s = s
        self._v = v
        self.support = (float(s[0]), float(s[-1]))
        # cumulative integral at the sample points (trapezoid is exact for
        # piecewise-linear data)
        seg = 0.5 * (v[:-1] + v[1:]) * np.diff(s)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self._slope = np.diff(v) / np.diff(s)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self._s, self._v, left=0.0, right=0.0)
        lo, hi = self.support
        return np.where((s >= lo) & (s <= hi), out, 0.0)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self._s, s, side="right") - 1, 0, self._slope.size - 1)
        inside = (s > self.support[0]) & (s < self.support[1])
        return np.where(inside, self._slope[idx], 0.0)

    def antiderivative(self, s):
        s = np.asarray(s, dtype=float)
        u = np.clip(s, self.support[0], self.support[1])
        idx = np.clip(np.searchsorted(self._s, u, side="right") - 1, 0, self._slope.size - 1)
        ds = u - self._s[idx]
        return self._cum[idx] + self._v[idx] * ds + 0.5 * self._slope[idx] * ds**2

    def breakpoints(self):
        return [float(x) for x in self._s]

    def describe(self):
        return {
            "shape": "table",
            "support": list(self.support),
            "n_samples": int(self._s.size),
        }


class SumDeficit(Deficit):
    """Pointwise sum of deficits (supports need not overlap)."""

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ValueError("SumDeficit needs at least one part")
        self.parts = parts
        self.support = (
            min(p.support[0] for p in parts),
            max(p.support[1] for p in parts),
        )

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return sum(p(s) for p in self.parts)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        return sum(p.derivative(s) for p in self.parts)

    def antiderivative(self, s):
        s = np.asarray(s, dtype=float)
        return sum(p.antiderivative(s) for p in self.parts)

    def breakpoints(self):
        pts: list[float] = []
        for p in self.parts:
            pts.extend(p.breakpoints())
        return sorted(set(pts))

    def describe(self):
        return {"shape": "sum", "parts": [p.describe() for p in self.parts]}


class ScaledDeficit(Deficit):
    """scale * base(s); carries the strong-shearing multiplier alpha."""

    def __init__(self, base: Deficit, scale: float):
        self.base = base
        self.scale = float(scale)
        self.support = base.support

    def __call__(self, s):
        return self.scale * self.base(s)

    def derivative(self, s):
        return self.scale * self.base.derivative(s)

    def antiderivative(self, s):
        return self.scale * self.base.antiderivative(s)

    def breakpoints(self):
        return self.base.breakpoints()

    def describe(self):
        return {"shape": "scaled", "scale": self.scale, "base": self.base.describe()}


class ObstructionDeficit(Deficit):
    """Member of the one-parameter family annihilating the condition-(ii)
    functional: eps(s) = 2 beta / (c exp(-2 E1 d beta s) - 1) on a window,
    optionally mollified to zero at the window edges by quintic ramps.

    For c = 0 this is the constant -2 beta on the window.
    """

    def __init__(self, beta: float, d: float, c: float, window, ramp_fraction: float = 0.0):
        lo, hi = _check_support(window)
        self.beta = float(beta)
        self.d = float(d)
        self.c = float(c)
        self.support = (lo, hi)
        if not 0.0 <= ramp_fraction < 0.5:
            raise ValueError("ramp_fraction must lie in [0, 0.5)")
        self.ramp_fraction = float(ramp_fraction)
        self._k = 2.0 * (math.pi / d) ** 2 * d * beta  # 2 E1 d beta
        if self.c != 0.0:
            # the denominator c e^{-ks} - 1 must not vanish on the window
            den = self.c * np.exp(-self._k * np.linspace(lo, hi, 2001)) - 1.0
            if np.any(np.abs(den) < 1e-12) or np.any(np.sign(den) != np.sign(den[0])):
                raise ValueError(
                    "obstruction deficit window crosses the singularity of the family"
                )

    def _core(self, s):
        if self.c == 0.0:
            return np.full_like(s, -2.0 * self.beta)
        return 2.0 * self.beta / (self.c * np.exp(-self._k * s) - 1.0)

    def _core_deriv(self, s):
        if self.c == 0.0:
            return np.zeros_like(s)
        e = self.c * np.exp(-self._k * s)
        return 2.0 * self.beta * self._k * e / (e - 1.0) ** 2

    def _window(self, s):
        lo, hi = self.support
        if self.ramp_fraction == 0.0:
            return np.where((s >= lo) & (s <= hi), 1.0, 0.0), np.zeros_like(s)
        w = self.ramp_fraction * (hi - lo)
        up = _smoothstep((s - lo) / w)
        down = _smoothstep((hi - s) / w)
        m = np.where((s >= lo) & (s <= hi), up * down, 0.0)
        mprime = np.where(
            (s >= lo) & (s <= hi),
            _smoothstep_deriv((s - lo) / w) / w * down
            - up * _smoothstep_deriv((hi - s) / w) / w,
            0.0,
        )
        return m, mprime

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        m, _ = self._window(s)
        return m * self._core(s)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        m, mprime = self._window(s)
        return mprime * self._core(s) + m * self._core_deriv(s)

    def breakpoints(self):
        lo, hi = self.support
        if self.ramp_fraction == 0.0:
            return [lo, hi]
        w = self.ramp_fraction * (hi - lo)
        return [lo, lo + w, hi - w, hi]

    def describe(self):
        return {
            "shape": "obstruction",
            "beta": self.beta,
            "d": self.d,
            "c": self.c,
            "support": list(self.support),
            "ramp_fraction": self.ramp_fraction,
        }


_DEFICIT_KINDS = {"constant", "bump", "schema", "linear-unbounded"}


@dataclass(frozen=True)
class ShearProfile:
    """Shear slope f' = beta + eps(s) with compactly supported deficit eps.

    kind:
      constant          eps = 0 (straight sheared strip)
      bump              finite beta plus a deficit
      schema            strong-shearing form beta + alpha*eps, alpha stored
                        as the multiplier of a ScaledDeficit, (c1, c2)
                        bounding the unscaled deficit on its support
      linear-unbounded  f'(s) = s; beta is flagged infinite
    """

    kind: str
    beta: float
    deficit: Deficit | None = None
    deficit_derivative: object | None = None
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in _DEFICIT_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind in ("bump", "schema") and self.deficit is None:
            raise ValueError(f"{self.kind} profile requires a deficit")
        if self.kind in ("bump", "schema") and math.isinf(self.beta):
            raise ValueError("deficit profiles require finite beta")

    # -- constructors ---------------------------------------------------
    @staticmethod
    def constant(beta: float) -> "ShearProfile":
        return ShearProfile(kind="constant", beta=float(beta))

    @staticmethod
    def bump(beta: float, deficit: Deficit, deficit_derivative=None) -> "ShearProfile":
        return ShearProfile(
            kind="bump",
            beta=float(beta),
            deficit=deficit,
            deficit_derivative=deficit_derivative,
        )

    @staticmethod
    def schema(alpha: float, beta: float, deficit: Deficit, bounds: tuple[float, float]) -> "ShearProfile":
        c1, c2 = float(bounds[0]), float(bounds[1])
        if not 0.0 < c1 <= c2:
            raise ValueError("schema bounds must satisfy 0 < c1 <= c2")
        return ShearProfile(
            kind="schema",
            beta=float(beta),
            deficit=ScaledDeficit(deficit, float(alpha)),
            bounds=(c1, c2),
        )

    @staticmethod
    def linear_unbounded() -> "ShearProfile":
        return ShearProfile(kind="linear-unbounded", beta=math.inf)

    # -- queries ---------------------------------------------------------
    @property
    def schema_multiplier(self) -> float:
        if self.kind != "schema" or not isinstance(self.deficit, ScaledDeficit):
            raise ValueError("schema_multiplier is defined for schema profiles only")
        return self.deficit.scale

    def eps(self, s):
        """The deficit f'(s) - beta (zero for constant profiles)."""
        s = np.asarray(s, dtype=float)
        if self.deficit is None:
            return np.zeros_like(s)
        return self.deficit(s)

    def eps_derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.deficit_derivative is not None:
            return np.asarray(self.deficit_derivative(s), dtype=float)
        if self.deficit is None:
            return np.zeros_like(s)
        return self.deficit.derivative(s)

    def eval_fprime(self, s):
        """Slope f'(s).  For linear-unbounded profiles this is s itself."""
        s = np.asarray(s, dtype=float)
        if self.kind == "linear-unbounded":
            return s.copy()
        return self.beta + self.eps(s)

    def eval_f(self, s, tol: float = 1e-9):
        """f(s) with f(0) = 0; closed form where the deficit provides an
        antiderivative, adaptive quadrature otherwise (raising if the
        requested tolerance is not achieved, with the achieved value)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "linear-unbounded":
            return 0.5 * s**2
        if self.deficit is None:
            return self.beta * s
        try:
            shift = self.deficit.antiderivative(np.zeros(1))[0]
            return self.beta * s + self.deficit.antiderivative(s) - shift
        except NotImplementedError:
            pass
        pts = self.deficit.breakpoints()
        flat = np.atleast_1d(s)
        vals = np.empty_like(flat)
        for i, si in enumerate(flat):
            v, err = quad(
                lambda u: float(self.deficit(np.array([u]))[0]),
                0.0,
                float(si),
                points=[p for p in pts if min(0.0, si) < p < max(0.0, si)],
                limit=200,
            )
            if err > tol:
                raise ValueError(
                    f"adaptive quadrature for f({si}) achieved tolerance {err:.3e} > {tol:.3e}"
                )
            vals[i] = v
        out = self.beta * flat + vals
        return out.reshape(s.shape) if s.shape else float(out[0])

    def describe(self) -> dict:
        out: dict = {"kind": self.kind, "beta": self.beta}
        if self.deficit is not None:
            out["deficit"] = self.deficit.describe()
        if self.bounds is not None:
            out["bounds"] = list(self.bounds)
        return out


@dataclass(frozen=True)
class StripGeometry:
    """Truncated computational strip [-L, L] x (0, d)."""

    d: float
    L: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("strip width d must be positive")
        if not self.L > 0:
            raise ValueError("truncation half-length L must be positive")


@dataclass(frozen=True)
class SchemaGeometry:
    """Vertices of the strong-shearing subdomain decomposition.

    All points are in physical (x, y) coordinates.  O/A/C/B bound the lower
    verge quadrilateral, primed points the upper one; x0 and x0_prime are
    the abscissae where the bent boundary curves cross the cut heights.
    """

    alpha: float
    beta: float
    d: float
    O: tuple[float, float]
    A: tuple[float, float]
    C: tuple[float, float]
    B: tuple[float, float]
    O_prime: tuple[float, float]
    A_prime: tuple[float, float]
    C_prime: tuple[float, float]
    B_prime: tuple[float, float]
    x0: float
    x0_prime: float

    def describe(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "d": self.d,
            "points": {
                name: list(getattr(self, name))
                for name in ("O", "A", "C", "B", "O_prime", "A_prime", "C_prime", "B_prime")
            },
            "x0": self.x0,
            "x0_prime": self.x0_prime,
        }


def _bisect(fun, a: float, b: float, xtol: float = 1e-12) -> float:
    fa, fb = fun(a), fun(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise ValueError("bisection bracket does not change sign")
    while b - a > xtol:
        m = 0.5 * (a + b)
        fm = fun(m)
        if fm == 0.0:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def schema_points(alpha: float, beta: float, deficit: Deficit, d: float) -> SchemaGeometry:
    """Decomposition vertices for the strong-shearing profile
    f = beta*x + alpha * int_0^x eps, with eps supported in [0, 1].

    Requires beta > 0, alpha < 0, and f(1) + d < 0 so that the bent part of
    the strip dips below both cut heights; otherwise the decomposition is
    undefined.
    """
    if not beta > 0:
        raise ValueError("schema decomposition requires beta > 0")
    if not alpha < 0:
        raise ValueError("schema decomposition requires alpha < 0")
    lo, hi = deficit.support
    if lo < -1e-12 or hi > 1.0 + 1e-12:
        raise ValueError("schema deficit must be supported in [0, 1]")

    profile = ShearProfile.bump(beta, ScaledDeficit(deficit, alpha))

    def f(x: float) -> float:
        return float(profile.eval_f(np.array([x]))[0])

    f1 = f(1.0)
    if not f1 + d < 0:
        raise ValueError("schema decomposition undefined for this α")

    x0 = _bisect(lambda x: f(x) + d, 0.0, 1.0)
    x0p = _bisect(lambda x: f(x) - (f1 + d), 0.0, 1.0)

    den = 1.0 + beta * beta
    O = (0.0, 0.0)
    A = (-beta * d / den, d / den)
    C = (0.0, d)
    B = (x0, 0.0)
    Op = (1.0, f1 + d)
    Ap = (1.0 + beta * d / den, f1 + beta * beta * d / den)
    Cp = (1.0, f1)
    Bp = (x0p, f1 + d)
    return SchemaGeometry(
        alpha=float(alpha),
        beta=float(beta),
        d=float(d),
        O=O,
        A=A,
        C=C,
        B=B,
        O_prime=Op,
        A_prime=Ap,
        C_prime=Cp,
        B_prime=Bp,
        x0=float(x0),
        x0_prime=float(x0p),
    )


@dataclass(frozen=True)
class BallAreaEstimate:
    """Monte-Carlo estimate of |Omega ∩ ball| with its standard error."""

    value: float
    stderr: float
    n_samples: int

    def __float__(self):
        return self.value


def ball_intersection_area(
    profile: ShearProfile,
    d: float,
    center,
    radius: float,
    n_samples: int = 1_000_000,
    rng=None,
) -> BallAreaEstimate:
    """Monte-Carlo area of the intersection of the strip with a disk.

    Samples uniformly inside the disk; the estimate is pi r^2 times the hit
    fraction.  The caller may pass a seeded numpy Generator (or an int
    seed) for reproducibility; the default is the fixed seed 0.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(0 if rng is None else int(rng))
    cx, cy = float(center[0]), float(center[1])
    n = int(n_samples)
    theta = rng.random(n) * (2.0 * np.pi)
    rho = radius * np.sqrt(rng.random(n))
    x = cx + rho * np.cos(theta)
    y = cy + rho * np.sin(theta)
    fx = profile.eval_f(x)
    hits = (y > fx) & (y < fx + d)
    p = hits.mean()
    disk = math.pi * radius**2
    stderr = disk * math.sqrt(max(p * (1.0 - p), 0.0) / n)
    return BallAreaEstimate(value=disk * float(p), stderr=float(stderr), n_samples=n)


def excess_integral(deficit: Deficit, beta: float, order: int = 20) -> float:
    """int (eps^2 + 2 beta eps) ds over the support — the sign governing
    the existence of a bound state for finite-slope profiles."""
    lo, hi = deficit.support
    pts = deficit.breakpoints()

    def integrand(s):
        e = deficit(s)
        return e * e + 2.0 * beta * e

    return integrate_1d(integrand, [lo, *pts, hi], order=order, max_panel=0.25)


def two_level_deficit(level1: float, level2: float, spans, shoulder: float = 0.1) -> SumDeficit:
    """Two adjacent plateaus with cosine shoulders, levels level1/level2 on
    spans[0]/spans[1]."""
    (a1, b1), (a2, b2) = spans
    return SumDeficit(
        [
            PlateauDeficit(level1, (float(a1), float(b1)), shoulder=shoulder),
            PlateauDeficit(level2, (float(a2), float(b2)), shoulder=shoulder),
        ]
    )


def calibrated_two_level(
    beta: float,
    spans,
    level1: float = -1.0,
    shoulder: float = 0.1,
    tol: float = 1e-12,
) -> SumDeficit:
    """Secant-calibrate the second plateau level so that
    int (eps^2 + 2 beta eps) = 0 (the zero-mean premise of the
    perturbative bound-state certificate)."""

    def moment(level2: float) -> float:
        return excess_integral(two_level_deficit(level1, level2, spans, shoulder), beta)

    # For a single plateau the root of l^2 + 2 beta l is l = -2 beta +
    # corrections; bracket around the sharp-indicator solution.
    x0, x1 = math.sqrt(1.0 + beta * beta) - beta - 0.25, math.sqrt(1.0 + beta * beta) - beta + 0.25
    f0, f1 = moment(x0), moment(x1)
    for _ in range(100):
        if abs(f1) < tol:
            break
        step = f1 * (x1 - x0) / (f1 - f0)
        x0, f0 = x1, f1
        x1 = x1 - step
        f1 = moment(x1)
    else:
        raise RuntimeError("two-level calibration did not converge")
    return two_level_deficit(level1, x1, spans, shoulder)
