"""Computable certificates: variational bound-state tests, the Hardy
chain with explicit constants, identity checks, and domain bracketing.

The analytic half of this module evaluates the strip form and its
ground-state decomposition on smooth separable test functions by
composite Gauss quadrature; everything is phrased in the ratio variable
phi = psi / chi1, where all coefficients are smooth.  The discrete half
drives the finite-element pencils for the slab eigenvalue lambda_I, the
Hardy spectral checks, and the polygonal bracketing subdomains.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._quad import interval_rule, panel_nodes
from .discretization import (
    AssembledOperator,
    SlabDomain,
    TriangleDomain,
    VergeDomain,
    assemble_h,
    assemble_potential,
    assemble_qI,
    build_mesh,
)
from .eigensolve import EigOptions, smallest_eigs
from .geometry import (
    Deficit,
    GaussianDeficit,
    ShearProfile,
    StripGeometry,
    schema_points,
)
from .modes import ground_mode, ground_mode_deriv, mode_energy, threshold_energy
from .spectra import truncated_spectrum

__all__ = [
    "TestField",
    "FormEvaluator",
    "VariationalCertificate",
    "HardyCertificate",
    "HardyVerification",
    "BracketingReport",
    "EtaSpec",
    "plateau_field",
    "tilted_field",
    "gaussian_field",
    "bump_field",
    "random_smooth_field",
    "random_compact_field",
    "rayleigh_condition_i",
    "certify_condition_ii",
    "condition_ii_functional",
    "lambda_I",
    "hardy_constants",
    "verify_hardy",
    "ground_state_identity",
    "one_d_hardy_check",
    "bracket_thresholds",
    "alpha0_scan",
    "find_alpha0",
]


# ----------------------------------------------------------------------
# separable test fields in the ratio variable
# ----------------------------------------------------------------------


class TestField:
    """phi(s, t) = sum_k g_k(s) tau_k(t); the physical test function is
    psi = chi1(t) * phi(s, t), so transverse Dirichlet conditions hold by
    construction.  Terms carry their s-derivatives, t-derivatives, and
    quadrature breakpoints."""

    def __init__(self, terms, s_breakpoints, label: str = ""):
        self.terms = list(terms)  # (g, gp, tau, taup)
        self.s_breakpoints = sorted(set(float(b) for b in s_breakpoints))
        if len(self.s_breakpoints) < 2:
            raise ValueError("a test field needs a nondegenerate s-support")
        self.label = label

    def value(self, S, T):
        return sum(g(S) * tau(T) for g, _, tau, _ in self.terms)

    def ds(self, S, T):
        return sum(gp(S) * tau(T) for _, gp, tau, _ in self.terms)

    def dt(self, S, T):
        return sum(g(S) * taup(T) for g, _, _, taup in self.terms)

    def scaled(self, factor: float) -> "TestField":
        factor = float(factor)
        terms = [
            (
                (lambda g=g: lambda s: factor * g(s))(),
                (lambda gp=gp: lambda s: factor * gp(s))(),
                tau,
                taup,
            )
            for g, gp, tau, taup in self.terms
        ]
        return TestField(terms, self.s_breakpoints, label=f"{factor}*{self.label}")

    def __add__(self, other: "TestField") -> "TestField":
        return TestField(
            self.terms + other.terms,
            self.s_breakpoints + other.s_breakpoints,
            label=f"{self.label}+{other.label}",
        )


def _const_tau(value: float = 1.0):
    return (lambda t: np.full_like(np.asarray(t, dtype=float), value),
            lambda t: np.zeros_like(np.asarray(t, dtype=float)))


def _linear_tau():
    return (lambda t: np.asarray(t, dtype=float),
            lambda t: np.ones_like(np.asarray(t, dtype=float)))


def _poly_tau(coeffs, d: float):
    coeffs = [float(c) for c in coeffs]

    def tau(t):
        u = np.asarray(t, dtype=float) / d
        out = np.zeros_like(u)
        for k, c in enumerate(coeffs):
            out = out + c * u**k
        return out

    def taup(t):
        u = np.asarray(t, dtype=float) / d
        out = np.zeros_like(u)
        for k, c in enumerate(coeffs[1:], start=1):
            out = out + k * c * u ** (k - 1) / d
        return out

    return tau, taup


def _plateau_g(n: float):
    """The standard plateau: 1 on [-n, n], linear down to 0 at +-2n."""
    n = float(n)

    def g(s):
        a = np.asarray(s, dtype=float)
        return np.clip(2.0 - np.abs(a) / n, 0.0, 1.0)

    def gp(s):
        a = np.asarray(s, dtype=float)
        out = np.zeros_like(a)
        out[(a > n) & (a < 2 * n)] = -1.0 / n
        out[(a < -n) & (a > -2 * n)] = 1.0 / n
        return out

    return g, gp, [-2 * n, -n, n, 2 * n]


def _poly_bump_g(center: float, half_width: float, amplitude: float):
    """amplitude * (1 - u^2)^3 with u = (s - center)/half_width; exactly
    compactly supported and C^2 at the edges."""
    c, w, a = float(center), float(half_width), float(amplitude)

    def g(s):
        u = (np.asarray(s, dtype=float) - c) / w
        inside = np.abs(u) < 1.0
        out = np.zeros_like(u)
        out[inside] = a * (1.0 - u[inside] ** 2) ** 3
        return out

    def gp(s):
        u = (np.asarray(s, dtype=float) - c) / w
        inside = np.abs(u) < 1.0
        out = np.zeros_like(u)
        out[inside] = a * (-6.0 * u[inside] / w) * (1.0 - u[inside] ** 2) ** 2
        return out

    return g, gp, [c - w, c, c + w]


def _gaussian_g(center: float, sigma: float, amplitude: float):
    c, sg, a = float(center), float(sigma), float(amplitude)

    def g(s):
        u = (np.asarray(s, dtype=float) - c) / sg
        return a * np.exp(-0.5 * u**2)

    def gp(s):
        u = (np.asarray(s, dtype=float) - c) / sg
        return a * np.exp(-0.5 * u**2) * (-u / sg)

    # +-9 sigma puts the tail at ~1e-18 of the peak; beyond quadrature noise
    return g, gp, [c - 9 * sg, c - sg, c + sg, c + 9 * sg]


def plateau_field(n: float) -> TestField:
    g, gp, breaks = _plateau_g(n)
    return TestField([(g, gp, *_const_tau())], breaks, label=f"plateau(n={n:g})")


def tilted_field(xi: Deficit) -> TestField:
    """xi(s) * t — the transverse-tilt perturbation of the second
    variational certificate."""
    g = lambda s: np.asarray(xi(s), dtype=float)
    gp = lambda s: np.asarray(xi.derivative(s), dtype=float)
    return TestField([(g, gp, *_linear_tau())], xi.breakpoints(), label="tilt")


def gaussian_field(center: float, sigma: float, d: float, coeffs=(1.0,)) -> TestField:
    g, gp, breaks = _gaussian_g(center, sigma, 1.0)
    return TestField([(g, gp, *_poly_tau(coeffs, d))], breaks, label="gaussian")


def bump_field(center: float, half_width: float, d: float, coeffs=(1.0,)) -> TestField:
    g, gp, breaks = _poly_bump_g(center, half_width, 1.0)
    return TestField([(g, gp, *_poly_tau(coeffs, d))], breaks, label="bump")


def random_smooth_field(rng, d: float, span: float = 5.0, n_terms: int = 2) -> TestField:
    """Random sum of gaussian-in-s, polynomial-in-t separable terms."""
    terms = []
    breaks: list[float] = []
    for _ in range(n_terms):
        center = rng.uniform(-span, span)
        sigma = rng.uniform(0.35, 1.4)
        amp = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
        g, gp, bk = _gaussian_g(center, sigma, amp)
        coeffs = rng.uniform(-1.0, 1.0, size=3)
        tau, taup = _poly_tau(coeffs, d)
        terms.append((g, gp, tau, taup))
        breaks.extend(bk)
    return TestField(terms, breaks, label="random-smooth")


def random_compact_field(
    rng, d: float, centers_in, avoid=None, n_terms: int = 2
) -> TestField:
    """Random sum of exactly compactly supported polynomial bumps; if
    ``avoid = (s0, r)`` is given, supports stay clear of that hole."""
    lo, hi = float(centers_in[0]), float(centers_in[1])
    terms = []
    breaks: list[float] = []
    for _ in range(n_terms):
        for _attempt in range(200):
            center = rng.uniform(lo, hi)
            half = rng.uniform(0.3, 1.2)
            if avoid is None:
                break
            s0, r = avoid
            if abs(center - s0) > half + r:
                break
        else:
            raise RuntimeError("could not place a bump clear of the hole")
        amp = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
        g, gp, bk = _poly_bump_g(center, half, amp)
        coeffs = rng.uniform(-1.0, 1.0, size=3)
        tau, taup = _poly_tau(coeffs, d)
        terms.append((g, gp, tau, taup))
        breaks.extend(bk)
    return TestField(terms, breaks, label="random-compact")


# ----------------------------------------------------------------------
# quadrature evaluation of the strip form
# ----------------------------------------------------------------------


class FormEvaluator:
    """Composite tensor quadrature for the strip form, its spectral gap,
    and the ground-state decomposition terms, on TestField ratios.

    Within a panel every integrand is smooth, so the Gauss order controls
    the error down to rounding; the refinement knobs exist so identity
    checks can demonstrate that their residuals are quadrature-limited.
    """

    def __init__(
        self,
        profile: ShearProfile,
        d: float,
        s_order: int = 14,
        t_order: int = 24,
        max_panel: float = 1.0,
    ):
        if math.isinf(profile.beta):
            raise ValueError("form quadrature requires a finite limiting slope")
        self.profile = profile
        self.d = float(d)
        self.s_order = s_order
        self.t_order = t_order
        self.max_panel = max_panel

    def _grid(self, *fields: TestField):
        breaks: list[float] = []
        for f in fields:
            breaks.extend(f.s_breakpoints)
        if self.profile.deficit is not None:
            breaks.extend(self.profile.deficit.breakpoints())
        sn, sw = panel_nodes(breaks, order=self.s_order, max_panel=self.max_panel)
        tn, tw = interval_rule(0.0, self.d, order=self.t_order)
        S = sn[:, None]
        T = tn[None, :]
        W = sw[:, None] * tw[None, :]
        return S, T, W

    def _pieces(self, f: TestField, S, T):
        chi = ground_mode(T, self.d)
        chip = ground_mode_deriv(T, self.d)
        u = f.value(S, T)
        us = f.ds(S, T)
        ut = f.dt(S, T)
        psi = chi * u
        psi_s = chi * us
        psi_t = chip * u + chi * ut
        return u, us, ut, psi, psi_s, psi_t, chi, chip

    def norm2(self, f: TestField) -> float:
        S, T, W = self._grid(f)
        chi = ground_mode(T, self.d)
        return float(np.sum(W * (chi * f.value(S, T)) ** 2))

    def gap(self, f: TestField) -> float:
        """h[psi] - E1(beta) ||psi||^2 via the expanded form integrand."""
        S, T, W = self._grid(f)
        _, _, _, psi, psi_s, psi_t, _, _ = self._pieces(f, S, T)
        fp = np.asarray(self.profile.eval_fprime(S), dtype=float)
        e1b = threshold_energy(self.profile.beta, self.d)
        integ = (
            psi_s**2
            - 2.0 * fp * psi_s * psi_t
            + (1.0 + fp**2) * psi_t**2
            - e1b * psi**2
        )
        return float(np.sum(W * integ))

    def gap_bilinear(self, f1: TestField, f2: TestField) -> float:
        """The symmetric bilinear version of gap()."""
        S, T, W = self._grid(f1, f2)
        _, _, _, p1, p1s, p1t, _, _ = self._pieces(f1, S, T)
        _, _, _, p2, p2s, p2t, _, _ = self._pieces(f2, S, T)
        fp = np.asarray(self.profile.eval_fprime(S), dtype=float)
        e1b = threshold_energy(self.profile.beta, self.d)
        integ = (
            p1s * p2s
            - fp * (p1s * p2t + p1t * p2s)
            + (1.0 + fp**2) * p1t * p2t
            - e1b * p1 * p2
        )
        return float(np.sum(W * integ))

    def decomposition_terms(self, f: TestField):
        """The three terms of the ground-state decomposition:
        the longitudinal square, the transverse-excess square, and the
        shear potential (whose transverse factor integrates in closed
        form: E1 chi1^2 + chi1'^2 is the constant 2 pi^2/d^3)."""
        S, T, W = self._grid(f)
        u, us, ut, _, _, _, chi, chip = self._pieces(f, S, T)
        beta = self.profile.beta
        eps = np.asarray(self.profile.eps(S), dtype=float)
        long_sq = (chi * us - eps * chip * u - (eps + beta) * chi * ut) ** 2
        trans_sq = (chi * ut) ** 2
        pot = beta * (2.0 * math.pi**2 / self.d**3) * eps * u**2
        return (
            float(np.sum(W * long_sq)),
            float(np.sum(W * trans_sq)),
            float(np.sum(W * pot)),
        )

    def weighted_norm2(self, f: TestField, weight_s, extra_breaks=()) -> float:
        """int w(s) |psi|^2 for a longitudinal weight."""
        breaks = list(f.s_breakpoints) + [float(b) for b in extra_breaks]
        if self.profile.deficit is not None:
            breaks.extend(self.profile.deficit.breakpoints())
        sn, sw = panel_nodes(breaks, order=self.s_order, max_panel=self.max_panel)
        tn, tw = interval_rule(0.0, self.d, order=self.t_order)
        S, T = sn[:, None], tn[None, :]
        W = sw[:, None] * tw[None, :]
        chi = ground_mode(T, self.d)
        w = np.asarray(weight_s(sn), dtype=float)[:, None]
        return float(np.sum(W * w * (chi * f.value(S, T)) ** 2))


# ----------------------------------------------------------------------
# certificates of existence (the two variational conditions)
# ----------------------------------------------------------------------


@dataclass(eq=False)
class VariationalCertificate:
    condition: str  # "i" or "ii"
    n: float
    delta: float | None
    xi_spec: dict | None
    rayleigh_gap: float
    verdict: bool
    excess: float
    limit_gap: float | None = None
    f_value: float | None = None
    f_value_alt: float | None = None
    cross_term: float | None = None
    curvature: float | None = None
    profile_desc: dict | None = None
    d: float = 0.0

    def to_dict(self) -> dict:
        out = {
            "kind": "variational-certificate",
            "condition": self.condition,
            "n": self.n,
            "rayleigh_gap": self.rayleigh_gap,
            "verdict": self.verdict,
            "excess": self.excess,
            "d": self.d,
            "profile": self.profile_desc,
        }
        if self.condition == "i":
            out["limit_gap"] = self.limit_gap
        else:
            out.update(
                {
                    "delta": self.delta,
                    "xi_spec": self.xi_spec,
                    "f_value": self.f_value,
                    "f_value_alt": self.f_value_alt,
                    "cross_term": self.cross_term,
                    "curvature": self.curvature,
                }
            )
        return out


def _excess_weighted(profile: ShearProfile, n: float, order: int = 20) -> float:
    """int (eps^2 + 2 beta eps) * plateau_n(s)^2 ds by panel quadrature."""
    g, _, gbreaks = _plateau_g(n)
    breaks = list(gbreaks)
    if profile.deficit is not None:
        breaks.extend(profile.deficit.breakpoints())

    def integrand(s):
        e = np.asarray(profile.eps(s), dtype=float)
        return (e * e + 2.0 * profile.beta * e) * g(s) ** 2

    sn, sw = panel_nodes(breaks, order=order, max_panel=0.5)
    return float(np.dot(sw, integrand(sn)))


def _excess_plain(profile: ShearProfile, order: int = 20) -> float:
    if profile.deficit is None:
        return 0.0
    breaks = profile.deficit.breakpoints()

    def integrand(s):
        e = np.asarray(profile.eps(s), dtype=float)
        return e * e + 2.0 * profile.beta * e

    sn, sw = panel_nodes(breaks, order=order, max_panel=0.25)
    return float(np.dot(sw, integrand(sn)))


def rayleigh_condition_i(profile: ShearProfile, d: float, n: float) -> VariationalCertificate:
    """First variational certificate: the Rayleigh gap of the plateau test
    function psi_n = plateau_n(s) chi1(t),

        gap(n) = 2/n + E1 * int (eps^2 + 2 beta eps) plateau_n^2,

    which is exactly the spectral gap h[psi_n] - threshold * ||psi_n||^2.
    A negative gap certifies a bound state below the essential spectrum;
    as n grows the integral term tends to E1 * int(eps^2 + 2 beta eps),
    whose sign is the sharp existence criterion."""
    if math.isinf(profile.beta):
        raise ValueError("the plateau certificate requires a finite limiting slope")
    if n <= 0:
        raise ValueError("the plateau half-width n must be positive")
    e1 = mode_energy(d)
    gap = 2.0 / n + e1 * _excess_weighted(profile, n)
    excess = _excess_plain(profile)
    return VariationalCertificate(
        condition="i",
        n=float(n),
        delta=None,
        xi_spec=None,
        rayleigh_gap=gap,
        verdict=bool(gap < 0.0),
        excess=excess,
        limit_gap=e1 * excess,
        profile_desc=profile.describe(),
        d=float(d),
    )


def condition_ii_functional(profile: ShearProfile, d: float, xi: Deficit):
    """The linear response of the spectral gap to a transverse tilt:

        F(xi) = 1/2 int [ -eps' + E1 d (eps^2 + 2 beta eps) ] xi ds,

    returned together with its integrated-by-parts twin
    1/2 int [ eps xi' + E1 d (eps^2 + 2 beta eps) xi ] ds (they agree for
    compactly supported data; the pair is a built-in consistency check).
    """
    e1d = mode_energy(d) * d
    breaks = list(xi.breakpoints())
    if profile.deficit is not None:
        breaks.extend(profile.deficit.breakpoints())
    if len(set(breaks)) < 2:
        return 0.0, 0.0
    sn, sw = panel_nodes(breaks, order=20, max_panel=0.25)
    e = np.asarray(profile.eps(sn), dtype=float)
    ep = np.asarray(profile.eps_derivative(sn), dtype=float)
    x = np.asarray(xi(sn), dtype=float)
    xp = np.asarray(xi.derivative(sn), dtype=float)
    quad_term = e1d * (e * e + 2.0 * profile.beta * e)
    f_primary = 0.5 * float(np.dot(sw, (-ep + quad_term) * x))
    f_alt = 0.5 * float(np.dot(sw, e * xp + quad_term * x))
    return f_primary, f_alt


def _canonical_xi_family(support) -> list[Deficit]:
    lo, hi = float(support[0]), float(support[1])
    b = 0.5 * (hi - lo)
    centers = np.linspace(lo, hi, 5)
    return [
        GaussianDeficit(1.0, (c - b, c + b), width=b / 4.0) for c in centers
    ]


def certify_condition_ii(
    profile: ShearProfile,
    d: float,
    xi_spec: Deficit | None = None,
    n: float | None = None,
    delta_grid=None,
    excess_tol: float = 1e-10,
    f_tol: float = 1e-8,
) -> VariationalCertificate:
    """Second variational certificate, for profiles on the borderline
    int(eps^2 + 2 beta eps) = 0 where the plateau test alone cannot
    decide.  Perturbs psi_n by delta * xi(s) t chi1(t), evaluates the
    exact quadratic polynomial

        gap(n, delta) = gap(n) + 2 delta B + delta^2 H

    by quadrature (B the mixed form value, H the perturbation energy),
    and scans a delta grid with the sign chosen against B.  Raises when
    the excess is genuinely nonzero (use the plateau certificate) or when
    every candidate tilt has vanishing linear response, which happens
    exactly on the known obstruction family."""
    if math.isinf(profile.beta):
        raise ValueError("the tilt certificate requires a finite limiting slope")
    excess = _excess_plain(profile)
    if abs(excess) > excess_tol:
        if excess < 0:
            raise ValueError(
                f"excess integral {excess:.3e} is negative: use condition i"
            )
        raise ValueError(
            f"excess integral {excess:.3e} is positive: no variational "
            "certificate applies"
        )
    # linear response needs the deficit derivative; probe it early so the
    # error names the actual requirement
    if profile.deficit is not None:
        profile.eps_derivative(np.array([0.5 * sum(profile.deficit.support)]))

    support = profile.deficit.support if profile.deficit is not None else (-1.0, 1.0)
    candidates: list[Deficit] = []
    if xi_spec is not None:
        candidates.append(xi_spec)
    candidates.extend(_canonical_xi_family(support))

    chosen = None
    f_val = f_alt = 0.0
    for cand in candidates:
        f_val, f_alt = condition_ii_functional(profile, d, cand)
        if abs(f_val) > f_tol:
            chosen = cand
            break
    if chosen is None:
        raise ValueError("no admissible xi found")

    if n is None:
        reach = max(abs(b) for c in candidates for b in c.breakpoints())
        reach = max(reach, abs(support[0]), abs(support[1]))
        n = 2.0 * math.ceil(reach)
    n = float(n)

    ev = FormEvaluator(profile, d)
    base = plateau_field(n)
    pert = tilted_field(chosen)
    gap0 = ev.gap(base)
    cross = ev.gap_bilinear(base, pert)
    curv = ev.gap(pert)

    if delta_grid is None:
        delta_grid = [2.0**k / 64.0 for k in range(10)]
    sign = -1.0 if cross > 0 else 1.0

    best_gap = math.inf
    best_delta = None
    verdict = False
    delta_used = None
    gap_used = None
    for mag in delta_grid:
        delta = sign * float(mag)
        gap_val = gap0 + 2.0 * delta * cross + delta**2 * curv
        if gap_val < best_gap:
            best_gap, best_delta = gap_val, delta
        if gap_val < 0.0:
            verdict = True
            delta_used, gap_used = delta, gap_val
            break
    if not verdict:
        delta_used, gap_used = best_delta, best_gap

    return VariationalCertificate(
        condition="ii",
        n=n,
        delta=delta_used,
        xi_spec=chosen.describe(),
        rayleigh_gap=gap_used,
        verdict=verdict,
        excess=excess,
        f_value=f_val,
        f_value_alt=f_alt,
        cross_term=cross,
        curvature=curv,
        profile_desc=profile.describe(),
        d=float(d),
    )


# ----------------------------------------------------------------------
# the Hardy chain
# ----------------------------------------------------------------------


def lambda_I(
    profile: ShearProfile,
    d: float,
    I,
    resolution=(24, 24),
    tol: float = 1e-10,
    return_detail: bool = False,
):
    """Smallest eigenvalue of the slab form on I x (0, d).

    Solved on a coarse and a doubled mesh; the returned value is the
    second-order extrapolation of the pair, floored at zero (the form is
    a sum of squares).  Both rung values are kept as a sanity band: the
    discretization is conforming, so each rung bounds the true value from
    above."""
    lo, hi = float(I[0]), float(I[1])
    n_s, n_t = int(resolution[0]), int(resolution[1])
    shift = -0.1 * mode_energy(d)
    rungs = []
    for k in (1, 2):
        mesh = build_mesh(SlabDomain(lo, hi, d), k * n_s, k * n_t)
        op = assemble_qI(mesh, profile, d)
        res = smallest_eigs(op, EigOptions(k=1, tol=tol, shift=shift))
        rungs.append(float(res.values[0]))
    coarse, fine = rungs
    extrapolated = max((4.0 * fine - coarse) / 3.0, 0.0)
    if return_detail:
        return extrapolated, {
            "coarse": coarse,
            "fine": fine,
            "extrapolated": extrapolated,
            "upper_band": coarse,
        }
    return extrapolated


@dataclass(frozen=True)
class EtaSpec:
    """Cutoff used in the Hardy constant: a name and the sup-norm of its
    derivative (the only quantity the constants depend on)."""

    name: str
    sup_deriv: float


def canonical_eta(I) -> EtaSpec:
    """Quintic smoothstep equal to 1 on the inner half of I and 0 outside,
    transitioning on the two outer halves; the extreme slope of the
    quintic ramp is 15/8 over a run of b/2."""
    lo, hi = float(I[0]), float(I[1])
    b = 0.5 * (hi - lo)
    return EtaSpec(name="quintic-smoothstep", sup_deriv=15.0 / (8.0 * (b / 2.0)))


@dataclass(eq=False)
class HardyCertificate:
    interval: tuple
    s0: float
    b: float
    lambda_I: float
    lambda_band: dict
    eta: EtaSpec
    c_prime: float
    c: float
    delta_star: float
    inf_ratio: float
    beta: float
    d: float
    profile_desc: dict | None = None

    def to_dict(self) -> dict:
        return {
            "kind": "hardy-certificate",
            "interval": list(self.interval),
            "s0": self.s0,
            "b": self.b,
            "lambda_I": self.lambda_I,
            "lambda_band": self.lambda_band,
            "eta": {"name": self.eta.name, "sup_deriv": self.eta.sup_deriv},
            "c_prime": self.c_prime,
            "c": self.c,
            "delta_star": self.delta_star,
            "inf_ratio": self.inf_ratio,
            "beta": self.beta,
            "d": self.d,
            "profile": self.profile_desc,
        }


def shifted_ratio_infimum(s0: float) -> float:
    """inf over s of (1+s^2)/(1+(s-s0)^2), in closed form.

    The critical points of the ratio satisfy a quadratic whose relevant
    root gives inf = ((sqrt(s0^2+4) - |s0|)/2)^2; at s0 = 0 the ratio is
    identically 1."""
    a = abs(float(s0))
    return ((math.sqrt(a * a + 4.0) - a) / 2.0) ** 2


def hardy_constants(
    profile: ShearProfile,
    d: float,
    I,
    eta_spec: EtaSpec | None = None,
    resolution=(24, 24),
    samples: int = 2001,
) -> HardyCertificate:
    """Constants of the Hardy lower bound for repulsive shear:

        c' = lambda_I / (16 (1+beta^2)(lambda_I + ||eta'||_inf^2) + 2),
        c  = c' * inf_s (1+s^2)/(1+(s-s0)^2),

    with lambda_I computed from the slab form and eta the canonical
    cutoff (overridable).  delta_star is the interpolation weight that
    balances the two estimates combined in the derivation."""
    if math.isinf(profile.beta):
        raise ValueError("Hardy constants require a finite limiting slope")
    beta = profile.beta
    if profile.deficit is not None:
        lo, hi = profile.deficit.support
        grid = np.linspace(lo, hi, samples)
        if np.any(beta * np.asarray(profile.eps(grid)) < -1e-12):
            raise ValueError("shear not repulsive")
    lo, hi = float(I[0]), float(I[1])
    s0 = 0.5 * (lo + hi)
    b = 0.5 * (hi - lo)
    lam, band = lambda_I(profile, d, I, resolution=resolution, return_detail=True)
    eta = eta_spec or canonical_eta(I)
    one = 1.0 + beta * beta
    c_prime = lam / (16.0 * one * (lam + eta.sup_deriv**2) + 2.0)
    ratio = shifted_ratio_infimum(s0)
    c = c_prime * ratio
    delta_star = lam / (lam + eta.sup_deriv**2 + 1.0 / (8.0 * one))
    return HardyCertificate(
        interval=(lo, hi),
        s0=s0,
        b=b,
        lambda_I=lam,
        lambda_band=band,
        eta=eta,
        c_prime=c_prime,
        c=c,
        delta_star=delta_star,
        inf_ratio=ratio,
        beta=beta,
        d=float(d),
        profile_desc=profile.describe(),
    )


@dataclass(eq=False)
class HardyVerification:
    certificate: HardyCertificate
    c_used: float
    tol: float
    trials: int
    min_margin_random: float
    passed_random: bool
    spectral_min: float
    passed_spectral: bool
    delta: float | None
    spectral_min_delta: float | None
    passed_delta: bool | None
    passed: bool
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {
            "kind": "hardy-verification",
            "certificate": self.certificate.to_dict(),
            "c_used": self.c_used,
            "tol": self.tol,
            "trials": self.trials,
            "min_margin_random": self.min_margin_random,
            "passed_random": self.passed_random,
            "spectral_min": self.spectral_min,
            "passed_spectral": self.passed_spectral,
            "delta": self.delta,
            "spectral_min_delta": self.spectral_min_delta,
            "passed_delta": self.passed_delta,
            "passed": self.passed,
            "witness": self.witness,
        }


def verify_hardy(
    certificate: HardyCertificate,
    profile: ShearProfile,
    geometry: StripGeometry,
    trials: int = 200,
    tol: float = 1e-7,
    resolution=(240, 40),
    c_scale: float = 1.0,
    delta: float | None = None,
    seed: int = 11,
    eig_tol: float = 1e-9,
) -> HardyVerification:
    """Two independent checks of the Hardy lower bound with constant
    c_used = c_scale * certificate.c.

    (a) random smooth test functions: the form gap minus the weighted
        norm must stay above -tol; a violation serializes the witness;
    (b) spectral: the smallest eigenvalue of the assembled pencil
        A - threshold*M - c_used*W must stay above -tol, with
        W the 1/(1+s^2)-weighted mass matrix.

    With delta set, the interpolated variant is also checked: the
    potential delta * beta*eps*[E1 + (chi1'/chi1)^2] is added and the
    Hardy weight scaled by (1-delta)."""
    if certificate.c < 0:
        raise ValueError("certificate constant must be nonnegative")
    c_used = c_scale * certificate.c
    d = geometry.d
    beta = profile.beta
    e1b = threshold_energy(beta, d)
    rng = np.random.default_rng(seed)
    ev = FormEvaluator(profile, d)
    weight = lambda s: 1.0 / (1.0 + s**2)

    min_margin = math.inf
    witness = None
    for k in range(trials):
        fld = random_smooth_field(rng, d, span=0.7 * geometry.L)
        margin = ev.gap(fld) - c_used * ev.weighted_norm2(fld, weight, extra_breaks=[0.0])
        if margin < min_margin:
            min_margin = margin
            if margin < -tol:
                witness = {
                    "trial": k,
                    "margin": margin,
                    "field": fld.label,
                    "s_breakpoints": fld.s_breakpoints,
                }
    passed_random = min_margin >= -tol

    n_s, n_t = int(resolution[0]), int(resolution[1])
    mesh = build_mesh(geometry, n_s, n_t, "dirichlet")
    op = assemble_h(mesh, profile)
    W = assemble_potential(mesh, lambda s, t: 1.0 / (1.0 + s**2))
    shifted = op.A - e1b * op.M - c_used * W
    pencil = AssembledOperator(
        A=shifted.tocsr(), M=op.M, dof_map=op.dof_map, label="hardy-shifted", mesh=mesh
    )
    sigma = -2e-4 * e1b
    res = smallest_eigs(pencil, EigOptions(k=1, tol=eig_tol, shift=sigma, max_iter=400))
    spectral_min = float(res.values[0])
    passed_spectral = spectral_min >= -tol

    spectral_min_delta = None
    passed_delta = None
    if delta is not None:
        if not 0.0 <= delta <= 1.0:
            raise ValueError("interpolation weight delta must lie in [0, 1]")
        e1 = mode_energy(d)

        def pot(s, t):
            th = np.pi * np.asarray(t) / d
            log_deriv_sq = (np.pi / d) ** 2 * (np.cos(th) / np.sin(th)) ** 2
            return beta * np.asarray(profile.eps(s)) * (e1 + log_deriv_sq)

        V = assemble_potential(mesh, pot)
        shifted2 = op.A - e1b * op.M - delta * V - (1.0 - delta) * c_used * W
        pencil2 = AssembledOperator(
            A=shifted2.tocsr(),
            M=op.M,
            dof_map=op.dof_map,
            label="hardy-shifted-delta",
            mesh=mesh,
        )
        res2 = smallest_eigs(
            pencil2, EigOptions(k=1, tol=eig_tol, shift=sigma, max_iter=400)
        )
        spectral_min_delta = float(res2.values[0])
        passed_delta = spectral_min_delta >= -tol

    passed = passed_random and passed_spectral and (passed_delta is not False)
    return HardyVerification(
        certificate=certificate,
        c_used=c_used,
        tol=tol,
        trials=trials,
        min_margin_random=float(min_margin),
        passed_random=passed_random,
        spectral_min=spectral_min,
        passed_spectral=passed_spectral,
        delta=delta,
        spectral_min_delta=spectral_min_delta,
        passed_delta=passed_delta,
        passed=passed,
        witness=witness,
    )


# ----------------------------------------------------------------------
# identity checks
# ----------------------------------------------------------------------


def ground_state_identity(
    profile: ShearProfile,
    d: float,
    psi: TestField,
    s_order: int = 20,
    t_order: int = 28,
) -> float:
    """|gap - sum of decomposition terms| for psi = chi1 * field: the
    spectral gap of the form must equal the longitudinal square plus the
    transverse-excess square plus the shear potential, identically."""
    ev = FormEvaluator(profile, d, s_order=s_order, t_order=t_order)
    lhs = ev.gap(psi)
    t1, t2, t3 = ev.decomposition_terms(psi)
    return abs(lhs - (t1 + t2 + t3))


def one_d_hardy_check(
    profile: ShearProfile,
    d: float,
    s0: float,
    psi: TestField,
    hole: float = 0.25,
    s_order: int = 20,
    t_order: int = 28,
) -> float:
    """Margin of the longitudinal Hardy bound for fields vanishing near
    s0: first two decomposition terms minus
    (1/(4(1+beta^2))) int |psi|^2/(s-s0)^2.  Raises if the field fails to
    vanish on the protective hole around s0."""
    s0 = float(s0)
    probe_s = np.linspace(s0 - hole, s0 + hole, 101)[:, None]
    probe_t = np.linspace(0.05 * d, 0.95 * d, 9)[None, :]
    local = np.max(np.abs(psi.value(probe_s, probe_t)))
    lo, hi = psi.s_breakpoints[0], psi.s_breakpoints[-1]
    wide_s = np.linspace(lo, hi, 401)[:, None]
    scale = np.max(np.abs(psi.value(wide_s, probe_t)))
    if local > 1e-12 * max(scale, 1.0):
        raise ValueError(
            f"test function does not vanish near the singular point s0={s0:g}"
        )
    ev = FormEvaluator(profile, d, s_order=s_order, t_order=t_order)
    t1, t2, _ = ev.decomposition_terms(psi)
    beta = profile.beta
    rhs = ev.weighted_norm2(
        psi,
        lambda s: 1.0 / (s - s0) ** 2,
        extra_breaks=[s0 - hole, s0 + hole],
    ) / (4.0 * (1.0 + beta * beta))
    return t1 + t2 - rhs


# ----------------------------------------------------------------------
# strong-shearing bracketing
# ----------------------------------------------------------------------


@dataclass(eq=False)
class BracketingReport:
    alpha: float
    beta: float
    d: float
    c1: float
    c2: float
    exterior_threshold: float
    interior_lower_bound: float
    interior_lower_bound_conservative: float
    verge_lambda1_lower: float
    verge_lambda1_upper: float
    verge_lambda1: float
    triangle_lambda1: float
    triangle_candidate_mixed_rect: float
    triangle_candidate_strong: float
    combined_min: float
    schema: object = field(default=None, repr=False)
    alpha0_estimate: float | None = None
    operators: list = field(default_factory=list, repr=False)
    resolution: tuple = (0, 0)

    def to_dict(self) -> dict:
        return {
            "kind": "bracketing",
            "alpha": self.alpha,
            "beta": self.beta,
            "d": self.d,
            "c1": self.c1,
            "c2": self.c2,
            "exterior_threshold": self.exterior_threshold,
            "interior_lower_bound": self.interior_lower_bound,
            "interior_lower_bound_conservative": self.interior_lower_bound_conservative,
            "verge_lambda1_lower": self.verge_lambda1_lower,
            "verge_lambda1_upper": self.verge_lambda1_upper,
            "verge_lambda1": self.verge_lambda1,
            "triangle_lambda1": self.triangle_lambda1,
            "triangle_candidate_mixed_rect": self.triangle_candidate_mixed_rect,
            "triangle_candidate_strong": self.triangle_candidate_strong,
            "combined_min": self.combined_min,
            "alpha0_estimate": self.alpha0_estimate,
            "resolution": list(self.resolution),
            "schema": self.schema.describe() if self.schema is not None else None,
        }


def _deficit_bounds(deficit: Deficit, samples: int = 2001):
    lo, hi = deficit.support
    grid = np.linspace(lo, hi, samples)
    vals = np.asarray(deficit(grid), dtype=float)
    c1 = float(vals.min())
    c2 = float(vals.max())
    return c1, c2


def interior_width_bound(alpha: float, beta: float, d: float, c: float) -> float:
    """Lower bound on the Dirichlet threshold of the interior subdomain
    from the uniform width estimate: a strip of vertical extent at most
    d/(c|alpha| - beta) has threshold at least pi^2 (c|alpha|-beta)^2/d^2.
    Returns 0 (the trivial bound) when c|alpha| <= beta."""
    slope = c * abs(alpha) - beta
    if slope <= 0:
        return 0.0
    return math.pi**2 * slope**2 / d**2


def bracket_thresholds(
    alpha: float,
    beta: float,
    d: float,
    eps_spec,
    resolution=(32, 32),
    eig_tol: float = 1e-9,
) -> BracketingReport:
    """Neumann-bracketing lower-bound report for the strongly sheared bend.

    eps_spec is the unit deficit (supported in [0, 1]) or a pair
    (deficit, (c1, c2)) pinning its bounds.  The exterior threshold is
    analytic (half-strip congruence); the interior bound comes from the
    width estimate at both the upper and the lower deficit bound (the
    report carries both; the c2 variant is the headline number); the two
    verge quadrilaterals and the limiting triangle are solved by FEM with
    Neumann tags on the artificial cuts.  combined_min is the minimum of
    exterior, interior, and verge thresholds."""
    if isinstance(eps_spec, tuple):
        deficit, (c1, c2) = eps_spec
        c1, c2 = float(c1), float(c2)
    else:
        deficit = eps_spec
        c1, c2 = _deficit_bounds(deficit)
    if not 0.0 < c1 <= c2:
        raise ValueError(
            "deficit must be bounded away from zero on its support "
            f"(sampled bounds: c1={c1:g}, c2={c2:g})"
        )
    schema = schema_points(alpha, beta, deficit, d)
    profile = ShearProfile.schema(alpha, beta, deficit, (c1, c2))
    zero = ShearProfile.constant(0.0)
    n_s, n_t = int(resolution[0]), int(resolution[1])

    exterior = threshold_energy(beta, d)
    interior = interior_width_bound(alpha, beta, d, c2)
    interior_cons = interior_width_bound(alpha, beta, d, c1)

    operators = []
    verge_vals = {}
    for comp in ("lower", "upper"):
        mesh = build_mesh(VergeDomain(schema, profile, comp), n_s, n_t)
        op = assemble_h(mesh, zero)
        res = smallest_eigs(op, EigOptions(k=1, tol=eig_tol, shift=0.0))
        verge_vals[comp] = float(res.values[0])
        operators.append(op)

    tri = TriangleDomain(vertices=(schema.O, schema.A, schema.C), neumann_sides=(0,))
    tri_mesh = build_mesh(tri, n_s, n_s)
    tri_op = assemble_h(tri_mesh, zero)
    tri_res = smallest_eigs(tri_op, EigOptions(k=1, tol=eig_tol, shift=0.0))
    triangle_lambda1 = float(tri_res.values[0])
    operators.append(tri_op)

    e1b = threshold_energy(beta, d)
    cand_mixed = (1.0 + 1.0 / (4.0 * beta * beta)) * e1b
    cand_strong = (1.0 + 1.0 / (beta * beta)) * e1b

    verge_min = min(verge_vals.values())
    combined = min(exterior, interior, verge_min)
    return BracketingReport(
        alpha=float(alpha),
        beta=float(beta),
        d=float(d),
        c1=c1,
        c2=c2,
        exterior_threshold=exterior,
        interior_lower_bound=interior,
        interior_lower_bound_conservative=interior_cons,
        verge_lambda1_lower=verge_vals["lower"],
        verge_lambda1_upper=verge_vals["upper"],
        verge_lambda1=verge_min,
        triangle_lambda1=triangle_lambda1,
        triangle_candidate_mixed_rect=cand_mixed,
        triangle_candidate_strong=cand_strong,
        combined_min=combined,
        schema=schema,
        operators=operators,
        resolution=(n_s, n_t),
    )


def _alpha_record(args) -> dict:
    alpha, beta, d, deficit, bounds, resolution = args
    e1b = threshold_energy(beta, d)
    if alpha * beta >= 0.0:
        # repulsive orientation: stable without any largeness condition
        return {
            "alpha": alpha,
            "route": "repulsive",
            "qualifies": True,
            "combined_min": e1b,
        }
    try:
        rep = bracket_thresholds(
            alpha, beta, d, (deficit, bounds), resolution=resolution
        )
    except ValueError as exc:
        return {
            "alpha": alpha,
            "route": "undefined",
            "qualifies": False,
            "combined_min": None,
            "reason": str(exc),
        }
    return {
        "alpha": alpha,
        "route": "bracketing",
        "qualifies": bool(rep.combined_min >= e1b - 1e-9),
        "combined_min": rep.combined_min,
        "exterior_threshold": rep.exterior_threshold,
        "interior_lower_bound": rep.interior_lower_bound,
        "verge_lambda1": rep.verge_lambda1,
    }


def alpha0_scan(
    beta: float,
    d: float,
    eps_spec,
    alpha_grid,
    resolution=(32, 32),
    jobs: int = 1,
) -> list[dict]:
    """Bracketing qualification record for every multiplier on the grid.

    Grid points are independent; with jobs > 1 they run in a process pool
    and are merged back in grid order."""
    if isinstance(eps_spec, tuple):
        deficit, bounds = eps_spec
        bounds = (float(bounds[0]), float(bounds[1]))
    else:
        deficit = eps_spec
        bounds = _deficit_bounds(deficit)
    tasks = [
        (float(alpha), float(beta), float(d), deficit, bounds, tuple(resolution))
        for alpha in alpha_grid
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_alpha_record, tasks))
    return [_alpha_record(t) for t in tasks]


def find_alpha0(
    beta: float,
    d: float,
    eps_spec,
    alpha_grid,
    resolution=(32, 32),
    spectrum_check=None,
    jobs: int = 1,
) -> float:
    """Smallest |alpha| on the grid whose bracketing lower bound clears
    the essential threshold; +inf when no grid point qualifies.

    spectrum_check, when given as (L, n_s, n_t), cross-validates the
    winner: the truncated spectrum at that multiplier must report no
    eigenvalue below the threshold.  A failed cross-validation raises,
    because it would mean the lower bound exceeded an upper bound."""
    records = alpha0_scan(beta, d, eps_spec, alpha_grid, resolution=resolution, jobs=jobs)
    winners = [r for r in records if r["qualifies"]]
    if not winners:
        return math.inf
    best = min(winners, key=lambda r: abs(r["alpha"]))
    alpha0 = abs(best["alpha"])

    if spectrum_check is not None:
        deficit = eps_spec[0] if isinstance(eps_spec, tuple) else eps_spec
        bounds = (
            eps_spec[1] if isinstance(eps_spec, tuple) else _deficit_bounds(deficit)
        )
        L, n_s, n_t = spectrum_check
        profile = ShearProfile.schema(best["alpha"], beta, deficit, bounds)
        rep = truncated_spectrum(
            profile, StripGeometry(d=d, L=float(L)), n_s=int(n_s), n_t=int(n_t)
        )
        if rep.count_below_threshold != 0:
            raise RuntimeError(
                "bracketing unsound: lower bound clears the threshold at "
                f"alpha={best['alpha']:g} but the truncated spectrum finds "
                f"{rep.count_below_threshold} state(s) below it"
            )
    return alpha0
