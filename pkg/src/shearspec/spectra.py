"""High-level spectral quantities for sheared strips.

Ties the meshing/assembly layer to the eigensolver: the essential-spectrum
threshold and analytic dispersion bands of the constant-shear strip, the
numerically computed bands of the one-dimensional fiber operators, the
discrete spectrum of truncated strips, and refinement ladders with a
simple second-order extrapolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .discretization import assemble_h, assemble_tbeta_1d, build_mesh
from .eigensolve import EigOptions, EigResult, smallest_eigs
from .geometry import ShearProfile, StripGeometry
from .modes import mode_energy, threshold_energy

__all__ = [
    "EMPTY",
    "DispersionCurve",
    "SpectrumReport",
    "ConvergenceStudy",
    "essential_threshold",
    "band_energy",
    "dispersion_curve",
    "truncated_spectrum",
    "convergence_study",
]

# marker returned when no propagating states exist at all
EMPTY = "empty"


def essential_threshold(beta: float, d: float):
    """Bottom of the essential spectrum: (1+beta^2)(pi/d)^2 for finite
    beta, or the marker 'empty' when the limiting slope is infinite and
    the essential spectrum is void."""
    if d <= 0:
        raise ValueError("strip width d must be positive")
    if math.isinf(beta):
        return EMPTY
    return threshold_energy(beta, d)


def band_energy(beta: float, d: float, n: int, xi) -> np.ndarray:
    """Analytic dispersion band n: (1+beta^2) n^2 (pi/d)^2 + xi^2/(1+beta^2)."""
    xi = np.asarray(xi, dtype=float)
    return (1.0 + beta**2) * mode_energy(d, n) + xi**2 / (1.0 + beta**2)


@dataclass(eq=False)
class DispersionCurve:
    beta: float
    d: float
    xi_grid: np.ndarray
    m_bands: int
    n_t: int
    analytic: np.ndarray  # (n_xi, m_bands)
    numeric: np.ndarray  # (n_xi, m_bands)
    max_rel_error: float
    band1_min: float
    band1_argmin_xi: float
    threshold: float
    operators: list = field(default_factory=list, repr=False)

    def rows(self):
        """CSV rows (xi, band_index, analytic, numeric), xi-major."""
        for i, xi in enumerate(self.xi_grid):
            for n in range(self.m_bands):
                yield (
                    float(xi),
                    n + 1,
                    float(self.analytic[i, n]),
                    float(self.numeric[i, n]),
                )

    def to_dict(self) -> dict:
        return {
            "kind": "dispersion",
            "beta": self.beta,
            "d": self.d,
            "n_t": self.n_t,
            "m_bands": self.m_bands,
            "xi_grid": [float(x) for x in self.xi_grid],
            "analytic": [[float(v) for v in row] for row in self.analytic],
            "numeric": [[float(v) for v in row] for row in self.numeric],
            "max_rel_error": float(self.max_rel_error),
            "band1_min": float(self.band1_min),
            "band1_argmin_xi": float(self.band1_argmin_xi),
            "threshold": float(self.threshold),
        }


def _dispersion_point(args):
    d, beta, xi, n_t, m_bands, tol, seed = args
    op = assemble_tbeta_1d(d, beta, xi, n_t)
    res = smallest_eigs(op, EigOptions(k=m_bands, tol=tol, shift=0.0, seed=seed))
    return [float(v) for v in res.values]


def dispersion_curve(
    beta: float,
    d: float,
    xi_grid,
    m_bands: int = 3,
    n_t: int = 400,
    tol: float = 1e-8,
    seed: int = 7,
    jobs: int = 1,
) -> DispersionCurve:
    """Numeric fiber bands against the closed-form dispersion relation.

    Grid points are independent; with jobs > 1 they are solved in a
    process pool and merged back in grid order.  The zero shift is safely
    below the positive-definite fiber spectrum.
    """
    if math.isinf(beta):
        raise ValueError("dispersion bands require a finite limiting slope")
    xi_grid = np.asarray(list(xi_grid), dtype=float)
    analytic = np.column_stack(
        [band_energy(beta, d, n, xi_grid) for n in range(1, m_bands + 1)]
    )

    tasks = [(d, beta, float(xi), n_t, m_bands, tol, seed) for xi in xi_grid]
    operators = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            numeric_rows = list(pool.map(_dispersion_point, tasks))
    else:
        numeric_rows = []
        for task in tasks:
            numeric_rows.append(_dispersion_point(task))
            operators.append(assemble_tbeta_1d(d, beta, task[2], n_t))
    numeric = np.asarray(numeric_rows)

    rel = np.abs(numeric - analytic) / np.abs(analytic)
    i_min = int(np.argmin(numeric[:, 0]))
    return DispersionCurve(
        beta=beta,
        d=d,
        xi_grid=xi_grid,
        m_bands=m_bands,
        n_t=n_t,
        analytic=analytic,
        numeric=numeric,
        max_rel_error=float(rel.max()),
        band1_min=float(numeric[i_min, 0]),
        band1_argmin_xi=float(xi_grid[i_min]),
        threshold=threshold_energy(beta, d),
        operators=operators,
    )


@dataclass(eq=False)
class SpectrumReport:
    profile: ShearProfile
    geometry: StripGeometry
    n_s: int
    n_t: int
    end_bc: str
    eigresult: EigResult
    essential_threshold: object  # float or the marker 'empty'
    margin: float
    count_below_threshold: int
    ladder: list = field(default_factory=list)
    operator: object = field(default=None, repr=False)

    @property
    def lambda1(self) -> float:
        return float(self.eigresult.values[0])

    def to_dict(self) -> dict:
        thr = self.essential_threshold
        return {
            "kind": "spectrum",
            "profile": self.profile.describe(),
            "geometry": {"d": self.geometry.d, "L": self.geometry.L},
            "mesh": {"n_s": self.n_s, "n_t": self.n_t, "end_bc": self.end_bc},
            "essential_threshold": thr if isinstance(thr, str) else float(thr),
            "margin": float(self.margin),
            "eigenvalues": [float(v) for v in self.eigresult.values],
            "residuals": [float(r) for r in self.eigresult.residuals],
            "count_below_threshold": int(self.count_below_threshold),
            "ladder": self.ladder,
        }


def _auto_shift(profile: ShearProfile, d: float) -> float:
    """Shift-invert target just below the spectral floor.

    The eigenvalues sought sit at or just below the essential threshold
    (truncation modes pile up right above it, bound states live below),
    so 0.99x the threshold makes the wanted end of the inverted spectrum
    strongly dominant while staying clear of actual eigenvalues; a lone
    bound state below the shift is the isolated extreme of the inverted
    pencil and converges first.  With no threshold (unbounded slope) the
    transverse ground level of the narrowest cross-section plays the
    role of the floor."""
    if math.isinf(profile.beta):
        return 0.99 * mode_energy(d)
    return 0.99 * threshold_energy(profile.beta, d)


def truncated_spectrum(
    profile: ShearProfile,
    geometry: StripGeometry,
    n_s: int,
    n_t: int,
    end_bc: str = "dirichlet",
    opts: EigOptions | None = None,
) -> SpectrumReport:
    """Discrete spectrum of the truncated strip.

    With Dirichlet ends every reported eigenvalue is an upper bound for
    the corresponding min-max value of the unbounded problem.  Eigenvalues
    are counted as genuinely below the essential threshold only when they
    clear the reported margin, which separates bound states from
    truncation artifacts piling up at the threshold.  A zero shift in
    opts is replaced by an automatic one just below the spectral floor.
    """
    opts = opts or EigOptions(k=6)
    if opts.shift == 0.0:
        opts = EigOptions(
            k=opts.k,
            tol=opts.tol,
            shift=_auto_shift(profile, geometry.d),
            max_iter=opts.max_iter,
            seed=opts.seed,
        )
    mesh = build_mesh(geometry, n_s, n_t, end_bc)
    op = assemble_h(mesh, profile)
    res = smallest_eigs(op, opts)

    thr = essential_threshold(profile.beta, geometry.d)
    if thr == EMPTY:
        margin = 10.0 * opts.tol
        count = len(res.values)
    else:
        margin = max(10.0 * opts.tol, thr * 1e-6)
        count = int(np.sum(res.values < thr - margin))
    return SpectrumReport(
        profile=profile,
        geometry=geometry,
        n_s=n_s,
        n_t=n_t,
        end_bc=end_bc,
        eigresult=res,
        essential_threshold=thr,
        margin=margin,
        count_below_threshold=count,
        operator=op,
    )


@dataclass(eq=False)
class ConvergenceStudy:
    profile: ShearProfile
    d: float
    end_bc: str
    ladder: list  # [(L, n_s, n_t)]
    values: list  # lambda1 per rung
    extrapolated: float
    monotone_nonincreasing: bool
    reports: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "kind": "convergence",
            "profile": self.profile.describe(),
            "d": self.d,
            "end_bc": self.end_bc,
            "ladder": [list(r) for r in self.ladder],
            "lambda1": [float(v) for v in self.values],
            "extrapolated": float(self.extrapolated),
            "monotone_nonincreasing": self.monotone_nonincreasing,
        }


def convergence_study(
    profile: ShearProfile,
    d: float,
    ladder,
    end_bc: str = "dirichlet",
    opts: EigOptions | None = None,
) -> ConvergenceStudy:
    """lambda1 along a refinement ladder of (L, n_s, n_t) rungs.

    The extrapolated limit assumes the controlling resolution parameter
    doubles from the second-to-last to the last rung with second-order
    error, i.e. limit = (4*last - previous)/3; with a single rung the
    value itself is reported.
    """
    ladder = [tuple(r) for r in ladder]
    if not ladder:
        raise ValueError("empty refinement ladder")
    base = opts or EigOptions(k=1, tol=1e-10)
    values = []
    reports = []
    for L, n_s, n_t in ladder:
        rep = truncated_spectrum(
            profile,
            StripGeometry(d=d, L=float(L)),
            n_s=int(n_s),
            n_t=int(n_t),
            end_bc=end_bc,
            opts=EigOptions(
                k=1, tol=base.tol, shift=base.shift, max_iter=base.max_iter, seed=base.seed
            ),
        )
        values.append(rep.lambda1)
        reports.append(rep)
    if len(values) >= 2:
        extrapolated = (4.0 * values[-1] - values[-2]) / 3.0
    else:
        extrapolated = values[0]
    mono = all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    return ConvergenceStudy(
        profile=profile,
        d=d,
        end_bc=end_bc,
        ladder=ladder,
        values=values,
        extrapolated=extrapolated,
        monotone_nonincreasing=mono,
        reports=reports,
    )
