import math

import numpy as np
import pytest

from shearspec.geometry import (
    CosineDeficit,
    GaussianDeficit,
    IndicatorDeficit,
    ObstructionDeficit,
    PlateauDeficit,
    ShearProfile,
    StripGeometry,
    SumDeficit,
    TabulatedDeficit,
    ball_intersection_area,
    calibrated_two_level,
    excess_integral,
    schema_points,
    two_level_deficit,
)
from shearspec.modes import mode_energy

PI = math.pi


# ----------------------------------------------------------------------
# deficits
# ----------------------------------------------------------------------

SMOOTH_SHAPES = [
    PlateauDeficit(-0.5, (0.0, 1.0), shoulder=0.05),
    CosineDeficit(0.7, (-1.0, 2.0)),
    GaussianDeficit(1.2, (0.0, 3.0)),
    ObstructionDeficit(1.0, PI, -0.7, (-2.0, 2.0), ramp_fraction=0.1),
]


@pytest.mark.parametrize("deficit", SMOOTH_SHAPES)
def test_deficit_compact_support(deficit):
    lo, hi = deficit.support
    outside = np.array([lo - 1.0, lo - 1e-9, hi + 1e-9, hi + 1.0])
    assert np.all(deficit(outside) == 0.0)
    assert np.all(deficit.derivative(outside) == 0.0)


@pytest.mark.parametrize("deficit", SMOOTH_SHAPES)
def test_deficit_derivative_matches_finite_difference(deficit):
    lo, hi = deficit.support
    # 173 interior points: no kink of any of the shapes lands on the grid
    s = np.linspace(lo, hi, 173)[1:-1]
    h = 1e-6
    fd = (deficit(s + h) - deficit(s - h)) / (2 * h)
    assert np.max(np.abs(fd - deficit.derivative(s))) < 1e-6


def test_plateau_integrals_closed_form():
    # raised-cosine shoulders: each ramp has int r = w/2, int r^2 = 3w/8
    a, w = -0.5, 0.05
    deficit = PlateauDeficit(a, (0.0, 1.0), shoulder=w)
    grid_int = np.trapezoid(deficit(np.linspace(0, 1, 200001)), dx=1 / 200000)
    assert grid_int == pytest.approx(a * (1 - 2 * w + 2 * (w / 2)), abs=1e-8)
    excess = excess_integral(deficit, 1.0)
    sq = a * a * (1 - 2 * w + 2 * w * 3 / 8)
    lin = a * (1 - w)
    assert excess == pytest.approx(sq + 2 * lin, rel=1e-12)


def test_indicator_and_tabulated():
    ind = IndicatorDeficit(2.0, (0.0, 1.0))
    assert ind(np.array([0.5]))[0] == 2.0
    assert ind.derivative(np.array([0.5]))[0] == 0.0
    tab = TabulatedDeficit(np.linspace(0, 1, 11), np.linspace(0, 1, 11) ** 2)
    assert tab(np.array([0.55]))[0] == pytest.approx(0.3025, abs=5e-3)


def test_sum_deficit():
    s = SumDeficit(
        [IndicatorDeficit(1.0, (0.0, 1.0)), IndicatorDeficit(2.0, (2.0, 3.0))]
    )
    vals = s(np.array([0.5, 1.5, 2.5]))
    assert list(vals) == [1.0, 0.0, 2.0]
    assert s.support == (0.0, 3.0)


def test_obstruction_constant_branch():
    # c = 0 makes the core identically -2*beta on the window
    obs = ObstructionDeficit(1.5, 2.0, 0.0, (-1.0, 1.0))
    inside = obs(np.array([-0.5, 0.0, 0.5]))
    assert np.allclose(inside, -3.0)


def test_obstruction_annihilates_functional_on_core():
    # -eps' + E1*d*(eps^2 + 2 beta eps) = 0 pointwise where unmollified
    beta, d = 1.0, PI
    e1d = mode_energy(d) * d
    obs = ObstructionDeficit(beta, d, -0.7, (-2.0, 2.0), ramp_fraction=0.1)
    core = np.linspace(-1.55, 1.55, 301)
    e = obs(core)
    ep = obs.derivative(core)
    resid = -ep + e1d * (e**2 + 2 * beta * e)
    assert np.max(np.abs(resid)) < 1e-10


def test_obstruction_rejects_singular_window():
    # positive c < 1 puts the family's pole inside the window
    with pytest.raises(ValueError, match="singularity"):
        ObstructionDeficit(1.0, PI, 0.7, (-2.0, 2.0))


# ----------------------------------------------------------------------
# profiles
# ----------------------------------------------------------------------


def test_profile_eps_and_slope():
    prof = ShearProfile.bump(2.0, IndicatorDeficit(-0.5, (0.0, 1.0)))
    s = np.array([-1.0, 0.5, 2.0])
    assert np.allclose(prof.eps(s), [0.0, -0.5, 0.0])
    assert np.allclose(prof.eval_fprime(s), [2.0, 1.5, 2.0])


def test_profile_antiderivative():
    prof = ShearProfile.bump(1.0, PlateauDeficit(-0.5, (0.0, 1.0), shoulder=0.05))
    s = np.linspace(-1.0, 2.0, 13)
    f = prof.eval_f(s)
    # compare against dense trapezoid integration of the slope
    for si, fi in zip(s, f):
        grid = np.linspace(0.0, si, 20001) if si != 0 else np.array([0.0])
        ref = np.trapezoid(prof.eval_fprime(grid), grid) if si != 0 else 0.0
        assert fi == pytest.approx(ref, abs=1e-8)


def test_linear_unbounded_profile():
    prof = ShearProfile.linear_unbounded()
    assert math.isinf(prof.beta)
    s = np.array([-2.0, 0.0, 3.0])
    assert np.allclose(prof.eval_fprime(s), s)
    assert np.allclose(prof.eval_f(s), s**2 / 2)


def test_schema_profile_validation():
    dfc = IndicatorDeficit(1.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        ShearProfile.schema(-5.0, 1.0, dfc, (0.0, 1.0))  # c1 must be > 0
    prof = ShearProfile.schema(-5.0, 1.0, dfc, (1.0, 1.0))
    assert prof.schema_multiplier == -5.0
    assert prof.eps(np.array([0.5]))[0] == -5.0


# ----------------------------------------------------------------------
# schema points
# ----------------------------------------------------------------------


def test_schema_points_closed_forms():
    alpha, beta, d = -5.0, 1.0, 1.0
    g = schema_points(alpha, beta, IndicatorDeficit(1.0, (0.0, 1.0)), d)
    den = 1 + beta**2
    assert g.O == (0.0, 0.0)
    assert g.C == (0.0, d)
    assert g.A == pytest.approx((-beta * d / den, d / den))
    f1 = beta + alpha  # f(1) for the unit indicator
    assert g.A_prime == pytest.approx((1 + beta * d / den, f1 + beta**2 * d / den))
    assert g.C_prime == pytest.approx((1.0, f1))
    # B sits where the upper boundary crosses y=0
    assert g.B[1] == 0.0
    assert 0.0 < g.x0 < 1.0
    # f(x0) + d = 0 for the piecewise-linear profile f = (beta+alpha) x
    assert g.x0 == pytest.approx(-d / (beta + alpha), rel=1e-10)


def test_schema_points_undefined_when_too_shallow():
    with pytest.raises(ValueError, match="undefined"):
        schema_points(-2.0, 1.0, IndicatorDeficit(1.0, (0.0, 1.0)), 1.0)


# ----------------------------------------------------------------------
# calibration and areas
# ----------------------------------------------------------------------


def test_two_level_deficit_levels():
    d = two_level_deficit(-1.0, 0.5, ((-4.0, 0.0), (0.0, 4.0)), shoulder=0.1)
    assert d(np.array([-2.0]))[0] == pytest.approx(-1.0)
    assert d(np.array([2.0]))[0] == pytest.approx(0.5)


def test_calibrated_two_level_zeroes_excess():
    for beta in (0.5, 1.0, 2.0):
        d = calibrated_two_level(beta, ((-6.0, 0.0), (0.0, 6.0)))
        assert abs(excess_integral(d, beta)) < 1e-11


def test_ball_area_straight_strip():
    # small ball fully inside the straight strip: area = pi r^2
    prof = ShearProfile.constant(0.0)
    est = ball_intersection_area(prof, 4.0, (0.0, 2.0), 0.5, n_samples=400000)
    assert float(est) == pytest.approx(math.pi * 0.25, rel=5e-3)
    assert est.stderr < 5e-3


def test_ball_area_seeded_reproducible():
    prof = ShearProfile.linear_unbounded()
    a = ball_intersection_area(prof, 1.0, (10.0, 50.5), 1.0, n_samples=50000)
    b = ball_intersection_area(prof, 1.0, (10.0, 50.5), 1.0, n_samples=50000)
    assert float(a) == float(b)


def test_strip_geometry_fields():
    g = StripGeometry(d=PI, L=8.0)
    assert g.d == PI and g.L == 8.0
    with pytest.raises(ValueError):
        StripGeometry(d=-1.0, L=8.0)
