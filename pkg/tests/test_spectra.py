import json
import math

import numpy as np
import pytest

from shearspec.eigensolve import EigOptions
from shearspec.geometry import PlateauDeficit, ShearProfile, StripGeometry
from shearspec.spectra import (
    EMPTY,
    band_energy,
    convergence_study,
    dispersion_curve,
    essential_threshold,
    truncated_spectrum,
)

PI = math.pi


def test_essential_threshold_examples():
    assert essential_threshold(0.0, PI) == pytest.approx(1.0)
    assert essential_threshold(2.0, 1.0) == pytest.approx(5.0 * PI**2)
    assert essential_threshold(math.inf, 1.0) == EMPTY
    with pytest.raises(ValueError):
        essential_threshold(1.0, 0.0)


def test_bands_are_even_in_wavenumber_and_floor_at_threshold():
    xi = np.linspace(-3.0, 3.0, 13)
    for n in (1, 2, 3):
        assert np.allclose(band_energy(1.0, PI, n, xi), band_energy(1.0, PI, n, -xi))
    assert band_energy(1.0, PI, 1, 0.0) == pytest.approx(essential_threshold(1.0, PI))


def test_dispersion_curve_tracks_analytic_bands():
    xi = np.linspace(-2.0, 2.0, 9)
    curve = dispersion_curve(1.0, PI, xi, m_bands=2, n_t=120)
    assert curve.max_rel_error < 1e-3
    # consistent-mass P1 approximates each band from above
    assert np.all(curve.numeric >= curve.analytic)
    assert curve.band1_argmin_xi == pytest.approx(0.0)
    assert curve.threshold == pytest.approx(2.0)
    rows = list(curve.rows())
    assert len(rows) == 9 * 2
    assert rows[0][:2] == (-2.0, 1)  # xi-major ordering
    assert rows[1][:2] == (-2.0, 2)


def test_dispersion_parallel_matches_serial():
    xi = np.linspace(0.0, 1.0, 5)
    serial = dispersion_curve(0.5, PI, xi, m_bands=2, n_t=60, jobs=1)
    parallel = dispersion_curve(0.5, PI, xi, m_bands=2, n_t=60, jobs=2)
    assert np.array_equal(serial.numeric, parallel.numeric)


def test_dispersion_rejects_unbounded_slope():
    with pytest.raises(ValueError, match="finite limiting slope"):
        dispersion_curve(math.inf, PI, [0.0])


def _trapping_profile():
    return ShearProfile.bump(1.0, PlateauDeficit(-0.9, (-2.0, 2.0), shoulder=0.1))


def test_truncated_spectrum_finds_bound_state():
    rep = truncated_spectrum(
        _trapping_profile(),
        StripGeometry(d=PI, L=8.0),
        n_s=120,
        n_t=24,
        opts=EigOptions(k=3, tol=1e-8),
    )
    assert rep.count_below_threshold >= 1
    assert rep.lambda1 < rep.essential_threshold - rep.margin
    assert np.all(np.diff(rep.eigresult.values) >= 0)


def test_truncation_is_monotone_in_domain_length():
    # Dirichlet truncations shrink toward the unbounded problem as L grows
    vals = []
    for L, n_s in ((5.0, 80), (10.0, 160), (20.0, 320)):
        rep = truncated_spectrum(
            _trapping_profile(),
            StripGeometry(d=PI, L=L),
            n_s=n_s,
            n_t=16,
            opts=EigOptions(k=1, tol=1e-9),
        )
        vals.append(rep.lambda1)
    assert vals[0] > vals[1] > vals[2]


def test_straight_strip_has_no_bound_state():
    rep = truncated_spectrum(
        ShearProfile.constant(1.0),
        StripGeometry(d=PI, L=6.0),
        n_s=60,
        n_t=16,
        opts=EigOptions(k=2, tol=1e-8),
    )
    assert rep.count_below_threshold == 0


def test_convergence_study_extrapolates_and_serializes():
    study = convergence_study(
        _trapping_profile(),
        PI,
        ladder=[(6.0, 60, 12), (6.0, 120, 24)],
    )
    assert study.monotone_nonincreasing
    # limit = (4*fine - coarse)/3 for a second-order method
    assert study.extrapolated == pytest.approx(
        (4.0 * study.values[1] - study.values[0]) / 3.0
    )
    payload = study.to_dict()
    assert json.loads(json.dumps(payload)) == payload
    assert payload["kind"] == "convergence"


def test_convergence_study_rejects_empty_ladder():
    with pytest.raises(ValueError, match="empty refinement ladder"):
        convergence_study(_trapping_profile(), PI, ladder=[])


def test_spectrum_report_round_trips_to_json():
    rep = truncated_spectrum(
        _trapping_profile(),
        StripGeometry(d=PI, L=5.0),
        n_s=40,
        n_t=10,
        opts=EigOptions(k=2, tol=1e-8),
    )
    payload = rep.to_dict()
    assert json.loads(json.dumps(payload)) == payload
    assert payload["kind"] == "spectrum"
    assert len(payload["eigenvalues"]) == 2
    assert payload["count_below_threshold"] == rep.count_below_threshold
