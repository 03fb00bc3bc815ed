import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from grainmill.analysis import (
    Profile,
    RoughnessReport,
    feature_spacing,
    linear_density,
    moving_average,
    roughness,
    scale_decomposition,
    waviness_minima,
)
from grainmill.material import _runs
from grainmill.surface import extract_profile


def prof(z, dx=0.1):
    z = np.asarray(z, dtype=float)
    return Profile(np.arange(len(z)) * dx, z)


def test_profile_validation():
    with pytest.raises(ValueError):
        Profile([0, 1, 1.5], [0, 0, 0])
    with pytest.raises(ValueError):
        Profile([0, 2, 1], [0, 0, 0])


def test_constant_profile():
    r = roughness(prof(np.full(100, 0.27)))
    assert r.Ra == r.Rq == r.Rz == 0.0
    w, rough = scale_decomposition(prof(np.full(100, 0.27)), 2.0)
    assert np.allclose(w.z, 0.27)
    assert np.allclose(rough.z, 0.0, atol=1e-15)


def test_square_wave():
    a = 0.05
    z = np.tile(np.r_[np.full(50, a), np.full(50, -a)], 10)
    r = roughness(prof(z))
    assert r.Ra == pytest.approx(a)
    assert r.Rq == pytest.approx(a)
    assert r.Rz == pytest.approx(2 * a)


def test_sine_against_quadrature():
    A = 0.1
    # oracle: period-averaged |A sin| and A^2 sin^2 by numerical quadrature
    ra_ref = quad(lambda t: abs(A * math.sin(t)), 0, 2 * math.pi)[0] / (2 * math.pi)
    rq_ref = math.sqrt(quad(lambda t: (A * math.sin(t)) ** 2, 0, 2 * math.pi)[0] / (2 * math.pi))
    n = 1000
    x = np.arange(5 * n) / n
    r = roughness(Profile(x, A * np.sin(2 * math.pi * x)))
    assert r.Ra == pytest.approx(ra_ref, rel=0.01)
    assert r.Rq == pytest.approx(rq_ref, rel=0.01)
    assert ra_ref == pytest.approx(2 * A / math.pi, rel=1e-9)


def test_too_few_samples():
    with pytest.raises(ValueError):
        roughness(prof(np.zeros(9)))


def test_cutoff_precondition():
    with pytest.raises(ValueError):
        scale_decomposition(prof(np.zeros(50), dx=1.0), 2.0)


def _amplitude(x, z, lam):
    # least-squares amplitude of a sine of known wavelength
    M = np.column_stack([np.sin(2 * np.pi * x / lam), np.cos(2 * np.pi * x / lam), np.ones_like(x)])
    c, *_ = np.linalg.lstsq(M, z, rcond=None)
    return math.hypot(c[0], c[1])


def test_two_scale_separation():
    dx = 0.01
    x = np.arange(0, 400, dx)
    long_, short = 0.2 * np.sin(2 * np.pi * x / 200), 0.02 * np.sin(2 * np.pi * x / 0.5)
    w, r = scale_decomposition(Profile(x, long_ + short), 5.0)
    mid = (x > 10) & (x < 390)
    assert _amplitude(x[mid], w.z[mid], 200) >= 0.9 * 0.2
    assert _amplitude(x[mid], r.z[mid], 0.5) >= 0.9 * 0.02
    assert _amplitude(x[mid], w.z[mid], 0.5) < 0.1 * 0.02


@given(arrays(np.float64, st.integers(12, 300), elements=st.floats(-1, 1)), st.floats(0.21, 3.0))
def test_decomposition_is_additive(z, cutoff):
    p = prof(z)
    w, r = scale_decomposition(p, cutoff)
    assert np.allclose(w.z + r.z, z, rtol=0, atol=1e-12)


@given(arrays(np.float64, st.integers(10, 200), elements=st.floats(-1, 1)))
def test_ra_le_rq(z):
    r = roughness(prof(z))
    assert r.Ra <= r.Rq * (1 + 1e-12) + 1e-15
    assert r.Ra >= 0 and r.Rz >= 0


@given(arrays(np.float64, st.integers(10, 200), elements=st.floats(-1, 1)), st.floats(-10, 10))
@settings(max_examples=100)
def test_translation_invariance(z, c):
    a = roughness(prof(z), threshold=0.1)
    b = roughness(prof(z + c), threshold=0.1)
    assert b.Ra == pytest.approx(a.Ra, abs=1e-9)
    assert b.Rq == pytest.approx(a.Rq, abs=1e-9)
    assert b.Rz == pytest.approx(a.Rz, abs=1e-9)


def test_moving_average_truncates_windows():
    z = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    assert np.allclose(moving_average(z, 1), [1.5, 2.0, 3.0, 4.0, 4.5])


def test_feature_spacing_square_wave():
    period = 10.0
    dx = 0.05
    x = np.arange(0, 100, dx)
    z = np.where((x % period) < period / 2, 0.0, -1.0)
    st_ = feature_spacing(Profile(x, z), 0.2)
    assert st_.mean == pytest.approx(period)


def test_feature_spacing_flat():
    st_ = feature_spacing(prof(np.zeros(50)), 0.01)
    assert st_.n_features == 0 and st_.mean is None
    with pytest.raises(ValueError):
        feature_spacing(prof(np.zeros(50)), 0.0)


def test_report_serialisation():
    r = RoughnessReport(0.1, 0.2, 0.3, None, 5.0)
    text = r.to_text()
    assert text.splitlines()[0] == "Ra: 0.1"
    assert "mean_feature_spacing: NA" in text
    assert r.csv_row() == "0.1,0.2,0.3,NA,5"
    assert len(RoughnessReport.csv_header().split(",")) == 5


@pytest.mark.xfail(strict=True, reason="a moving average is not idempotent; a second pass moves "
                   "the reference waviness by about 1.1% RMS")
def test_waviness_idempotent_on_reference(reference_surface):
    hm, _ = reference_surface
    pr = extract_profile(hm, 25.0)
    w, _ = scale_decomposition(pr, 5.0)
    ww, _ = scale_decomposition(w, 5.0)
    rms = lambda v: float(np.sqrt(np.mean(v * v)))
    assert rms(ww.z - w.z) < 0.01 * rms(w.z)


def test_waviness_second_pass_is_small(reference_surface):
    hm, _ = reference_surface
    w, _ = scale_decomposition(extract_profile(hm, 25.0), 5.0)
    ww, _ = scale_decomposition(w, 5.0)
    assert np.max(np.abs(ww.z - w.z)) < 0.02


def test_reference_roughness_spacing(reference_surface):
    hm, _ = reference_surface
    pr = extract_profile(hm, 25.0)
    rep = roughness(pr, 5.0, 0.0315)
    assert rep.Ra <= rep.Rq
    assert rep.mean_feature_spacing is not None


@pytest.mark.xfail(strict=True, reason="5 um moving average merges brittle crossings closer than "
                   "the window; measured minima/density ratio is about 0.7")
def test_waviness_minima_track_brittle_density(reference_config):
    from grainmill.scenario import simulate
    from dataclasses import replace

    ratios = []
    for s in range(5):
        res = simulate(replace(reference_config, seed=s))
        hm = res.heightmap
        j = int(np.argmin(np.abs(hm.ys - 25.0)))
        dens = linear_density(hm.phase[j], hm.dx, 1)
        mins = waviness_minima(res.profile, 5.0, 1e-4)
        ratios.append(len(mins) / (hm.width * dens))
    assert np.mean(ratios) == pytest.approx(1.0, abs=0.25)
