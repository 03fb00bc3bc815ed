import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grainmill.chipmodel import (
    GrainCutParams,
    Mode,
    chip_state,
    classify_engagement,
    contact_stress,
    elastic_recovery,
    friction_angle,
    min_chip_thickness,
)
from grainmill.errors import ModelViolationError

# Frozen from tests/oracles/chip_oracle.py (mpmath, 50 digits).
BETA_03 = 0.291456794477867092
HM_SOFT = 0.26888161752642246011
HM_BRITTLE = 0.20311490064122569223
SIGMA_SOFT = 23184431575.443647814
SIGMA_BRITTLE = 2471487681.4115869754
HR_SOFT = 0.26609821574249899378
HR_BRITTLE = 0.2031116133110533611
R = 1.36

SOFT = GrainCutParams(0.3, R, 70e9, 240e6)
BRITTLE = GrainCutParams(0.5, R, 8.7e9, 0.04e6)


def test_friction_angle_examples():
    assert friction_angle(0.0) == 0.0
    assert friction_angle(1.0) == pytest.approx(math.pi / 4, abs=1e-15)
    assert friction_angle(0.3) == pytest.approx(BETA_03, abs=1e-14)


def test_friction_angle_rejects_negative():
    with pytest.raises(ValueError):
        friction_angle(-0.1)


def test_min_chip_thickness_table_values():
    assert min_chip_thickness(0.3, R) == pytest.approx(0.2689, abs=5e-4)
    assert min_chip_thickness(0.5, R) == pytest.approx(0.2031, abs=5e-4)
    assert min_chip_thickness(0.3, R) == pytest.approx(HM_SOFT, rel=1e-13)
    assert min_chip_thickness(0.5, R) == pytest.approx(HM_BRITTLE, rel=1e-13)


def test_min_chip_thickness_frictionless_closed_form():
    assert min_chip_thickness(0.0, 1.0) == pytest.approx(1 - math.cos(math.pi / 4), rel=1e-15)


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_min_chip_thickness_rejects_bad_radius(r):
    with pytest.raises(ValueError):
        min_chip_thickness(0.3, r)


def test_contact_stress_examples():
    assert contact_stress(70e9, HM_SOFT, R) == pytest.approx(SIGMA_SOFT, rel=1e-12)
    assert contact_stress(8.7e9, HM_BRITTLE, R) == pytest.approx(SIGMA_BRITTLE, rel=1e-12)
    # printed-table inputs give ~23.2 GPa / ~2.47 GPa
    assert contact_stress(70e9, 0.2689, R) / 1e9 == pytest.approx(23.2, abs=0.05)
    assert contact_stress(8.7e9, 0.2031, R) / 1e9 == pytest.approx(2.47, abs=0.005)


def test_contact_stress_vanishes_for_thin_engagement():
    assert contact_stress(70e9, 1e-6 * R, R) < 1e-2 * contact_stress(70e9, 0.2 * R, R)


@pytest.mark.parametrize("h", [0.0, -0.1, R, 2 * R])
def test_contact_stress_domain(h):
    with pytest.raises(ValueError):
        contact_stress(70e9, h, R)


def test_elastic_recovery_phases():
    assert elastic_recovery(SOFT, HM_SOFT) == pytest.approx(HR_SOFT, rel=1e-12)
    assert elastic_recovery(BRITTLE, HM_BRITTLE) == pytest.approx(HR_BRITTLE, rel=1e-12)
    assert abs(elastic_recovery(SOFT, HM_SOFT) - 0.2655) <= 0.002
    assert abs(elastic_recovery(BRITTLE, HM_BRITTLE) - 0.2021) <= 0.002


def test_elastic_recovery_below_limit_returns_hm_exactly():
    huge = GrainCutParams(0.3, R, 70e9, 1e15)
    assert elastic_recovery(huge, HM_SOFT) == HM_SOFT


def test_branch_selection_is_strict():
    h = min_chip_thickness(0.3, R)
    sigma = contact_stress(70e9, h, R)
    above = GrainCutParams(0.3, R, 70e9, math.nextafter(sigma, math.inf))
    at = GrainCutParams(0.3, R, 70e9, sigma)
    assert elastic_recovery(above, h) == h
    # at sigma == sigma_p the reduced branch applies and recovers nothing
    assert elastic_recovery(at, h) == pytest.approx(0.0, abs=1e-12)


def test_elastic_recovery_propagates_domain_error():
    with pytest.raises(ValueError):
        elastic_recovery(SOFT, R)


def test_negative_recovery_is_a_model_violation(monkeypatch):
    import grainmill.chipmodel as cm

    monkeypatch.setattr(cm, "_contact_length", lambda h_m, r: 1e9)
    monkeypatch.setattr(cm, "contact_stress", lambda E, h_m, r: 1e30)
    with pytest.raises(ModelViolationError):
        cm.elastic_recovery(SOFT, HM_SOFT)


def test_classify_engagement():
    assert classify_engagement(0.0, HM_SOFT) is Mode.PLOUGHING
    assert classify_engagement(HM_SOFT, HM_SOFT) is Mode.SHEARING
    assert classify_engagement(0.2, 0.2689) is Mode.PLOUGHING


def test_chip_state_bundle():
    st_ = chip_state(SOFT, 0.2)
    assert st_.mode is Mode.PLOUGHING
    assert st_.h_r <= st_.h_m < R
    assert 0 <= st_.beta < math.pi / 2


def test_grain_params_validation():
    with pytest.raises(ValueError):
        GrainCutParams(-1, R, 1, 1)
    with pytest.raises(ValueError):
        GrainCutParams(0.1, 0, 1, 1)


def test_monotone_decreasing_in_mu_and_linear_in_r():
    mus = np.arange(0, 2001) * 1e-3
    hm = np.array([min_chip_thickness(m, R) for m in mus])
    assert np.all(np.diff(hm) < 0)
    for k in (0.5, 2.0, 4.0, 8.0):
        for mu in (0.0, 0.3, 0.5, 1.7):
            assert min_chip_thickness(mu, k * R) == pytest.approx(k * min_chip_thickness(mu, R), rel=4e-16)


@pytest.mark.parametrize("mu", [1e-300, 1e-12, 1e-6, 1e-3])
def test_friction_angle_small_mu(mu):
    assert friction_angle(mu) == pytest.approx(math.atan(mu), rel=1e-12)


@given(st.floats(0, 10))
def test_friction_angle_is_arctan(mu):
    assert abs(friction_angle(mu) - math.atan(mu)) <= 1e-12


@given(
    mu=st.floats(0, 5),
    r=st.floats(0.05, 20),
    E=st.floats(1e8, 1e12),
    sigma_p=st.floats(1e3, 1e11),
)
@settings(max_examples=300)
def test_recovery_bounds(mu, r, E, sigma_p):
    p = GrainCutParams(mu, r, E, sigma_p)
    h_m = min_chip_thickness(mu, r)
    assert 0 < h_m < r * (1 - math.cos(math.pi / 4)) * (1 + 1e-15)
    h_r = elastic_recovery(p, h_m)
    assert 0 <= h_r <= h_m
