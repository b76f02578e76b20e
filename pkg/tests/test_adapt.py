import math

import numpy as np
import pytest

import hypothesis.strategies as st
from hypothesis import given, settings

from fftn_otfs.adapt import (DEFAULT_LUT, FOOTNOTE_LUT, Lut, PassConfig, SnrErrorModel, estimate_snr, lut_preset,
                             nearest_profile, run_pass, select_alpha, trajectory)
from fftn_otfs.channel import builtin_profile
from fftn_otfs.core import ConfigurationError, FrameConfig

CFG = FrameConfig(M=4, N=4, mod_order=4)


def test_default_lut_examples():
    assert select_alpha(30.0) == 0.8
    assert select_alpha(20.0) == 0.9
    assert select_alpha(-5.0) == 1.0


def test_threshold_is_closed_lower_boundary():
    assert select_alpha(14.0) == 0.9
    assert select_alpha(np.nextafter(14.0, 0)) == 1.0
    assert select_alpha(26.0) == 0.8


def test_footnote_preset():
    assert lut_preset("footnote-modes") is FOOTNOTE_LUT
    assert select_alpha(0.0, FOOTNOTE_LUT) == 0.95
    assert select_alpha(15.0, FOOTNOTE_LUT) == 0.9
    with pytest.raises(ConfigurationError):
        lut_preset("aggressive")


@pytest.mark.parametrize("modes", [
    (), ((0.9, -math.inf),), ((1.0, -math.inf), (0.9, 10.0), (0.8, 10.0)),
    ((1.0, -math.inf), (0.9, 10.0), (0.95, 20.0)), ((1.0, -math.inf), (0.0, 10.0)),
])
def test_invalid_luts(modes):
    with pytest.raises(ConfigurationError):
        Lut(modes)


@given(st.floats(-50, 60), st.floats(-50, 60))
def test_select_alpha_monotone(g1, g2):
    lo, hi = sorted((g1, g2))
    assert select_alpha(lo) >= select_alpha(hi)


def test_select_alpha_jump_points():
    grid = np.arange(-10.0, 40.0, 0.25)
    a = np.array([select_alpha(g) for g in grid])
    jumps = grid[1:][np.diff(a) != 0]
    np.testing.assert_array_equal(jumps, [14.0, 26.0])


def test_estimate_snr_exact_without_error():
    assert estimate_snr(12.5, SnrErrorModel(0.0), None) == 12.5


def test_estimate_snr_moments():
    rng = np.random.default_rng(0)
    e = estimate_snr(np.zeros(100_000), SnrErrorModel(3.0), rng)
    assert 2.95 <= e.std() <= 3.05
    assert -0.05 <= e.mean() <= 0.05


def test_snr_error_model_validation():
    with pytest.raises(ConfigurationError):
        SnrErrorModel(-1.0)


def test_pass_config_validation():
    with pytest.raises(ConfigurationError):
        PassConfig(slots=1)
    with pytest.raises(ConfigurationError):
        PassConfig(max_elevation=4.0)


def test_trajectory_symmetric():
    times, theta = trajectory(PassConfig(slots=21, max_elevation=80.0))
    assert theta[0] == 5.0 and theta[10] == 80.0
    np.testing.assert_array_equal(theta, theta[::-1])
    assert np.all(np.diff(times) > 0)


def test_nearest_profile():
    assert nearest_profile(90.0).name == "E"
    assert nearest_profile(5.0).name == "A"
    assert nearest_profile(55.0).name == "D"


def _const_elev(theta):
    def elevation(pc):
        return np.arange(pc.slots, dtype=float), np.full(pc.slots, theta)
    return elevation


def test_pass_saturates_at_min_alpha():
    pc = PassConfig(slots=6, P_tx=1e12, include_shadowing=False)
    recs = run_pass(pc, DEFAULT_LUT, None, CFG, seed=3, elevation=_const_elev(60.0))
    assert all(r.alpha == 0.8 for r in recs)
    assert all(r.status == "ok" for r in recs)


def test_pass_alpha_trace_palindrome():
    pc = PassConfig(slots=31, P_tx=4e7, include_shadowing=False)
    recs = run_pass(pc, DEFAULT_LUT, None, CFG, seed=4, simulate=False)
    a = [r.alpha for r in recs]
    assert a == a[::-1]
    assert len(set(a)) > 1


def test_pass_low_snr_matches_nyquist_baseline():
    pc = PassConfig(slots=9, P_tx=1e3, include_shadowing=True)
    lut = run_pass(pc, DEFAULT_LUT, None, CFG, seed=5)
    base = run_pass(pc, None, None, CFG, seed=5, fixed_alpha=1.0)
    assert max(r.snr_db for r in lut) < 14.0
    assert lut == base


def test_pass_reproducible():
    pc = PassConfig(slots=7)
    a = run_pass(pc, DEFAULT_LUT, None, CFG, seed=6)
    b = run_pass(pc, DEFAULT_LUT, None, CFG, seed=6)
    assert a == b
    assert all(0.0 <= r.ber <= 1.0 for r in a)


def test_pass_records_failures():
    def bad_profile(theta):
        raise ValueError("boom")
    recs = run_pass(PassConfig(slots=3), DEFAULT_LUT, bad_profile, CFG)
    assert len(recs) == 3
    assert all(r.status.startswith("error") for r in recs)


def test_pass_profile_mapping():
    profiles = {"E": builtin_profile("E")}
    recs = run_pass(PassConfig(slots=3), DEFAULT_LUT, profiles, CFG, simulate=False)
    assert {r.profile for r in recs} == {"E"}


def test_pass_needs_policy():
    with pytest.raises(ConfigurationError):
        run_pass(PassConfig(), None, None, CFG)
