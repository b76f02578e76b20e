import json
import math

import numpy as np
import pytest
from scipy import stats

import hypothesis.strategies as st
from hypothesis import given, settings

from fftn_otfs.channel import (ChannelRealization, builtin_profile, default_nu_max, los_profile, profile_from_dict,
                               realize, resolve_profile, ricean_tap, single_tap)
from fftn_otfs.core import ConfigurationError, FrameConfig

CFG = FrameConfig(M=16, N=16)


def test_profile_a():
    p = builtin_profile("A")
    assert p.delays_ns == (0.0, 110.0, 285.0)
    assert p.powers_dB == (0.0, -4.7, -6.5)
    assert p.K_dB == -math.inf and p.K_linear == 0.0
    lp = p.loss_params
    assert (lp.A_cl, lp.B_cl, lp.sigma_SF, p.theta_E_nominal) == (15.0, 5.0, 6.0, 20.0)


def test_profile_d():
    p = builtin_profile("tdl-d")
    assert p.delays_ns == (0.0, 290.0, 895.0)
    assert p.powers_dB == (0.0, -4.2, -6.1)
    assert p.K_dB == 13.3
    assert p.loss_params.sigma_SF == 2.0 and p.theta_E_nominal == 60.0


def test_profile_e():
    p = builtin_profile("E")
    assert p.delays_ns == (0.0, 150.0, 350.0)
    assert p.powers_dB == (0.0, -8.0, -12.0)
    assert p.K_dB == 22.0 and p.theta_E_nominal == 85.0


@pytest.mark.parametrize("name", list("ABCDE"))
def test_three_normalized_taps(name):
    p = builtin_profile(name)
    assert len(p.delays_ns) == 3
    assert abs(p.powers.sum() - 1) < 1e-12


def test_unknown_profile():
    with pytest.raises(ConfigurationError):
        builtin_profile("F")


def test_resolve_profile(tmp_path):
    assert resolve_profile("los").K_linear == math.inf
    assert resolve_profile("tdl-b").name == "B"
    path = tmp_path / "custom.json"
    path.write_text(json.dumps({"name": "X", "delays_ns": [0, 50], "powers_dB": [0, -3], "K_dB": "-inf",
                                "loss_params": {"sigma_SF": 1.0}}))
    p = resolve_profile(str(path))
    assert p.name == "X" and p.K_linear == 0.0 and p.loss_params.sigma_SF == 1.0


def test_profile_from_dict_missing_field():
    with pytest.raises(ConfigurationError):
        profile_from_dict({"delays_ns": [0.0]})


def test_ricean_los_limit():
    h = ricean_tap(0.25, math.inf, 0.7, None)
    assert h == pytest.approx(0.5 * np.exp(0.7j))


def test_ricean_rayleigh_power():
    rng = np.random.default_rng(0)
    h = np.array([ricean_tap(0.4, 0.0, 0.0, rng) for _ in range(100_000)])
    assert np.mean(np.abs(h) ** 2) == pytest.approx(0.4, rel=0.02)
    assert abs(h.mean()) < 0.02


def test_ricean_los_fraction():
    rng = np.random.default_rng(1)
    K = 10 ** 1.33
    h = np.array([ricean_tap(1.0, K, 0.3, rng) for _ in range(100_000)])
    power = np.mean(np.abs(h) ** 2)
    assert power == pytest.approx(1.0, rel=0.02)
    assert abs(h.mean()) ** 2 / power == pytest.approx(K / (K + 1), rel=0.02)


@pytest.mark.parametrize("name", list("ABCDE"))
def test_realization_power_normalized(name):
    rng = np.random.default_rng(2)
    p = builtin_profile(name)
    total = np.mean([np.sum(np.abs(realize(p, CFG, rng=rng).h) ** 2) for _ in range(20_000)])
    assert total == pytest.approx(1.0, rel=0.02)


@pytest.mark.parametrize("name", list("ABC"))
def test_rayleigh_taps_zero_mean(name):
    rng = np.random.default_rng(3)
    h = np.array([realize(builtin_profile(name), CFG, rng=rng).h for _ in range(100_000)])
    assert np.abs(h.mean(axis=0)).max() < 0.02


def test_static_channel():
    r = realize(builtin_profile("C"), CFG, nu_max=0.0, rng=np.random.default_rng(0))
    assert np.all(r.r == 0) and np.all(r.kappa == 0)


def test_short_delay_maps_to_zero_bin():
    r = realize(builtin_profile("A"), CFG, rng=np.random.default_rng(0))
    assert CFG.delay_resolution == pytest.approx(1 / (16 * 15e3))
    np.testing.assert_array_equal(r.l, [0, 0, 0])
    np.testing.assert_array_equal(r.tau, [0, 0, 0])


def test_delay_quantization_modes():
    cfg = FrameConfig(M=64, N=4)
    d = np.array([0.0, 0.6, 1.2]) * cfg.delay_resolution
    floor = ChannelRealization.from_draws(np.ones(3), d, np.zeros(3), cfg, "floor")
    rnd = ChannelRealization.from_draws(np.ones(3), d, np.zeros(3), cfg, "round")
    np.testing.assert_array_equal(floor.l, [0, 0, 1])
    np.testing.assert_array_equal(rnd.l, [0, 1, 1])
    np.testing.assert_allclose(floor.tau, floor.l * cfg.delay_resolution)
    with pytest.raises(ConfigurationError):
        ChannelRealization.from_draws(np.ones(1), [0.0], [0.0], cfg, "ceil")


def test_delay_overflow():
    with pytest.raises(ConfigurationError):
        single_tap(CFG, l=16)


def test_kappa_uniform():
    rng = np.random.default_rng(4)
    nu_max = default_nu_max(CFG)
    k = np.concatenate([realize(builtin_profile("A"), CFG, rng=rng).kappa for _ in range(4000)])
    assert k.min() >= -0.5 and k.max() < 0.5
    assert stats.kstest(k + 0.5, "uniform").pvalue > 0.01
    assert nu_max == pytest.approx(2 * CFG.doppler_resolution)


@given(st.floats(-3000.0, 3000.0), st.sampled_from([1.0, 0.9, 0.8]))
def test_doppler_reconstruction(nu, alpha):
    cfg = CFG.with_alpha(alpha)
    r = ChannelRealization.from_draws([1.0], [0.0], [nu], cfg)
    assert (r.r[0] + r.kappa[0]) == pytest.approx(nu * cfg.N * cfg.TF * cfg.M, abs=1e-9)
    assert -0.5 <= r.kappa[0] < 0.5


def test_nu_max_limit():
    with pytest.raises(ConfigurationError):
        realize(builtin_profile("A"), CFG, nu_max=CFG.delta_f / 2, rng=np.random.default_rng(0))


def test_default_nu_max_small_grid():
    cfg = FrameConfig(M=4, N=4)
    assert default_nu_max(cfg) < cfg.delta_f / 2


def test_with_config_keeps_draws():
    r = realize(builtin_profile("D"), CFG, rng=np.random.default_rng(5))
    r8 = r.with_config(CFG.with_alpha(0.8))
    np.testing.assert_array_equal(r.h, r8.h)
    np.testing.assert_array_equal(r.nu, r8.nu)
    np.testing.assert_allclose(r8.r + r8.kappa, 0.8 * (r.r + r.kappa))


def test_los_profile_deterministic_magnitude():
    r = realize(los_profile(), CFG, rng=np.random.default_rng(0))
    assert r.n_taps == 1 and abs(r.h[0]) == pytest.approx(1.0)


def test_realize_needs_rng():
    with pytest.raises(ConfigurationError):
        realize(builtin_profile("A"), CFG)
