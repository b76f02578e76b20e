import numpy as np
import pytest

import hypothesis.strategies as st
from hypothesis import given, settings

from fftn_otfs.channel import builtin_profile, los_profile, realize
from fftn_otfs.core import ConfigurationError, FrameConfig
from fftn_otfs.detector import lmmse_detect
from fftn_otfs.engine import (LinkModel, MonteCarloSpec, chunks, draw_frame, gram_bands, run_table, sigma2_for_snr,
                              simulate_frame, stream)
from fftn_otfs.modem import build_heff
from fftn_otfs.pulse import dd_apply, dd_noise_covariance, gram_matrix

CFG = FrameConfig(M=8, N=8, mod_order=4)


def test_stream_reproducible_and_distinct():
    a = stream(1, 2, 3).standard_normal(4)
    np.testing.assert_array_equal(a, stream(1, 2, 3).standard_normal(4))
    assert not np.allclose(a, stream(1, 2, 4).standard_normal(4))
    assert not np.allclose(a, stream(2, 2, 3).standard_normal(4))


def test_sigma2_for_snr():
    assert sigma2_for_snr(1.0, 1.0) == 1.0
    assert sigma2_for_snr(10.0, 0.8) == pytest.approx(1 / 8)


@pytest.mark.parametrize("alpha", [1.0, 0.9, 0.8])
def test_gram_bands_factor(alpha):
    cfg = CFG.with_alpha(alpha)
    C = gram_bands(cfg).color.toarray()
    np.testing.assert_allclose(C @ C.T, gram_matrix(cfg), atol=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 0.9, 0.8]), st.floats(1e-3, 1.0))
@settings(deadline=None, max_examples=20)
def test_banded_detector_matches_dense_lmmse(seed, alpha, s2):
    cfg = CFG.with_alpha(alpha)
    real = realize(builtin_profile("C"), cfg, rng=np.random.default_rng(seed))
    link = LinkModel(real, cfg)
    _, x, w = draw_frame(cfg, seed, 0, 0)
    r = link.receive(x, w, s2)
    Gt = dd_noise_covariance(gram_matrix(cfg), cfg)
    ref = lmmse_detect(build_heff(real, cfg), dd_apply(r, cfg.M, cfg.N), s2, Gt, full_phi=True)
    assert np.abs(link.detect(r, s2) - ref.x_hat).max() < 1e-9
    mse = LinkModel.mse_diag(link.error_profile(), s2)
    np.testing.assert_allclose(mse, ref.Phi_diag, atol=1e-10)


def test_noiseless_receive_is_heff_product():
    cfg = CFG.with_alpha(0.8)
    real = realize(builtin_profile("D"), cfg, rng=np.random.default_rng(0))
    _, x, w = draw_frame(cfg, 1, 0, 0)
    r = LinkModel(real, cfg).receive(x, w, 0.0)
    np.testing.assert_allclose(dd_apply(r, cfg.M, cfg.N), build_heff(real, cfg).H @ x, atol=1e-12)


def test_draw_frame_shapes():
    bits, x, w = draw_frame(CFG, 1, 2, 3)
    assert bits.size == CFG.n_bits and x.size == CFG.MN and w.size == CFG.MN
    b2, _, _ = draw_frame(CFG, 1, 2, 3)
    np.testing.assert_array_equal(bits, b2)


def _spec(**kw):
    base = dict(cfg=CFG, profile=builtin_profile("A"), alphas=(1.0, 0.8), snr_db=(0.0, 10.0), trials=12,
                seed=7, theory_draws=3)
    base.update(kw)
    return MonteCarloSpec(**base)


def test_run_table_shapes():
    tab = run_table(_spec())
    assert tab.errors.shape == (12, 2, 2) and tab.errors.dtype == np.int32
    assert tab.theory.shape == (3, 2, 2)
    assert np.all((tab.theory >= 0) & (tab.theory <= 0.5))
    assert tab.alpha_index(0.8) == 1
    with pytest.raises(KeyError):
        tab.alpha_index(0.9)


def test_run_table_independent_of_workers():
    a = run_table(_spec(), workers=1)
    b = run_table(_spec(), workers=3)
    np.testing.assert_array_equal(a.errors, b.errors)
    np.testing.assert_array_equal(a.theory, b.theory)


def test_common_random_numbers_across_alpha_sets():
    both = run_table(_spec())
    only = run_table(_spec(alphas=(1.0,)))
    np.testing.assert_array_equal(both.errors[:, :, 0], only.errors[:, :, 0])


def test_trial_prefix_is_stable():
    long = run_table(_spec(trials=12))
    short = run_table(_spec(trials=5))
    np.testing.assert_array_equal(long.errors[:5], short.errors)


@given(st.integers(1, 200), st.integers(1, 16))
def test_chunks_cover_trials(trials, workers):
    parts = chunks(trials, workers)
    assert parts[0][0] == 0 and parts[-1][1] == trials
    assert all(a[1] == b[0] for a, b in zip(parts, parts[1:]))


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        _spec(trials=0)
    with pytest.raises(ConfigurationError):
        _spec(snr_db=())
    with pytest.raises(ConfigurationError):
        _spec(alphas=(1.2,))


def test_high_snr_los_error_free():
    real = realize(los_profile(), CFG, rng=np.random.default_rng(0))
    assert simulate_frame(real, CFG, 30.0, np.random.default_rng(1)) == 0


def test_low_snr_makes_errors():
    real = realize(los_profile(), CFG, rng=np.random.default_rng(0))
    errs = simulate_frame(real, CFG, -10.0, np.random.default_rng(1))
    assert 0 < errs <= CFG.n_bits
