"""DD/TF transforms, effective channel construction, noise injection and a
waveform-level reference implementation of the whole chain.

The transmitter maps the DD grid through the ISFFT, reads the TF matrix out
column by column as ``MN`` consecutive FTN samples spaced ``alpha * T0`` and
pulse-shapes them. The receiver matched-filters, samples on the same FTN
lattice and applies the SFFT. In matrix form the sampled link is

    r = T s + n,   T[j, i] = sqrt(PL) sum_p h_p exp(j 2 pi nu_p i T_F) A((j - i) T_F - tau_p, -nu_p)

and the DD channel is ``H_eff = U T U^H`` with ``U = kron(F_N, F_M^H)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .channel import ChannelRealization
from .core import ConfigurationError, FrameConfig, NumericalError, unvec, vec
from .pulse import PulseSpec, dd_conjugate, gram_matrix, rrc_value


def isfft(grid: np.ndarray) -> np.ndarray:
    """DD grid ``x[l, k]`` to TF matrix ``X[m, n]`` (unitary)."""
    return np.fft.fft(np.fft.ifft(grid, axis=0, norm="ortho"), axis=1, norm="ortho")


def sfft(tf: np.ndarray) -> np.ndarray:
    """TF matrix ``X[m, n]`` to DD grid ``x[l, k]``; exact inverse of :func:`isfft`."""
    return np.fft.ifft(np.fft.fft(tf, axis=0, norm="ortho"), axis=1, norm="ortho")


@dataclass(frozen=True)
class EffectiveChannel:
    H: np.ndarray
    path_gain: float
    delay_res: float
    doppler_res: float

    @property
    def shape(self):
        return self.H.shape


@dataclass(frozen=True)
class DdObservation:
    y: np.ndarray
    noise_var: float


@functools.lru_cache(maxsize=256)
def _lag_kernel(alpha: float, beta: float, L_span: int, Q: int, l: int):
    """Trapezoid weights ``K[d, k] = w_k g(t_k) g(t_k - (d alpha - l))`` in T0 units.

    Returns ``(d_min, t, K)`` so that ``A(d alpha T0 - l T0, -nu) = K[d - d_min] @ exp(j 2 pi nu T0 t)``.
    """
    spec = PulseSpec(beta=beta, T0=1.0, L_span=L_span, Q=Q)
    t = np.arange(-L_span * Q, L_span * Q + 1) / Q
    w = np.full(t.size, 1.0 / Q)
    w[0] *= 0.5
    w[-1] *= 0.5
    d_min = int(np.ceil((l - 2 * L_span) / alpha - 1e-9))
    d_max = int(np.floor((l + 2 * L_span) / alpha + 1e-9))
    d = np.arange(d_min, d_max + 1)
    shifts = d * alpha - l
    K = (w * rrc_value(t, spec))[None, :] * rrc_value(t[None, :] - shifts[:, None], spec)
    K.setflags(write=False)
    return d_min, t, K


def tap_lag_response(cfg: FrameConfig, l: int, nu: float):
    """Ambiguity samples ``A(d T_F - l T0, -nu)`` over all nonzero lags ``d``."""
    d_min, t, K = _lag_kernel(float(cfg.alpha), float(cfg.beta), int(cfg.L_span), int(cfg.Q), int(l))
    a = K @ np.exp(2j * np.pi * (nu * cfg.T0) * t)
    return d_min, a


def time_channel(real: ChannelRealization, cfg: FrameConfig, L_dB: float = 0.0) -> sp.csr_matrix:
    """Sparse banded ``T`` mapping transmitted FTN samples to matched-filter outputs."""
    MN = cfg.MN
    gain = np.sqrt(10 ** (-L_dB / 10))
    i = np.arange(MN)
    diags: dict[int, np.ndarray] = {}
    for p in range(real.n_taps):
        d_min, a = tap_lag_response(cfg, int(real.l[p]), float(real.nu[p]))
        rot = gain * real.h[p] * np.exp(2j * np.pi * real.nu[p] * cfg.TF * i)
        for off, val in enumerate(a):
            d = d_min + off
            if abs(d) >= MN or val == 0:
                continue
            # T[i + d, i] for columns i that stay inside the frame
            cols = i[max(0, -d): MN - max(0, d)]
            entry = val * rot[cols]
            if d in diags:
                diags[d] = diags[d] + entry
            else:
                diags[d] = entry
    offsets = sorted(diags)
    # scipy's dia offset k is the superdiagonal index (col - row), so T[i + d, i] sits at -d
    return sp.diags([diags[d] for d in offsets], [-d for d in offsets], shape=(MN, MN), format="csr")


def ideal_heff(real: ChannelRealization, cfg: FrameConfig, L_dB: float = 0.0) -> np.ndarray:
    """Textbook DD channel with Kronecker delay and Dirichlet Doppler kernels.

    ``H[u, v] = sum_p h_p e^{j phi_p(u, v)} delta[(l - l' - l_p) mod M] D_N(k - k' - r_p - kappa_p)``
    with ``phi_p = 2 pi nu_p (l' alpha T0 - tau_p)`` and ``D_N`` the length-N periodic sinc.
    """
    M, N = cfg.M, cfg.N
    gain = np.sqrt(10 ** (-L_dB / 10))
    n = np.arange(N)
    q = np.arange(N)[:, None] - np.arange(N)[None, :]
    H = np.zeros((cfg.MN, cfg.MN), dtype=complex)
    lp_ = np.arange(M)
    for p in range(real.n_taps):
        shift = float(real.r[p] + real.kappa[p])
        D = np.exp(-2j * np.pi * np.multiply.outer(q - shift, n) / N).mean(axis=-1)
        P = np.roll(np.eye(M), int(real.l[p]), axis=0)
        phase = np.exp(2j * np.pi * real.nu[p] * (lp_ * cfg.alpha * cfg.T0 - real.tau[p]))
        H += real.h[p] * np.kron(D, P * phase[None, :])
    return gain * H


def build_heff(real: ChannelRealization, cfg: FrameConfig, L_dB: float = 0.0, mode: str = "rrc") -> EffectiveChannel:
    """Dense MN x MN effective DD channel in ``rrc`` (FTN pulse) or ``ideal`` mode."""
    if mode == "rrc":
        T = time_channel(real, cfg, L_dB).toarray()
        H = dd_conjugate(T, cfg.M, cfg.N)
    elif mode == "ideal":
        H = ideal_heff(real, cfg, L_dB)
    else:
        raise ConfigurationError(f"unknown channel mode {mode!r}")
    return EffectiveChannel(H=H, path_gain=float(np.sqrt(10 ** (-L_dB / 10))),
                            delay_res=cfg.delay_resolution, doppler_res=cfg.doppler_resolution)


def noise_factor(Gt: np.ndarray) -> np.ndarray:
    """Lower-triangular ``C`` with ``C C^H`` equal to ``Gt`` after clipping negative eigenvalues."""
    Gt = 0.5 * (Gt + Gt.conj().T)
    try:
        return np.linalg.cholesky(Gt)
    except np.linalg.LinAlgError:
        pass
    lam, V = np.linalg.eigh(Gt)
    floor = max(lam.max(), 0.0) * 1e-12
    lam = np.maximum(lam, floor)
    try:
        return np.linalg.cholesky((V * lam) @ V.conj().T)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("noise covariance factorization failed after eigenvalue clipping") from exc


def complex_normal(rng, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def transmit_through(H: EffectiveChannel | np.ndarray, x: np.ndarray, sigma2: float, Gt: np.ndarray, rng,
                     factor: np.ndarray | None = None) -> DdObservation:
    """``y = H x + z`` with ``z ~ CN(0, sigma2 Gt)``.

    ``x`` is a DD vector in ``u = l + k M`` order or an ``(MN, K)`` batch.
    """
    Hm = H.H if isinstance(H, EffectiveChannel) else np.asarray(H)
    x = np.asarray(x)
    if x.shape[0] != Hm.shape[1] or Gt.shape != Hm.shape:
        raise ConfigurationError("dimension mismatch between H, x and Gt")
    y = Hm @ x
    if sigma2 > 0:
        C = noise_factor(Gt) if factor is None else factor
        y = y + np.sqrt(sigma2) * (C @ complex_normal(rng, x.shape))
    return DdObservation(y=y, noise_var=float(sigma2))


def waveform_oracle(cfg: FrameConfig, real: ChannelRealization, x: np.ndarray, sigma2: float = 0.0,
                    rng=None) -> DdObservation:
    """Reference chain simulated on a fine time grid of step ``T0 / Q``.

    The transmit waveform, each delayed and Doppler-rotated path, and the
    matched filter are evaluated from the analytic pulse on an absolute time
    grid, so no part of the matrix pipeline is reused. White noise of
    two-sided density ``sigma2`` is added before the matched filter.
    """
    if cfg.MN > 64:
        raise ConfigurationError("waveform_oracle is limited to M*N <= 64")
    if cfg.Q < 8:
        raise ConfigurationError("waveform_oracle needs Q >= 8")
    spec = PulseSpec.from_frame(cfg)
    x = np.asarray(x)
    grid = x if x.ndim == 2 else unvec(x, cfg.M, cfg.N)
    s = vec(isfft(grid))
    T0, TF = cfg.T0, cfg.TF
    dt = T0 / cfg.Q
    span = spec.support
    t_lo = -span
    t_hi = (cfg.MN - 1) * TF + span + float(np.max(real.tau, initial=0.0))
    t = np.arange(np.floor(t_lo / dt), np.ceil(t_hi / dt) + 1) * dt
    i = np.arange(cfg.MN)

    r = np.zeros(t.size, dtype=complex)
    for p in range(real.n_taps):
        tp = t - real.tau[p]
        sp_ = rrc_value(tp[None, :] - i[:, None] * TF, spec).T @ s
        r += real.h[p] * np.exp(2j * np.pi * real.nu[p] * tp) * sp_
    if sigma2 > 0:
        if rng is None:
            raise ConfigurationError("noise requires a random generator")
        r += np.sqrt(sigma2 / dt) * complex_normal(rng, t.size)
    mf = rrc_value(t[None, :] - i[:, None] * TF, spec)
    y_time = (mf * dt) @ r
    y = vec(sfft(unvec(y_time, cfg.M, cfg.N)))
    return DdObservation(y=y, noise_var=float(sigma2))


def matrix_pipeline(cfg: FrameConfig, real: ChannelRealization, x: np.ndarray, L_dB: float = 0.0) -> np.ndarray:
    """Noiseless ``H_eff x`` for comparison against :func:`waveform_oracle`."""
    x = np.asarray(x)
    xv = vec(x) if x.ndim == 2 else x
    return build_heff(real, cfg, L_dB).H @ xv


def dd_noise_gram(cfg: FrameConfig) -> np.ndarray:
    from .pulse import dd_noise_covariance

    return dd_noise_covariance(gram_matrix(cfg), cfg)


__all__ = [
    "isfft", "sfft", "EffectiveChannel", "DdObservation", "time_channel", "ideal_heff", "build_heff",
    "noise_factor", "transmit_through", "waveform_oracle", "matrix_pipeline", "tap_lag_response",
    "complex_normal", "dd_noise_gram",
]
