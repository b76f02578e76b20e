"""Banded time-domain Monte Carlo engine.

Per trial and compression factor the link is ``r = T s + n`` with ``T`` and
the noise Gram ``G`` both banded. The DD-domain colored-noise LMMSE

    x_hat = (H^H G~^-1 H + s2 I)^-1 H^H G~^-1 y,   H = U T U^H,  G~ = U G U^H

equals ``U T^H (T T^H + s2 G)^-1 r`` by the push-through identity, so one
banded Hermitian solve replaces the dense MN x MN factorizations. The analytic
BER needs the full error covariance and is evaluated densely on a subset of
channel draws.

Random streams are derived from ``(seed, tag, ...)`` counters, so any trial
can be reproduced on its own and the split across workers is irrelevant:

* channel: ``(seed, CHANNEL, trial)``, shared by every SNR point and alpha
* bits and noise: ``(seed, DATA, point, trial)``, shared by every alpha
* SNR estimation error: ``(seed, ESTIMATE, point, trial)``
"""

from __future__ import annotations

import functools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .channel import ChannelRealization, TdlProfile, realize
from .core import ConfigurationError, FrameConfig, demap_symbols, map_bits
from .detector import ber_from_sinr
from .modem import complex_normal, time_channel
from .pulse import dd_apply, dd_apply_adjoint, gram_column, max_lag

CHANNEL, DATA, ESTIMATE, SHADOW = 1, 2, 3, 4


def stream(seed: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, counters)]))


def sigma2_for_snr(snr_linear: float, alpha: float) -> float:
    """Matched-filter noise density giving received power SNR ``snr_linear``.

    Unit-energy symbols every ``alpha T0`` carry power ``1 / (alpha T0)``; noise
    in the Nyquist bandwidth ``1 / T0`` has power ``s2 / T0``.
    """
    return 1.0 / (alpha * snr_linear)


@dataclass(frozen=True)
class _GramBands:
    ab_upper: np.ndarray  # (b + 1, MN) upper banded storage of G
    chol_lower: np.ndarray  # lower banded Cholesky factor of G
    color: sp.csr_matrix  # sparse lower Cholesky factor, noise = color @ w
    bw: int


@functools.lru_cache(maxsize=32)
def _gram_bands(M: int, N: int, alpha: float, beta: float, L_span: int) -> _GramBands:
    cfg = FrameConfig(M=M, N=N, alpha=alpha, beta=beta, L_span=L_span)
    col = gram_column(cfg)
    MN = cfg.MN
    b = min(max_lag(cfg), MN - 1)
    ab = np.zeros((b + 1, MN))
    for k in range(b + 1):
        ab[b - k, k:] = col[k]
    lower = np.zeros((b + 1, MN))
    for k in range(b + 1):
        lower[k, : MN - k] = col[k]
    cl = sla.cholesky_banded(lower, lower=True)
    color = sp.diags([cl[k, : MN - k] for k in range(b + 1)], [-k for k in range(b + 1)], format="csr")
    for a in (ab, cl):
        a.setflags(write=False)
    return _GramBands(ab_upper=ab, chol_lower=cl, color=color, bw=b)


def gram_bands(cfg: FrameConfig) -> _GramBands:
    return _gram_bands(cfg.M, cfg.N, float(cfg.alpha), float(cfg.beta), int(cfg.L_span))


def _upper_bands(S: sp.spmatrix, bw: int) -> np.ndarray:
    MN = S.shape[0]
    ab = np.zeros((bw + 1, MN), dtype=complex)
    for k in range(bw + 1):
        ab[bw - k, k:] = S.diagonal(k)
    return ab


class LinkModel:
    """One channel draw prepared for a fixed compression factor."""

    def __init__(self, real: ChannelRealization, cfg: FrameConfig, quantize: str = "floor"):
        self.cfg = cfg
        self.real = real.with_config(cfg, quantize)
        self.T = time_channel(self.real, cfg)
        self.Th = self.T.conj().T.tocsr()
        self.gram = gram_bands(cfg)
        S = (self.T @ self.Th).tocsr()
        offs = S.tocoo()
        self.bw = max(self.gram.bw, int(np.max(np.abs(offs.col - offs.row), initial=0)))
        self._ab_tt = _upper_bands(S, self.bw)
        self._ab_g = np.zeros((self.bw + 1, cfg.MN))
        self._ab_g[self.bw - self.gram.bw:] = self.gram.ab_upper

    def receive(self, x: np.ndarray, w: np.ndarray, sigma2: float) -> np.ndarray:
        """Matched-filter outputs for DD symbols ``x`` and white draw ``w``."""
        s = dd_apply_adjoint(x, self.cfg.M, self.cfg.N)
        r = self.T @ s
        if sigma2 > 0:
            r = r + np.sqrt(sigma2) * (self.gram.color @ w)
        return r

    def detect(self, r: np.ndarray, sigma2: float) -> np.ndarray:
        """Colored-noise LMMSE estimate of the DD symbols."""
        ab = self._ab_tt + sigma2 * self._ab_g
        z = sla.solveh_banded(ab, r, check_finite=False)
        return dd_apply(self.Th @ z, self.cfg.M, self.cfg.N)

    def error_profile(self):
        """Eigenpairs for the analytic per-bin MSE at any noise level.

        ``E = T^H G^-1 T = V diag(lam) V^H``; the DD error covariance diagonal is
        ``sum_k |(U V)_ik|^2 s2 / (s2 + lam_k)``.
        """
        Td = self.T.toarray()
        GiT = sla.cho_solve_banded((self.gram.chol_lower, True), Td)
        E = Td.conj().T @ GiT
        lam, V = np.linalg.eigh(0.5 * (E + E.conj().T))
        W2 = np.abs(dd_apply(V, self.cfg.M, self.cfg.N)) ** 2
        return np.maximum(lam, 0.0), W2

    @staticmethod
    def mse_diag(profile, sigma2: float) -> np.ndarray:
        lam, W2 = profile
        return W2 @ (sigma2 / (sigma2 + lam))


@dataclass(frozen=True)
class MonteCarloSpec:
    """Everything that determines a trial table; ``cfg.alpha`` is ignored."""

    cfg: FrameConfig
    profile: TdlProfile
    alphas: tuple
    snr_db: tuple
    trials: int
    seed: int = 1
    nu_max: float | None = None
    quantize: str = "floor"
    theory_draws: int = 100
    shadow_std_db: float = 0.0

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if len(self.snr_db) == 0 or len(self.alphas) == 0:
            raise ConfigurationError("need at least one SNR point and one alpha")
        for a in self.alphas:
            self.cfg.with_alpha(a)  # validates the range


@dataclass
class TrialTable:
    """Bit error counts ``errors[trial, point, alpha]`` and analytic BER on the first draws."""

    spec: MonteCarloSpec
    errors: np.ndarray
    theory: np.ndarray

    @property
    def n_bits(self) -> int:
        return self.spec.cfg.n_bits

    def alpha_index(self, alpha: float) -> int:
        for k, a in enumerate(self.spec.alphas):
            if abs(a - alpha) < 1e-12:
                return k
        raise KeyError(alpha)


def shadow_offset(spec: MonteCarloSpec, trial: int) -> float:
    """Per-trial shadow fading (dB) that lowers every SNR point of the trial."""
    if spec.shadow_std_db <= 0:
        return 0.0
    return float(stream(spec.seed, SHADOW, trial).normal(0.0, spec.shadow_std_db))


def draw_channel(spec: MonteCarloSpec, trial: int) -> ChannelRealization:
    return realize(spec.profile, spec.cfg.with_alpha(1.0), spec.nu_max, stream(spec.seed, CHANNEL, trial),
                   spec.quantize)


def draw_frame(cfg: FrameConfig, seed: int, point: int, trial: int):
    """Bits, DD symbols and white noise draw for one (point, trial)."""
    rng = stream(seed, DATA, point, trial)
    bits = rng.integers(0, 2, cfg.n_bits, dtype=np.int8)
    x = map_bits(bits, cfg.mod_order)
    w = complex_normal(rng, cfg.MN)
    return bits, x, w


def _run_chunk(spec: MonteCarloSpec, start: int, stop: int):
    cfg = spec.cfg
    P, K = len(spec.snr_db), len(spec.alphas)
    n = stop - start
    errors = np.zeros((n, P, K), dtype=np.int32)
    n_th = max(0, min(stop, spec.theory_draws) - start)
    theory = np.full((n_th, P, K), np.nan)
    gammas = 10 ** (np.asarray(spec.snr_db, dtype=float) / 10)
    cfgs = [cfg.with_alpha(a) for a in spec.alphas]
    for t in range(start, stop):
        real = draw_channel(spec, t)
        g_t = gammas * 10 ** (-shadow_offset(spec, t) / 10)
        links = [LinkModel(real, c, spec.quantize) for c in cfgs]
        for p, g in enumerate(g_t):
            bits, x, w = draw_frame(cfg, spec.seed, p, t)
            for k, link in enumerate(links):
                s2 = sigma2_for_snr(g, cfgs[k].alpha)
                x_hat = link.detect(link.receive(x, w, s2), s2)
                errors[t - start, p, k] = np.count_nonzero(demap_symbols(x_hat, cfg.mod_order) != bits)
        if t < spec.theory_draws:
            for k, link in enumerate(links):
                prof = link.error_profile()
                for p, g in enumerate(g_t):
                    mse = LinkModel.mse_diag(prof, sigma2_for_snr(g, cfgs[k].alpha))
                    theory[t - start, p, k] = ber_from_sinr(1.0 / mse - 1.0, cfg.mod_order)
    return errors, theory


def chunks(trials: int, workers: int):
    size = max(1, -(-trials // max(1, 4 * workers)))
    return [(s, min(trials, s + size)) for s in range(0, trials, size)]


def run_table(spec: MonteCarloSpec, workers: int = 1) -> TrialTable:
    """Simulate all trials; results do not depend on ``workers``."""
    if workers is None or workers < 1:
        workers = os.cpu_count() or 1
    parts = chunks(spec.trials, workers)
    if workers == 1 or len(parts) == 1:
        results = [_run_chunk(spec, a, b) for a, b in parts]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, [spec] * len(parts), *zip(*parts)))
    errors = np.concatenate([r[0] for r in results], axis=0)
    theory = np.concatenate([r[1] for r in results], axis=0)
    return TrialTable(spec=spec, errors=errors, theory=theory)


def simulate_frame(real: ChannelRealization, cfg: FrameConfig, snr_db: float, rng, quantize: str = "floor"):
    """Bit errors of one frame at ``cfg.alpha``."""
    link = LinkModel(real, cfg, quantize)
    bits = rng.integers(0, 2, cfg.n_bits, dtype=np.int8)
    x = map_bits(bits, cfg.mod_order)
    w = complex_normal(rng, cfg.MN)
    s2 = sigma2_for_snr(10 ** (snr_db / 10), cfg.alpha)
    x_hat = link.detect(link.receive(x, w, s2), s2)
    return int(np.count_nonzero(demap_symbols(x_hat, cfg.mod_order) != bits))


__all__ = [
    "CHANNEL", "DATA", "ESTIMATE", "SHADOW", "stream", "sigma2_for_snr", "gram_bands", "LinkModel",
    "MonteCarloSpec", "TrialTable", "shadow_offset", "draw_channel", "draw_frame", "run_table", "simulate_frame", "chunks",
]
