"""Rate, reliability, throughput and energy-efficiency figures of merit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DomainError, FrameConfig
from .linkbudget import GeometryConfig, LossParams, clamp_elevation, instantaneous_snr, total_path_loss

DEFAULT_XI = 0.35
DEFAULT_P_C = 0.5


@dataclass(frozen=True)
class RateMetrics:
    n_bits: int
    r_raw: float
    se_raw: float
    fer: float
    t_eff: float
    ee: float


def frame_duration(cfg: FrameConfig) -> float:
    """Compressed frame length ``alpha N T_sym``."""
    return cfg.alpha * cfg.N * cfg.T_sym


def raw_rate(cfg: FrameConfig) -> tuple[int, float, float]:
    """``(n_bits, r_raw [bit/s], se_raw [bit/s/Hz])``."""
    n_bits = cfg.n_bits
    return n_bits, n_bits / frame_duration(cfg), cfg.bits_per_symbol / cfg.alpha


def _check_pb(pb: float) -> None:
    if not 0.0 <= pb <= 1.0:
        raise DomainError(f"pb must lie in [0, 1], got {pb}")


def success_probability(pb: float, n_bits: int) -> float:
    """``(1 - pb)^n_bits`` evaluated through ``log1p``."""
    _check_pb(pb)
    if pb == 1.0:
        return 0.0
    return math.exp(n_bits * math.log1p(-pb))


def frame_error_rate(pb: float, n_bits: int) -> float:
    _check_pb(pb)
    if pb == 1.0:
        return 1.0
    return -math.expm1(n_bits * math.log1p(-pb))


def effective_throughput(cfg: FrameConfig, pb: float) -> float:
    _, r_raw, _ = raw_rate(cfg)
    return r_raw * success_probability(pb, cfg.n_bits)


def energy_efficiency(cfg: FrameConfig, pb: float, P_tx: float = 1.0, xi: float = DEFAULT_XI,
                      P_c: float = DEFAULT_P_C) -> float:
    """Delivered bits per joule over one compressed frame."""
    if not 0.0 < xi <= 1.0 or P_tx <= 0 or P_c < 0:
        raise DomainError("need 0 < xi <= 1, P_tx > 0 and P_c >= 0")
    e_frame = (P_tx / xi + P_c) * frame_duration(cfg)
    return cfg.n_bits * success_probability(pb, cfg.n_bits) / e_frame


def rate_metrics(cfg: FrameConfig, pb: float, P_tx: float = 1.0, xi: float = DEFAULT_XI,
                 P_c: float = DEFAULT_P_C) -> RateMetrics:
    n_bits, r_raw, se = raw_rate(cfg)
    return RateMetrics(n_bits=n_bits, r_raw=r_raw, se_raw=se, fer=frame_error_rate(pb, n_bits),
                       t_eff=effective_throughput(cfg, pb), ee=energy_efficiency(cfg, pb, P_tx, xi, P_c))


def throughput_vs_elevation(theta_E: float, cfg: FrameConfig, geo: GeometryConfig, loss: LossParams,
                            P_tx: float, noise_power: float, pb_model: Callable[[float, float], float]) -> float:
    """Effective throughput at one elevation with shadowing disabled.

    ``pb_model(gamma_linear, alpha)`` supplies the bit error probability.
    """
    theta = clamp_elevation(theta_E)
    L = total_path_loss(theta, geo, loss)
    gamma = instantaneous_snr(P_tx, L, noise_power)
    pb = float(np.clip(pb_model(gamma, cfg.alpha), 0.0, 1.0))
    return effective_throughput(cfg, pb)
