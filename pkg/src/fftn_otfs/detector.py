"""Colored-noise LMMSE detection, post-detection SINR and the BER approximation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.special import erfc

from .core import ConfigurationError, NumericalError, demap_symbols
from .modem import DdObservation, EffectiveChannel

log = logging.getLogger(__name__)

RIDGE = 1e-12


@dataclass(frozen=True)
class LmmseResult:
    x_hat: np.ndarray
    Phi_diag: np.ndarray
    sinr: np.ndarray
    Phi: np.ndarray | None = None


@dataclass(frozen=True)
class BerEstimate:
    pb: float
    c1: float
    c2: float


def qfunc(x):
    return 0.5 * erfc(np.asarray(x) / math.sqrt(2))


def modulation_constants(mod_order: int) -> tuple[float, float]:
    """``(c1, c2)`` of ``pb = c1 Q(sqrt(c2 sinr))``; BPSK uses the exact ``Q(sqrt(2 sinr))``."""
    if mod_order == 2:
        return 1.0, 2.0
    if mod_order == 4:
        m = float(mod_order)
        return (4 / math.log2(m)) * (1 - 1 / math.sqrt(m)), 3 / (m - 1)
    raise ConfigurationError(f"unsupported mod_order {mod_order}")


def _matrix(H) -> np.ndarray:
    return H.H if isinstance(H, EffectiveChannel) else np.asarray(H)


def _cholesky_with_ridge(A: np.ndarray, what: str) -> np.ndarray:
    try:
        return sla.cholesky(A, lower=True)
    except np.linalg.LinAlgError:
        log.warning("%s not positive definite; adding %.0e ridge", what, RIDGE)
    try:
        return sla.cholesky(A + RIDGE * np.eye(A.shape[0]), lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{what} is singular even after ridge regularization") from exc


def _whitened_gram(H, sigma2, Gt):
    Hm = _matrix(H)
    if Gt.shape != Hm.shape or Hm.shape[0] != Hm.shape[1]:
        raise ConfigurationError("H and Gt must both be MN x MN")
    Lg = _cholesky_with_ridge(0.5 * (Gt + Gt.conj().T), "noise covariance")
    Hw = sla.solve_triangular(Lg, Hm, lower=True)
    A = Hw.conj().T @ Hw + sigma2 * np.eye(Hm.shape[1])
    cf = sla.cho_factor(A, lower=True)
    return Lg, Hw, cf


def lmmse_detect(H, y, sigma2: float, Gt: np.ndarray, full_phi: bool = False) -> LmmseResult:
    """``x_hat = (H^H G~^-1 H + s2 I)^-1 H^H G~^-1 y`` and ``Phi = s2 (s2 I + H^H G~^-1 H)^-1``.

    One Cholesky of ``G~`` whitens the model and one Cholesky of the normal
    matrix serves both the estimate and the error covariance.
    """
    yv = y.y if isinstance(y, DdObservation) else np.asarray(y)
    try:
        Lg, Hw, cf = _whitened_gram(H, sigma2, Gt)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("LMMSE normal matrix is singular") from exc
    yw = sla.solve_triangular(Lg, yv, lower=True)
    x_hat = sla.cho_solve(cf, Hw.conj().T @ yw)
    Phi = sigma2 * sla.cho_solve(cf, np.eye(Hw.shape[1]))
    Phi = 0.5 * (Phi + Phi.conj().T)
    d = np.real(np.diag(Phi)).copy()
    return LmmseResult(x_hat=x_hat, Phi_diag=d, sinr=effective_sinr(d), Phi=Phi if full_phi else None)


def effective_sinr(Phi_diag) -> np.ndarray:
    """``1 / MSE - 1`` per symbol."""
    return 1.0 / np.asarray(Phi_diag, dtype=float) - 1.0


def ber_from_sinr(sinr, mod_order: int) -> float:
    c1, c2 = modulation_constants(mod_order)
    s = np.maximum(np.asarray(sinr, dtype=float), 0.0)
    return float(min(c1 * np.mean(qfunc(np.sqrt(c2 * s))), 0.5))


def theoretical_ber(H, sigma2: float, Gt: np.ndarray, mod_order: int) -> BerEstimate:
    """Bin-averaged ``c1 Q(sqrt(c2 sinr_i))`` from the LMMSE error covariance."""
    c1, c2 = modulation_constants(mod_order)
    _, _, cf = _whitened_gram(H, sigma2, Gt)
    d = sigma2 * np.real(np.diag(sla.cho_solve(cf, np.eye(cf[0].shape[0]))))
    return BerEstimate(pb=ber_from_sinr(effective_sinr(d), mod_order), c1=c1, c2=c2)


def detect_and_count(H, y, sigma2: float, Gt: np.ndarray, tx_bits, mod_order: int) -> tuple[int, bool]:
    """LMMSE, hard demapping and bit comparison; returns ``(bit_errors, frame_error)``."""
    res = lmmse_detect(H, y, sigma2, Gt)
    rx = demap_symbols(res.x_hat, mod_order)
    tx = np.asarray(tx_bits).ravel()
    if rx.size != tx.size:
        raise ConfigurationError("transmitted bit count does not match the frame")
    errors = int(np.count_nonzero(rx != tx))
    return errors, errors > 0
