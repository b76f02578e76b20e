"""RRC pulse shaping, cross-ambiguity evaluation and FTN noise correlation."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, FrameConfig


@dataclass(frozen=True)
class PulseSpec:
    """Truncated unit-energy root-raised-cosine pulse.

    The pulse is zero outside ``|t| <= L_span * T0``. ``Q`` sets the
    integration step ``T0 / Q`` used by :func:`ambiguity`.
    """

    beta: float = 0.3
    T0: float = 1.0
    L_span: int = 6
    Q: int = 8

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must lie in [0, 1], got {self.beta}")
        if self.T0 <= 0 or self.L_span < 1 or self.Q < 1:
            raise ConfigurationError("T0, L_span and Q must be positive")

    @classmethod
    def from_frame(cls, cfg: FrameConfig) -> "PulseSpec":
        return cls(beta=cfg.beta, T0=cfg.T0, L_span=cfg.L_span, Q=cfg.Q)

    @property
    def support(self) -> float:
        return self.L_span * self.T0


def rrc_value(t, spec: PulseSpec):
    """Unit-energy RRC amplitude at time(s) ``t`` (seconds).

    The removable singularities at ``t = 0`` and ``|t| = T0 / (4 beta)`` are
    replaced by their analytic limits.
    """
    t = np.asarray(t, dtype=float)
    b, T0 = spec.beta, spec.T0
    x = t / T0
    out = np.zeros_like(x)
    inside = np.abs(t) <= spec.support * (1 + 1e-12)

    at_zero = inside & (np.abs(x) < 1e-12)
    if b > 0:
        at_sing = inside & (np.abs(np.abs(x) - 1.0 / (4 * b)) < 1e-10)
    else:
        at_sing = np.zeros_like(inside)
    regular = inside & ~at_zero & ~at_sing

    xr = x[regular]
    num = np.sin(np.pi * xr * (1 - b)) + 4 * b * xr * np.cos(np.pi * xr * (1 + b))
    den = np.pi * xr * (1 - (4 * b * xr) ** 2)
    out[regular] = num / den
    out[at_zero] = 1 - b + 4 * b / np.pi
    if b > 0:
        a = np.pi / (4 * b)
        out[at_sing] = (b / np.sqrt(2)) * ((1 + 2 / np.pi) * np.sin(a) + (1 - 2 / np.pi) * np.cos(a))
    out /= np.sqrt(T0)
    return out if out.ndim else float(out)


def raised_cosine(t, beta: float, T0: float):
    """Raised-cosine function, the autocorrelation of a unit-energy RRC (peak 1)."""
    t = np.asarray(t, dtype=float)
    x = t / T0
    out = np.sinc(x).astype(float)
    if beta > 0:
        d = 1 - (2 * beta * x) ** 2
        sing = np.abs(d) < 1e-10
        safe = np.where(sing, 1.0, d)
        out = np.where(sing, (np.pi / 4) * np.sinc(1 / (2 * beta)), out * np.cos(np.pi * beta * x) / safe)
    return out if out.ndim else float(out)


def pulse_energy(spec: PulseSpec) -> float:
    """Riemann-sum energy of the truncated pulse sampled at ``T0 / Q``."""
    dt = spec.T0 / spec.Q
    k = np.arange(-spec.L_span * spec.Q, spec.L_span * spec.Q + 1)
    return float(np.sum(rrc_value(k * dt, spec) ** 2) * dt)


def _time_grid(spec: PulseSpec) -> np.ndarray:
    n = spec.L_span * spec.Q
    return np.arange(-n, n + 1) * (spec.T0 / spec.Q)


def ambiguity(tau, nu, spec: PulseSpec):
    """Cross-ambiguity ``A(tau, nu) = int g(t) g(t - tau) exp(-j 2 pi nu t) dt``.

    Trapezoid rule on a ``T0 / Q`` grid over the transmit pulse support. The
    matched receive pulse equals the transmit pulse since the RRC is real and
    even. Arguments broadcast; ``|tau| > 2 L_span T0`` yields exactly zero.
    """
    tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
    t = _time_grid(spec)
    w = np.full(t.size, spec.T0 / spec.Q)
    w[0] *= 0.5
    w[-1] *= 0.5
    g = rrc_value(t, spec) * w
    shifted = rrc_value(t[None, :] - tau.reshape(-1, 1), spec)
    phase = np.exp(-2j * np.pi * nu.reshape(-1, 1) * t[None, :])
    vals = np.sum(g[None, :] * shifted * phase, axis=1)
    vals[np.abs(tau.ravel()) > 2 * spec.support] = 0.0
    vals = vals.reshape(tau.shape)
    return vals if vals.ndim else complex(vals)


def max_lag(cfg: FrameConfig) -> int:
    """Largest FTN sample lag with a nonzero Gram entry."""
    return int(np.floor(2 * cfg.L_span / cfg.alpha + 1e-9))


@functools.lru_cache(maxsize=64)
def _gram_lags(alpha: float, beta: float, L_span: int, n: int) -> np.ndarray:
    lags = np.arange(n) * alpha
    col = raised_cosine(lags, beta, 1.0)
    col[lags > 2 * L_span + 1e-9] = 0.0
    col[0] = 1.0
    col.setflags(write=False)
    return col


def gram_column(cfg: FrameConfig) -> np.ndarray:
    """First column ``rho(d alpha T0)``, ``d = 0..MN-1``, of the Toeplitz Gram matrix."""
    return _gram_lags(float(cfg.alpha), float(cfg.beta), int(cfg.L_span), cfg.MN)


def gram_matrix(cfg: FrameConfig) -> np.ndarray:
    """FTN noise Gram matrix over time-ordered samples.

    ``G[i, j] = rho((i - j) alpha T0)``, with ``rho`` the raised cosine truncated
    beyond the ambiguity support ``2 L_span T0`` so the matrix is banded.
    """
    from scipy.linalg import toeplitz

    return toeplitz(gram_column(cfg))


def dd_apply(A: np.ndarray, M: int, N: int) -> np.ndarray:
    """Compute ``U @ A`` with ``U = kron(F_N, F_M^H)`` using FFTs.

    ``A`` is a length-MN vector or an ``(MN, K)`` matrix.
    """
    A = np.asarray(A)
    vec_in = A.ndim == 1
    B = A.reshape(N, M, -1)
    B = np.fft.ifft(np.fft.fft(B, axis=1, norm="ortho"), axis=0, norm="ortho")
    B = B.reshape(M * N, -1)
    return B[:, 0] if vec_in else B


def dd_apply_adjoint(A: np.ndarray, M: int, N: int) -> np.ndarray:
    """Compute ``U^H @ A``."""
    A = np.asarray(A)
    vec_in = A.ndim == 1
    B = A.reshape(N, M, -1)
    B = np.fft.fft(np.fft.ifft(B, axis=1, norm="ortho"), axis=0, norm="ortho")
    B = B.reshape(M * N, -1)
    return B[:, 0] if vec_in else B


def dd_transform(M: int, N: int) -> np.ndarray:
    """Dense ``U = kron(F_N, F_M^H)`` (use :func:`dd_apply` for products)."""
    from .core import dft_matrix

    return np.kron(dft_matrix(N), dft_matrix(M).conj().T)


def dd_conjugate(A: np.ndarray, M: int, N: int) -> np.ndarray:
    """``U A U^H`` for an ``(MN, MN)`` matrix."""
    UA = dd_apply(A, M, N)
    return dd_apply(UA.conj().T, M, N).conj().T


def dd_noise_covariance(G: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """DD-domain noise correlation ``G~ = U G U^H``."""
    G = np.asarray(G)
    if G.shape != (cfg.MN, cfg.MN):
        raise ConfigurationError(f"G must be {cfg.MN}x{cfg.MN}, got {G.shape}")
    Gt = dd_conjugate(G, cfg.M, cfg.N)
    return 0.5 * (Gt + Gt.conj().T)
