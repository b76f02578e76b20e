"""Frame configuration, constellation mapping and shared vector conventions.

DD grids are ``(M, N)`` arrays indexed ``[l, k]`` (delay, Doppler). Whenever a
grid is flattened the delay index runs fastest, ``u = l + k*M``, which is
column-major (Fortran) order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ConfigurationError(ValueError):
    """Invalid configuration or inconsistent dimensions."""


class DomainError(ValueError):
    """Argument outside the physical domain of a formula."""


class NumericalError(ArithmeticError):
    """A factorization or solve failed even after regularization."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FrameConfig:
    """OTFS grid geometry, FTN compression and pulse parameters.

    ``T0`` is the Nyquist sample interval ``T_sym / M`` and the FTN sample
    interval is ``alpha * T0``. ``Q`` is only used by waveform-level code.
    """

    M: int = 16
    N: int = 16
    delta_f: float = 15e3
    alpha: float = 1.0
    beta: float = 0.3
    L_span: int = 6
    mod_order: int = 2
    Q: int = 8

    def __post_init__(self):
        if not (_is_pow2(self.M) and self.M >= 4 and _is_pow2(self.N) and self.N >= 4):
            raise ConfigurationError(f"M, N must be powers of two >= 4, got {self.M}x{self.N}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must lie in [0, 1], got {self.beta}")
        if self.mod_order not in (2, 4):
            raise ConfigurationError(f"mod_order must be 2 or 4, got {self.mod_order}")
        if self.delta_f <= 0:
            raise ConfigurationError("delta_f must be positive")
        if self.L_span < 1 or self.Q < 1:
            raise ConfigurationError("L_span and Q must be positive")

    @property
    def MN(self) -> int:
        return self.M * self.N

    @property
    def T_sym(self) -> float:
        return 1.0 / self.delta_f

    @property
    def T0(self) -> float:
        return self.T_sym / self.M

    @property
    def TF(self) -> float:
        return self.alpha * self.T0

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.mod_order))

    @property
    def n_bits(self) -> int:
        return self.MN * self.bits_per_symbol

    @property
    def delay_resolution(self) -> float:
        return 1.0 / (self.M * self.delta_f)

    @property
    def doppler_resolution(self) -> float:
        # inverse of the compressed frame duration N * alpha * T_sym
        return 1.0 / (self.N * self.alpha * self.T_sym)

    def with_alpha(self, alpha: float) -> "FrameConfig":
        from dataclasses import replace

        return replace(self, alpha=float(alpha))


def vec(grid: np.ndarray) -> np.ndarray:
    """Flatten an ``(M, N)`` grid with the delay index fastest."""
    return np.asarray(grid).reshape(-1, order="F")


def unvec(v: np.ndarray, M: int, N: int) -> np.ndarray:
    return np.asarray(v).reshape((M, N), order="F")


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix with kernel ``exp(+j 2 pi a b / n) / sqrt(n)``.

    With this sign, ``kron(F_N, F_M^H)`` acting on a delay-fastest vector is
    exactly the SFFT.
    """
    a = np.arange(n)
    return np.exp(2j * np.pi * np.outer(a, a) / n) / np.sqrt(n)


_QPSK_SCALE = 1.0 / math.sqrt(2.0)


def constellation(mod_order: int) -> np.ndarray:
    """Constellation points indexed by integer bit label (MSB first)."""
    if mod_order == 2:
        return np.array([1.0 + 0j, -1.0 + 0j])
    if mod_order == 4:
        # label b0 b1: b0 -> sign of I, b1 -> sign of Q (Gray)
        return _QPSK_SCALE * np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
    raise ConfigurationError(f"unsupported mod_order {mod_order}")


def map_bits(bits, mod_order: int, M: int | None = None, N: int | None = None) -> np.ndarray:
    """Map a bit block to unit-power symbols.

    Returns a flat symbol vector in ``u = l + k*M`` order, or an ``(M, N)``
    grid when both ``M`` and ``N`` are given.
    """
    bits = np.asarray(bits, dtype=np.int8).ravel()
    k = {2: 1, 4: 2}.get(mod_order)
    if k is None:
        raise ConfigurationError(f"unsupported mod_order {mod_order}")
    if M is not None and N is not None and bits.size != M * N * k:
        raise ConfigurationError(f"expected {M * N * k} bits for a {M}x{N} grid, got {bits.size}")
    if bits.size % k:
        raise ConfigurationError(f"bit count {bits.size} is not a multiple of {k}")
    if np.any((bits != 0) & (bits != 1)):
        raise ConfigurationError("bits must be 0 or 1")
    if mod_order == 2:
        syms = 1.0 - 2.0 * bits.astype(float) + 0j
    else:
        b = bits.reshape(-1, 2).astype(float)
        syms = _QPSK_SCALE * ((1.0 - 2.0 * b[:, 0]) + 1j * (1.0 - 2.0 * b[:, 1]))
    if M is not None and N is not None:
        return unvec(syms, M, N)
    return syms


def demap_symbols(symbols, mod_order: int) -> np.ndarray:
    """Hard nearest-neighbour demapping; points on a boundary go to bit 0."""
    s = vec(symbols) if np.ndim(symbols) == 2 else np.asarray(symbols).ravel()
    if mod_order == 2:
        return (s.real < 0).astype(np.int8)
    if mod_order == 4:
        out = np.empty((s.size, 2), dtype=np.int8)
        out[:, 0] = s.real < 0
        out[:, 1] = s.imag < 0
        return out.ravel()
    raise ConfigurationError(f"unsupported mod_order {mod_order}")
