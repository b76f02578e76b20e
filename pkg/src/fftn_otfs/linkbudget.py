"""Large-scale loss for a LEO downlink and the resulting instantaneous SNR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, DomainError

MIN_ELEVATION_DEG = 5.0


@dataclass(frozen=True)
class GeometryConfig:
    h0: float = 780e3
    R_E: float = 6371e3
    fc: float = 28.0  # GHz

    def __post_init__(self):
        if self.h0 <= 0 or self.fc <= 0 or self.R_E <= 0:
            raise ConfigurationError("h0, R_E and fc must be positive")


@dataclass(frozen=True)
class LossParams:
    A_cl: float = 0.0
    B_cl: float = 0.0
    C: float = 20.0
    sigma_SF: float = 0.0
    A_zenith: float = 0.22
    L_s: float = 0.3

    def __post_init__(self):
        if self.sigma_SF < 0 or self.A_zenith < 0:
            raise ConfigurationError("sigma_SF and A_zenith must be non-negative")


@dataclass(frozen=True)
class LinkState:
    theta_E: float
    d: float
    fspl_db: float
    sf_db: float
    cl_db: float
    gas_db: float
    L_total: float
    gamma: float = float("nan")

    @property
    def gamma_dB(self) -> float:
        return 10 * math.log10(self.gamma)


def _check_elevation(theta_E: float) -> None:
    if not 0.0 < theta_E <= 90.0:
        raise DomainError(f"elevation must lie in (0, 90] degrees, got {theta_E}")


def clamp_elevation(theta_E: float) -> float:
    """Trajectory-mode clamp that keeps the 1/sin terms finite."""
    return max(float(theta_E), MIN_ELEVATION_DEG)


def slant_distance(theta_E: float, geo: GeometryConfig = GeometryConfig()) -> float:
    """Slant range (m) from a ground terminal to a satellite at altitude ``h0``."""
    _check_elevation(theta_E)
    if theta_E == 90.0:
        return float(geo.h0)
    s = math.sin(math.radians(theta_E))
    R, h = geo.R_E, geo.h0
    return math.sqrt(R * R * s * s + h * h + 2 * h * R) - R * s


def fspl(d: float, fc: float) -> float:
    """Free-space path loss in dB with ``d`` in meters and ``fc`` in GHz."""
    if d <= 0:
        raise DomainError("distance must be positive")
    return 32.45 + 20 * math.log10(fc) + 20 * math.log10(d)


def clutter_loss(theta_E: float, fc: float, p: LossParams) -> float:
    _check_elevation(theta_E)
    return p.A_cl + p.B_cl * math.log10(fc) + p.C * (1 - math.sin(math.radians(theta_E)))


def gas_attenuation(theta_E: float, A_zenith: float) -> float:
    _check_elevation(theta_E)
    return A_zenith / math.sin(math.radians(theta_E))


def link_state(theta_E, geo: GeometryConfig, p: LossParams, rng=None, include_shadowing=False) -> LinkState:
    """All loss components at one elevation; shadowing needs ``rng`` when enabled."""
    d = slant_distance(theta_E, geo)
    fs = fspl(d, geo.fc)
    sf = 0.0
    if include_shadowing and p.sigma_SF > 0:
        if rng is None:
            raise ConfigurationError("shadowing requires a random generator")
        sf = float(rng.normal(0.0, p.sigma_SF))
    cl = clutter_loss(theta_E, geo.fc, p)
    gas = gas_attenuation(theta_E, p.A_zenith)
    return LinkState(theta_E=float(theta_E), d=d, fspl_db=fs, sf_db=sf, cl_db=cl, gas_db=gas,
                     L_total=fs + sf + cl + gas + p.L_s)


def total_path_loss(theta_E, geo: GeometryConfig, p: LossParams, rng=None, include_shadowing=False) -> float:
    """``L = FSPL + SF + CL + L_gas + L_s`` in dB."""
    return link_state(theta_E, geo, p, rng, include_shadowing).L_total


def instantaneous_snr(P_tx: float, L: float, noise_power: float) -> float:
    """Linear SNR ``P_tx 10^(-L/10) / sigma^2``."""
    if P_tx <= 0 or noise_power <= 0:
        raise DomainError("P_tx and noise_power must be positive")
    return P_tx * 10 ** (-L / 10) / noise_power


def instantaneous_snr_db(P_tx: float, L: float, noise_power: float) -> float:
    return 10 * math.log10(P_tx) - L - 10 * math.log10(noise_power)


def thermal_noise_power(bandwidth_hz: float, temperature_k: float = 290.0) -> float:
    """kTB noise power in watts."""
    return 1.380649e-23 * temperature_k * bandwidth_hz


def elevation_table(thetas, geo: GeometryConfig, p: LossParams, P_tx: float, noise_power: float,
                    rng=None, include_shadowing=False):
    """Rows of (theta, d_km, fspl, cl, gas, sf, total, snr_db) for the CLI."""
    rows = []
    for th in np.atleast_1d(thetas):
        st = link_state(float(th), geo, p, rng, include_shadowing)
        snr = instantaneous_snr_db(P_tx, st.L_total, noise_power)
        rows.append((st.theta_E, st.d / 1e3, st.fspl_db, st.cl_db, st.gas_db, st.sf_db, st.L_total, snr))
    return rows
