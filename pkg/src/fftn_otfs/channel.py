"""Three-tap TDL profiles and per-frame delay-Doppler channel draws."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import ConfigurationError, FrameConfig
from .linkbudget import LossParams

_TABLE = {
    "A": dict(delays_ns=(0.0, 110.0, 285.0), powers_dB=(0.0, -4.7, -6.5), K_dB=-math.inf,
              theta_E_nominal=20.0, loss=dict(A_cl=15.0, B_cl=5.0, sigma_SF=6.0)),
    "B": dict(delays_ns=(0.0, 105.0, 275.0), powers_dB=(0.0, -3.8, -5.2), K_dB=-math.inf,
              theta_E_nominal=30.0, loss=dict(A_cl=15.0, B_cl=5.0, sigma_SF=6.0)),
    "C": dict(delays_ns=(0.0, 260.0, 830.0), powers_dB=(0.0, -3.5, -5.8), K_dB=-math.inf,
              theta_E_nominal=30.0, loss=dict(A_cl=5.0, B_cl=2.0, sigma_SF=6.0)),
    "D": dict(delays_ns=(0.0, 290.0, 895.0), powers_dB=(0.0, -4.2, -6.1), K_dB=13.3,
              theta_E_nominal=60.0, loss=dict(A_cl=5.0, B_cl=2.0, sigma_SF=2.0)),
    "E": dict(delays_ns=(0.0, 150.0, 350.0), powers_dB=(0.0, -8.0, -12.0), K_dB=22.0,
              theta_E_nominal=85.0, loss=dict(A_cl=0.0, B_cl=0.0, sigma_SF=2.0)),
}


@dataclass(frozen=True)
class TdlProfile:
    """Tap table with a profile-wide Ricean K applied to every tap."""

    name: str
    delays_ns: tuple
    powers_dB: tuple
    K_dB: float
    theta_E_nominal: float = 90.0
    loss_params: LossParams = field(default_factory=LossParams)

    def __post_init__(self):
        if len(self.delays_ns) != len(self.powers_dB) or len(self.delays_ns) == 0:
            raise ConfigurationError("delays and powers must have equal, nonzero length")
        if any(d < 0 for d in self.delays_ns):
            raise ConfigurationError("tap delays must be non-negative")

    @property
    def powers(self) -> np.ndarray:
        p = 10 ** (np.asarray(self.powers_dB, dtype=float) / 10)
        return p / p.sum()

    @property
    def K_linear(self) -> float:
        if self.K_dB == -math.inf:
            return 0.0
        if self.K_dB == math.inf:
            return math.inf
        return 10 ** (self.K_dB / 10)


def builtin_profile(name: str) -> TdlProfile:
    key = name.upper().removeprefix("TDL-").removeprefix("TDL")
    if key not in _TABLE:
        raise ConfigurationError(f"unknown TDL profile {name!r}")
    row = _TABLE[key]
    return TdlProfile(name=key, delays_ns=row["delays_ns"], powers_dB=row["powers_dB"], K_dB=row["K_dB"],
                      theta_E_nominal=row["theta_E_nominal"], loss_params=LossParams(**row["loss"]))


def los_profile() -> TdlProfile:
    """Single deterministic unit tap; an AWGN channel up to a random phase."""
    return TdlProfile(name="LOS", delays_ns=(0.0,), powers_dB=(0.0,), K_dB=math.inf)


def _parse_k(v) -> float:
    if isinstance(v, str):
        v = v.strip().lower()
        if v in ("-inf", "-infinity", "rayleigh"):
            return -math.inf
        if v in ("inf", "+inf", "infinity", "los"):
            return math.inf
    return float(v)


def profile_from_dict(d: dict) -> TdlProfile:
    """Build a profile from Table-I style fields (``K_dB`` accepts "-inf")."""
    try:
        loss = LossParams(**d.get("loss_params", {}))
        return TdlProfile(name=str(d.get("name", "custom")), delays_ns=tuple(map(float, d["delays_ns"])),
                          powers_dB=tuple(map(float, d["powers_dB"])), K_dB=_parse_k(d.get("K_dB", "-inf")),
                          theta_E_nominal=float(d.get("theta_E_nominal", 90.0)), loss_params=loss)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"invalid profile description: {exc}") from exc


def load_profile(path) -> TdlProfile:
    return profile_from_dict(json.loads(Path(path).read_text()))


def resolve_profile(name_or_path) -> TdlProfile:
    """Accept ``tdl-a``..``tdl-e``, ``los``, or a JSON file path."""
    s = str(name_or_path)
    if s.lower() == "los":
        return los_profile()
    if s.lower().endswith(".json"):
        return load_profile(s)
    return builtin_profile(s)


def ricean_tap(P_p: float, K_p: float, phi: float, rng) -> complex:
    """Ricean tap gain; ``K_p = inf`` gives the deterministic LOS limit."""
    if math.isinf(K_p):
        return complex(math.sqrt(P_p) * np.exp(1j * phi))
    h_sc = (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2)
    return complex(math.sqrt(P_p) * (math.sqrt(K_p / (K_p + 1)) * np.exp(1j * phi) + math.sqrt(1 / (K_p + 1)) * h_sc))


@dataclass(frozen=True)
class ChannelRealization:
    """Per-frame tap draws and their grid indices for a given frame config.

    ``nu`` is stored in Hz and is independent of the compression factor; the
    Doppler index split ``nu * N * alpha * T_sym = r + kappa`` depends on it.
    """

    h: np.ndarray
    delay: np.ndarray  # unquantized delay (s)
    nu: np.ndarray  # Hz
    l: np.ndarray
    r: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray  # quantized delay l / (M delta_f)

    @property
    def n_taps(self) -> int:
        return int(self.h.size)

    @classmethod
    def from_draws(cls, h, delay, nu, cfg: FrameConfig, quantize: str = "floor") -> "ChannelRealization":
        h = np.asarray(h, dtype=complex)
        delay = np.asarray(delay, dtype=float)
        nu = np.asarray(nu, dtype=float)
        scaled = delay * cfg.M * cfg.delta_f
        if quantize == "floor":
            l = np.floor(scaled + 1e-9).astype(int)
        elif quantize == "round":
            l = np.floor(scaled + 0.5).astype(int)
        else:
            raise ConfigurationError(f"unknown delay quantization {quantize!r}")
        if np.any(l >= cfg.M):
            raise ConfigurationError("tap delay exceeds the delay span of the grid")
        bins = nu / cfg.doppler_resolution
        r = np.floor(bins + 0.5).astype(int)
        kappa = bins - r
        return cls(h=h, delay=delay, nu=nu, l=l, r=r, kappa=kappa, tau=l * cfg.delay_resolution)

    def with_config(self, cfg: FrameConfig, quantize: str = "floor") -> "ChannelRealization":
        return ChannelRealization.from_draws(self.h, self.delay, self.nu, cfg, quantize)

    def scaled(self, factor: complex) -> "ChannelRealization":
        return replace(self, h=self.h * factor)


def single_tap(cfg: FrameConfig, h=1.0, l=0, nu=0.0) -> ChannelRealization:
    """Convenience constructor for a one-tap channel on the delay grid."""
    return ChannelRealization.from_draws([h], [l * cfg.delay_resolution], [nu], cfg)


def default_nu_max(cfg: FrameConfig) -> float:
    """Two Doppler bins of the Nyquist frame in Hz, capped at ``delta_f / 4``."""
    return min(2.0 * cfg.delta_f / cfg.N, 0.25 * cfg.delta_f)


def realize(profile: TdlProfile, cfg: FrameConfig, nu_max: float | None = None, rng=None,
            quantize: str = "floor") -> ChannelRealization:
    """Draw one frame's tap gains, LOS phases and Doppler shifts."""
    if rng is None:
        raise ConfigurationError("realize needs a random generator")
    if nu_max is None:
        nu_max = default_nu_max(cfg)
    if not 0 <= nu_max < cfg.delta_f / 2:
        raise ConfigurationError("nu_max must lie in [0, delta_f / 2)")
    P = profile.powers
    K = profile.K_linear
    n = P.size
    phi = rng.uniform(0.0, 2 * np.pi, n)
    h = np.array([ricean_tap(P[i], K, phi[i], rng) for i in range(n)])
    nu = rng.uniform(-nu_max, nu_max, n) if nu_max > 0 else np.zeros(n)
    delay = np.asarray(profile.delays_ns, dtype=float) * 1e-9
    return ChannelRealization.from_draws(h, delay, nu, cfg, quantize)
