"""Experiment scenarios, sweep aggregation, CSV output and the oracle suite."""

from __future__ import annotations

import io
import json
import math
import subprocess
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from . import __version__
from .adapt import Lut, PassConfig, SnrErrorModel, lut_preset, run_pass, select_alpha
from .channel import resolve_profile, single_tap
from .core import ConfigurationError, FrameConfig, map_bits
from .engine import ESTIMATE, MonteCarloSpec, TrialTable, run_table, shadow_offset, stream
from .metrics import DEFAULT_P_C, DEFAULT_XI, energy_efficiency, raw_rate, success_probability

SWEEP_COLUMNS = ("snr_db", "alpha", "ber_sim", "ber_sim_ci95", "ber_theory", "fer_sim", "t_eff_bps",
                 "se_bps_hz", "ee_bit_per_J", "trials", "errors_counted", "t_eff_ci95")
PASS_COLUMNS = ("slot", "time_s", "theta_deg", "snr_db", "snr_est_db", "alpha", "ber", "t_eff_bps")


@dataclass(frozen=True)
class Scenario:
    frame: FrameConfig = field(default_factory=FrameConfig)
    model: str = "tdl-a"
    snr: tuple = (0.0, 30.0, 5.0)
    alpha: str = "1.0"
    trials: int = 6000
    seed: int = 1
    mode: str = "direct-snr"
    nu_max: float | None = None
    quantize: str = "floor"
    theory_draws: int = 100
    P_tx: float = 1.0
    xi: float = DEFAULT_XI
    P_c: float = DEFAULT_P_C
    sigma_e: tuple = (0.0,)
    out: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.mode not in ("direct-snr", "linkbudget"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if len(self.snr) != 3 or self.snr[2] <= 0 or self.snr[1] < self.snr[0]:
            raise ConfigurationError("snr must be (start, stop, step) with step > 0 and stop >= start")
        if self.quantize not in ("floor", "round"):
            raise ConfigurationError("quantize must be 'floor' or 'round'")
        parse_alpha_policy(self.alpha)
        resolve_profile(self.model)

    @property
    def snr_points(self) -> tuple:
        start, stop, step = map(float, self.snr)
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))

    def metadata(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d["version"] = version_string()
        return d


def parse_alpha_policy(s) -> float | Lut:
    """``"0.9"`` gives a fixed factor, ``"lut:<preset>"`` a LUT."""
    s = str(s)
    if s.startswith("lut:"):
        return lut_preset(s[4:])
    try:
        a = float(s)
    except ValueError:
        raise ConfigurationError(f"bad alpha policy {s!r}") from None
    if not 0 < a <= 1:
        raise ConfigurationError(f"alpha must lie in (0, 1], got {a}")
    return a


def scenario_from_dict(d: dict) -> Scenario:
    d = dict(d)
    frame = FrameConfig(**d.pop("frame", {}))
    for key in ("snr", "sigma_e"):
        if key in d:
            v = d[key]
            d[key] = tuple(float(x) for x in (v.split(":") if isinstance(v, str) else v))
    try:
        return Scenario(frame=frame, **d)
    except TypeError as exc:
        raise ConfigurationError(f"invalid scenario: {exc}") from exc


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


_VERSION = None


def version_string() -> str:
    global _VERSION
    if _VERSION is None:
        rev = "unknown"
        try:
            out = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=Path(__file__).parent,
                                 capture_output=True, text=True, timeout=5)
            if out.returncode == 0 and out.stdout.strip():
                rev = out.stdout.strip()
        except (OSError, subprocess.SubprocessError):
            pass
        _VERSION = f"fftn_otfs {__version__} ({rev})"
    return _VERSION


# ---------------------------------------------------------------- tables


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class SweepTable:
    """A trial table plus the per-trial SNR offsets it was simulated with."""

    scenario: Scenario
    table: TrialTable
    offsets_db: np.ndarray  # per-trial shadowing in linkbudget mode, zeros otherwise

    @property
    def snr_points(self):
        return self.table.spec.snr_db


def _spec(s: Scenario, alphas: Sequence[float]) -> MonteCarloSpec:
    profile = resolve_profile(s.model)
    shadow = profile.loss_params.sigma_SF if s.mode == "linkbudget" else 0.0
    return MonteCarloSpec(cfg=s.frame, profile=profile, alphas=tuple(sorted(set(alphas), reverse=True)),
                          snr_db=s.snr_points, trials=s.trials, seed=s.seed, nu_max=s.nu_max, quantize=s.quantize,
                          theory_draws=s.theory_draws, shadow_std_db=shadow)


def simulate(s: Scenario, alphas: Sequence[float], workers: int = 1) -> SweepTable:
    """Run the shared trial table covering every candidate alpha."""
    spec = _spec(s, alphas)
    table = run_table(spec, workers)
    offsets = np.array([shadow_offset(spec, t) for t in range(spec.trials)])
    return SweepTable(scenario=s, table=table, offsets_db=offsets)


def estimation_errors(s: Scenario, sigma_e: float) -> np.ndarray:
    """``[trial, point]`` SNR estimation errors in dB (zeros when ``sigma_e = 0``)."""
    P = len(s.snr_points)
    if sigma_e == 0:
        return np.zeros((s.trials, P))
    z = np.array([[stream(s.seed, ESTIMATE, p, t).standard_normal() for p in range(P)] for t in range(s.trials)])
    return sigma_e * z


def policy_indices(st: SweepTable, policy, sigma_e: float = 0.0) -> np.ndarray:
    """Alpha index per ``[trial, point]`` for a fixed factor or a LUT."""
    T, P = st.table.errors.shape[:2]
    if isinstance(policy, Lut):
        true_snr = np.asarray(st.snr_points)[None, :] - st.offsets_db[:, None]
        est = true_snr + estimation_errors(st.scenario, sigma_e) if sigma_e else true_snr
        idx = np.empty((T, P), dtype=int)
        cache = {}
        for t in range(T):
            for p in range(P):
                a = select_alpha(float(est[t, p]), policy)
                if a not in cache:
                    cache[a] = st.table.alpha_index(a)
                idx[t, p] = cache[a]
        return idx
    return np.full((T, P), st.table.alpha_index(float(policy)), dtype=int)


@dataclass
class SweepRow:
    snr_db: float
    alpha: float
    ber_sim: float
    ber_lo: float
    ber_hi: float
    ber_theory: float
    fer_sim: float
    t_eff_bps: float
    t_lo: float
    t_hi: float
    se_bps_hz: float
    ee_bit_per_J: float
    trials: int
    errors_counted: int

    @property
    def ber_ci95(self) -> float:
        return 0.5 * (self.ber_hi - self.ber_lo)

    @property
    def t_ci95(self) -> float:
        return 0.5 * (self.t_hi - self.t_lo)

    def values(self) -> tuple:
        return (self.snr_db, self.alpha, self.ber_sim, self.ber_ci95, self.ber_theory, self.fer_sim, self.t_eff_bps,
                self.se_bps_hz, self.ee_bit_per_J, self.trials, self.errors_counted, self.t_ci95)


@dataclass
class SweepResult:
    label: str
    rows: list
    metadata: dict

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        return format_csv(self.metadata | {"policy": self.label}, SWEEP_COLUMNS, [r.values() for r in self.rows])


def evaluate_policy(st: SweepTable, policy, label: str, sigma_e: float = 0.0) -> SweepResult:
    s = st.scenario
    tab = st.table
    cfg = s.frame
    idx = policy_indices(st, policy, sigma_e)
    T = tab.errors.shape[0]
    n_bits = tab.n_bits
    bandwidth = cfg.M * cfg.delta_f
    rows = []
    trial_ix = np.arange(T)
    for p, snr in enumerate(st.snr_points):
        e = tab.errors[trial_ix, p, idx[:, p]].astype(np.int64)
        E = int(e.sum())
        n_total = T * n_bits
        lo, hi = wilson_interval(E, n_total)
        t_eff = t_lo = t_hi = ee = a_mean = 0.0
        for k in np.unique(idx[:, p]):
            sel = idx[:, p] == k
            w = sel.mean()
            c = cfg.with_alpha(tab.spec.alphas[k])
            r_raw = raw_rate(c)[1]
            Ek = int(e[sel].sum())
            nk = int(sel.sum()) * n_bits
            pk = Ek / nk
            klo, khi = wilson_interval(Ek, nk)
            t_eff += w * r_raw * success_probability(pk, n_bits)
            t_lo += w * r_raw * success_probability(khi, n_bits)
            t_hi += w * r_raw * success_probability(klo, n_bits)
            ee += w * energy_efficiency(c, pk, s.P_tx, s.xi, s.P_c)
            a_mean += w * c.alpha
        D = tab.theory.shape[0]
        th = float(np.mean(tab.theory[np.arange(D), p, idx[:D, p]])) if D else float("nan")
        rows.append(SweepRow(snr_db=float(snr), alpha=a_mean, ber_sim=E / n_total, ber_lo=lo, ber_hi=hi,
                             ber_theory=th, fer_sim=float(np.mean(e > 0)), t_eff_bps=t_eff, t_lo=t_lo, t_hi=t_hi,
                             se_bps_hz=t_eff / bandwidth, ee_bit_per_J=ee, trials=T, errors_counted=E))
    meta = s.metadata() | {"sigma_e_applied": sigma_e}
    return SweepResult(label=label, rows=rows, metadata=meta)


def _label(policy) -> str:
    return f"lut:{policy.describe()}" if isinstance(policy, Lut) else f"fixed:{policy:g}"


def ber_sweep(s: Scenario, workers: int = 1) -> SweepResult:
    """Simulated and analytic BER per SNR point under the scenario's alpha policy."""
    policy = parse_alpha_policy(s.alpha)
    alphas = policy.alphas if isinstance(policy, Lut) else (policy,)
    st = simulate(s, alphas, workers)
    return evaluate_policy(st, policy, _label(policy), s.sigma_e[0] if s.sigma_e else 0.0)


def throughput_sweep(s: Scenario, workers: int = 1, fixed=(1.0, 0.9, 0.8)) -> dict:
    """Fixed-alpha baselines plus the LUT policy from one shared trial table."""
    policy = parse_alpha_policy(s.alpha)
    lut = policy if isinstance(policy, Lut) else lut_preset("default")
    st = simulate(s, tuple(fixed) + lut.alphas, workers)
    out = {f"alpha_{a:g}": evaluate_policy(st, a, _label(a)) for a in fixed}
    out["fftn"] = evaluate_policy(st, lut, _label(lut))
    return out


def robustness_sweep(s: Scenario, sigma_e_list: Sequence[float], workers: int = 1, table: SweepTable | None = None) -> dict:
    """LUT BER for each SNR estimation error level; every level reuses one trial table."""
    policy = parse_alpha_policy(s.alpha)
    lut = policy if isinstance(policy, Lut) else lut_preset("default")
    st = table if table is not None else simulate(s, lut.alphas, workers)
    return {float(se): evaluate_policy(st, lut, _label(lut), float(se)) for se in sigma_e_list}


def alpha_trace(res: SweepResult) -> str:
    return format_csv(res.metadata | {"policy": res.label}, ("snr_db", "alpha"),
                      [(r.snr_db, r.alpha) for r in res.rows])


def pass_sim(s: Scenario, pc: PassConfig, fixed_alpha: float | None = None, simulate_frames: bool = True):
    policy = parse_alpha_policy(s.alpha)
    lut = policy if isinstance(policy, Lut) else None
    fixed = fixed_alpha if fixed_alpha is not None else (None if lut else policy)
    sigma_e = s.sigma_e[0] if s.sigma_e else 0.0
    return run_pass(pc, lut, None, s.frame, seed=s.seed, snr_model=SnrErrorModel(sigma_e), fixed_alpha=fixed,
                    simulate=simulate_frames, nu_max=s.nu_max, quantize=s.quantize)


def pass_csv(records, s: Scenario, pc: PassConfig) -> str:
    meta = s.metadata() | {"pass": asdict(pc)}
    rows = [(r.slot, r.time_s, r.theta_deg, r.snr_db, r.snr_est_db, r.alpha, r.ber, r.t_eff_bps) for r in records]
    return format_csv(meta, PASS_COLUMNS, rows)


# ---------------------------------------------------------------- CSV


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def format_csv(meta: dict, columns, rows) -> str:
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {json.dumps(meta[key], default=_json_default, sort_keys=True)}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, float) and math.isinf(o):
        return str(o)
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    return str(o)


def csv_body(text: str) -> str:
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))


def read_csv(text: str) -> tuple[list, np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return cols, data


# ---------------------------------------------------------------- oracle suite


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    deviation: float
    tolerance: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: max dev {self.deviation:.3e} (tol {self.tolerance:.0e})"


def validate(seed: int = 1, corrupt_ambiguity: bool = False) -> list[Check]:
    """Small-instance oracle equivalences.

    ``corrupt_ambiguity`` is a mutation hook: the matrix pipeline then samples
    the ambiguity on the Nyquist lattice instead of the FTN lattice, which the
    waveform comparison at ``alpha < 1`` must catch.
    """
    from .detector import lmmse_detect
    from .engine import LinkModel, draw_frame
    from .modem import build_heff, isfft, sfft, waveform_oracle
    from .pulse import PulseSpec, ambiguity, dd_apply, dd_noise_covariance, gram_matrix

    rng = np.random.default_rng(seed)
    checks = []

    dev = 0.0
    for M in (4, 16, 32):
        for _ in range(20):
            x = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
            X = isfft(x)
            dev = max(dev, np.abs(sfft(X) - x).max(), abs(np.linalg.norm(X) - np.linalg.norm(x)))
    checks.append(Check("ISFFT/SFFT round trip and Parseval", dev < 1e-10, dev, 1e-10))

    cfg1 = FrameConfig(M=4, N=4, alpha=1.0)
    d1 = np.abs(gram_matrix(cfg1) - np.eye(16)).max()
    d2 = np.abs(dd_noise_covariance(np.eye(16), cfg1) - np.eye(16)).max()
    d3 = np.abs(build_heff(single_tap(cfg1), cfg1, mode="ideal").H - np.eye(16)).max()
    checks.append(Check("alpha=1 Gram is identity", d1 < 1e-9, d1, 1e-9))
    checks.append(Check("DD transform of identity", d2 < 1e-10, d2, 1e-10))
    checks.append(Check("ideal single-tap H_eff is identity", d3 < 1e-9, d3, 1e-9))

    cfg8 = FrameConfig(M=4, N=4, alpha=0.8)
    spec = PulseSpec.from_frame(cfg8)
    g01 = gram_matrix(cfg8)[0, 1]
    d = abs(g01 - ambiguity(0.8 * cfg8.T0, 0.0, spec))
    checks.append(Check("Gram entry vs numerical ambiguity", d < 1e-3, d, 1e-3))

    for alpha in (1.0, 0.8):
        cfg = FrameConfig(M=4, N=4, alpha=alpha)
        worst = 0.0
        cases = [single_tap(cfg), single_tap(cfg, h=0.6 - 0.8j, l=1, nu=0.3 * cfg.doppler_resolution)]
        for real in cases:
            x = map_bits(rng.integers(0, 2, 2 * cfg.MN), 4)
            ref = waveform_oracle(cfg, real, x).y
            mcfg = cfg.with_alpha(1.0) if corrupt_ambiguity else cfg
            H = build_heff(real.with_config(mcfg), mcfg).H
            worst = max(worst, np.abs(H @ x - ref).max())
        checks.append(Check(f"waveform oracle vs matrix pipeline, alpha={alpha:g}", worst <= 5e-2, worst, 5e-2))

    worst = 0.0
    for _ in range(20):
        n = 4
        H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        Gt = A @ A.conj().T + 0.5 * np.eye(n)
        s2 = float(rng.uniform(0.05, 2.0))
        res = lmmse_detect(H, np.zeros(n), s2, Gt, full_phi=True)
        Rz = s2 * Gt
        Phi = np.linalg.inv(np.eye(n) + H.conj().T @ np.linalg.inv(Rz) @ H)
        worst = max(worst, np.abs(res.Phi - Phi).max())
    checks.append(Check("solve-based LMMSE covariance vs direct inverse", worst < 1e-10, worst, 1e-10))

    cfg = FrameConfig(M=8, N=8, alpha=0.8, mod_order=4)
    from .channel import builtin_profile, realize

    real = realize(builtin_profile("A"), cfg, rng=rng)
    link = LinkModel(real, cfg)
    _, x, w = draw_frame(cfg, seed, 0, 0)
    s2 = 0.05
    r = link.receive(x, w, s2)
    Gt = dd_noise_covariance(gram_matrix(cfg), cfg)
    ref = lmmse_detect(build_heff(real, cfg), dd_apply(r, cfg.M, cfg.N), s2, Gt).x_hat
    d = np.abs(link.detect(r, s2) - ref).max()
    checks.append(Check("banded engine vs dense colored-noise LMMSE", d < 1e-8, d, 1e-8))
    return checks


# ---------------------------------------------------------------- LUT calibration


def calibrate_lut(s: Scenario, p_th: float = 1e-3, candidates=(1.0, 0.9, 0.8), workers: int = 1):
    """Thresholds from the analytic BER: mode k starts at the lowest grid SNR from
    which its averaged BER stays at or below ``p_th``.

    Returns ``(lut, curves)`` with ``curves[alpha]`` the averaged analytic BER per point.
    """
    cal = replace(s, trials=max(1, s.theory_draws))
    st = simulate(cal, candidates, workers)
    snrs = np.asarray(st.snr_points)
    curves = {}
    modes = [(1.0, -math.inf)]
    for a in sorted(candidates, reverse=True):
        k = st.table.alpha_index(a)
        curve = np.nanmean(st.table.theory[:, :, k], axis=0)
        curves[a] = curve
        if a == 1.0:
            continue
        ok = curve <= p_th
        start = None
        for i in range(len(snrs) - 1, -1, -1):
            if ok[i]:
                start = i
            else:
                break
        if start is None:
            continue
        thr = float(snrs[start])
        if thr > modes[-1][1]:
            modes.append((a, thr))
    return Lut(tuple(modes)), curves


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0
