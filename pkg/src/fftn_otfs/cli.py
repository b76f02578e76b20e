"""Command-line entry point: ``python3 -m fftn_otfs <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .adapt import PassConfig
from .channel import resolve_profile
from .core import ConfigurationError, DomainError
from .harness import (Scenario, alpha_trace, ber_sweep, calibrate_lut, format_csv, load_scenario, pass_csv,
                      pass_sim, robustness_sweep, throughput_sweep, validate)
from .linkbudget import MIN_ELEVATION_DEG, GeometryConfig, elevation_table, thermal_noise_power

FAST_TRIALS = 500


def _snr(text: str) -> tuple:
    try:
        parts = tuple(float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected start:stop:step in dB") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected start:stop:step in dB")
    return parts


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(","))


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="scenario JSON; flags override its fields")
    p.add_argument("--model", help="tdl-a..tdl-e, los, or a profile JSON path")
    p.add_argument("--alpha", help="fixed factor such as 0.9, or lut:default / lut:footnote-modes")
    p.add_argument("--snr", type=_snr, help="start:stop:step in dB")
    p.add_argument("--trials", type=int, help="Monte Carlo frames per SNR point (default 6000)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes; results do not depend on it")
    p.add_argument("--fast", action="store_true", help=f"use {FAST_TRIALS} trials per point")
    p.add_argument("--out", help="output CSV path (stdout if omitted)")
    p.add_argument("--strict-paper", action="store_true", help="floor-quantize tap delays")
    p.add_argument("--M", type=int, help="delay bins")
    p.add_argument("--N", type=int, help="Doppler bins")
    p.add_argument("--mod-order", type=int, choices=(2, 4), help="2 = BPSK, 4 = QPSK")
    p.add_argument("--mode", choices=("direct-snr", "linkbudget"))
    p.add_argument("--quantize", choices=("floor", "round"), help="tap delay quantization (default floor)")
    p.add_argument("--nu-max", type=float, help="maximum per-tap Doppler in Hz")
    p.add_argument("--theory-draws", type=int, help="channel draws for the analytic BER average")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fftn-otfs", description="Flexible FTN-OTFS LEO link simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [("ber-sweep", "BER versus SNR for one alpha policy"),
                        ("throughput-sweep", "fixed-alpha baselines and the LUT policy"),
                        ("robustness-sweep", "LUT BER under SNR estimation error"),
                        ("calibrate-lut", "derive LUT thresholds from the analytic BER")]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "robustness-sweep":
            p.add_argument("--sigma-e", type=_floats, default=(0.0, 1.0, 3.0, 5.0),
                           help="comma-separated estimation error std values (dB)")
        if name == "calibrate-lut":
            p.add_argument("--target-ber", type=float, default=1e-3)
            p.add_argument("--candidates", type=_floats, default=(1.0, 0.9, 0.8))

    p = sub.add_parser("pass-sim", help="one satellite pass under the LUT controller",
                       description=f"Elevations below {MIN_ELEVATION_DEG:g} degrees are clamped.")
    _common(p)
    p.add_argument("--max-elevation", type=float, default=90.0)
    p.add_argument("--duration", type=float, default=600.0, help="pass duration (s)")
    p.add_argument("--slots", type=int, default=61)
    p.add_argument("--p-tx", type=float, default=4e7, help="transmit power incl. antenna gains (W)")
    p.add_argument("--noise-power", type=float, default=thermal_noise_power(10e6), help="noise power (W)")
    p.add_argument("--sigma-e", type=float, default=0.0, help="SNR estimation error std (dB)")
    p.add_argument("--no-shadowing", action="store_true")
    p.add_argument("--h0", type=float, default=780e3, help="altitude (m)")
    p.add_argument("--fc", type=float, default=28.0, help="carrier (GHz)")

    p = sub.add_parser("linkbudget", help="per-elevation loss table",
                       description=f"Elevations below {MIN_ELEVATION_DEG:g} degrees are clamped.")
    p.add_argument("--model", default="tdl-e")
    p.add_argument("--theta", default="5:90:5", help="start:stop:step in degrees")
    p.add_argument("--h0", type=float, default=780e3)
    p.add_argument("--fc", type=float, default=28.0)
    p.add_argument("--p-tx", type=float, default=4e7)
    p.add_argument("--noise-power", type=float, default=thermal_noise_power(10e6))
    p.add_argument("--shadowing", action="store_true")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("validate", help="run the small-instance oracle suite")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--corrupt-ambiguity", action="store_true", help=argparse.SUPPRESS)
    return ap


def scenario_from_args(args) -> Scenario:
    s = load_scenario(args.config) if args.config else Scenario()
    frame = s.frame
    fkw = {k: v for k, v in (("M", args.M), ("N", args.N), ("mod_order", args.mod_order)) if v is not None}
    if fkw:
        frame = replace(frame, **fkw)
    kw = {"frame": frame}
    for attr, val in (("model", args.model), ("alpha", args.alpha), ("snr", args.snr), ("trials", args.trials),
                      ("seed", args.seed), ("mode", args.mode), ("quantize", args.quantize),
                      ("nu_max", args.nu_max), ("theory_draws", args.theory_draws), ("out", args.out)):
        if val is not None:
            kw[attr] = val
    if args.fast:
        kw["trials"] = FAST_TRIALS
    if args.strict_paper:
        kw["quantize"] = "floor"
    return replace(s, **kw)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _sibling(path: str | None, suffix: str) -> str | None:
    if not path:
        return None
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{suffix}{p.suffix or '.csv'}"))


def _run(args) -> int:
    cmd = args.command
    if cmd == "validate":
        checks = validate(seed=args.seed, corrupt_ambiguity=args.corrupt_ambiguity)
        for c in checks:
            print(c.line())
        ok = all(c.passed for c in checks)
        print("all oracle checks passed" if ok else "oracle checks FAILED")
        return 0 if ok else 1

    if cmd == "linkbudget":
        start, stop, step = _snr(args.theta)
        thetas = np.arange(start, stop + step / 2, step)
        thetas = np.maximum(thetas, MIN_ELEVATION_DEG)
        prof = resolve_profile(args.model)
        rng = np.random.default_rng(args.seed)
        rows = elevation_table(thetas, GeometryConfig(h0=args.h0, fc=args.fc), prof.loss_params, args.p_tx,
                               args.noise_power, rng, args.shadowing)
        meta = {"model": prof.name, "h0": args.h0, "fc": args.fc, "p_tx": args.p_tx,
                "noise_power": args.noise_power, "shadowing": args.shadowing, "seed": args.seed}
        cols = ("theta_deg", "d_km", "fspl_db", "cl_db", "gas_db", "sf_db", "total_db", "snr_db")
        _emit(format_csv(meta, cols, rows), args.out)
        return 0

    s = scenario_from_args(args)
    if cmd == "ber-sweep":
        _emit(ber_sweep(s, args.workers).to_csv(), s.out)
    elif cmd == "throughput-sweep":
        if not s.alpha.startswith("lut:"):
            s = replace(s, alpha="lut:default")
        res = throughput_sweep(s, args.workers)
        if s.out:
            for key, r in res.items():
                _emit(r.to_csv(), _sibling(s.out, key))
            _emit(alpha_trace(res["fftn"]), _sibling(s.out, "alpha_trace"))
        else:
            for key, r in res.items():
                sys.stdout.write(f"## {key}\n" + r.to_csv())
            sys.stdout.write("## alpha_trace\n" + alpha_trace(res["fftn"]))
    elif cmd == "robustness-sweep":
        if not s.alpha.startswith("lut:"):
            s = replace(s, alpha="lut:default")
        res = robustness_sweep(s, args.sigma_e, args.workers)
        for se, r in res.items():
            if s.out:
                _emit(r.to_csv(), _sibling(s.out, f"sigma_e_{se:g}"))
            else:
                sys.stdout.write(f"## sigma_e={se:g}\n" + r.to_csv())
    elif cmd == "pass-sim":
        if not s.alpha.startswith("lut:") and args.alpha is None:
            s = replace(s, alpha="lut:default")
        pc = PassConfig(h0=args.h0, fc=args.fc, max_elevation=args.max_elevation, duration_s=args.duration,
                        slots=args.slots, P_tx=args.p_tx, noise_power=args.noise_power,
                        include_shadowing=not args.no_shadowing)
        s = replace(s, sigma_e=(args.sigma_e,))
        records = pass_sim(s, pc)
        _emit(pass_csv(records, s, pc), s.out)
    elif cmd == "calibrate-lut":
        lut, curves = calibrate_lut(s, args.target_ber, args.candidates, args.workers)
        meta = s.metadata() | {"target_ber": args.target_ber, "lut": lut.describe()}
        cols = ("snr_db",) + tuple(f"ber_theory_alpha_{a:g}" for a in curves)
        rows = [(snr,) + tuple(float(c[i]) for c in curves.values()) for i, snr in enumerate(s.snr_points)]
        _emit(format_csv(meta, cols, rows), s.out)
        print(json.dumps({"lut": [[a, g] for a, g in lut.modes]}), file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
