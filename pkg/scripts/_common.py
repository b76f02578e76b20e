"""Shared argument handling for the experiment scripts."""

import argparse
from pathlib import Path


def parser(description, trials=6000):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--trials", type=int, default=trials, help="Monte Carlo frames per SNR point")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out-dir", default="results")
    return ap


def write(out_dir, name, text):
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}")
