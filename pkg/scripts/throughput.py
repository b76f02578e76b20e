"""Effective throughput of fixed alpha baselines and the default LUT (TDL-E, QPSK, 32 x 16)."""

from _common import parser, write

from fftn_otfs.core import FrameConfig
from fftn_otfs.harness import Scenario, alpha_trace, throughput_sweep


def main():
    ap = parser(__doc__)
    ap.add_argument("--model", default="tdl-e")
    args = ap.parse_args()
    s = Scenario(frame=FrameConfig(M=32, N=16, mod_order=4), model=args.model, snr=(0, 30, 2),
                 alpha="lut:default", trials=args.trials, seed=args.seed, theory_draws=0)
    res = throughput_sweep(s, args.workers)
    for key, r in res.items():
        write(args.out_dir, f"throughput_{key}.csv", r.to_csv())
    write(args.out_dir, "throughput_alpha_trace.csv", alpha_trace(res["fftn"]))
    print("snr_db  " + "  ".join(f"{k:>10s}" for k in res))
    for i, snr in enumerate(res["fftn"].column("snr_db")):
        print(f"{snr:6.0f}  " + "  ".join(f"{r.rows[i].t_eff_bps / 1e6:10.4f}" for r in res.values()))


if __name__ == "__main__":
    main()
