"""BER of every TDL profile at alpha = 0.9 and under the default LUT (QPSK, 16 x 16)."""

from _common import parser, write

from fftn_otfs.adapt import DEFAULT_LUT
from fftn_otfs.core import FrameConfig
from fftn_otfs.harness import Scenario, evaluate_policy, simulate


def main():
    args = parser(__doc__).parse_args()
    for name in "abcde":
        s = Scenario(frame=FrameConfig(mod_order=4), model=f"tdl-{name}", snr=(0, 30, 5), trials=args.trials,
                     seed=args.seed, theory_draws=0)
        st = simulate(s, DEFAULT_LUT.alphas, args.workers)
        for policy, tag in ((0.9, "alpha_0.9"), (DEFAULT_LUT, "fftn")):
            res = evaluate_policy(st, policy, tag)
            write(args.out_dir, f"tdl_{name}_{tag}.csv", res.to_csv())
            print(f"TDL-{name.upper()} {tag:9s} " + " ".join(f"{b:.2e}" for b in res.column("ber_sim")))


if __name__ == "__main__":
    main()
