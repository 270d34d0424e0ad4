"""SDC with the inverse barrier on the sine benchmark at three barrier gains."""

import argparse
import json

from sdtlab.harness.benchmarks import gain_sweep_runs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="write the summaries as JSON")
    args = ap.parse_args()
    rows = {}
    for s, rep in gain_sweep_runs(args.trials, args.seed).items():
        rows[s] = rep.summary()
        r = rows[s]
        print(f"s_grad {s:<5g} D_min {r['d_min']:.3f}  DTWD {r['dtwd']:8.1f}  RFC {r['rfc']:.3f}  "
              f"VM {r['vm']:.3f}  MJ {r['mj']:.1f}  failed {r['failed']}/{r['trials']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
