"""SDC and SDDC with and without the swept barrier on the sine benchmark."""

import argparse
import json

from sdtlab.harness.benchmarks import swept_comparison_runs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="write the summaries as JSON")
    args = ap.parse_args()
    rows = {name: rep.summary() for name, rep in swept_comparison_runs(args.trials, args.seed).items()}
    for name, r in rows.items():
        print(f"{name:<11} VM {r['vm']:.3f}  DTWD {r['dtwd']:8.1f}  RFC {r['rfc']:.3f}  D_min {r['d_min']:.3f}  "
              f"failed {r['failed']}/{r['trials']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
