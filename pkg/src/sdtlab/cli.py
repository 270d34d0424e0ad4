"""Command-line entry point: ``sdtlab <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import metrics as M
from . import ncds
from .core import read_trajectory_csv
from .modulate import ConfigError

log = logging.getLogger("sdtlab")

# unit-scale versions of the test shapes, for ``train-sdf --shape <name>``
SHAPE_PRESETS = {
    "circle": {"kind": "circle", "center": [0.0, 0.0], "radius": 1.0},
    "box": {"kind": "box", "center": [0.0, 0.0], "half_extents": [0.8, 0.6]},
    "triangle": {"kind": "triangle", "vertices": [[-1.0, -0.8], [1.0, -0.8], [0.0, 1.0]]},
    "arc": {"kind": "arc", "center": [0.0, 0.0], "radius": 1.0, "span": [0.0, 3.14159], "thickness": 0.3},
}


def _demos(args):
    from .harness.demos import load_demos, synth_demos

    if args.csv:
        return load_demos(args.csv)
    return synth_demos(args.kind, args.n_demos, noise=args.noise, seed=args.seed)


def cmd_train_ncds(args) -> int:
    batch = _demos(args)
    model = ncds.init_model(batch, hidden=tuple(args.hidden), seed=args.seed)
    model = ncds.train(model, batch, epochs=args.epochs, lr=args.lr, batch_size=args.batch_size,
                       noise_sigma=args.noise_sigma, decay_every=args.decay_every, seed=args.seed)
    ncds.save_model(model, args.out)
    log.info("saved %s (final loss %.3g, eps %s)", args.out, model.loss_history[-1], np.round(model.eps, 4))
    return 0


def cmd_train_sdf(args) -> int:
    from .harness.scenario import shape_field
    from .sdf import sample_train_set, save_field, train_bernstein_sdf, train_mlp_sdf

    if args.shape in SHAPE_PRESETS:
        shape = shape_field(SHAPE_PRESETS[args.shape])
    else:
        shape = shape_field(json.loads(Path(args.shape).read_text()))
    lo, hi = np.full(shape.dim, args.bounds[0]), np.full(shape.dim, args.bounds[1])
    data = sample_train_set(shape, (lo, hi), args.samples, seed=args.seed)
    if args.model == "mlp":
        epochs = 300 if args.epochs is None else args.epochs
        model, tlog = train_mlp_sdf(data, epochs=epochs, seed=args.seed)
    else:
        epochs = 200 if args.epochs is None else args.epochs
        model, tlog = train_bernstein_sdf(data, degree=args.degree, epochs=epochs, seed=args.seed)
    save_field(model, args.out)
    log.info("saved %s (best epoch %d, %.1f s)", args.out, tlog.best_epoch, tlog.seconds)
    return 0


def cmd_run(args) -> int:
    from .harness.config import load_config
    from .harness.scenario import export_report, run_scenario, trajectory_csvs

    cfg = load_config(args.config)
    report = run_scenario(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_report(report, out / "report.json", "json")
    export_report(report, out / "report.csv", "csv")
    trajectory_csvs(report, out / "trajectories", cfg.rollout.dt)
    print(json.dumps(report.summary(), indent=2))
    return 0


def cmd_bench(args) -> int:
    from .harness.config import load_config
    from .harness.scenario import bench_timing, write_bench_csv

    rows = bench_timing(load_config(args.config), repeats=args.repeats)
    if args.out:
        write_bench_csv(rows, args.out)
    for r in rows:
        print(f"{r['sdf_kind']:>12} {r['solver']:>7} N={r['steps']:<3} step {r['t_step_ms']:.3f} ms  "
              f"flow {r['t_flow_ms']:.3f} ms  jac {r['t_jac_ms']:.3f} ms")
    return 0


def cmd_metrics(args) -> int:
    base, mod = read_trajectory_csv(args.base), read_trajectory_csv(args.mod)
    out = {"dtwd": M.dtwd(base, mod), "rfc": M.rfc(base, mod), "mj": M.mj(base, mod)}
    if args.obstacle:
        from .sdf import load_field

        out["d_min"] = M.d_min(mod, load_field(args.obstacle))
    print(json.dumps(out, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdtlab", description="Contraction-preserving obstacle avoidance toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train-ncds", help="fit an NCDS skill to demonstrations")
    t.add_argument("--demos", "--csv", dest="csv", nargs="*", default=None, help="demonstration trajectory CSVs")
    t.add_argument("--kind", default="sine", help="synthetic family when no CSV is given")
    t.add_argument("--n-demos", type=int, default=4)
    t.add_argument("--noise", type=float, default=0.0)
    t.add_argument("--hidden", type=int, nargs="+", default=[100, 100])
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--lr", type=float, default=3e-3)
    t.add_argument("--batch-size", type=int, default=100)
    t.add_argument("--noise-sigma", type=float, default=0.02)
    t.add_argument("--decay-every", type=int, default=100)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(fn=cmd_train_ncds)

    s = sub.add_parser("train-sdf", help="fit a neural or Bernstein SDF to an analytic shape")
    s.add_argument("--shape", required=True, help=f"one of {sorted(SHAPE_PRESETS)} or a JSON field file")
    s.add_argument("--model", choices=["mlp", "bp", "bernstein"], default="bp",
                   help="neural field or Bernstein polynomial (bp)")
    s.add_argument("--bounds", type=float, nargs=2, default=[-3.0, 3.0])
    s.add_argument("--samples", type=int, default=20000)
    s.add_argument("--degree", type=int, default=8)
    s.add_argument("--epochs", type=int, default=None, help="default 300 (mlp) or 200 (bp)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_train_sdf)

    r = sub.add_parser("run", help="run a scenario and export its report")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(fn=cmd_run)

    b = sub.add_parser("bench", help="median per-call timings per solver")
    b.add_argument("--config", required=True)
    b.add_argument("--repeats", type=int, default=50)
    b.add_argument("--out", default=None)
    b.set_defaults(fn=cmd_bench)

    m = sub.add_parser("metrics", help="compare two trajectory CSVs")
    m.add_argument("--base", required=True)
    m.add_argument("--mod", required=True)
    m.add_argument("--obstacle", default=None, help="field JSON for d_min")
    m.set_defaults(fn=cmd_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
