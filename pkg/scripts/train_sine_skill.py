"""Regenerate the shipped sine-skill checkpoint (src/sdtlab/data/sine_ncds.json)."""

import argparse
import time

import numpy as np

from sdtlab import ncds
from sdtlab.harness.config import builtin_path
from sdtlab.harness.demos import synth_demos


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(builtin_path("sine_ncds")))
    ap.add_argument("--epochs", type=int, default=200)
    args = ap.parse_args()
    batch = synth_demos("sine", 4, seed=0)
    model = ncds.init_model(batch, seed=0)
    t0 = time.time()
    model = ncds.train(model, batch, epochs=args.epochs, lr=3e-3, batch_size=100, noise_sigma=0.02, decay_every=100)
    ncds.save_model(model, args.out)
    print(f"trained in {time.time() - t0:.1f} s; final loss {model.loss_history[-1]:.4g}; "
          f"eps {np.round(model.eps, 4)} -> {args.out}")


if __name__ == "__main__":
    main()
