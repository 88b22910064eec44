#!/usr/bin/env python3
"""Digital sampler preset comparison.

Evaluates the bundled G1-G7 digital neuron presets against the ideal sampler
on one random RBM and ranks them by Energy Performance Efficiency. Expect the
single-iteration presets to be cheap but unfaithful and the wide-window ones
faithful but expensive, with the best EPEff somewhere in between.
"""

import argparse
import time
from pathlib import Path

from gibbsmatch.harness import parameter_sweep
from gibbsmatch.neuro import PRESET_CONFIGS
from gibbsmatch.rbm import ChainSettings, random_model
from gibbsmatch.reports import svg_bar_chart, sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--n-per-trial", type=int, default=50)
    ap.add_argument("--out", default="out/param_sweep")
    args = ap.parse_args()

    model = random_model(16, 8, 0.4, seed=2024)
    settings = ChainSettings(n_samples=args.n_per_trial, burn_in=1000, thin=10)

    t0 = time.monotonic()
    reports = parameter_sweep(model, PRESET_CONFIGS, settings,
                              n_per_trial=args.n_per_trial, num_trials=args.trials,
                              base_seed=args.seed)
    print(f"swept {len(reports)} configs in {time.monotonic() - t0:.1f}s")
    for r in reports:
        print(f"  {r.label:4s} mean_p={r.mean_p:.4f} energy={r.energy:.0f} "
              f"epeff={r.epeff:.3e}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(reports))
    (out / "epeff.svg").write_text(
        svg_bar_chart([r.label for r in reports], [r.epeff for r in reports],
                      "Energy Performance Efficiency by preset", "EPEff"))
    print(f"wrote {out / 'sweep.csv'} and {out / 'epeff.svg'}")


if __name__ == "__main__":
    main()
