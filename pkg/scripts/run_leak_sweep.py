#!/usr/bin/env python3
"""Leak-density trade-off experiment.

Shares one stochastic-leak neuron across groups of data neurons and traces
what that does to sample fidelity (mean Crossmatch p-value against the
density-1 sampler) and to the energy bill. Fidelity decays as sharing grows
while energy falls, so EPEff typically peaks at an intermediate density.
"""

import argparse
import time
from pathlib import Path

from gibbsmatch.harness import leak_density_sweep
from gibbsmatch.neuro import PRESET_CONFIGS
from gibbsmatch.rbm import ChainSettings, random_model
from gibbsmatch.reports import svg_line_chart, sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=77)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--n-per-trial", type=int, default=50)
    ap.add_argument("--preset", default="G2", choices=[n for n, _ in PRESET_CONFIGS])
    ap.add_argument("--densities", type=int, nargs="+", default=[1, 2, 4, 10, 16])
    ap.add_argument("--out", default="out/leak_sweep")
    args = ap.parse_args()

    model = random_model(16, 8, 0.4, seed=2024)
    settings = ChainSettings(n_samples=args.n_per_trial, burn_in=1000, thin=10)
    cfg = dict(PRESET_CONFIGS)[args.preset]

    t0 = time.monotonic()
    reports = leak_density_sweep(model, cfg, args.densities, settings,
                                 n_per_trial=args.n_per_trial,
                                 num_trials=args.trials, base_seed=args.seed)
    print(f"swept densities {args.densities} in {time.monotonic() - t0:.1f}s")
    for r in reports:
        print(f"  {r.label:6s} mean_p={r.mean_p:.4f} energy={r.energy:.0f} "
              f"epeff={r.epeff:.3e} cores={r.resources.cores}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(reports))
    labels = [str(d) for d in args.densities]
    (out / "mean_p.svg").write_text(
        svg_line_chart(labels, {"mean p": [r.mean_p for r in reports]},
                       f"Fidelity vs leak density ({args.preset})",
                       "leak density", "mean p-value"))
    (out / "epeff.svg").write_text(
        svg_line_chart(labels, {"EPEff": [r.epeff for r in reports]},
                       f"EPEff vs leak density ({args.preset})",
                       "leak density", "EPEff"))
    print(f"wrote {out / 'sweep.csv'}, {out / 'mean_p.svg'}, {out / 'epeff.svg'}")


if __name__ == "__main__":
    main()
