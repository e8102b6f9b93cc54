#!/usr/bin/env python3
"""Run the four convergence studies and write result tables.

With no arguments this reproduces the full sample grids (10 trials each,
up to 1e5 records; takes a few minutes). Pass --quick for a small-grid
smoke run. Results land in <out>/<experiment-name>/ as results.csv plus
manifest.json, with the fitted power-law exponents printed per study.
"""

import argparse
from pathlib import Path

from procshadow.experiments import ExperimentConfig, run_experiment, write_result_files

STUDIES = [
    ("choi-unitary", dict(experiment="choi-convergence", channel="random-unitary")),
    ("choi-full-rank", dict(experiment="choi-convergence", channel="random-full-rank")),
    ("output-state", dict(experiment="output-state-convergence", channel="random-unitary")),
    ("correlator", dict(experiment="correlator-convergence", channel="random-unitary:41")),
    ("composed-correlator", dict(experiment="composed-correlator")),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="output directory root")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--qubits", type=int, default=2)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--quick", action="store_true", help="small grid, 3 trials")
    args = ap.parse_args()

    common = dict(n_qubits=args.qubits, trials=args.trials, seed=args.seed,
                  max_workers=args.workers)
    if args.quick:
        common.update(grid=(100, 1000, 10000), trials=3)

    for name, fields in STUDIES:
        cfg = ExperimentConfig(**fields, **common)
        result = run_experiment(cfg)
        out_dir = Path(args.out) / name
        write_result_files(result, out_dir, gnuplot=True)
        line = f"{name:22s} mean_b = {result.mean_exponent:.3f} +- {result.std_exponent:.3f}"
        if "shadow_input_exponents" in result.extra:
            import numpy as np

            line += f"   (shadow-input b = {np.mean(result.extra['shadow_input_exponents']):.3f})"
        print(line)
        print(f"{'':22s} -> {out_dir}/results.csv")


if __name__ == "__main__":
    main()
