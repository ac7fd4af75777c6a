#!/usr/bin/env python3
"""Parameter recovery study for the 2-state play-call model.

Simulates data from a known homogeneous 2-state model, refits it from
scratch, and reports how far the recovered emissions and implied transition
probabilities land from the truth.  One line per replicate plus a summary;
the acceptance suite runs a pinned version of the same experiment.

Usage:
    python3 scripts/recovery_study.py --replicates 20 --sequences 500 --plays 60
"""
import argparse
import math
import time

import numpy as np

from playcall.fit import FitConfig, fit
from playcall.hmm import transition_matrix
from playcall.model import (
    EmissionParams,
    InitialDistribution,
    ModelParams,
    ModelSpec,
    TransitionCoefficients,
)
from playcall.simulate import simulate_sequences

TRUE_PASS = np.array([0.30, 0.85])
TRUE_GAMMA = np.array([[0.90, 0.10], [0.15, 0.85]])
DEFAULT_SEED = 1000


def truth() -> ModelParams:
    rows = {
        (0, 1): [math.log(TRUE_GAMMA[0, 1] / TRUE_GAMMA[0, 0])],
        (1, 0): [math.log(TRUE_GAMMA[1, 0] / TRUE_GAMMA[1, 1])],
    }
    return ModelParams(
        delta=InitialDistribution(np.array([0.5, 0.5])),
        emissions=EmissionParams(TRUE_PASS.copy()),
        coeffs=TransitionCoefficients.from_pairs(2, rows),
    )


def run_replicate(r: int, args) -> dict:
    seed = args.seed + r
    rng = np.random.default_rng(seed)
    data = simulate_sequences(truth(), args.sequences, args.plays, rng)
    started = time.perf_counter()
    model = fit(
        ModelSpec(2, ()),
        data,
        FitConfig(n_starts=args.starts, rng_seed=seed),
    )
    elapsed = time.perf_counter() - started
    est_pass = model.params.emissions.pass_prob
    est_gamma = transition_matrix(model.params.coeffs, np.zeros(0))
    return {
        "replicate": r,
        "seed": seed,
        "est_pass": est_pass,
        "est_gamma": est_gamma,
        "err_pass": float(np.max(np.abs(est_pass - TRUE_PASS))),
        "err_gamma": float(np.max(np.abs(est_gamma - TRUE_GAMMA))),
        "seconds": elapsed,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--replicates", type=int, default=20)
    parser.add_argument("--sequences", type=int, default=500)
    parser.add_argument("--plays", type=int, default=60)
    parser.add_argument("--starts", type=int, default=2)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--tol", type=float, default=0.03,
                        help="recovery tolerance on every probability")
    args = parser.parse_args()

    print(f"truth: pass_prob={TRUE_PASS.tolist()} "
          f"gamma12={TRUE_GAMMA[0, 1]} gamma21={TRUE_GAMMA[1, 0]}")
    print(f"{args.replicates} replicates of {args.sequences} sequences "
          f"x {args.plays} plays, {args.starts} starts each\n")

    header = f"{'rep':>3} {'pass_hat':>16} {'g12':>6} {'g21':>6} " \
             f"{'err_pass':>8} {'err_gam':>8} {'ok':>3} {'sec':>6}"
    print(header)
    successes = 0
    for r in range(args.replicates):
        out = run_replicate(r, args)
        ok = out["err_pass"] <= args.tol and out["err_gamma"] <= args.tol
        successes += ok
        p = out["est_pass"]
        g = out["est_gamma"]
        print(f"{r:>3} ({p[0]:.3f}, {p[1]:.3f}) {g[0, 1]:>6.3f} {g[1, 0]:>6.3f} "
              f"{out['err_pass']:>8.4f} {out['err_gamma']:>8.4f} "
              f"{'y' if ok else 'N':>3} {out['seconds']:>6.1f}")

    print(f"\nrecovered within +-{args.tol}: "
          f"{successes}/{args.replicates} replicates")


if __name__ == "__main__":
    main()
