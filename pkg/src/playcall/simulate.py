"""Synthetic play-call data with known ground truth.

Used by the simulation studies in scripts/ and by the parameter-recovery
and selection tests.
"""
from __future__ import annotations

import numpy as np

from .hmm import transition_matrix
from .model import ModelParams, PlaySequence


def simulate_sequence(
    params: ModelParams,
    n_plays: int,
    rng: np.random.Generator,
    covariates: np.ndarray | None = None,
    match_id: str = "sim",
    team_id: str = "SIM",
) -> PlaySequence:
    """Draw one sequence from the model; covariates default to iid N(0,1)."""
    k = params.n_covariates
    if covariates is None:
        covariates = rng.standard_normal((n_plays, k)) if k else np.zeros((n_plays, 0))
    covariates = np.asarray(covariates, dtype=float)
    if covariates.shape != (n_plays, k):
        raise ValueError(f"covariates must have shape ({n_plays}, {k})")

    states = np.empty(n_plays, dtype=int)
    y = np.empty(n_plays, dtype=np.int8)
    states[0] = rng.choice(params.n_states, p=params.delta.delta)
    y[0] = rng.random() < params.emissions.pass_prob[states[0]]
    for p in range(1, n_plays):
        gamma = transition_matrix(params.coeffs, covariates[p])
        states[p] = rng.choice(params.n_states, p=gamma[states[p - 1]])
        y[p] = rng.random() < params.emissions.pass_prob[states[p]]
    return PlaySequence(match_id=match_id, team_id=team_id, y=y, x=covariates)


def simulate_sequences(
    params: ModelParams,
    n_sequences: int,
    n_plays: int,
    rng: np.random.Generator,
    covariates: np.ndarray | None = None,
    team_id: str = "SIM",
) -> list[PlaySequence]:
    return [
        simulate_sequence(
            params,
            n_plays,
            rng,
            covariates=None if covariates is None else covariates[i],
            match_id=f"sim{i:04d}",
            team_id=team_id,
        )
        for i in range(n_sequences)
    ]
