"""Core model mathematics.

Covariate-linked transition matrices, the scaled forward recursion for the
log-likelihood, state filtering, and the one-step-ahead forecast
distribution.  Everything here is a pure function of its inputs.
"""
from __future__ import annotations

import numpy as np

from .model import (
    ForecastResult,
    ModelParams,
    PlaySequence,
    TransitionCoefficients,
)

# Emission probabilities are clamped away from {0, 1} during likelihood
# evaluation so a surprising observation can never produce log(0).
EMISSION_FLOOR = 1e-10

# Softmax output floor: keeps transition probabilities strictly inside (0, 1)
# even when the linear predictor saturates the exponential.
GAMMA_FLOOR = 1e-15


def eta_matrix(coeffs: TransitionCoefficients, x: np.ndarray) -> np.ndarray:
    """Linear predictors for one play: eta[i, j] with zero diagonal."""
    n = coeffs.n_states
    x = np.asarray(x, dtype=float)
    if x.shape != (coeffs.n_covariates,):
        raise ValueError(
            f"covariate vector has length {x.shape}, expected ({coeffs.n_covariates},)"
        )
    # state_pairs order is row-major over off-diagonal cells, matching the
    # order boolean-mask assignment fills them in.
    lin = coeffs.values[:, 0] + coeffs.values[:, 1:] @ x
    eta = np.zeros((n, n))
    eta[~np.eye(n, dtype=bool)] = lin
    return eta


def _softmax_rows(eta: np.ndarray) -> np.ndarray:
    e = np.exp(eta - eta.max(axis=-1, keepdims=True))
    gamma = e / e.sum(axis=-1, keepdims=True)
    gamma = np.clip(gamma, GAMMA_FLOOR, 1.0 - GAMMA_FLOOR)
    return gamma / gamma.sum(axis=-1, keepdims=True)


def transition_matrix(coeffs: TransitionCoefficients, x: np.ndarray) -> np.ndarray:
    """Transition probability matrix implied by one covariate vector.

    Row i is the softmax of the linear predictors (eta_i1, ..., eta_iN) with
    eta_ii fixed at zero; the row maximum is subtracted before
    exponentiation so extreme predictors cannot overflow.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("covariate vector must be finite")
    return _softmax_rows(eta_matrix(coeffs, x))


def transition_matrices(coeffs: TransitionCoefficients, X: np.ndarray) -> np.ndarray:
    """Per-play transition matrices for a (T, K) covariate matrix: (T, N, N).

    Built play by play through :func:`transition_matrix` so batch and
    single-play computations agree bit for bit (the incremental session
    filter relies on this).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != coeffs.n_covariates:
        raise ValueError(
            f"covariate matrix shape {X.shape} incompatible with K={coeffs.n_covariates}"
        )
    n = coeffs.n_states
    out = np.empty((X.shape[0], n, n))
    for t in range(X.shape[0]):
        out[t] = transition_matrix(coeffs, X[t])
    return out


def emission_vector(params: ModelParams, y: int) -> np.ndarray:
    """Per-state probability of observing play call ``y``, clamped away from 0/1."""
    p = np.clip(params.emissions.pass_prob, EMISSION_FLOOR, 1.0 - EMISSION_FLOOR)
    return p if y == 1 else 1.0 - p


def filter_init(params: ModelParams, y: int) -> tuple[np.ndarray, float]:
    """First forward step: weight the initial distribution by the emission."""
    v = params.delta.delta * emission_vector(params, y)
    c = v.sum()
    return v / c, float(np.log(c))


def filter_step(
    phi: np.ndarray, gamma: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, float]:
    """One scaled forward step: propagate, reweight, renormalize."""
    v = (phi @ gamma) * b
    c = v.sum()
    return v / c, float(np.log(c))


def forward_filter(params: ModelParams, seq: PlaySequence) -> tuple[np.ndarray, float]:
    """Scaled forward pass over a sequence.

    Returns the filtered state distribution after the last play and the
    accumulated log-likelihood.  Per-step normalization keeps the recursion
    stable for arbitrarily long sequences; the log of each normalizing
    constant is accumulated into the log-likelihood.
    """
    if seq.n_covariates != params.n_covariates:
        raise ValueError(
            f"sequence has {seq.n_covariates} covariates, model expects "
            f"{params.n_covariates}"
        )
    gammas = transition_matrices(params.coeffs, seq.x) if len(seq) > 1 else None
    phi, loglik = filter_init(params, int(seq.y[0]))
    for p in range(1, len(seq)):
        b = emission_vector(params, int(seq.y[p]))
        phi, logc = filter_step(phi, gammas[p], b)
        loglik += logc
    return phi, loglik


def sequence_log_likelihood(params: ModelParams, seq: PlaySequence) -> float:
    """Log-likelihood of one sequence under the model.

    The transition matrix of play p is built from the covariates of play p,
    entering the product from play 2 onward; the first play is weighted by
    the initial distribution alone.
    """
    _, loglik = forward_filter(params, seq)
    return loglik


def total_log_likelihood(params: ModelParams, sequences: list[PlaySequence]) -> float:
    """Joint log-likelihood over matches, which are treated as independent."""
    if not sequences:
        raise ValueError("need at least one sequence")
    return float(sum(sequence_log_likelihood(params, s) for s in sequences))


def filtered_state_probs(params: ModelParams, history: PlaySequence) -> np.ndarray:
    """Distribution of the current latent state given all plays so far."""
    phi, _ = forward_filter(params, history)
    return phi


def _forecast_pass_prob(state_dist: np.ndarray, params: ModelParams) -> float:
    return float(state_dist @ params.emissions.pass_prob)


def forecast_next(
    params: ModelParams, history: PlaySequence, next_x: np.ndarray
) -> ForecastResult:
    """One-step-ahead forecast distribution after an observed history.

    Equals the ratio of the likelihood extended by the candidate next play to
    the likelihood of the history, with the next transition matrix implied by
    the covariates entered for the upcoming play.  Run and pass probabilities
    sum to one exactly (the run side is the complement).
    """
    next_x = np.asarray(next_x, dtype=float)
    if next_x.shape != (params.n_covariates,):
        raise ValueError(
            f"next_x has shape {next_x.shape}, expected ({params.n_covariates},)"
        )
    phi, _ = forward_filter(params, history)
    return forecast_from_filter(params, phi, next_x, len(history))


def forecast_from_filter(
    params: ModelParams, phi: np.ndarray, next_x: np.ndarray, n_history: int
) -> ForecastResult:
    """Forecast from an already-filtered state distribution.

    Incremental callers (match evaluation, live sessions) keep ``phi`` updated
    with :func:`filter_step` and call this per play; the result is bit
    identical to recomputing the filter from scratch via
    :func:`forecast_next`.
    """
    gamma = transition_matrix(params.coeffs, np.asarray(next_x, dtype=float))
    state_pred = phi @ gamma
    pass_prob = _forecast_pass_prob(state_pred, params)
    return ForecastResult(
        pass_prob=pass_prob,
        filtered_state_probs=phi,
        predicted_call=1 if pass_prob >= 0.5 else 0,  # ties go to pass
        n_history=n_history,
    )


def forecast_initial(params: ModelParams) -> ForecastResult:
    """Forecast for the very first play of a match, before any history exists.

    Mixes the emissions under the initial distribution directly; no
    transition matrix is involved, so pre-snap covariates do not enter.
    """
    pass_prob = _forecast_pass_prob(params.delta.delta, params)
    return ForecastResult(
        pass_prob=pass_prob,
        filtered_state_probs=params.delta.delta,
        predicted_call=1 if pass_prob >= 0.5 else 0,
        n_history=0,
    )
