"""Maximum-likelihood estimation and AIC-based forward covariate selection.

The likelihood is maximized on an unconstrained working scale: logits for
the per-state pass probabilities, log-ratios against the last state for the
initial distribution, and the transition coefficients as-is.  Gradients are
central finite differences on that scale, fed to a quasi-Newton optimizer
(scipy's L-BFGS-B); every fit is deterministic given its seed.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .features import build_design, interaction_parents
from .hmm import EMISSION_FLOOR, GAMMA_FLOOR, total_log_likelihood
from .model import (
    CovariateScale,
    EmissionParams,
    FitDiagnostics,
    FittedModel,
    InitialDistribution,
    ModelParams,
    ModelSpec,
    PlaySequence,
    TransitionCoefficients,
)

log = logging.getLogger(__name__)

# Fitted emissions this close to the clamp wall mark a degenerate optimum.
DEGENERATE_EMISSION_TOL = 1e-9


class FitError(RuntimeError):
    """All optimization starts failed; carries per-start diagnostics."""

    def __init__(self, message: str, start_results: list[dict] | None = None):
        super().__init__(message)
        self.start_results = start_results or []


class SelectionError(RuntimeError):
    """A forward-selection round could not fit any candidate."""


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings; defaults are sized for per-team NFL data."""

    max_iterations: int = 500
    gradient_step: float = 1e-6  # central-difference half-width
    convergence_tol: float = 1e-9  # relative objective-change stopping rule
    n_starts: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations <= 0 or self.gradient_step <= 0:
            raise ValueError("max_iterations and gradient_step must be positive")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")


def aic(log_likelihood: float, n_params: int) -> float:
    if n_params < 1:
        raise ValueError(f"n_params must be >= 1, got {n_params}")
    return -2.0 * log_likelihood + 2.0 * n_params


# -- working parameterization ----------------------------------------------


def n_working_params(n_states: int, n_covariates: int) -> int:
    return n_states + (n_states - 1) + n_states * (n_states - 1) * (n_covariates + 1)


def pack_params(params: ModelParams) -> np.ndarray:
    """Flatten a parameter set onto the unconstrained working scale."""
    delta = np.clip(params.delta.delta, 1e-300, None)
    return np.concatenate(
        [
            logit(params.emissions.pass_prob),
            np.log(delta[:-1] / delta[-1]),
            params.coeffs.values.ravel(),
        ]
    )


def unpack_params(w: np.ndarray, n_states: int, n_covariates: int) -> ModelParams:
    """Inverse of :func:`pack_params`."""
    w = np.asarray(w, dtype=float)
    expected = n_working_params(n_states, n_covariates)
    if w.shape != (expected,):
        raise ValueError(f"working vector has shape {w.shape}, expected ({expected},)")
    n = n_states
    pass_prob = expit(w[:n])
    ratios = np.concatenate([w[n : n + n - 1], [0.0]])
    e = np.exp(ratios - ratios.max())
    delta = e / e.sum()
    coeffs = w[n + n - 1 :].reshape(n * (n - 1), n_covariates + 1)
    return ModelParams(
        delta=InitialDistribution(delta),
        emissions=EmissionParams(np.clip(pass_prob, EMISSION_FLOOR, 1 - EMISSION_FLOOR)),
        coeffs=TransitionCoefficients(n, coeffs),
    )


# -- batched objective -------------------------------------------------------


class _BatchedSequences:
    """Sequences padded to a common length for vectorized likelihood evals."""

    def __init__(self, sequences: list[PlaySequence], n_covariates: int):
        lengths = np.array([len(s) for s in sequences])
        m, t_max = len(sequences), int(lengths.max())
        self.Y = np.zeros((m, t_max), dtype=np.int8)
        self.X = np.zeros((m, t_max, n_covariates))
        self.mask = np.zeros((m, t_max), dtype=bool)
        for i, s in enumerate(sequences):
            self.Y[i, : len(s)] = s.y
            self.X[i, : len(s)] = s.x
            self.mask[i, : len(s)] = True
        self.n_states: int | None = None
        self.total_plays = int(lengths.sum())

    def log_likelihood(self, params: ModelParams) -> float:
        """Total log-likelihood, vectorized across sequences."""
        n = params.n_states
        delta = params.delta.delta
        p = np.clip(params.emissions.pass_prob, EMISSION_FLOOR, 1 - EMISSION_FLOOR)
        vals = params.coeffs.values

        m, t_max = self.Y.shape
        lin = vals[:, 0] + self.X @ vals[:, 1:].T  # (m, t_max, n*(n-1))
        eta = np.zeros((m, t_max, n, n))
        eta[:, :, ~np.eye(n, dtype=bool)] = lin
        e = np.exp(eta - eta.max(axis=-1, keepdims=True))
        gamma = e / e.sum(axis=-1, keepdims=True)
        gamma = np.clip(gamma, GAMMA_FLOOR, 1 - GAMMA_FLOOR)
        gamma /= gamma.sum(axis=-1, keepdims=True)

        b = np.where(self.Y[:, :, None] == 1, p, 1.0 - p)  # (m, t_max, n)

        v = delta * b[:, 0]
        c = v.sum(axis=1)
        ll = float(np.log(c).sum())
        phi = v / c[:, None]
        for t in range(1, t_max):
            active = self.mask[:, t]
            if not active.any():
                break
            v = np.einsum("mn,mnk->mk", phi, gamma[:, t]) * b[:, t]
            c = v.sum(axis=1)
            ll += float(np.log(c[active]).sum())
            phi = np.where(active[:, None], v / c[:, None], phi)
        return ll


def _central_diff_gradient(objective, w: np.ndarray, step: float) -> np.ndarray:
    grad = np.empty_like(w)
    for k in range(w.size):
        wp = w.copy()
        wp[k] += step
        wm = w.copy()
        wm[k] -= step
        grad[k] = (objective(wp) - objective(wm)) / (2.0 * step)
    return grad


def make_objective(spec: ModelSpec, sequences: list[PlaySequence]):
    """Negative log-likelihood on the working scale, plus the batched data."""
    batched = _BatchedSequences(sequences, spec.n_covariates)

    def objective(w: np.ndarray) -> float:
        params = unpack_params(w, spec.n_states, spec.n_covariates)
        return -batched.log_likelihood(params)

    return objective, batched


# -- initialization ----------------------------------------------------------

# Per-state emission bands for N=2 starts: one run-leaning, one pass-leaning.
_TWO_STATE_BANDS = ((0.2, 0.5), (0.6, 0.9))


def _draw_start(
    rng: np.random.Generator, n_states: int, n_covariates: int
) -> np.ndarray:
    n = n_states
    if n == 2:
        bands = _TWO_STATE_BANDS
    else:
        edges = np.linspace(0.15, 0.9, n + 1)
        bands = tuple((edges[i], edges[i + 1]) for i in range(n))
    pass_prob = np.array([rng.uniform(lo, hi) for lo, hi in bands])

    # persistent-state starts: off-diagonal transition mass in [0.05, 0.3]
    intercepts = np.empty(n * (n - 1))
    r = 0
    for i in range(n):
        offs = rng.uniform(0.05, 0.3, size=n - 1) / max(1, n - 2)
        stay = 1.0 - offs.sum()
        for off in offs:
            intercepts[r] = np.log(off / stay)
            r += 1

    w = np.zeros(n_working_params(n, n_covariates))
    w[:n] = logit(pass_prob)
    # delta log-ratios stay 0 (uniform start)
    coeff = np.zeros((n * (n - 1), n_covariates + 1))
    coeff[:, 0] = intercepts
    w[n + n - 1 :] = coeff.ravel()
    return w


# -- fitting -----------------------------------------------------------------


def fit(
    spec: ModelSpec,
    sequences: list[PlaySequence],
    config: FitConfig = FitConfig(),
    team_id: str = "",
    training_fingerprint: dict | None = None,
) -> FittedModel:
    """Maximum-likelihood fit by multi-start quasi-Newton ascent.

    Covariates are standardized internally (training mean/sd, binary dummies
    untouched) and the scaling is stored on the returned model; states are
    reordered so pass probabilities ascend.
    """
    if not sequences:
        raise ValueError("need at least one sequence")
    for s in sequences:
        if s.n_covariates != spec.n_covariates:
            raise ValueError(
                f"sequence {s.match_id} has {s.n_covariates} covariates, "
                f"spec expects {spec.n_covariates}"
            )
    total_plays = sum(len(s) for s in sequences)
    if total_plays <= spec.n_params:
        raise ValueError(
            f"{total_plays} plays cannot identify {spec.n_params} parameters"
        )

    std_sequences, scaling = standardize_covariates(sequences)
    objective, batched = make_objective(spec, std_sequences)
    gradient = lambda w: _central_diff_gradient(objective, w, config.gradient_step)

    rng = np.random.default_rng(config.rng_seed)
    start_results: list[dict] = []
    for s_idx in range(config.n_starts):
        w0 = _draw_start(rng, spec.n_states, spec.n_covariates)
        f0 = objective(w0)
        res = minimize(
            objective,
            w0,
            jac=gradient,
            method="L-BFGS-B",
            options={
                "maxiter": config.max_iterations,
                "ftol": config.convergence_tol,
            },
        )
        params = unpack_params(res.x, spec.n_states, spec.n_covariates)
        p = params.emissions.pass_prob
        degenerate = bool(
            np.any(p <= EMISSION_FLOOR + DEGENERATE_EMISSION_TOL)
            or np.any(p >= 1 - EMISSION_FLOOR - DEGENERATE_EMISSION_TOL)
        )
        start_results.append(
            {
                "start": s_idx,
                "initial_ll": -f0,
                "final_ll": -float(res.fun),
                "converged": bool(res.success),
                "degenerate": degenerate,
                "iterations": int(res.nit),
                "message": str(res.message),
                "params": params,
            }
        )
        log.debug(
            "start %d: ll %.4f -> %.4f converged=%s degenerate=%s",
            s_idx, -f0, -res.fun, res.success, degenerate,
        )

    clean = [r for r in start_results if r["converged"] and not r["degenerate"]]
    flagged = [r for r in start_results if r["converged"] and r["degenerate"]]
    if clean:
        pool, converged = clean, True
    elif flagged:
        pool, converged = flagged, False
    else:
        raise FitError(
            f"no start converged for team {team_id or '<unnamed>'}",
            [{k: v for k, v in r.items() if k != "params"} for r in start_results],
        )
    best = max(pool, key=lambda r: r["final_ll"])

    params = best["params"].canonicalized()
    final_ll = total_log_likelihood(params, std_sequences)
    diagnostics = FitDiagnostics(
        iterations=best["iterations"],
        converged=converged,
        best_start=best["start"],
        n_starts=config.n_starts,
        start_log_likelihoods=tuple(r["final_ll"] for r in start_results),
        start_initial_log_likelihoods=tuple(r["initial_ll"] for r in start_results),
    )
    return FittedModel(
        spec=spec,
        params=params,
        log_likelihood=final_ll,
        covariate_scaling=scaling,
        team_id=team_id,
        diagnostics=diagnostics,
        training_fingerprint=training_fingerprint or {},
    )


# -- covariate standardization ------------------------------------------------


def standardize_covariates(
    sequences: list[PlaySequence],
) -> tuple[list[PlaySequence], tuple[CovariateScale, ...]]:
    """Center and scale non-binary covariate columns by pooled mean and sd.

    Binary dummy columns pass through untouched; constant columns are
    centered with an sd fallback of 1 (population sd convention throughout).
    """
    if not sequences:
        raise ValueError("need at least one sequence")
    X = np.vstack([s.x for s in sequences])
    scales = []
    for k in range(X.shape[1]):
        col = X[:, k]
        is_binary = bool(np.all((col == 0.0) | (col == 1.0)))
        constant = bool(np.all(col == col[0]))
        if is_binary and not constant:
            scales.append(CovariateScale(mean=0.0, sd=1.0, binary=True))
        else:
            sd = float(np.std(col))
            scales.append(
                CovariateScale(mean=float(col.mean()), sd=sd if sd > 0 else 1.0,
                               binary=False)
            )
    scaling = tuple(scales)
    return apply_scaling(sequences, scaling), scaling


def apply_scaling(
    sequences: list[PlaySequence], scaling: tuple[CovariateScale, ...]
) -> list[PlaySequence]:
    out = []
    for s in sequences:
        x = s.x.copy()
        for k, scale in enumerate(scaling):
            x[:, k] = scale.apply(x[:, k])
        out.append(
            PlaySequence(
                match_id=s.match_id, team_id=s.team_id, y=s.y.copy(), x=x,
                season=s.season,
            )
        )
    return out


def scale_vector(x: np.ndarray, scaling: tuple[CovariateScale, ...]) -> np.ndarray:
    return np.array([scale.apply(x[k]) for k, scale in enumerate(scaling)])


# -- forward selection ---------------------------------------------------------


def _candidate_seed(base_seed: int, round_idx: int, cand_idx: int) -> int:
    return (base_seed * 1_000_003 + round_idx * 10_007 + cand_idx) % (2**31 - 1)


def forward_select(
    spec_base: ModelSpec,
    candidate_covariates: list[str],
    sequences: list[PlaySequence],
    config: FitConfig = FitConfig(),
    base_names: tuple[str, ...] | None = None,
    team_id: str = "",
    training_fingerprint: dict | None = None,
) -> tuple[FittedModel, list[dict]]:
    """Greedy AIC forward selection over transition covariates.

    Starting from the intercept-only model, each round fits every eligible
    unused candidate (added to all off-diagonal predictors at once) and
    adopts the lowest-AIC candidate if it strictly beats the incumbent AIC.
    Interactions become eligible only once both parents are selected.

    ``sequences`` must be in the base covariate space named by
    ``base_names`` (defaults to the canonical ingest order).  Returns the
    final model and the accepted-path trace; each trace entry records the
    candidates tried in its round, and the last entry additionally records
    the round that stopped the search under ``"stopped_after"``.
    """
    from .features import BASE_COVARIATES

    if spec_base.n_covariates != 0:
        raise ValueError("forward selection starts from an intercept-only spec")
    if not candidate_covariates:
        raise ValueError("need at least one candidate covariate")
    if base_names is None:
        base_names = BASE_COVARIATES

    def fit_with(names: list[str], seed: int) -> FittedModel:
        spec = ModelSpec(spec_base.n_states, tuple(names))
        design = build_design(sequences, names, base_names)
        cfg = dataclasses.replace(config, rng_seed=seed)
        return fit(
            spec, design, cfg, team_id=team_id,
            training_fingerprint=training_fingerprint,
        )

    selected: list[str] = []
    incumbent = fit_with(selected, config.rng_seed)
    trace: list[dict] = [
        {"covariate": None, "aic": incumbent.aic, "tried": []}
    ]

    round_idx = 0
    while True:
        round_idx += 1
        remaining = [c for c in candidate_covariates if c not in selected]
        eligible = []
        for c in remaining:
            parents = interaction_parents(c)
            if parents is None or all(p in selected for p in parents):
                eligible.append(c)
        if not eligible:
            break

        tried = []
        best_name, best_model = None, None
        for c_idx, cand in enumerate(eligible):
            try:
                model = fit_with(
                    selected + [cand],
                    _candidate_seed(config.rng_seed, round_idx, c_idx),
                )
            except (FitError, ValueError) as exc:
                log.warning("candidate %s failed in round %d: %s", cand, round_idx, exc)
                tried.append({"covariate": cand, "aic": None, "error": str(exc)})
                continue
            tried.append({"covariate": cand, "aic": model.aic})
            if best_model is None or model.aic < best_model.aic:
                best_name, best_model = cand, model
        if best_model is None:
            raise SelectionError(
                f"every candidate fit failed in round {round_idx} for team "
                f"{team_id or '<unnamed>'}"
            )

        if best_model.aic < incumbent.aic:
            selected.append(best_name)
            incumbent = best_model
            trace.append({"covariate": best_name, "aic": best_model.aic, "tried": tried})
        else:
            trace[-1]["stopped_after"] = tried
            break

    final = dataclasses.replace(incumbent, selection_trace=tuple(trace))
    return final, trace
