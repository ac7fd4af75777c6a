"""Domain types for the play-call forecasting models.

All numeric containers are numpy arrays frozen at construction time; the
model objects themselves are immutable, so they can be shared freely across
threads and processes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

PASS = 1
RUN = 0

# Sum-to-one checks on probability vectors / matrix rows.
PROB_SUM_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelSpec:
    """State count and the ordered covariate list entering the transitions."""

    n_states: int
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n_states < 2:
            raise ValueError(f"n_states must be >= 2, got {self.n_states}")
        names = tuple(self.covariate_names)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate covariate names: {names}")
        object.__setattr__(self, "covariate_names", names)

    @property
    def n_covariates(self) -> int:
        return len(self.covariate_names)

    @property
    def n_params(self) -> int:
        """Free parameters: emissions + initial distribution + transition coefficients."""
        n, k = self.n_states, self.n_covariates
        return n + (n - 1) + n * (n - 1) * (k + 1)


def state_pairs(n_states: int) -> list[tuple[int, int]]:
    """Ordered off-diagonal (from, to) pairs; fixes the coefficient row order."""
    return [(i, j) for i in range(n_states) for j in range(n_states) if i != j]


@dataclass(frozen=True)
class TransitionCoefficients:
    """Intercept and slopes for each off-diagonal transition predictor.

    ``values[r]`` holds ``(intercept, slope_1, ..., slope_K)`` for the r-th
    pair in ``state_pairs(n_states)`` order.
    """

    n_states: int
    values: np.ndarray  # (n_states*(n_states-1), K+1)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n_pairs = self.n_states * (self.n_states - 1)
        if vals.ndim != 2 or vals.shape[0] != n_pairs:
            raise ValueError(
                f"expected {n_pairs} coefficient rows, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("transition coefficients must be finite")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def n_covariates(self) -> int:
        return self.values.shape[1] - 1

    def pair_index(self, i: int, j: int) -> int:
        return state_pairs(self.n_states).index((i, j))

    @classmethod
    def from_pairs(
        cls, n_states: int, rows: dict[tuple[int, int], Sequence[float]]
    ) -> "TransitionCoefficients":
        """Build from a {(from, to): coefficient row} mapping (0-based states)."""
        pairs = state_pairs(n_states)
        if set(rows) != set(pairs):
            raise ValueError(f"need coefficient rows for exactly {pairs}")
        width = len(next(iter(rows.values())))
        vals = np.empty((len(pairs), width))
        for r, pair in enumerate(pairs):
            vals[r] = np.asarray(rows[pair], dtype=float)
        return cls(n_states=n_states, values=vals)

    def permuted(self, perm: Sequence[int]) -> "TransitionCoefficients":
        """Coefficients after relabelling states: new state i is old ``perm[i]``."""
        pairs = state_pairs(self.n_states)
        idx = {p: r for r, p in enumerate(pairs)}
        new_vals = np.empty_like(self.values)
        for r, (i, j) in enumerate(pairs):
            new_vals[r] = self.values[idx[(perm[i], perm[j])]]
        return TransitionCoefficients(self.n_states, new_vals)


@dataclass(frozen=True)
class EmissionParams:
    """Per-state pass probabilities, canonically sorted ascending."""

    pass_prob: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pass_prob, dtype=float)
        if p.ndim != 1:
            raise ValueError("pass_prob must be a vector")
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ValueError(f"pass probabilities must lie strictly in (0,1): {p}")
        object.__setattr__(self, "pass_prob", _readonly(p))

    @property
    def n_states(self) -> int:
        return self.pass_prob.shape[0]

    @property
    def is_canonical(self) -> bool:
        return bool(np.all(np.diff(self.pass_prob) >= 0))


@dataclass(frozen=True)
class InitialDistribution:
    delta: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        if d.ndim != 1:
            raise ValueError("delta must be a vector")
        if np.any(d < 0.0) or np.any(d > 1.0):
            raise ValueError(f"delta entries must lie in [0,1]: {d}")
        if abs(d.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"delta must sum to 1, got {d.sum()!r}")
        object.__setattr__(self, "delta", _readonly(d))

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]


@dataclass(frozen=True)
class ModelParams:
    """Complete parameter set of one fitted or constructed model."""

    delta: InitialDistribution
    emissions: EmissionParams
    coeffs: TransitionCoefficients

    def __post_init__(self):
        n = self.delta.n_states
        if self.emissions.n_states != n or self.coeffs.n_states != n:
            raise ValueError("delta, emissions and coeffs disagree on n_states")

    @property
    def n_states(self) -> int:
        return self.delta.n_states

    @property
    def n_covariates(self) -> int:
        return self.coeffs.n_covariates

    def permuted(self, perm: Sequence[int]) -> "ModelParams":
        perm = list(perm)
        return ModelParams(
            delta=InitialDistribution(self.delta.delta[perm]),
            emissions=EmissionParams(self.emissions.pass_prob[perm]),
            coeffs=self.coeffs.permuted(perm),
        )

    def canonicalized(self) -> "ModelParams":
        """Reorder states by ascending pass probability (resolves label switching)."""
        order = np.argsort(self.emissions.pass_prob, kind="stable")
        if np.array_equal(order, np.arange(self.n_states)):
            return self
        return self.permuted(list(order))


@dataclass(frozen=True)
class PlaySequence:
    """One team-match series of play calls with per-play covariate vectors."""

    match_id: str
    team_id: str
    y: np.ndarray  # (T,) values in {0,1}
    x: np.ndarray  # (T, K)
    season: int | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.int8)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1 or y.shape[0] == 0:
            raise ValueError("play sequence must be non-empty")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("play calls must be 0 (run) or 1 (pass)")
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ValueError(
                f"covariate matrix shape {x.shape} does not match {y.shape[0]} plays"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("covariate values must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", _readonly(x))

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def n_covariates(self) -> int:
        return int(self.x.shape[1])

    def prefix(self, n_plays: int) -> "PlaySequence":
        if not 1 <= n_plays <= len(self):
            raise ValueError(f"prefix length {n_plays} out of range")
        return PlaySequence(
            match_id=self.match_id,
            team_id=self.team_id,
            y=self.y[:n_plays].copy(),
            x=self.x[:n_plays].copy(),
            season=self.season,
        )


@dataclass(frozen=True)
class ForecastResult:
    """One-step-ahead forecast: pass probability plus the filtered state."""

    pass_prob: float
    filtered_state_probs: np.ndarray
    predicted_call: int
    n_history: int

    def __post_init__(self):
        if not 0.0 <= self.pass_prob <= 1.0:
            raise ValueError(f"pass_prob out of [0,1]: {self.pass_prob}")
        probs = _readonly(self.filtered_state_probs)
        object.__setattr__(self, "filtered_state_probs", probs)

    @property
    def run_prob(self) -> float:
        return 1.0 - self.pass_prob


@dataclass(frozen=True)
class CovariateScale:
    """Training-time standardization of one covariate column.

    Binary dummies pass through untouched (mean 0, sd 1 by convention).
    """

    mean: float
    sd: float
    binary: bool

    def apply(self, column: np.ndarray) -> np.ndarray:
        return (column - self.mean) / self.sd


@dataclass(frozen=True)
class FitDiagnostics:
    iterations: int
    converged: bool
    best_start: int
    n_starts: int
    start_log_likelihoods: tuple[float, ...] = ()
    start_initial_log_likelihoods: tuple[float, ...] = ()


@dataclass(frozen=True)
class FittedModel:
    """A maximum-likelihood fit plus everything needed to forecast with it."""

    spec: ModelSpec
    params: ModelParams
    log_likelihood: float
    covariate_scaling: tuple[CovariateScale, ...]
    team_id: str = ""
    diagnostics: FitDiagnostics | None = None
    selection_trace: tuple[dict, ...] = ()
    training_fingerprint: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.params.n_states != self.spec.n_states:
            raise ValueError("params n_states disagrees with spec")
        if self.params.n_covariates != self.spec.n_covariates:
            raise ValueError("params covariate count disagrees with spec")
        if len(self.covariate_scaling) != self.spec.n_covariates:
            raise ValueError("one CovariateScale per covariate required")

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    @property
    def aic(self) -> float:
        return -2.0 * self.log_likelihood + 2.0 * self.n_params

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        pairs = state_pairs(self.spec.n_states)
        return {
            "format_version": 1,
            "team_id": self.team_id,
            "n_states": self.spec.n_states,
            "covariate_names": list(self.spec.covariate_names),
            "delta": self.params.delta.delta.tolist(),
            "pass_prob": self.params.emissions.pass_prob.tolist(),
            "transition_coefficients": [
                {
                    "from_state": i,
                    "to_state": j,
                    "coefficients": self.params.coeffs.values[r].tolist(),
                }
                for r, (i, j) in enumerate(pairs)
            ],
            "covariate_scaling": [
                {"name": name, "mean": s.mean, "sd": s.sd, "binary": s.binary}
                for name, s in zip(self.spec.covariate_names, self.covariate_scaling)
            ],
            "log_likelihood": self.log_likelihood,
            "n_params": self.n_params,
            "aic": self.aic,
            "diagnostics": (
                {
                    "iterations": self.diagnostics.iterations,
                    "converged": self.diagnostics.converged,
                    "best_start": self.diagnostics.best_start,
                    "n_starts": self.diagnostics.n_starts,
                    "start_log_likelihoods": list(
                        self.diagnostics.start_log_likelihoods
                    ),
                    "start_initial_log_likelihoods": list(
                        self.diagnostics.start_initial_log_likelihoods
                    ),
                }
                if self.diagnostics
                else None
            ),
            "selection_trace": [dict(r) for r in self.selection_trace],
            "training_fingerprint": dict(self.training_fingerprint),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "FittedModel":
        spec = ModelSpec(
            n_states=doc["n_states"],
            covariate_names=tuple(doc["covariate_names"]),
        )
        rows = {
            (row["from_state"], row["to_state"]): row["coefficients"]
            for row in doc["transition_coefficients"]
        }
        params = ModelParams(
            delta=InitialDistribution(np.asarray(doc["delta"])),
            emissions=EmissionParams(np.asarray(doc["pass_prob"])),
            coeffs=TransitionCoefficients.from_pairs(spec.n_states, rows),
        )
        scaling = tuple(
            CovariateScale(mean=s["mean"], sd=s["sd"], binary=s["binary"])
            for s in doc["covariate_scaling"]
        )
        diag = doc.get("diagnostics")
        diagnostics = (
            FitDiagnostics(
                iterations=diag["iterations"],
                converged=diag["converged"],
                best_start=diag["best_start"],
                n_starts=diag["n_starts"],
                start_log_likelihoods=tuple(diag.get("start_log_likelihoods", ())),
                start_initial_log_likelihoods=tuple(
                    diag.get("start_initial_log_likelihoods", ())
                ),
            )
            if diag
            else None
        )
        return cls(
            spec=spec,
            params=params,
            log_likelihood=doc["log_likelihood"],
            covariate_scaling=scaling,
            team_id=doc.get("team_id", ""),
            diagnostics=diagnostics,
            selection_trace=tuple(doc.get("selection_trace", ())),
            training_fingerprint=doc.get("training_fingerprint", {}),
        )

    def save(self, path: str | Path) -> None:
        # json round-trips Python floats exactly (shortest-repr decimals).
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FittedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))
