"""Out-of-sample one-step-ahead evaluation.

Each play of a test match is forecast from the plays before it (the first
play from the initial distribution alone), classified as run or pass, and
scored against what the offense actually called.  Metrics follow the usual
confusion-matrix definitions with pass as the positive class and are
reported per team plus a play-weighted overall row.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .fit import apply_scaling
from .hmm import (
    emission_vector,
    filter_init,
    filter_step,
    forecast_from_filter,
    forecast_initial,
    transition_matrix,
)
from .model import FittedModel, ForecastResult, PlaySequence

REPORT_COLUMNS = (
    "team", "n_plays", "accuracy", "precision_pass", "recall_pass",
    "precision_run", "recall_run", "coverage",
)


def predict_match(model: FittedModel, seq: PlaySequence) -> list[ForecastResult]:
    """One-step-ahead forecasts for every play of one match.

    The first play is forecast from the initial state distribution alone;
    play p >= 2 is forecast from plays 1..p-1 and the covariates entered for
    play p.  Later observations never influence earlier forecasts.  The
    sequence must be in the model's covariate space in raw units; training
    scaling is applied here.
    """
    if seq.n_covariates != model.spec.n_covariates:
        raise ValueError(
            f"sequence has {seq.n_covariates} covariates, model expects "
            f"{model.spec.n_covariates}"
        )
    scaled = apply_scaling([seq], model.covariate_scaling)[0]
    params = model.params

    results = [forecast_initial(params)]
    phi, _ = filter_init(params, int(scaled.y[0]))
    for p in range(1, len(scaled)):
        results.append(forecast_from_filter(params, phi, scaled.x[p], p))
        gamma = transition_matrix(params.coeffs, scaled.x[p])
        phi, _ = filter_step(phi, gamma, emission_vector(params, int(scaled.y[p])))
    return results


@dataclass(frozen=True)
class ConfusionCounts:
    """2x2 confusion counts with pass as the positive class."""

    tp_pass: int = 0
    fp_pass: int = 0
    fn_pass: int = 0
    tn_pass: int = 0

    def __post_init__(self):
        for name in ("tp_pass", "fp_pass", "fn_pass", "tn_pass"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp_pass + self.fp_pass + self.fn_pass + self.tn_pass

    @staticmethod
    def _rate(num: int, den: int) -> float | None:
        return num / den if den else None

    @property
    def accuracy(self) -> float | None:
        return self._rate(self.tp_pass + self.tn_pass, self.total)

    @property
    def precision_pass(self) -> float | None:
        return self._rate(self.tp_pass, self.tp_pass + self.fp_pass)

    @property
    def recall_pass(self) -> float | None:
        return self._rate(self.tp_pass, self.tp_pass + self.fn_pass)

    @property
    def precision_run(self) -> float | None:
        return self._rate(self.tn_pass, self.tn_pass + self.fn_pass)

    @property
    def recall_run(self) -> float | None:
        return self._rate(self.tn_pass, self.tn_pass + self.fp_pass)

    def pooled(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp_pass=self.tp_pass + other.tp_pass,
            fp_pass=self.fp_pass + other.fp_pass,
            fn_pass=self.fn_pass + other.fn_pass,
            tn_pass=self.tn_pass + other.tn_pass,
        )


def score(
    forecasts: list[ForecastResult],
    actuals: np.ndarray | list[int],
    threshold: float | None = None,
) -> tuple[ConfusionCounts, float | None]:
    """Classify forecasts against actual calls, optionally threshold-gated.

    Without a threshold every play is scored.  With a threshold t in
    (0.5, 1], only plays where the forecast is confident enough
    (max(p, 1-p) >= t) are scored; coverage is the scored fraction.
    Empty input yields zero counts and null coverage.
    """
    actuals = np.asarray(actuals)
    if len(forecasts) != actuals.shape[0]:
        raise ValueError(
            f"{len(forecasts)} forecasts but {actuals.shape[0]} actual calls"
        )
    if threshold is not None and not 0.5 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0.5, 1], got {threshold}")

    tp = fp = fn = tn = 0
    scored = 0
    for forecast, actual in zip(forecasts, actuals):
        p = forecast.pass_prob
        if threshold is not None and max(p, 1.0 - p) < threshold:
            continue
        scored += 1
        predicted = forecast.predicted_call
        if predicted == 1 and actual == 1:
            tp += 1
        elif predicted == 1 and actual == 0:
            fp += 1
        elif predicted == 0 and actual == 1:
            fn += 1
        else:
            tn += 1
    total = len(forecasts)
    coverage = scored / total if total else None
    return ConfusionCounts(tp, fp, fn, tn), coverage


@dataclass(frozen=True)
class TeamReport:
    """Scored one-step-ahead performance for a single team."""

    team: str
    counts: ConfusionCounts
    n_total: int  # forecasts made, before any threshold gating

    def __post_init__(self):
        if self.counts.total > self.n_total:
            raise ValueError("scored more plays than were forecast")

    @property
    def n_plays(self) -> int:
        """Number of scored (predicted) plays."""
        return self.counts.total

    @property
    def coverage(self) -> float | None:
        return self.counts.total / self.n_total if self.n_total else None

    @property
    def accuracy(self) -> float | None:
        return self.counts.accuracy


@dataclass(frozen=True)
class EvaluationReport:
    """Per-team reports plus the play-weighted overall summary."""

    teams: tuple[TeamReport, ...]

    def __post_init__(self):
        if not self.teams:
            raise ValueError("need at least one team report")

    @property
    def pooled_counts(self) -> ConfusionCounts:
        pooled = ConfusionCounts()
        for report in self.teams:
            pooled = pooled.pooled(report.counts)
        return pooled

    @property
    def weighted_accuracy(self) -> float | None:
        """Mean accuracy weighted by per-team predicted-play counts."""
        weights = [(r.n_plays, r.accuracy) for r in self.teams if r.n_plays]
        if not weights:
            return None
        return sum(n * acc for n, acc in weights) / sum(n for n, _ in weights)

    @property
    def overall_coverage(self) -> float | None:
        total = sum(r.n_total for r in self.teams)
        if not total:
            return None
        return sum(r.n_plays for r in self.teams) / total


def evaluate_team(
    model: FittedModel,
    sequences: list[PlaySequence],
    threshold: float | None = None,
    include_first_play: bool = True,
) -> TeamReport:
    """Forecast and score every play of a team's test matches."""
    forecasts: list[ForecastResult] = []
    actuals: list[int] = []
    for seq in sequences:
        match_forecasts = predict_match(model, seq)
        start = 0 if include_first_play else 1
        forecasts.extend(match_forecasts[start:])
        actuals.extend(int(v) for v in seq.y[start:])
    counts, _ = score(forecasts, actuals, threshold)
    return TeamReport(team=model.team_id, counts=counts, n_total=len(forecasts))


def aggregate(per_team_reports: list[TeamReport]) -> EvaluationReport:
    """Combine per-team reports; weights are predicted-play counts."""
    return EvaluationReport(teams=tuple(per_team_reports))


# -- rendering --------------------------------------------------------------------


def _cell(value: str | float | int | None) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def _report_rows(report: EvaluationReport) -> list[list]:
    rows = []
    for team in report.teams:
        c = team.counts
        rows.append([
            team.team, team.n_plays, c.accuracy, c.precision_pass,
            c.recall_pass, c.precision_run, c.recall_run, team.coverage,
        ])
    pooled = report.pooled_counts
    rows.append([
        "ALL", pooled.total, pooled.accuracy, pooled.precision_pass,
        pooled.recall_pass, pooled.precision_run, pooled.recall_run,
        report.overall_coverage,
    ])
    return rows


def format_report_text(report: EvaluationReport) -> str:
    """Aligned text table, one row per team plus the pooled ALL row."""
    rows = [[_cell(v) for v in row] for row in _report_rows(report)]
    table = [list(REPORT_COLUMNS)] + rows
    widths = [max(len(row[i]) for row in table) for i in range(len(REPORT_COLUMNS))]
    lines = []
    for row in table:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def format_report_csv(report: EvaluationReport) -> str:
    """Machine-readable CSV; undefined rates are left empty."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in _report_rows(report):
        writer.writerow(
            ["" if v is None else (f"{v:.6f}" if isinstance(v, float) else v)
             for v in row]
        )
    return buffer.getvalue()
