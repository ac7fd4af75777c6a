"""Covariate naming, design matrices, and pre-snap situation encoding.

The ingested sequence store always carries the full base covariate set in a
fixed column order; fitted models reference an arbitrary subset of base
covariates plus pairwise interactions (written ``"a*b"``).  This module maps
between the two spaces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PlaySequence

# Column order of every ingested sequence; index here is the covariate index.
BASE_COVARIATES = (
    "home",
    "ydstogo",
    "down1",
    "down2",
    "down3",
    "down4",
    "shotgun",
    "no_huddle",
    "scorediff",
    "goaltogo",
    "yardline90",
)

# Interaction candidates offered to the forward selection, alongside the
# base covariates themselves.
INTERACTION_CANDIDATES = (
    "ydstogo*scorediff",
    "down1*ydstogo",
    "down2*ydstogo",
    "down3*ydstogo",
    "down4*ydstogo",
    "shotgun*ydstogo",
    "no_huddle*scorediff",
    "no_huddle*shotgun",
)


def interaction_parents(name: str) -> tuple[str, str] | None:
    """Split ``"a*b"`` into its parents; None for a plain covariate."""
    if "*" not in name:
        return None
    left, sep, right = name.partition("*")
    if not left or not right or "*" in right:
        raise ValueError(f"malformed interaction name: {name!r}")
    return left, right


def design_columns(
    X_base: np.ndarray,
    target_names: tuple[str, ...] | list[str],
    base_names: tuple[str, ...] = BASE_COVARIATES,
) -> np.ndarray:
    """Assemble a (T, K) design matrix in raw (unscaled) units.

    Plain names select base columns; ``"a*b"`` names are products of the raw
    parent columns.
    """
    index = {name: i for i, name in enumerate(base_names)}
    cols = []
    for name in target_names:
        parents = interaction_parents(name)
        if parents is None:
            if name not in index:
                raise KeyError(f"unknown covariate {name!r}")
            cols.append(X_base[:, index[name]])
        else:
            a, b = parents
            if a not in index or b not in index:
                raise KeyError(f"unknown interaction parents in {name!r}")
            cols.append(X_base[:, index[a]] * X_base[:, index[b]])
    if not cols:
        return np.zeros((X_base.shape[0], 0))
    return np.column_stack(cols)


def build_design(
    sequences: list[PlaySequence],
    target_names: tuple[str, ...] | list[str],
    base_names: tuple[str, ...] = BASE_COVARIATES,
) -> list[PlaySequence]:
    """Re-express base-space sequences in a model's covariate space."""
    return [
        PlaySequence(
            match_id=s.match_id,
            team_id=s.team_id,
            y=s.y.copy(),
            x=design_columns(s.x, target_names, base_names),
            season=s.season,
        )
        for s in sequences
    ]


@dataclass(frozen=True)
class Situation:
    """Pre-snap game situation as entered on the sideline."""

    down: int
    ydstogo: int
    shotgun: bool
    no_huddle: bool
    own_score: int
    opp_score: int
    goaltogo: bool
    yardline_100: int

    def __post_init__(self):
        if not 1 <= self.down <= 4:
            raise ValueError(f"down must be 1..4, got {self.down}")
        if self.ydstogo < 1:
            raise ValueError(f"ydstogo must be >= 1, got {self.ydstogo}")
        if not 0 <= self.yardline_100 <= 100:
            raise ValueError(f"yardline_100 must be 0..100, got {self.yardline_100}")


def situation_base_vector(situation: Situation, home: bool) -> np.ndarray:
    """Encode a situation in the base covariate order (raw units)."""
    values = {
        "home": 1.0 if home else 0.0,
        "ydstogo": float(situation.ydstogo),
        "down1": 1.0 if situation.down == 1 else 0.0,
        "down2": 1.0 if situation.down == 2 else 0.0,
        "down3": 1.0 if situation.down == 3 else 0.0,
        "down4": 1.0 if situation.down == 4 else 0.0,
        "shotgun": 1.0 if situation.shotgun else 0.0,
        "no_huddle": 1.0 if situation.no_huddle else 0.0,
        "scorediff": float(situation.own_score - situation.opp_score),
        "goaltogo": 1.0 if situation.goaltogo else 0.0,
        "yardline90": 1.0 if situation.yardline_100 >= 90 else 0.0,
    }
    return np.array([values[name] for name in BASE_COVARIATES])
