from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from playcall.model import (
    EmissionParams,
    InitialDistribution,
    ModelParams,
    PlaySequence,
    TransitionCoefficients,
    state_pairs,
)


def random_params(rng: np.random.Generator, n_states: int, n_covariates: int) -> ModelParams:
    """Random but well-conditioned parameter draw for oracle comparisons."""
    delta = rng.dirichlet(np.ones(n_states))
    pass_prob = np.sort(rng.uniform(0.05, 0.95, size=n_states))
    # keep states distinguishable so filtering tests are not degenerate
    coeffs = rng.normal(0.0, 1.0, size=(n_states * (n_states - 1), n_covariates + 1))
    return ModelParams(
        delta=InitialDistribution(delta),
        emissions=EmissionParams(pass_prob),
        coeffs=TransitionCoefficients(n_states, coeffs),
    )


def random_sequence(
    rng: np.random.Generator, n_plays: int, n_covariates: int, match_id: str = "m1"
) -> PlaySequence:
    return PlaySequence(
        match_id=match_id,
        team_id="T",
        y=rng.integers(0, 2, size=n_plays),
        x=rng.normal(0.0, 1.0, size=(n_plays, n_covariates)),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)


def homogeneous_coeffs(n_states: int, gamma: np.ndarray, n_covariates: int = 0) -> TransitionCoefficients:
    """Coefficients whose intercepts reproduce a fixed transition matrix (zero slopes)."""
    rows = {}
    for i, j in state_pairs(n_states):
        intercept = float(np.log(gamma[i, j] / gamma[i, i]))
        rows[(i, j)] = [intercept] + [0.0] * n_covariates
    return TransitionCoefficients.from_pairs(n_states, rows)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one line per acceptance criterion at the end of the run."""
    try:
        from test_acceptance import CRITERION_LINES
    except ImportError:
        return
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
