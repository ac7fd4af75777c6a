"""Forward selection: greedy AIC search over transition covariates."""
import numpy as np
import pytest

import importlib

# the fit() function shadows the submodule on the package; grab the module
fit_mod = importlib.import_module("playcall.fit")
from playcall.fit import FitConfig, FitError, SelectionError, forward_select
from playcall.model import (
    EmissionParams,
    InitialDistribution,
    ModelParams,
    ModelSpec,
    PlaySequence,
    TransitionCoefficients,
)
from playcall.simulate import simulate_sequence

BASE_NAMES = ("a", "b")


def simulate_base_space(slope_a, slope_b, slope_ab, n_seq, n_plays, seed):
    """Sequences whose transitions respond to (a, b, a*b) with the given slopes.

    The returned sequences carry the two raw columns (a, b) so that
    forward_select has to rediscover any interaction from the base space.
    Zero-slope covariates are dropped from the generating model entirely.
    """
    slopes = {"a": slope_a, "b": slope_b, "ab": slope_ab}
    active = [name for name, s in slopes.items() if s != 0.0]
    intercepts = np.log([0.10 / 0.90, 0.15 / 0.85])
    values = np.column_stack(
        [intercepts] + [np.full(2, slopes[name]) for name in active]
    )
    truth = ModelParams(
        delta=InitialDistribution(np.array([0.5, 0.5])),
        emissions=EmissionParams(np.array([0.30, 0.85])),
        coeffs=TransitionCoefficients(2, values),
    )
    rng = np.random.default_rng(seed)
    sequences = []
    for i in range(n_seq):
        base = rng.standard_normal((n_plays, 2))
        cols = {"a": base[:, 0], "b": base[:, 1], "ab": base[:, 0] * base[:, 1]}
        xt = np.column_stack([cols[name] for name in active]) if active else None
        if xt is None:
            xt = np.zeros((n_plays, 0))
        drawn = simulate_sequence(truth, n_plays, rng, covariates=xt,
                                  match_id=f"m{i:03d}")
        sequences.append(PlaySequence(match_id=drawn.match_id, team_id="SIM",
                                      y=drawn.y, x=base))
    return sequences


@pytest.fixture(scope="module")
def informative_run():
    """Selection over (a, b) where only a drives the transitions."""
    seqs = simulate_base_space(2.0, 0.0, 0.0, 100, 40, seed=11)
    model, trace = forward_select(
        ModelSpec(2), ["a", "b"], seqs,
        FitConfig(n_starts=2, rng_seed=3), base_names=BASE_NAMES,
    )
    return model, trace


def test_informative_covariate_adopted_first(informative_run):
    model, trace = informative_run
    assert trace[0]["covariate"] is None
    assert trace[1]["covariate"] == "a"
    assert "a" in model.spec.covariate_names


def test_adopted_aic_strictly_decreasing(informative_run):
    _, trace = informative_run
    aics = [entry["aic"] for entry in trace]
    assert all(later < earlier for earlier, later in zip(aics, aics[1:]))


def test_trace_bookkeeping(informative_run):
    model, trace = informative_run
    # round 1 tried every candidate, both with finite AICs
    tried = trace[1]["tried"]
    assert sorted(t["covariate"] for t in tried) == ["a", "b"]
    assert all(np.isfinite(t["aic"]) for t in tried)
    # adopted covariates appear in trace order on the final spec
    adopted = tuple(e["covariate"] for e in trace[1:])
    assert model.spec.covariate_names == adopted
    # search either ran out of candidates or recorded the stopping round
    if len(adopted) < 2:
        assert "stopped_after" in trace[-1]
    assert model.selection_trace == tuple(trace)


def test_noise_only_stops_at_intercept_model():
    seqs = simulate_base_space(0.0, 0.0, 0.0, 60, 30, seed=5)
    model, trace = forward_select(
        ModelSpec(2), ["a", "b"], seqs,
        FitConfig(n_starts=2, rng_seed=1), base_names=BASE_NAMES,
    )
    assert len(trace) == 1
    assert trace[0]["covariate"] is None
    assert model.spec.covariate_names == ()
    stopped = trace[0]["stopped_after"]
    assert sorted(t["covariate"] for t in stopped) == ["a", "b"]
    # neither noise candidate beat the incumbent
    assert all(t["aic"] >= trace[0]["aic"] for t in stopped)


def test_interaction_gated_until_both_parents_selected():
    seqs = simulate_base_space(1.2, 1.2, 1.0, 120, 40, seed=23)
    model, trace = forward_select(
        ModelSpec(2), ["a", "b", "a*b"], seqs,
        FitConfig(n_starts=2, rng_seed=9), base_names=BASE_NAMES,
    )
    rounds = [entry["tried"] for entry in trace[1:]]
    if "stopped_after" in trace[-1]:
        rounds.append(trace[-1]["stopped_after"])
    selected = []
    for entry, tried in zip(trace[1:], rounds):
        names = {t["covariate"] for t in tried}
        if not {"a", "b"} <= set(selected):
            assert "a*b" not in names
        selected.append(entry["covariate"])
    assert trace[1]["covariate"] in {"a", "b"}
    assert trace[2]["covariate"] in {"a", "b"}
    assert model.spec.covariate_names[:2] in (("a", "b"), ("b", "a"))
    # with a strong generating interaction the product term is picked up too
    assert model.spec.covariate_names == (*model.spec.covariate_names[:2], "a*b")


def test_interaction_alone_is_never_eligible():
    seqs = simulate_base_space(0.0, 0.0, 0.0, 30, 20, seed=2)
    model, trace = forward_select(
        ModelSpec(2), ["a*b"], seqs,
        FitConfig(n_starts=1, rng_seed=0), base_names=BASE_NAMES,
    )
    assert len(trace) == 1
    assert "stopped_after" not in trace[0]
    assert model.spec.covariate_names == ()


def test_failed_candidate_is_recorded_and_skipped(monkeypatch):
    # column 0 ("bad") is noise, column 1 ("a") drives the transitions
    seqs = simulate_base_space(0.0, 2.0, 0.0, 60, 30, seed=7)
    real_fit = fit_mod.fit

    def flaky_fit(spec, sequences, config=FitConfig(), **kwargs):
        # "bad" only crashes while fitted on its own, alongside no parents
        if "bad" in spec.covariate_names and "a" not in spec.covariate_names:
            raise FitError("synthetic optimizer failure")
        return real_fit(spec, sequences, config, **kwargs)

    monkeypatch.setattr(fit_mod, "fit", flaky_fit)
    model, trace = forward_select(
        ModelSpec(2), ["bad", "a"], seqs,
        FitConfig(n_starts=1, rng_seed=4), base_names=("bad", "a"),
    )
    failure = [t for t in trace[1]["tried"] if t["covariate"] == "bad"]
    assert failure and failure[0]["aic"] is None
    assert "error" in failure[0]
    assert trace[1]["covariate"] == "a"


def test_all_candidates_failing_raises(monkeypatch):
    seqs = simulate_base_space(0.0, 0.0, 0.0, 20, 15, seed=3)

    def doomed_fit(spec, sequences, config=FitConfig(), **kwargs):
        if spec.covariate_names:
            raise FitError("synthetic optimizer failure")
        return fit_mod.__dict__["_real_fit"](spec, sequences, config, **kwargs)

    monkeypatch.setattr(fit_mod, "_real_fit", fit_mod.fit, raising=False)
    monkeypatch.setattr(fit_mod, "fit", doomed_fit)
    with pytest.raises(SelectionError, match="round 1"):
        forward_select(
            ModelSpec(2), ["a"], seqs,
            FitConfig(n_starts=1, rng_seed=0), base_names=BASE_NAMES,
        )


def test_rejects_non_intercept_base_spec():
    seqs = simulate_base_space(0.0, 0.0, 0.0, 5, 10, seed=1)
    with pytest.raises(ValueError, match="intercept-only"):
        forward_select(ModelSpec(2, ("a",)), ["b"], seqs, base_names=BASE_NAMES)


def test_rejects_empty_candidate_list():
    seqs = simulate_base_space(0.0, 0.0, 0.0, 5, 10, seed=1)
    with pytest.raises(ValueError, match="candidate"):
        forward_select(ModelSpec(2), [], seqs, base_names=BASE_NAMES)
