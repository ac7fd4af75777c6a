"""End-to-end CLI: exit codes, manifests, determinism, pipeline wiring."""
import dataclasses
import json
import logging

import numpy as np
import pytest

import playcall.cli as cli
from conftest import homogeneous_coeffs
from playcall.cli import main
from playcall.ingest import DatasetSplit, write_store
from playcall.model import (
    EmissionParams,
    FittedModel,
    InitialDistribution,
    ModelParams,
    TransitionCoefficients,
)
from playcall.simulate import simulate_sequences

HEADER = (
    "game_id,game_date,posteam,home_team,play_type,down,ydstogo,shotgun,"
    "no_huddle,posteam_score,defteam_score,goal_to_go,yardline_100"
)


def csv_fixture(path):
    rows = [
        HEADER,
        "g1,2016-10-02,AAA,BBB,pass,1,10,0,0,0,0,0,75",
        "g1,2016-10-02,BBB,BBB,run,2,7,0,0,0,0,0,60",
        "g1,2016-10-02,AAA,BBB,kickoff,1,10,0,0,0,0,0,35",
        "g2,2018-09-09,AAA,AAA,run,1,10,1,0,7,3,0,45",
        "g2,2018-09-09,AAA,AAA,pass,2,6,1,0,7,3,0,41",
    ]
    path.write_text("\n".join(rows) + "\n")
    return path


def synthetic_store(root, n_train=15, n_test=5, n_plays=15):
    """Store with two teams drawn from a known 2-state model, 11 covariates."""
    gamma = np.array([[0.88, 0.12], [0.20, 0.80]])
    truth = ModelParams(
        delta=InitialDistribution(np.array([0.5, 0.5])),
        emissions=EmissionParams(np.array([0.25, 0.80])),
        coeffs=homogeneous_coeffs(2, gamma, n_covariates=11),
    )
    rng = np.random.default_rng(99)
    train, test = [], []
    for team in ("AAA", "BBB"):
        for split, count, season in ((train, n_train, 2015),
                                     (test, n_test, 2018)):
            seqs = simulate_sequences(truth, count, n_plays, rng, team_id=team)
            split.extend(
                dataclasses.replace(s, match_id=f"{team}{season}{i}",
                                    season=season)
                for i, s in enumerate(seqs)
            )
    store = root / "store"
    write_store(DatasetSplit(train=train, test=test), store)
    return store


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Shared store plus fitted models for the evaluate/serve tests."""
    root = tmp_path_factory.mktemp("cli_pipeline")
    store = synthetic_store(root)
    models = root / "models"
    rc = main(["fit", "--data", str(store), "--team", "all", "--seed", "5",
               "--starts", "1", "--out", str(models)])
    assert rc == 0
    return store, models


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["ingest", "--out", "somewhere"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["bogus-command"])
    assert info.value.code == 2


def test_ingest_writes_store_and_manifest(tmp_path):
    csv_path = csv_fixture(tmp_path / "plays.csv")
    out = tmp_path / "store"
    assert main(["ingest", "--input", str(csv_path), "--out", str(out)]) == 0
    assert (out / "train" / "AAA.ndjson").exists()
    assert (out / "train" / "BBB.ndjson").exists()
    assert (out / "test" / "AAA.ndjson").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["ingest"]["total_rows"] == 5
    run = json.loads((out / "run_manifest.json").read_text())
    assert run["command"] == "ingest"
    assert run["inputs"][0]["sha256"]
    assert "manifest.json" in run["outputs"]


def test_ingest_reruns_byte_identical(tmp_path):
    csv_path = csv_fixture(tmp_path / "plays.csv")
    outs = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert main(["ingest", "--input", str(csv_path), "--out", str(out)]) == 0
        outs.append(out)
    for rel in ("train/AAA.ndjson", "train/BBB.ndjson", "test/AAA.ndjson",
                "manifest.json"):
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()


def test_ingest_schema_error_exit_1(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("nothing,to,see\n1,2,3\n")
    assert main(["ingest", "--input", str(bad),
                 "--out", str(tmp_path / "out")]) == 1


def test_ingest_mapping_file_and_cli_override(tmp_path):
    header = HEADER.replace("posteam,", "offense,").replace("game_date", "gdate")
    csv_path = tmp_path / "renamed.csv"
    csv_path.write_text(
        header + "\ng1,2016-10-02,AAA,BBB,pass,1,10,0,0,0,0,0,75\n"
    )
    mapping = tmp_path / "columns.cfg"
    mapping.write_text("# column renames\nposteam = offense\ngame_date = wrong\n")
    out = tmp_path / "store"
    rc = main(["ingest", "--input", str(csv_path), "--mapping", str(mapping),
               "--map", "game_date=gdate", "--out", str(out)])
    assert rc == 0
    assert (out / "train" / "AAA.ndjson").exists()
    run = json.loads((out / "run_manifest.json").read_text())
    assert run["config"]["mapping"]["game_date"] == "gdate"


def test_fit_deterministic_across_reruns_and_jobs(tmp_path):
    store = synthetic_store(tmp_path)
    first = tmp_path / "m1"
    second = tmp_path / "m2"
    assert main(["fit", "--data", str(store), "--team", "all", "--seed", "7",
                 "--starts", "1", "--out", str(first)]) == 0
    assert main(["fit", "--data", str(store), "--team", "all", "--seed", "7",
                 "--starts", "1", "--jobs", "2", "--out", str(second)]) == 0
    for team in ("AAA", "BBB"):
        a = (first / f"{team}.json").read_bytes()
        b = (second / f"{team}.json").read_bytes()
        assert a == b
    model = FittedModel.load(first / "AAA.json")
    assert model.team_id == "AAA"
    assert model.spec.covariate_names == tuple(cli.BASE_COVARIATES)


def test_fit_team_seed_independent_of_subset(tmp_path):
    store = synthetic_store(tmp_path)
    all_dir = tmp_path / "all"
    solo_dir = tmp_path / "solo"
    assert main(["fit", "--data", str(store), "--team", "all", "--seed", "7",
                 "--starts", "1", "--out", str(all_dir)]) == 0
    assert main(["fit", "--data", str(store), "--team", "BBB", "--seed", "7",
                 "--starts", "1", "--out", str(solo_dir)]) == 0
    assert (all_dir / "BBB.json").read_bytes() \
        == (solo_dir / "BBB.json").read_bytes()


def test_fit_unknown_team_exit_1(pipeline):
    store, _ = pipeline
    assert main(["fit", "--data", str(store), "--team", "ZZZ",
                 "--out", "/tmp/unused-models"]) == 1


def test_fit_partial_failure(tmp_path):
    store = synthetic_store(tmp_path)
    # a team whose training data cannot identify the model
    broken = (store / "train" / "CCC.ndjson")
    broken.write_text(json.dumps({
        "match_id": "c1", "season": 2015,
        "plays": [{"y": 1, "x": [0.0] * 11}, {"y": 0, "x": [0.0] * 11}],
    }) + "\n")
    out = tmp_path / "models"
    rc = main(["fit", "--data", str(store), "--team", "all", "--seed", "1",
               "--starts", "1", "--out", str(out)])
    assert rc == 1
    assert (out / "AAA.json").exists()
    assert (out / "BBB.json").exists()
    assert not (out / "CCC.json").exists()
    run = json.loads((out / "run_manifest.json").read_text())
    by_team = {r["team"]: r for r in run["results"]["teams"]}
    assert by_team["CCC"]["status"] == "error"
    assert by_team["AAA"]["status"] == "ok"


def test_fit_select_smoke(tmp_path, monkeypatch):
    store = synthetic_store(tmp_path)
    monkeypatch.setattr(cli, "BASE_COVARIATES", ("ydstogo", "shotgun"))
    monkeypatch.setattr(cli, "INTERACTION_CANDIDATES", ())
    out = tmp_path / "models"
    rc = main(["fit", "--data", str(store), "--team", "AAA", "--select",
               "--seed", "2", "--starts", "1", "--out", str(out)])
    assert rc == 0
    model = FittedModel.load(out / "AAA.json")
    assert model.selection_trace
    aics = [entry["aic"] for entry in model.selection_trace]
    assert all(later < earlier for earlier, later in zip(aics, aics[1:]))
    assert set(model.spec.covariate_names) <= {"ydstogo", "shotgun"}


def test_evaluate_reports(pipeline, tmp_path, capsys):
    store, models = pipeline
    out = tmp_path / "report"
    rc = main(["evaluate", "--models", str(models), "--data", str(store),
               "--out", str(out)])
    assert rc == 0
    text = (out / "report.txt").read_text()
    assert "ALL" in text
    assert "AAA" in text and "BBB" in text
    lines = (out / "report.csv").read_text().strip().split("\n")
    assert lines[0].startswith("team,n_plays,accuracy")
    assert len(lines) == 4  # header + 2 teams + ALL
    assert capsys.readouterr().out.startswith("team")
    run = json.loads((out / "run_manifest.json").read_text())
    assert run["results"]["teams_evaluated"] == ["AAA", "BBB"]
    accuracy = run["results"]["weighted_accuracy"]
    assert 0.0 <= accuracy <= 1.0


def test_evaluate_threshold_half_equals_none(pipeline, tmp_path):
    store, models = pipeline
    plain = tmp_path / "plain"
    gated = tmp_path / "gated"
    assert main(["evaluate", "--models", str(models), "--data", str(store),
                 "--out", str(plain)]) == 0
    assert main(["evaluate", "--models", str(models), "--data", str(store),
                 "--threshold", "0.5", "--out", str(gated)]) == 0
    assert (plain / "report.csv").read_bytes() \
        == (gated / "report.csv").read_bytes()


def test_evaluate_skips_teams_without_models(pipeline, tmp_path, caplog):
    store, models = pipeline
    partial = tmp_path / "partial-models"
    partial.mkdir()
    (partial / "AAA.json").write_bytes((models / "AAA.json").read_bytes())
    out = tmp_path / "report"
    with caplog.at_level(logging.WARNING, logger="playcall.cli"):
        rc = main(["evaluate", "--models", str(partial), "--data", str(store),
                   "--out", str(out)])
    assert rc == 0
    assert any("BBB" in rec.message for rec in caplog.records)
    assert "BBB" not in (out / "report.csv").read_text()


def test_evaluate_without_any_usable_model_exit_1(pipeline, tmp_path):
    store, models = pipeline
    empty = tmp_path / "no-models"
    assert main(["evaluate", "--models", str(empty), "--data", str(store),
                 "--out", str(tmp_path / "r")]) == 1


def test_serve_unknown_model_dir_exit_1(tmp_path):
    assert main(["serve", "--models", str(tmp_path / "nope")]) == 1


def test_serve_port_busy_exit_1(pipeline, monkeypatch):
    _, models = pipeline

    def refuse(app, **kwargs):
        raise OSError(98, "address already in use")

    monkeypatch.setattr("uvicorn.run", refuse)
    assert main(["serve", "--models", str(models), "--port", "8123"]) == 1


def test_serve_launches_uvicorn(pipeline, monkeypatch):
    _, models = pipeline
    seen = {}

    def record(app, **kwargs):
        seen["app"] = app
        seen.update(kwargs)

    monkeypatch.setattr("uvicorn.run", record)
    assert main(["serve", "--models", str(models), "--port", "8123",
                 "--threshold", "0.6"]) == 0
    assert seen["port"] == 8123
    assert seen["host"] == "127.0.0.1"
    routes = {route.path for route in seen["app"].routes}
    assert "/v1/health" in routes


def test_log_level_env(monkeypatch):
    monkeypatch.setenv("PLAYCALL_LOG", "debug")
    cli.configure_logging()
    assert logging.getLogger().level == logging.DEBUG
    monkeypatch.setenv("PLAYCALL_LOG", "error")
    cli.configure_logging()
    assert logging.getLogger().level == logging.ERROR
    monkeypatch.setenv("PLAYCALL_LOG", "nonsense")
    cli.configure_logging()
    assert logging.getLogger().level == logging.INFO
    monkeypatch.delenv("PLAYCALL_LOG")
    cli.configure_logging()
    assert logging.getLogger().level == logging.INFO
