"""CSV ingestion: parsing, covariate derivation, grouping, season split, store."""
import io
import json
import logging

import numpy as np
import pytest

from playcall.features import BASE_COVARIATES
from playcall.ingest import (
    CovariateRow,
    RawPlayRow,
    SchemaError,
    build_sequences,
    derive_covariates,
    descriptive_stats,
    ingest_csv,
    list_store_teams,
    load_team_sequences,
    parse_plays,
    read_store,
    split_by_season,
    write_store,
)

HEADER = (
    "game_id,game_date,posteam,home_team,play_type,down,ydstogo,shotgun,"
    "no_huddle,posteam_score,defteam_score,goal_to_go,yardline_100"
)


def row(game="2017090700", date="2017-09-07", pos="KC", home="NE",
        ptype="pass", down="1", ydstogo="10", shotgun="0", no_huddle="0",
        pscore="0", dscore="0", goal="0", yard="75"):
    return ",".join([game, date, pos, home, ptype, down, ydstogo, shotgun,
                     no_huddle, pscore, dscore, goal, yard])


def make_csv(*rows):
    return io.StringIO("\n".join([HEADER, *rows]) + "\n")


def test_parse_happy_path():
    src = make_csv(
        row(ptype="pass", down="1", ydstogo="10"),
        row(ptype="run", down="2", ydstogo="7", pscore="7", dscore="3"),
    )
    rows, report = parse_plays(src)
    assert report.total_rows == 2
    assert report.accepted == 2
    assert report.rejected == 0
    assert [r.play_type for r in rows] == ["pass", "run"]
    assert rows[0].down == 1 and rows[1].down == 2
    assert rows[1].posteam_score == 7.0
    assert rows[0].season == 2017


def test_empty_file_with_header():
    rows, report = parse_plays(make_csv())
    assert rows == []
    assert report.total_rows == 0
    assert report.rejected == 0


def test_missing_down_rejected_with_line_number():
    src = make_csv(row(down="1"), row(down=""), row(down="NA"))
    rows, report = parse_plays(src)
    assert report.accepted == 1
    assert [r.reason for r in report.rejections] == ["missing down", "missing down"]
    # header is physical line 1, so the bad rows are lines 3 and 4
    assert [r.line for r in report.rejections] == [3, 4]


def test_non_run_pass_rows_filtered():
    src = make_csv(
        row(ptype="kickoff"), row(ptype="pass"), row(ptype="field_goal"),
        row(ptype="qb_kneel"), row(ptype="run"),
    )
    rows, report = parse_plays(src)
    assert len(rows) == 2
    counts = report.counts_by_reason()
    assert counts == {"play type not run/pass": 3}
    assert report.accepted + report.rejected == report.total_rows == 5


@pytest.mark.parametrize("field,value,reason", [
    ("down", "5", "invalid down"),
    ("down", "first", "invalid down"),
    ("ydstogo", "ten", "invalid ydstogo"),
    ("ydstogo", "", "missing ydstogo"),
    ("shotgun", "2", "invalid shotgun"),
    ("pscore", "NA", "missing posteam_score"),
    ("yard", "130", "invalid yardline_100"),
    ("date", "not-a-date", "invalid game_date"),
    ("pos", "", "missing posteam"),
])
def test_coercion_failures(field, value, reason):
    kwargs = {"down": "1"}
    kwargs[{"pscore": "pscore", "yard": "yard", "pos": "pos",
            "date": "date"}.get(field, field)] = value
    _, report = parse_plays(make_csv(row(**kwargs)))
    assert [r.reason for r in report.rejections] == [reason]


def test_missing_mapped_column_is_fatal():
    bad_header = HEADER.replace("yardline_100", "yardline")
    src = io.StringIO(bad_header + "\n")
    with pytest.raises(SchemaError, match="yardline_100"):
        parse_plays(src)


def test_custom_column_mapping():
    header = HEADER.replace("posteam,", "offense,").replace("game_date", "date")
    src = io.StringIO("\n".join([header, row()]) + "\n")
    rows, report = parse_plays(
        src, column_mapping={"posteam": "offense", "game_date": "date"}
    )
    assert report.accepted == 1
    assert rows[0].posteam == "KC"


def test_unknown_mapping_key_rejected():
    with pytest.raises(SchemaError, match="unknown mapping"):
        parse_plays(make_csv(row()), column_mapping={"quarterback": "qb"})


def test_derive_down_and_scorediff():
    raw, _ = parse_plays(make_csv(row(down="2", pscore="14", dscore="20")))
    cov = derive_covariates(raw[0])
    assert (cov.down1, cov.down2, cov.down3, cov.down4) == (0, 1, 0, 0)
    assert cov.scorediff == -6.0


def test_derive_yardline90_threshold():
    raw, _ = parse_plays(make_csv(row(yard="95"), row(yard="89"), row(yard="90")))
    flags = [derive_covariates(r).yardline90 for r in raw]
    assert flags == [1, 0, 1]


def test_derive_home_and_pass_flags():
    raw, _ = parse_plays(make_csv(
        row(pos="NE", home="NE", ptype="run"),
        row(pos="KC", home="NE", ptype="pass"),
    ))
    covs = [derive_covariates(r) for r in raw]
    assert (covs[0].home, covs[0].pass_) == (1, 0)
    assert (covs[1].home, covs[1].pass_) == (0, 1)


def test_one_hot_down_enforced():
    raw, _ = parse_plays(make_csv(*[row(down=str(d)) for d in (1, 2, 3, 4)]))
    for r, expected in zip(raw, range(1, 5)):
        cov = derive_covariates(r)
        dummies = (cov.down1, cov.down2, cov.down3, cov.down4)
        assert sum(dummies) == 1
        assert dummies[expected - 1] == 1
    with pytest.raises(ValueError, match="one down dummy"):
        CovariateRow(match_id="m", team_id="t", season=2017, pass_=1, home=0,
                     ydstogo=10.0, down1=1, down2=1, down3=0, down4=0,
                     shotgun=0, no_huddle=0, scorediff=0.0, goaltogo=0,
                     yardline90=0)


def test_out_of_range_values_logged_but_kept(caplog):
    raw, _ = parse_plays(make_csv(row(ydstogo="55", pscore="70", dscore="0")))
    with caplog.at_level(logging.WARNING, logger="playcall.ingest"):
        cov = derive_covariates(raw[0])
    assert cov.ydstogo == 55.0
    assert cov.scorediff == 70.0
    messages = " ".join(rec.message for rec in caplog.records)
    assert "ydstogo" in messages and "scorediff" in messages


def test_vector_matches_base_covariate_order():
    cov = CovariateRow(match_id="m", team_id="t", season=2017, pass_=1, home=1,
                       ydstogo=7.0, down1=0, down2=0, down3=1, down4=0,
                       shotgun=1, no_huddle=0, scorediff=-3.0, goaltogo=0,
                       yardline90=1)
    vec = cov.vector()
    expected = {"home": 1, "ydstogo": 7.0, "down1": 0, "down2": 0, "down3": 1,
                "down4": 0, "shotgun": 1, "no_huddle": 0, "scorediff": -3.0,
                "goaltogo": 0, "yardline90": 1}
    for k, name in enumerate(BASE_COVARIATES):
        assert vec[k] == expected[name]


def test_one_match_two_offenses_two_sequences():
    src = make_csv(
        row(pos="KC", home="NE"), row(pos="NE", home="NE"),
        row(pos="KC", home="NE"), row(pos="NE", home="NE"),
    )
    raw, _ = parse_plays(src)
    seqs = build_sequences(derive_covariates(r) for r in raw)
    assert len(seqs) == 2
    assert {s.team_id for s in seqs} == {"KC", "NE"}
    assert all(len(s) == 2 for s in seqs)


def test_sequence_order_preserves_csv_order():
    # interleaved offenses; ydstogo encodes the original row index
    rows = [row(pos=team, ydstogo=str(i + 1))
            for i, team in enumerate("AB BA AB ABBA".replace(" ", ""))]
    raw, report = parse_plays(make_csv(*rows))
    seqs = build_sequences(derive_covariates(r) for r in raw)
    k = BASE_COVARIATES.index("ydstogo")
    by_team = {s.team_id: s.x[:, k].tolist() for s in seqs}
    assert by_team["A"] == [1, 4, 5, 7, 10]
    assert by_team["B"] == [2, 3, 6, 8, 9]
    assert sum(len(s) for s in seqs) == report.accepted


def test_split_by_season_routes_and_excludes(caplog):
    src = make_csv(
        row(game="g09", date="2009-10-01"),
        row(game="g17", date="2017-12-31"),
        row(game="g18", date="2018-09-09"),
        row(game="g19", date="2019-10-06"),
        row(game="g08", date="2008-11-02"),
    )
    raw, _ = parse_plays(src)
    seqs = build_sequences(derive_covariates(r) for r in raw)
    with caplog.at_level(logging.WARNING, logger="playcall.ingest"):
        split = split_by_season(seqs)
    assert {s.match_id for s in split.train} == {"g09", "g17"}
    assert {s.match_id for s in split.test} == {"g18"}
    assert sum("outside" in rec.message for rec in caplog.records) == 2
    assert not ({s.match_id for s in split.train}
                & {s.match_id for s in split.test})


def test_january_game_belongs_to_prior_season():
    raw, _ = parse_plays(make_csv(row(game="wk17", date="2018-01-07")))
    assert raw[0].season == 2017
    split = split_by_season(build_sequences([derive_covariates(raw[0])]))
    assert len(split.train) == 1 and not split.test


def test_descriptive_stats_small_hand_case():
    src = make_csv(
        row(ptype="pass", ydstogo="10", shotgun="1"),
        row(ptype="run", ydstogo="6", shotgun="0"),
        row(ptype="pass", ydstogo="2", shotgun="1", game="other"),
    )
    raw, _ = parse_plays(src)
    seqs = build_sequences(derive_covariates(r) for r in raw)
    stats = descriptive_stats(seqs)
    assert stats["matches"] == 2
    assert stats["sequences"] == 2
    assert stats["plays"] == 3
    assert stats["pass_mean"] == pytest.approx(2 / 3)
    assert stats["covariate_means"]["ydstogo"] == pytest.approx(6.0)
    assert stats["covariate_means"]["shotgun"] == pytest.approx(2 / 3)
    assert descriptive_stats([])["plays"] == 0


def full_fixture():
    return make_csv(
        row(game="t17a", date="2017-09-10", pos="KC", home="NE", ptype="pass"),
        row(game="t17a", date="2017-09-10", pos="NE", home="NE", ptype="run",
            down="2"),
        row(game="t17a", date="2017-09-10", pos="KC", home="NE", ptype="punt"),
        row(game="t17b", date="2018-01-07", pos="KC", home="KC", ptype="run",
            ydstogo="3"),
        row(game="t18", date="2018-09-09", pos="NE", home="KC", ptype="pass",
            shotgun="1"),
        row(game="t18", date="2018-09-09", pos="NE", home="KC", ptype="pass",
            down="bogus"),
    )


def test_ingest_csv_end_to_end_conservation():
    split, report = ingest_csv(full_fixture())
    assert report.total_rows == 6
    assert report.accepted == 4
    assert report.counts_by_reason() == {
        "play type not run/pass": 1, "invalid down": 1,
    }
    n_plays = sum(len(s) for s in split.train + split.test)
    assert n_plays == report.accepted
    assert {s.team_id for s in split.train} == {"KC", "NE"}
    assert [s.team_id for s in split.test] == ["NE"]


def test_store_round_trip(tmp_path):
    split, report = ingest_csv(full_fixture())
    manifest = write_store(split, tmp_path / "store", report)

    assert list_store_teams(tmp_path / "store", "train") == ["KC", "NE"]
    assert list_store_teams(tmp_path / "store", "test") == ["NE"]
    loaded = read_store(tmp_path / "store")
    originals = {(s.match_id, s.team_id): s for s in split.train + split.test}
    assert len(originals) == len(loaded.train) + len(loaded.test)
    for seq in loaded.train + loaded.test:
        orig = originals[(seq.match_id, seq.team_id)]
        np.testing.assert_array_equal(seq.y, orig.y)
        np.testing.assert_array_equal(seq.x, orig.x)
        assert seq.season == orig.season

    assert manifest["splits"]["train"]["plays"] == 3
    assert manifest["splits"]["test"]["plays"] == 1
    assert manifest["ingest"]["total_rows"] == 6
    assert manifest["covariate_order"] == list(BASE_COVARIATES)
    on_disk = json.loads((tmp_path / "store" / "manifest.json").read_text())
    assert on_disk == manifest


def test_reingest_is_bit_identical(tmp_path):
    for name in ("first", "second"):
        split, report = ingest_csv(full_fixture())
        write_store(split, tmp_path / name, report)
    first = sorted((tmp_path / "first").rglob("*"))
    second = sorted((tmp_path / "second").rglob("*"))
    assert [p.name for p in first] == [p.name for p in second]
    for a, b in zip(first, second):
        if a.is_file():
            assert a.read_bytes() == b.read_bytes()


def test_load_team_sequences_missing_team(tmp_path):
    split, _ = ingest_csv(full_fixture())
    write_store(split, tmp_path / "store")
    with pytest.raises(FileNotFoundError):
        load_team_sequences(tmp_path / "store", "train", "SEA")
    with pytest.raises(FileNotFoundError):
        read_store(tmp_path / "empty")
