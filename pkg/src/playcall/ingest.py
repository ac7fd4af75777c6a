"""Play-by-play CSV ingestion.

Parses a play-by-play export (defaults target the public Kaggle NFL schema),
keeps run/pass plays, derives the modeling covariates, groups plays into one
sequence per team per match, and splits by season into training (2009-2017)
and test (2018) sets.  The resulting sequences can be written to a newline
delimited JSON store with a manifest of counts and descriptive statistics.

Parsing is a single deterministic pass: re-ingesting the same file yields a
bit-identical store.  Every input row is either accepted or recorded in the
rejection report with its line number and a reason, so
``accepted + rejected == total input rows`` always holds.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable, Iterator

import csv
import numpy as np

from .features import BASE_COVARIATES
from .model import PlaySequence

log = logging.getLogger(__name__)

TRAIN_SEASONS = (2009, 2017)  # inclusive
TEST_SEASON = 2018

# logical field -> column name in the Kaggle play-by-play CSV
DEFAULT_COLUMN_MAPPING = {
    "game_id": "game_id",
    "game_date": "game_date",
    "posteam": "posteam",
    "home_team": "home_team",
    "play_type": "play_type",
    "down": "down",
    "ydstogo": "ydstogo",
    "shotgun": "shotgun",
    "no_huddle": "no_huddle",
    "posteam_score": "posteam_score",
    "defteam_score": "defteam_score",
    "goal_to_go": "goal_to_go",
    "yardline_100": "yardline_100",
}

KEPT_PLAY_TYPES = frozenset({"run", "pass"})

# Table 1 plausibility ranges; violations are logged but rows are kept
YDSTOGO_RANGE = (1.0, 50.0)
SCOREDIFF_RANGE = (-59.0, 59.0)


class SchemaError(ValueError):
    """The CSV header does not provide every mapped column."""


@dataclass(frozen=True)
class RawPlayRow:
    """One typed run/pass play, straight from the CSV."""

    match_id: str
    season: int
    posteam: str
    home_team: str
    play_type: str  # "run" or "pass"
    down: int
    ydstogo: float
    shotgun: int
    no_huddle: int
    posteam_score: float
    defteam_score: float
    goal_to_go: int
    yardline_100: float


@dataclass(frozen=True)
class Rejection:
    line: int  # physical line number in the file (header is line 1)
    reason: str


@dataclass
class RejectionReport:
    total_rows: int = 0
    accepted: int = 0
    rejections: list[Rejection] = field(default_factory=list)

    @property
    def rejected(self) -> int:
        return len(self.rejections)

    def counts_by_reason(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.rejections:
            counts[r.reason] = counts.get(r.reason, 0) + 1
        return counts


@dataclass(frozen=True)
class CovariateRow:
    """Derived modeling covariates for one play (Table-1 style fields)."""

    match_id: str
    team_id: str
    season: int
    pass_: int  # 1 = pass, 0 = run
    home: int
    ydstogo: float
    down1: int
    down2: int
    down3: int
    down4: int
    shotgun: int
    no_huddle: int
    scorediff: float
    goaltogo: int
    yardline90: int

    def __post_init__(self):
        if self.down1 + self.down2 + self.down3 + self.down4 != 1:
            raise ValueError("exactly one down dummy must be set")

    def vector(self) -> np.ndarray:
        """Covariate values in canonical BASE_COVARIATES order."""
        return np.array(
            [
                self.home,
                self.ydstogo,
                self.down1,
                self.down2,
                self.down3,
                self.down4,
                self.shotgun,
                self.no_huddle,
                self.scorediff,
                self.goaltogo,
                self.yardline90,
            ],
            dtype=float,
        )


@dataclass
class DatasetSplit:
    """Training (2009-2017) and test (2018) sequences plus a per-team index."""

    train: list[PlaySequence]
    test: list[PlaySequence]

    @property
    def teams(self) -> list[str]:
        return sorted({s.team_id for s in self.train} | {s.team_id for s in self.test})

    def train_for(self, team: str) -> list[PlaySequence]:
        return [s for s in self.train if s.team_id == team]

    def test_for(self, team: str) -> list[PlaySequence]:
        return [s for s in self.test if s.team_id == team]


# -- CSV parsing ----------------------------------------------------------------

_MISSING = frozenset({"", "na", "nan", "n/a", "null"})


def _clean(value: str | None) -> str | None:
    if value is None:
        return None
    value = value.strip()
    return None if value.lower() in _MISSING else value


def _parse_season(date_text: str) -> int | None:
    """Season year from a game date; Jan/Feb matches belong to the prior season."""
    parsed = None
    for fmt in ("%Y-%m-%d", "%m/%d/%Y"):
        try:
            parsed = datetime.strptime(date_text, fmt)
            break
        except ValueError:
            continue
    if parsed is None:
        return None
    return parsed.year - 1 if parsed.month <= 2 else parsed.year


def _coerce(raw: dict[str, str | None], line: int) -> RawPlayRow | Rejection:
    """Type one mapped row; the first failing field decides the reason."""
    for name in ("game_id", "game_date", "posteam", "home_team"):
        if raw[name] is None:
            return Rejection(line, f"missing {name}")
    season = _parse_season(raw["game_date"])
    if season is None:
        return Rejection(line, "invalid game_date")

    if raw["down"] is None:
        return Rejection(line, "missing down")
    try:
        down = float(raw["down"])
    except ValueError:
        return Rejection(line, "invalid down")
    if down not in (1.0, 2.0, 3.0, 4.0):
        return Rejection(line, "invalid down")

    numbers = {}
    for name in ("ydstogo", "posteam_score", "defteam_score", "yardline_100"):
        if raw[name] is None:
            return Rejection(line, f"missing {name}")
        try:
            numbers[name] = float(raw[name])
        except ValueError:
            return Rejection(line, f"invalid {name}")
    if not 0.0 <= numbers["yardline_100"] <= 100.0:
        return Rejection(line, "invalid yardline_100")

    flags = {}
    for name in ("shotgun", "no_huddle", "goal_to_go"):
        if raw[name] is None:
            return Rejection(line, f"missing {name}")
        try:
            value = float(raw[name])
        except ValueError:
            return Rejection(line, f"invalid {name}")
        if value not in (0.0, 1.0):
            return Rejection(line, f"invalid {name}")
        flags[name] = int(value)

    return RawPlayRow(
        match_id=raw["game_id"],
        season=season,
        posteam=raw["posteam"],
        home_team=raw["home_team"],
        play_type=raw["play_type"],
        down=int(down),
        ydstogo=numbers["ydstogo"],
        shotgun=flags["shotgun"],
        no_huddle=flags["no_huddle"],
        posteam_score=numbers["posteam_score"],
        defteam_score=numbers["defteam_score"],
        goal_to_go=flags["goal_to_go"],
        yardline_100=numbers["yardline_100"],
    )


def _open_source(source: str | Path | IO[str] | Iterable[str]):
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    return source, False


def parse_plays(
    source: str | Path | IO[str] | Iterable[str],
    column_mapping: dict[str, str] | None = None,
) -> tuple[list[RawPlayRow], RejectionReport]:
    """Read a play-by-play CSV into typed run/pass rows, in file order.

    Non run/pass rows (kickoffs, field goals, kneels, ...) and rows whose
    required fields fail type coercion are recorded in the rejection report
    rather than dropped.  A header missing any mapped column raises
    :class:`SchemaError`.
    """
    mapping = dict(DEFAULT_COLUMN_MAPPING)
    if column_mapping:
        unknown = set(column_mapping) - set(DEFAULT_COLUMN_MAPPING)
        if unknown:
            raise SchemaError(f"unknown mapping keys: {sorted(unknown)}")
        mapping.update(column_mapping)

    handle, owned = _open_source(source)
    try:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [col for col in mapping.values() if col not in header]
        if missing:
            raise SchemaError(f"CSV header is missing mapped columns: {missing}")

        rows: list[RawPlayRow] = []
        report = RejectionReport()
        for record in reader:
            report.total_rows += 1
            line = reader.line_num
            raw = {name: _clean(record.get(col)) for name, col in mapping.items()}
            play_type = (raw["play_type"] or "").lower()
            if play_type not in KEPT_PLAY_TYPES:
                report.rejections.append(Rejection(line, "play type not run/pass"))
                continue
            raw["play_type"] = play_type
            outcome = _coerce(raw, line)
            if isinstance(outcome, Rejection):
                report.rejections.append(outcome)
            else:
                rows.append(outcome)
                report.accepted += 1
        return rows, report
    finally:
        if owned:
            handle.close()


# -- covariate derivation ---------------------------------------------------------


def derive_covariates(row: RawPlayRow) -> CovariateRow:
    """Map one typed play to its modeling covariates.

    Out-of-range ydstogo or score differences are logged and kept; the
    plausible ranges come from the observed data rather than hard rules.
    """
    scorediff = row.posteam_score - row.defteam_score
    if not YDSTOGO_RANGE[0] <= row.ydstogo <= YDSTOGO_RANGE[1]:
        log.warning(
            "ydstogo %.0f outside [%g, %g] in match %s",
            row.ydstogo, *YDSTOGO_RANGE, row.match_id,
        )
    if not SCOREDIFF_RANGE[0] <= scorediff <= SCOREDIFF_RANGE[1]:
        log.warning(
            "scorediff %.0f outside [%g, %g] in match %s",
            scorediff, *SCOREDIFF_RANGE, row.match_id,
        )
    return CovariateRow(
        match_id=row.match_id,
        team_id=row.posteam,
        season=row.season,
        pass_=1 if row.play_type == "pass" else 0,
        home=1 if row.posteam == row.home_team else 0,
        ydstogo=row.ydstogo,
        down1=1 if row.down == 1 else 0,
        down2=1 if row.down == 2 else 0,
        down3=1 if row.down == 3 else 0,
        down4=1 if row.down == 4 else 0,
        shotgun=row.shotgun,
        no_huddle=row.no_huddle,
        scorediff=scorediff,
        goaltogo=row.goal_to_go,
        yardline90=1 if row.yardline_100 >= 90.0 else 0,
    )


# -- sequence building and season split -------------------------------------------


def build_sequences(rows: Iterable[CovariateRow]) -> list[PlaySequence]:
    """Group plays into one sequence per (match, offense team), in file order."""
    groups: dict[tuple[str, str], list[CovariateRow]] = {}
    for row in rows:
        groups.setdefault((row.match_id, row.team_id), []).append(row)

    sequences = []
    for (match_id, team_id), plays in groups.items():
        seasons = {p.season for p in plays}
        if len(seasons) != 1:
            raise ValueError(f"match {match_id} spans seasons {sorted(seasons)}")
        sequences.append(
            PlaySequence(
                match_id=match_id,
                team_id=team_id,
                y=np.array([p.pass_ for p in plays], dtype=np.int8),
                x=np.array([p.vector() for p in plays]),
                season=seasons.pop(),
            )
        )
    return sequences


def split_by_season(sequences: Iterable[PlaySequence]) -> DatasetSplit:
    """Partition into training (2009-2017) and test (2018) sets.

    Sequences from any other season are excluded with a warning.
    """
    train, test = [], []
    for seq in sequences:
        if seq.season is None:
            log.warning("sequence %s/%s has no season; excluded",
                        seq.match_id, seq.team_id)
        elif TRAIN_SEASONS[0] <= seq.season <= TRAIN_SEASONS[1]:
            train.append(seq)
        elif seq.season == TEST_SEASON:
            test.append(seq)
        else:
            log.warning("season %d outside %d-%d; excluding match %s",
                        seq.season, TRAIN_SEASONS[0], TEST_SEASON, seq.match_id)
    return DatasetSplit(train=train, test=test)


def ingest_csv(
    source: str | Path | IO[str] | Iterable[str],
    column_mapping: dict[str, str] | None = None,
) -> tuple[DatasetSplit, RejectionReport]:
    """Full pipeline: parse, derive covariates, group, split by season."""
    rows, report = parse_plays(source, column_mapping)
    sequences = build_sequences(derive_covariates(r) for r in rows)
    return split_by_season(sequences), report


# -- descriptive statistics and the sequence store --------------------------------


def descriptive_stats(sequences: list[PlaySequence]) -> dict:
    """Counts plus Table-1 style means over all plays in ``sequences``."""
    if not sequences:
        return {"matches": 0, "sequences": 0, "plays": 0,
                "pass_mean": None, "covariate_means": {}}
    y = np.concatenate([s.y for s in sequences])
    x = np.vstack([s.x for s in sequences])
    means = {name: float(x[:, k].mean()) for k, name in enumerate(BASE_COVARIATES)}
    return {
        "matches": len({s.match_id for s in sequences}),
        "sequences": len(sequences),
        "plays": int(y.shape[0]),
        "pass_mean": float(y.mean()),
        "covariate_means": means,
    }


def _store_record(seq: PlaySequence) -> dict:
    return {
        "match_id": seq.match_id,
        "season": seq.season,
        "plays": [
            {"y": int(yi), "x": [float(v) for v in xi]}
            for yi, xi in zip(seq.y, seq.x)
        ],
    }


def write_store(
    split: DatasetSplit,
    out_dir: str | Path,
    report: RejectionReport | None = None,
) -> dict:
    """Write one NDJSON file per team per split plus ``manifest.json``.

    The store is deterministic (no timestamps, sorted keys), so re-ingesting
    the same CSV reproduces it bit for bit.  Returns the manifest.
    """
    out = Path(out_dir)
    manifest: dict = {
        "covariate_order": list(BASE_COVARIATES),
        "splits": {},
    }
    for name, sequences in (("train", split.train), ("test", split.test)):
        split_dir = out / name
        split_dir.mkdir(parents=True, exist_ok=True)
        by_team: dict[str, list[PlaySequence]] = {}
        for seq in sequences:
            by_team.setdefault(seq.team_id, []).append(seq)
        for team, seqs in sorted(by_team.items()):
            with open(split_dir / f"{team}.ndjson", "w", encoding="utf-8") as fh:
                for seq in seqs:
                    fh.write(json.dumps(_store_record(seq), sort_keys=True))
                    fh.write("\n")
        stats = descriptive_stats(sequences)
        stats["teams"] = {
            team: {
                "sequences": len(seqs),
                "plays": int(sum(len(s) for s in seqs)),
            }
            for team, seqs in sorted(by_team.items())
        }
        manifest["splits"][name] = stats
    manifest["overall"] = descriptive_stats(split.train + split.test)
    if report is not None:
        manifest["ingest"] = {
            "total_rows": report.total_rows,
            "accepted": report.accepted,
            "rejected": report.rejected,
            "rejection_reasons": dict(sorted(report.counts_by_reason().items())),
        }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def list_store_teams(store_dir: str | Path, split_name: str = "train") -> list[str]:
    split_dir = Path(store_dir) / split_name
    if not split_dir.is_dir():
        raise FileNotFoundError(f"no {split_name} split under {store_dir}")
    return sorted(p.stem for p in split_dir.glob("*.ndjson"))


def _iter_records(path: Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def load_team_sequences(
    store_dir: str | Path, split_name: str, team: str
) -> list[PlaySequence]:
    """Read one team's sequences back from the NDJSON store."""
    path = Path(store_dir) / split_name / f"{team}.ndjson"
    if not path.is_file():
        raise FileNotFoundError(f"no stored sequences at {path}")
    sequences = []
    for record in _iter_records(path):
        plays = record["plays"]
        sequences.append(
            PlaySequence(
                match_id=record["match_id"],
                team_id=team,
                y=np.array([p["y"] for p in plays], dtype=np.int8),
                x=np.array([p["x"] for p in plays], dtype=float),
                season=record["season"],
            )
        )
    return sequences


def read_store(store_dir: str | Path) -> DatasetSplit:
    """Load the full store (both splits, every team)."""
    store = Path(store_dir)
    loaded: dict[str, list[PlaySequence]] = {"train": [], "test": []}
    for name in loaded:
        split_dir = store / name
        if not split_dir.is_dir():
            continue
        for path in sorted(split_dir.glob("*.ndjson")):
            loaded[name].extend(load_team_sequences(store, name, path.stem))
    if not loaded["train"] and not loaded["test"]:
        raise FileNotFoundError(f"no sequence store under {store_dir}")
    return DatasetSplit(train=loaded["train"], test=loaded["test"])
