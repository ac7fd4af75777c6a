"""Command-line pipeline: ingest -> fit/select -> evaluate -> serve.

Every artifact-producing command drops a run_manifest.json next to its
outputs recording the effective configuration, sha256 fingerprints of the
inputs it consumed, the seed, and timestamps.  Outputs themselves are
deterministic given identical inputs and seed; only the manifest timestamps
differ across reruns.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  The PLAYCALL_LOG
environment variable (error, warn, info, debug) controls verbosity.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from .evaluate import (
    aggregate,
    evaluate_team,
    format_report_csv,
    format_report_text,
)
from .features import BASE_COVARIATES, INTERACTION_CANDIDATES, build_design
from .fit import FitConfig, FitError, SelectionError, fit, forward_select
from .ingest import SchemaError, ingest_csv, list_store_teams, load_team_sequences, write_store
from .model import ModelSpec
from .service import create_app, load_models

log = logging.getLogger(__name__)

N_STATES = 2  # two latent play-calling regimes throughout

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def configure_logging() -> None:
    raw = os.environ.get("PLAYCALL_LOG", "info").lower()
    level = _LOG_LEVELS.get(raw, logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    # basicConfig is a no-op once handlers exist, so set the level directly
    logging.getLogger().setLevel(level)
    if raw not in _LOG_LEVELS:
        log.warning("unknown PLAYCALL_LOG value %r; using info", raw)


# -- run manifests -----------------------------------------------------------------


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def fingerprint_file(path: str | Path) -> dict:
    path = Path(path)
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return {
        "path": str(path),
        "size": path.stat().st_size,
        "sha256": digest.hexdigest(),
    }


def write_run_manifest(
    out_dir: Path,
    command: str,
    config: dict,
    inputs: list[dict],
    outputs: list[str],
    started_at: str,
    results: dict | None = None,
) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": sorted(outputs),
        "started_at": started_at,
        "finished_at": _now(),
    }
    if results is not None:
        manifest["results"] = results
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- ingest ------------------------------------------------------------------------


def _read_mapping_file(path: Path) -> dict[str, str]:
    mapping = {}
    for line_num, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_num}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


def cmd_ingest(args) -> int:
    started = _now()
    mapping: dict[str, str] = {}
    inputs = [fingerprint_file(args.input)]
    if args.mapping:
        mapping.update(_read_mapping_file(Path(args.mapping)))
        inputs.append(fingerprint_file(args.mapping))
    for override in args.map or []:
        if "=" not in override:
            raise ValueError(f"--map expects key=column, got {override!r}")
        key, _, value = override.partition("=")
        mapping[key.strip()] = value.strip()

    split, report = ingest_csv(args.input, mapping or None)
    out = Path(args.out)
    write_store(split, out, report)
    log.info(
        "ingested %d rows: %d plays kept, %d rejected; %d train / %d test sequences",
        report.total_rows, report.accepted, report.rejected,
        len(split.train), len(split.test),
    )
    outputs = [str(p.relative_to(out)) for p in out.rglob("*.ndjson")]
    outputs.append("manifest.json")
    write_run_manifest(
        out, "ingest",
        config={"input": str(args.input), "mapping": mapping or None,
                "out": str(out)},
        inputs=inputs, outputs=outputs, started_at=started,
        results={"total_rows": report.total_rows, "accepted": report.accepted,
                 "rejected": report.rejected,
                 "train_sequences": len(split.train),
                 "test_sequences": len(split.test)},
    )
    return 0


# -- fit ---------------------------------------------------------------------------


def _fit_team_job(job: dict) -> dict:
    """Fit one team; self-contained so it can run in a worker process."""
    team = job["team"]
    try:
        sequences = load_team_sequences(job["data"], "train", team)
        config = FitConfig(n_starts=job["starts"], rng_seed=job["seed"])
        fingerprint = {
            "train_data": fingerprint_file(
                Path(job["data"]) / "train" / f"{team}.ndjson"
            ),
            "seed": job["seed"],
        }
        if job["select"]:
            candidates = list(BASE_COVARIATES) + list(INTERACTION_CANDIDATES)
            model, _ = forward_select(
                ModelSpec(N_STATES), candidates, sequences, config,
                team_id=team, training_fingerprint=fingerprint,
            )
        else:
            design = build_design(sequences, BASE_COVARIATES)
            model = fit(
                ModelSpec(N_STATES, BASE_COVARIATES), design, config,
                team_id=team, training_fingerprint=fingerprint,
            )
        path = Path(job["out"]) / f"{team}.json"
        model.save(path)
        return {"team": team, "status": "ok", "path": path.name,
                "aic": model.aic, "log_likelihood": model.log_likelihood,
                "covariates": list(model.spec.covariate_names),
                "seed": job["seed"]}
    except (FitError, SelectionError, ValueError, FileNotFoundError) as exc:
        return {"team": team, "status": "error", "error": str(exc),
                "seed": job["seed"]}


def cmd_fit(args) -> int:
    started = _now()
    store_teams = list_store_teams(args.data, "train")
    if args.team == "all":
        teams = store_teams
    else:
        if args.team not in store_teams:
            raise FileNotFoundError(
                f"team {args.team!r} has no training data under {args.data}; "
                f"available: {', '.join(store_teams)}"
            )
        teams = [args.team]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # seed by position in the full store listing so a team's seed does not
    # depend on which subset of teams this run happens to fit
    jobs = [
        {"team": team, "data": str(args.data), "out": str(out),
         "seed": args.seed + store_teams.index(team), "starts": args.starts,
         "select": args.select}
        for team in teams
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_fit_team_job, jobs))
    else:
        results = [_fit_team_job(job) for job in jobs]

    failures = [r for r in results if r["status"] == "error"]
    for r in results:
        if r["status"] == "ok":
            log.info("fit %s: AIC %.2f (%s)", r["team"], r["aic"],
                     ", ".join(r["covariates"]) or "intercepts only")
        else:
            log.error("fit %s failed: %s", r["team"], r["error"])

    write_run_manifest(
        out, "fit",
        config={"data": str(args.data), "team": args.team,
                "select": args.select, "seed": args.seed,
                "starts": args.starts, "jobs": args.jobs,
                "n_states": N_STATES},
        inputs=[fingerprint_file(Path(args.data) / "train" / f"{t}.ndjson")
                for t in teams],
        outputs=[r["path"] for r in results if r["status"] == "ok"],
        started_at=started,
        results={"teams": results},
    )
    return 1 if failures else 0


# -- evaluate ----------------------------------------------------------------------


def cmd_evaluate(args) -> int:
    started = _now()
    models = load_models(args.models)
    test_teams = list_store_teams(args.data, "test")
    threshold = args.threshold
    if threshold is not None and threshold <= 0.5:
        threshold = None  # gating at 0.5 keeps every play

    reports = []
    skipped = []
    for team in test_teams:
        model = models.get(team)
        if model is None:
            log.warning("no model for test team %s; skipped", team)
            skipped.append(team)
            continue
        sequences = load_team_sequences(args.data, "test", team)
        design = build_design(sequences, model.spec.covariate_names)
        reports.append(
            evaluate_team(model, design, threshold=threshold,
                          include_first_play=not args.exclude_first_play)
        )
    if not reports:
        raise RuntimeError(
            f"no test team under {args.data} has a model in {args.models}"
        )

    report = aggregate(reports)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = format_report_text(report)
    (out / "report.txt").write_text(text)
    (out / "report.csv").write_text(format_report_csv(report))
    sys.stdout.write(text)

    write_run_manifest(
        out, "evaluate",
        config={"models": str(args.models), "data": str(args.data),
                "threshold": args.threshold,
                "exclude_first_play": args.exclude_first_play},
        inputs=(
            [fingerprint_file(Path(args.data) / "test" / f"{t}.ndjson")
             for t in test_teams if t not in skipped]
            + [fingerprint_file(Path(args.models) / f"{r.team}.json")
               for r in reports]
        ),
        outputs=["report.txt", "report.csv"],
        started_at=started,
        results={"weighted_accuracy": report.weighted_accuracy,
                 "teams_evaluated": [r.team for r in reports],
                 "teams_skipped": skipped},
    )
    return 0


# -- serve -------------------------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    models = load_models(args.models)
    app = create_app(models, threshold=args.threshold,
                     journal_path=args.journal)
    log.info("serving %d model(s) on %s:%d", len(models), args.host, args.port)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except OSError as exc:
        raise RuntimeError(
            f"cannot bind {args.host}:{args.port} ({exc.strerror or exc}); "
            "is the port already in use?"
        ) from exc
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="playcall",
        description="Run/pass forecasting: data ingestion, model fitting, "
                    "evaluation, and the live session service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse a play-by-play CSV into "
                                             "the sequence store")
    p_ingest.add_argument("--input", required=True, help="play-by-play CSV")
    p_ingest.add_argument("--mapping", help="key=value file renaming CSV columns")
    p_ingest.add_argument("--map", action="append", metavar="KEY=COLUMN",
                          help="single mapping override (repeatable; wins "
                               "over --mapping)")
    p_ingest.add_argument("--out", required=True, help="store directory")
    p_ingest.set_defaults(func=cmd_ingest)

    p_fit = sub.add_parser("fit", help="fit per-team models on the training split")
    p_fit.add_argument("--data", required=True, help="sequence store directory")
    p_fit.add_argument("--team", default="all",
                       help="team code, or 'all' for every team in the store")
    p_fit.add_argument("--select", action="store_true",
                       help="forward AIC selection instead of the full "
                            "covariate set")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--starts", type=int, default=3,
                       help="optimizer starts per fit")
    p_fit.add_argument("--jobs", type=int, default=1,
                       help="parallel team fits")
    p_fit.add_argument("--out", required=True, help="model directory")
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser("evaluate", help="one-step-ahead evaluation on the "
                                             "test split")
    p_eval.add_argument("--models", required=True, help="model directory")
    p_eval.add_argument("--data", required=True, help="sequence store directory")
    p_eval.add_argument("--threshold", type=float, default=None,
                        help="confidence gate in (0.5, 1]; 0.5 disables gating")
    p_eval.add_argument("--exclude-first-play", action="store_true",
                        help="skip the delta-based first forecast of each match")
    p_eval.add_argument("--out", required=True, help="report directory")
    p_eval.set_defaults(func=cmd_evaluate)

    p_serve = sub.add_parser("serve", help="run the live forecast service")
    p_serve.add_argument("--models", required=True, help="model directory")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--threshold", type=float, default=0.7,
                         help="confidence gate reported as threshold_advice")
    p_serve.add_argument("--journal", default=None,
                         help="append-only session journal for crash recovery")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        return args.func(args)
    except (SchemaError, FileNotFoundError, RuntimeError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
