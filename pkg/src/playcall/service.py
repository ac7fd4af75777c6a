"""Live play-call forecasting over HTTP.

A session tracks one team's offense through a match.  The console posts the
pre-snap situation to get a forecast for the imminent play, then records what
the offense actually ran; the service keeps the forward vector updated
incrementally so each forecast conditions on the full recorded history.

Sessions live in memory, optionally mirrored to an append-only journal so a
restarted service can rebuild them.  All endpoints sit under /v1 and errors
use a common {code, message, violations[]} envelope.
"""
from __future__ import annotations

import json
import logging
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from starlette.exceptions import HTTPException as StarletteHTTPException

from .features import Situation, design_columns, situation_base_vector
from .fit import scale_vector
from .hmm import (
    emission_vector,
    filter_init,
    filter_step,
    forecast_from_filter,
    forecast_initial,
    transition_matrix,
)
from .model import FittedModel, ForecastResult

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.7


class SituationBody(BaseModel):
    """Pre-snap situation as entered on the sideline."""

    down: int = Field(ge=1, le=4)
    ydstogo: int = Field(ge=1)
    shotgun: bool = False
    no_huddle: bool = False
    own_score: int = Field(default=0, ge=0)
    opp_score: int = Field(default=0, ge=0)
    goaltogo: bool = False
    yardline_100: int = Field(ge=0, le=100)

    def to_situation(self) -> Situation:
        return Situation(
            down=self.down,
            ydstogo=self.ydstogo,
            shotgun=self.shotgun,
            no_huddle=self.no_huddle,
            own_score=self.own_score,
            opp_score=self.opp_score,
            goaltogo=self.goaltogo,
            yardline_100=self.yardline_100,
        )


class SessionBody(BaseModel):
    team: str = Field(min_length=1)
    home: bool = False


class PlayBody(SituationBody):
    actual_call: Literal["run", "pass"]


@dataclass
class _Session:
    session_id: str
    team_id: str
    home: bool
    model: FittedModel
    created_at: str
    updated_at: str
    history_y: list[int] = field(default_factory=list)
    history_x: list[np.ndarray] = field(default_factory=list)  # scaled, model space
    phi: np.ndarray | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def n_history(self) -> int:
        return len(self.history_y)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(
        status_code=status,
        detail={"code": code, "message": message, "violations": []},
    )


def situation_to_model_x(
    model: FittedModel, situation: Situation, home: bool
) -> np.ndarray:
    """Situation -> scaled covariate vector in the model's space."""
    base = situation_base_vector(situation, home)
    raw = design_columns(base[None, :], model.spec.covariate_names)[0]
    return scale_vector(raw, model.covariate_scaling)


def _forecast_payload(result: ForecastResult, threshold: float) -> dict:
    p = result.pass_prob
    advice = "consult" if max(p, 1.0 - p) >= threshold else "low_confidence"
    return {
        "pass_prob": p,
        "run_prob": result.run_prob,
        "predicted_call": "pass" if result.predicted_call == 1 else "run",
        "filtered_state_probs": [float(v) for v in result.filtered_state_probs],
        "n_history": result.n_history,
        "threshold_advice": advice,
    }


def load_models(models_dir: str | Path) -> dict[str, FittedModel]:
    """Read every fitted-model JSON file in a directory, keyed by team."""
    models_dir = Path(models_dir)
    if not models_dir.is_dir():
        raise FileNotFoundError(f"model directory {models_dir} does not exist")
    models: dict[str, FittedModel] = {}
    for path in sorted(models_dir.glob("*.json")):
        if path.name in ("manifest.json", "run_manifest.json"):
            continue
        model = FittedModel.load(path)
        models[model.team_id or path.stem] = model
    if not models:
        raise FileNotFoundError(f"no model files (*.json) under {models_dir}")
    return models


def create_app(
    models: dict[str, FittedModel],
    threshold: float = DEFAULT_THRESHOLD,
    journal_path: str | Path | None = None,
) -> FastAPI:
    """Build the session service around a set of per-team models."""
    if not models:
        raise ValueError("need at least one model to serve")
    if not 0.5 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0.5, 1], got {threshold}")

    app = FastAPI(title="playcall session service", version="1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, _Session] = {}
    journal = Path(journal_path) if journal_path is not None else None
    journal_lock = threading.Lock()

    def journal_write(record: dict) -> None:
        if journal is None:
            return
        with journal_lock:
            with open(journal, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True))
                fh.write("\n")

    def get_session(session_id: str) -> _Session:
        session = sessions.get(session_id)
        if session is None:
            raise _error(404, "unknown_session",
                         f"no session {session_id!r}; it may have expired")
        return session

    def make_session(team: str, home: bool, session_id: str | None = None,
                     created_at: str | None = None) -> _Session:
        model = models.get(team)
        if model is None:
            raise _error(
                404, "unknown_team",
                f"no model for team {team!r}; available: "
                f"{', '.join(sorted(models))}",
            )
        now = created_at or _now()
        session = _Session(
            session_id=session_id or secrets.token_urlsafe(16),
            team_id=team,
            home=home,
            model=model,
            created_at=now,
            updated_at=now,
        )
        sessions[session.session_id] = session
        return session

    def append_play(session: _Session, y: int, x: np.ndarray) -> int:
        params = session.model.params
        with session.lock:
            if session.phi is None:
                session.phi, _ = filter_init(params, y)
            else:
                gamma = transition_matrix(params.coeffs, x)
                session.phi, _ = filter_step(
                    session.phi, gamma, emission_vector(params, y)
                )
            session.history_y.append(y)
            session.history_x.append(x)
            session.updated_at = _now()
            return session.n_history

    def replay_journal() -> None:
        if journal is None or not journal.exists():
            return
        with open(journal, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if record["type"] == "create":
                    if record["team"] not in models:
                        log.warning("journal session for unknown team %r skipped",
                                    record["team"])
                        continue
                    make_session(record["team"], record["home"],
                                 session_id=record["session_id"],
                                 created_at=record["created_at"])
                elif record["type"] == "play":
                    session = sessions.get(record["session_id"])
                    if session is None:
                        log.warning("journal play for unknown session %r skipped",
                                    record["session_id"])
                        continue
                    append_play(session, int(record["y"]),
                                np.asarray(record["x"], dtype=float))
        log.info("journal replay restored %d session(s)", len(sessions))

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        violations = [
            {
                "field": ".".join(str(part) for part in err["loc"]
                                  if part != "body"),
                "message": err["msg"],
            }
            for err in exc.errors()
        ]
        return JSONResponse(
            status_code=422,
            content={"code": "validation_error",
                     "message": "request body failed validation",
                     "violations": violations},
        )

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail), "violations": []}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "teams": sorted(models),
            "threshold": threshold,
            "active_sessions": len(sessions),
        }

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: SessionBody):
        session = make_session(body.team, body.home)
        journal_write({
            "type": "create",
            "session_id": session.session_id,
            "team": session.team_id,
            "home": session.home,
            "created_at": session.created_at,
        })
        return {
            "session_id": session.session_id,
            "team": session.team_id,
            "home": session.home,
            "n_history": 0,
        }

    @app.get("/v1/sessions/{session_id}")
    def session_summary(session_id: str):
        session = get_session(session_id)
        with session.lock:
            phi = None if session.phi is None else [float(v) for v in session.phi]
            return {
                "session_id": session.session_id,
                "team": session.team_id,
                "home": session.home,
                "n_history": session.n_history,
                "filtered_state_probs": phi,
                "model": {
                    "n_states": session.model.spec.n_states,
                    "covariates": list(session.model.spec.covariate_names),
                },
                "created_at": session.created_at,
                "updated_at": session.updated_at,
            }

    @app.post("/v1/sessions/{session_id}/forecast")
    def forecast(session_id: str, body: SituationBody):
        session = get_session(session_id)
        x = situation_to_model_x(session.model, body.to_situation(), session.home)
        params = session.model.params
        with session.lock:
            n = session.n_history
            phi = session.phi
        if n == 0:
            result = forecast_initial(params)
        else:
            result = forecast_from_filter(params, phi, x, n)
        return _forecast_payload(result, threshold)

    @app.post("/v1/sessions/{session_id}/plays")
    def record_play(session_id: str, body: PlayBody):
        session = get_session(session_id)
        x = situation_to_model_x(session.model, body.to_situation(), session.home)
        y = 1 if body.actual_call == "pass" else 0
        n = append_play(session, y, x)
        journal_write({
            "type": "play",
            "session_id": session.session_id,
            "y": y,
            "x": [float(v) for v in x],
        })
        return {"n_history": n}

    replay_journal()
    return app
