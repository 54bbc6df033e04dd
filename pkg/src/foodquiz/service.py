"""HTTP+JSON backend: sessions, answers, results, demographics, export.

Persistence is an append-only JSONL event log. Every acknowledged mutation
is flushed (and fsynced) to the log before the response goes out, and
replaying the log from disk reconstructs the exact store state, so a crash
after any acknowledged request loses nothing.
"""

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Header, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import canonical, engine, stats
from .exceptions import EngineError, FoodquizError, FormatError, ImplausibleAnthropometry
from .quizkit import QuizSpec, validate_quiz
from .stats import DEFAULT_CUTOFF, RespondentRecord

SESSION_CREATED = "session_created"
ANSWER_RECORDED = "answer_recorded"
DEMOGRAPHICS_RECORDED = "demographics_recorded"


class EventLog:
    """Append-only JSONL log; appends are atomic per event and fsynced."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, event: dict) -> None:
        line = canonical.dumps(event) + "\n"
        with self._lock:
            self._fh.write(line)
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    @staticmethod
    def read_all(path: str | Path) -> list[dict]:
        """Read events, tolerating one torn (unacknowledged) trailing line."""
        path = Path(path)
        if not path.exists():
            return []
        events = []
        lines = path.read_text(encoding="utf-8").splitlines()
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                if i == len(lines) - 1:
                    break  # torn final write from a crash; never acknowledged
                raise FormatError(f"corrupt event log at line {i + 1}: {exc}") from exc
        return events


@dataclass
class DemographicsIntake:
    """Validated, SI-converted demographics as persisted in the log."""

    height: Optional[float] = None
    weight: Optional[float] = None
    age: Optional[float] = None
    gender: str = "undisclosed"
    location: Optional[str] = None
    handles: dict[str, str] = field(default_factory=dict)
    comment: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "weight": self.weight,
            "age": self.age,
            "gender": self.gender,
            "location": self.location,
            "handles": dict(self.handles),
            "comment": self.comment,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DemographicsIntake":
        return cls(
            height=obj.get("height"),
            weight=obj.get("weight"),
            age=obj.get("age"),
            gender=obj.get("gender", "undisclosed"),
            location=obj.get("location"),
            handles=dict(obj.get("handles", {})),
            comment=obj.get("comment"),
        )


class SessionStore:
    """Sessions plus demographics fragments, durable via the event log.

    Operations on one session id are serialized by a per-session lock;
    distinct sessions proceed concurrently.
    """

    def __init__(
        self,
        spec: QuizSpec,
        data_dir: str | Path,
        cutoff: float = DEFAULT_CUTOFF,
        salt: str = "dev-salt",
    ):
        report = validate_quiz(spec)
        if not report.ok:
            raise FoodquizError("quiz spec invalid at startup: " + "; ".join(report.failures))
        self.spec = spec
        self.cutoff = cutoff
        self.salt = salt
        self.data_dir = Path(data_dir)
        self.sessions: dict[str, engine.Session] = {}
        self.demographics: dict[str, DemographicsIntake] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        for event in EventLog.read_all(self.data_dir / "events.jsonl"):
            self._apply(event)
        self.log = EventLog(self.data_dir / "events.jsonl")

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == SESSION_CREATED:
            session = engine.start_session(self.spec, session_id=event["session_id"])
            self.sessions[session.session_id] = session
        elif kind == ANSWER_RECORDED:
            engine.answer(
                self.sessions[event["session_id"]],
                event["question"],
                event["choice"],
                timestamp=event["ts"],
            )
        elif kind == DEMOGRAPHICS_RECORDED:
            self.demographics[event["session_id"]] = DemographicsIntake.from_dict(
                event["demographics"]
            )
        else:
            raise FormatError(f"unknown event type '{kind}'")

    def create_session(self) -> engine.Session:
        session_id = uuid.uuid4().hex
        with self._lock_for(session_id):
            session = engine.start_session(self.spec, session_id=session_id)
            self.sessions[session_id] = session
            self.log.append({"type": SESSION_CREATED, "session_id": session_id, "ts": time.time()})
        return session

    def get(self, session_id: str) -> engine.Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def answer(self, session_id: str, question_id: str, choice_index: int) -> engine.Session:
        with self._lock_for(session_id):
            session = self.get(session_id)
            ts = time.time()
            engine.answer(session, question_id, choice_index, timestamp=ts)
            self.log.append(
                {
                    "type": ANSWER_RECORDED,
                    "session_id": session_id,
                    "question": question_id,
                    "choice": choice_index,
                    "ts": ts,
                }
            )
        return session

    def record_demographics(self, session_id: str, intake: DemographicsIntake) -> DemographicsIntake:
        with self._lock_for(session_id):
            session = self.get(session_id)
            if session.status != engine.COMPLETE:
                raise EngineError("incomplete", "demographics accepted only after completion")
            if session_id in self.demographics:
                raise EngineError("already_submitted", "demographics already recorded")
            self.demographics[session_id] = intake
            self.log.append(
                {
                    "type": DEMOGRAPHICS_RECORDED,
                    "session_id": session_id,
                    "demographics": intake.to_dict(),
                    "ts": time.time(),
                }
            )
        return intake

    def records(self) -> list[RespondentRecord]:
        """Full records for every completed session (demographics optional)."""
        out = []
        for session_id in sorted(self.sessions):
            session = self.sessions[session_id]
            if session.status != engine.COMPLETE:
                continue
            intake = self.demographics.get(session_id) or DemographicsIntake()
            out.append(
                RespondentRecord(
                    session_id=session_id,
                    transcript=[(e.question_id, e.choice_index) for e in session.transcript],
                    prediction=session.prediction,
                    height=intake.height,
                    weight=intake.weight,
                    age=intake.age,
                    gender=intake.gender,
                    location=intake.location,
                    handles=intake.handles,
                    comment=intake.comment,
                )
            )
        return out

    def state_snapshot(self) -> str:
        """Canonical digest of the full store state (for durability tests)."""
        return canonical.dumps(
            {
                "sessions": {
                    sid: s.to_dict(include_timestamps=True) for sid, s in self.sessions.items()
                },
                "demographics": {sid: d.to_dict() for sid, d in self.demographics.items()},
            }
        )

    def close(self) -> None:
        self.log.close()


@dataclass
class ServiceConfig:
    quiz_path: str
    data_dir: str
    host: str = "127.0.0.1"
    port: int = 8000
    cutoff: float = DEFAULT_CUTOFF
    admin_token: Optional[str] = None
    export_salt: str = "dev-salt"


class AnswerBody(BaseModel):
    question_id: str
    choice_index: int


class DemographicsBody(BaseModel):
    height: Optional[float] = None
    weight: Optional[float] = None
    units: str = "metric"  # metric: m/kg; imperial: in/lbs
    age: Optional[float] = None
    gender: Optional[str] = None
    location: Optional[str] = None
    twitter: Optional[str] = None
    instagram: Optional[str] = None
    facebook: Optional[str] = None
    comment: Optional[str] = None


def _question_payload(question) -> dict:
    out = {
        "id": question.id,
        "text": question.text,
        "choices": list(question.choices),
    }
    if question.image:
        out["image"] = question.image
    return out


def create_app(
    spec: QuizSpec,
    data_dir: str | Path,
    cutoff: float = DEFAULT_CUTOFF,
    admin_token: Optional[str] = None,
    export_salt: str = "dev-salt",
) -> FastAPI:
    app = FastAPI(title="foodquiz", docs_url=None, redoc_url=None)
    store = SessionStore(spec, data_dir, cutoff=cutoff, salt=export_salt)
    app.state.store = store

    def _get_session(session_id: str) -> engine.Session:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")

    @app.post("/api/sessions", status_code=201)
    def create_session():
        session = store.create_session()
        return {"session_id": session.session_id}

    @app.get("/api/sessions/{session_id}/next")
    def next_question(session_id: str):
        session = _get_session(session_id)
        question = engine.next_question(session)
        if question is None:
            return {"done": True}
        return {"question": _question_payload(question)}

    @app.post("/api/sessions/{session_id}/answers")
    def post_answer(session_id: str, body: AnswerBody):
        _get_session(session_id)
        try:
            session = store.answer(session_id, body.question_id, body.choice_index)
        except EngineError as exc:
            status = 409 if exc.code == "already_answered" else 422
            raise HTTPException(status_code=status, detail=exc.code)
        return {"accepted": True, "complete": session.status == engine.COMPLETE}

    @app.get("/api/sessions/{session_id}/result")
    def result(session_id: str):
        session = _get_session(session_id)
        try:
            prediction = engine.predict_session(session)
        except EngineError as exc:
            raise HTTPException(status_code=409, detail=exc.code)
        return {
            "prediction": "overweight" if prediction.label else "not_overweight",
            "votes_true": prediction.votes_true,
            "votes_total": prediction.votes_total,
        }

    @app.post("/api/sessions/{session_id}/demographics")
    def demographics(session_id: str, body: DemographicsBody):
        session = _get_session(session_id)
        if body.units not in ("metric", "imperial"):
            raise HTTPException(status_code=422, detail="units must be metric or imperial")
        height = weight = None
        bmi_value = None
        try:
            if body.height is not None:
                height = stats.to_m(body.height, "in" if body.units == "imperial" else "m")
            if body.weight is not None:
                weight = stats.to_kg(body.weight, "lbs" if body.units == "imperial" else "kg")
            if height is not None and weight is not None:
                bmi_value = stats.bmi(weight, height)
        except ImplausibleAnthropometry as exc:
            raise HTTPException(status_code=422, detail=f"implausible_anthropometry: {exc}")

        gender = body.gender or "undisclosed"
        if gender not in stats.GENDERS:
            raise HTTPException(status_code=422, detail=f"gender must be one of {stats.GENDERS}")
        handles = {}
        for platform in ("twitter", "instagram", "facebook"):
            value = getattr(body, platform)
            if value:
                handles[platform] = canonical.salted_hash(store.salt, value)
        intake = DemographicsIntake(
            height=height,
            weight=weight,
            age=body.age,
            gender=gender,
            location=body.location,
            handles=handles,
            comment=body.comment,
        )
        try:
            store.record_demographics(session_id, intake)
        except EngineError as exc:
            raise HTTPException(status_code=409, detail=exc.code)

        out: dict = {}
        if bmi_value is not None:
            out["bmi"] = round(bmi_value, 2)
            out["agreed"] = session.prediction.label == stats.label_individual(
                bmi_value, store.cutoff
            )
        return out

    @app.get("/api/admin/export")
    def admin_export(x_admin_token: Optional[str] = Header(default=None)):
        if admin_token is None or x_admin_token != admin_token:
            raise HTTPException(status_code=401, detail="bad admin token")
        rows = stats.export_anonymized(store.records(), salt=export_salt, cutoff=cutoff)

        def stream():
            for row in rows:
                yield canonical.dumps(row) + "\n"

        return StreamingResponse(stream(), media_type="application/jsonl")

    return app


def serve(config: ServiceConfig) -> None:
    """Run the API with uvicorn (blocking)."""
    import uvicorn

    spec = QuizSpec.load(config.quiz_path)
    app = create_app(
        spec,
        data_dir=config.data_dir,
        cutoff=config.cutoff,
        admin_token=config.admin_token,
        export_salt=config.export_salt,
    )
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
