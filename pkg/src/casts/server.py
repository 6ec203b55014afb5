"""HTTP API for analysis sessions.

All state lives in memory: one Session per id, guarded by a per-session
lock. Responses are built from the same JSON converters the CLI uses,
then validated through pydantic models, so both front doors expose
identical shapes.

Run with: uvicorn casts.server:app
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Literal, Optional

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict, Field

from .composition import (
    CompositionError,
    VerificationGateError,
    format_composition,
)
from .dependency import Order, SelectionError, Stage
from .model import ProtocolError
from .scenario import (
    ScenarioFormatError,
    candidates_jsonable,
    dependencies_jsonable,
    fixture_path,
    load_scenario,
    merge_reports,
    protocol_jsonable,
    report_jsonable,
    trace_jsonable,
)
from .session import Choice, Session, StageError

DEFAULT_SCENARIO = "road-info.casts.xml"


## Request bodies


class CreateSessionRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    scenario_xml: Optional[str] = Field(default=None, alias="scenarioXml")


class SelectionItem(BaseModel):
    pardep: int
    pair: int
    order: Literal["leftFirst", "rightFirst"]


class StepRequest(BaseModel):
    choice: int
    force: bool = False


class LoadSessionRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    session_xml: str = Field(alias="sessionXml")


## Response models


class HealthResponse(BaseModel):
    status: str
    version: str


class SessionSummary(BaseModel):
    id: str
    stage: str
    composition: str
    clients: list[str]
    services: list[str]


class ContextAttrModel(BaseModel):
    name: str
    value: str
    kind: str
    visibility: str


class PayloadModel(BaseModel):
    name: Optional[str] = None
    type: Optional[str] = None
    context: Optional[bool] = None
    concept: Optional[str] = None
    expr: Optional[str] = None


class LabelModel(BaseModel):
    id: str
    kind: str
    operation: Optional[str]
    direction: Optional[str]
    guard: str
    payload: list[PayloadModel]
    display: str


class StateModel(BaseModel):
    id: str
    final: bool


class TransitionModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    source: str = Field(alias="from")
    label: str
    to: str


class ProtocolModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    id: str
    states: list[StateModel]
    initial: str
    labels: list[LabelModel]
    transitions: list[TransitionModel]
    context_profile: list[ContextAttrModel] = Field(alias="contextProfile")


class GraphsResponse(BaseModel):
    composition: str
    clients: list[ProtocolModel]
    services: list[ProtocolModel]


class ArgumentMatchModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    left_arg: str = Field(alias="leftArg")
    right_arg: str = Field(alias="rightArg")
    degree: str
    type: str


class CandidatePairModel(BaseModel):
    left: str
    right: str
    matches: list[ArgumentMatchModel]


class CandidateGroupModel(BaseModel):
    pardep: int
    left: str
    right: str
    pairs: list[CandidatePairModel]


class CandidatesResponse(BaseModel):
    stage: str
    groups: list[CandidateGroupModel]


class DependencyModel(BaseModel):
    dominant: str
    dominated: str


class DependenciesResponse(BaseModel):
    stage: str
    dependencies: list[DependencyModel]


class FlaggedModel(BaseModel):
    kind: str
    first: DependencyModel
    second: DependencyModel
    explanation: str


class ReportModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    consistent: bool
    flagged: list[FlaggedModel]
    chain_warnings: list[str] = Field(alias="chainWarnings")


class PairReportModel(BaseModel):
    pair: list[str]
    report: ReportModel


class VerificationResponse(BaseModel):
    consistent: bool
    merged: ReportModel
    reports: list[PairReportModel]


class SelectionResponse(BaseModel):
    stage: str
    selected: DependenciesResponse
    extended: DependenciesResponse
    verification: VerificationResponse


class TraceStepModel(BaseModel):
    choice: int
    kind: str
    fired: list[str]
    operation: Optional[str]
    description: str


class EnabledModel(BaseModel):
    index: int
    kind: str
    fired: list[str]
    operation: Optional[str]
    description: str


class BlockedModel(BaseModel):
    label: str
    blocking: list[str]


class TraceResponse(BaseModel):
    stage: str
    steps: list[TraceStepModel]
    enabled: list[EnabledModel]
    blocked: list[BlockedModel]
    completed: bool


class SaveResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    id: str
    stage: str
    session_xml: str = Field(alias="sessionXml")


## Application


class _Store:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple[Session, threading.RLock]] = {}

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = (session, threading.RLock())

    def get(self, session_id: str) -> tuple[Session, threading.RLock]:
        with self._lock:
            entry = self._sessions.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return entry


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


def _gate_conflict(exc: VerificationGateError) -> HTTPException:
    merged = report_jsonable(merge_reports(exc.reports))
    return HTTPException(
        status_code=409,
        detail={
            "message": "verification flagged this composition; pass force to run anyway",
            "verification": merged,
        },
    )


def _summary(session: Session) -> SessionSummary:
    return SessionSummary(
        id=session.id,
        stage=session.stage,
        composition=format_composition(session.scenario.composition),
        clients=[p.id for p in session.scenario.clients],
        services=[p.id for p in session.scenario.services],
    )


def _verification_payload(session: Session) -> VerificationResponse:
    reports = session.verification()
    merged = merge_reports(reports)
    return VerificationResponse(
        consistent=merged.is_empty,
        merged=ReportModel.model_validate(report_jsonable(merged)),
        reports=[
            PairReportModel(
                pair=list(pair), report=ReportModel.model_validate(report_jsonable(rep))
            )
            for pair, rep in reports
        ],
    )


def create_app(default_scenario: Optional[Path] = None) -> FastAPI:
    """Build the API app. New sessions default to ``default_scenario``
    (a path), falling back to the packaged road-info fixture."""
    app = FastAPI(title="context-aware protocol analysis", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = _Store()
    default_path = default_scenario or fixture_path(DEFAULT_SCENARIO)

    @app.get("/api/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=app.version)

    @app.post("/api/v1/sessions", response_model=SessionSummary, status_code=201)
    def create_session(body: Optional[CreateSessionRequest] = Body(default=None)) -> SessionSummary:
        xml: Optional[str] = body.scenario_xml if body else None
        try:
            if xml is None:
                session = Session(load_scenario(default_path))
            else:
                session = Session.from_xml(xml)
        except (ScenarioFormatError, ProtocolError) as exc:
            raise _bad_request(exc) from None
        store.add(session)
        return _summary(session)

    @app.post("/api/v1/sessions/load", response_model=SessionSummary, status_code=201)
    def load_session(body: LoadSessionRequest) -> SessionSummary:
        try:
            session = Session.load(body.session_xml)
        except (ScenarioFormatError, ProtocolError, SelectionError) as exc:
            raise _bad_request(exc) from None
        except VerificationGateError as exc:
            raise _gate_conflict(exc) from None
        except CompositionError as exc:
            raise _bad_request(exc) from None
        store.add(session)
        return _summary(session)

    @app.get("/api/v1/sessions/{session_id}", response_model=SessionSummary)
    def get_session(session_id: str) -> SessionSummary:
        session, lock = store.get(session_id)
        with lock:
            return _summary(session)

    @app.get("/api/v1/sessions/{session_id}/graphs", response_model=GraphsResponse)
    def graphs(session_id: str) -> GraphsResponse:
        session, lock = store.get(session_id)
        with lock:
            return GraphsResponse(
                composition=format_composition(session.scenario.composition),
                clients=[
                    ProtocolModel.model_validate(protocol_jsonable(p))
                    for p in session.scenario.clients
                ],
                services=[
                    ProtocolModel.model_validate(protocol_jsonable(p))
                    for p in session.scenario.services
                ],
            )

    @app.get("/api/v1/sessions/{session_id}/candidates", response_model=CandidatesResponse)
    def candidates(session_id: str) -> CandidatesResponse:
        session, lock = store.get(session_id)
        with lock:
            groups = session.analyze()
            return CandidatesResponse(
                stage=session.stage,
                groups=[
                    CandidateGroupModel(
                        pardep=g.index,
                        left=g.left,
                        right=g.right,
                        pairs=[
                            CandidatePairModel.model_validate(entry)
                            for entry in candidates_jsonable(g.candidates)["pairs"]
                        ],
                    )
                    for g in groups
                ],
            )

    @app.put("/api/v1/sessions/{session_id}/selection", response_model=SelectionResponse)
    def put_selection(session_id: str, items: list[SelectionItem]) -> SelectionResponse:
        session, lock = store.get(session_id)
        with lock:
            choices = [
                Choice(item.pardep, item.pair, Order(item.order)) for item in items
            ]
            try:
                session.select(choices)
            except StageError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            except SelectionError as exc:
                raise _bad_request(exc) from None
            return SelectionResponse(
                stage=session.stage,
                selected=DependenciesResponse.model_validate(
                    dependencies_jsonable(Stage.SELECTED, session.selected())
                ),
                extended=DependenciesResponse.model_validate(
                    dependencies_jsonable(Stage.EXTENDED, session.extended())
                ),
                verification=_verification_payload(session),
            )

    @app.get("/api/v1/sessions/{session_id}/extended", response_model=DependenciesResponse)
    def extended(session_id: str) -> DependenciesResponse:
        session, lock = store.get(session_id)
        with lock:
            try:
                deps = session.extended()
            except StageError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            return DependenciesResponse.model_validate(
                dependencies_jsonable(Stage.EXTENDED, deps)
            )

    @app.get(
        "/api/v1/sessions/{session_id}/verification", response_model=VerificationResponse
    )
    def verification(session_id: str) -> VerificationResponse:
        session, lock = store.get(session_id)
        with lock:
            try:
                return _verification_payload(session)
            except StageError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None

    @app.post("/api/v1/sessions/{session_id}/step", response_model=TraceResponse)
    def step(session_id: str, body: StepRequest) -> TraceResponse:
        session, lock = store.get(session_id)
        with lock:
            try:
                result = session.step(body.choice, force=body.force)
            except StageError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            except VerificationGateError as exc:
                raise _gate_conflict(exc) from None
            except CompositionError as exc:
                raise _bad_request(exc) from None
            payload = trace_jsonable(result)
            payload["stage"] = session.stage
            return TraceResponse.model_validate(payload)

    @app.post("/api/v1/sessions/{session_id}/reset", response_model=TraceResponse)
    def reset(session_id: str) -> TraceResponse:
        session, lock = store.get(session_id)
        with lock:
            try:
                session.reset_trace()
                result = session.trace()
            except StageError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            except VerificationGateError as exc:
                raise _gate_conflict(exc) from None
            payload = trace_jsonable(result)
            payload["stage"] = session.stage
            return TraceResponse.model_validate(payload)

    @app.get("/api/v1/sessions/{session_id}/trace", response_model=TraceResponse)
    def trace(session_id: str, force: bool = Query(default=False)) -> TraceResponse:
        session, lock = store.get(session_id)
        with lock:
            try:
                result = session.trace(force=force)
            except StageError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            except VerificationGateError as exc:
                raise _gate_conflict(exc) from None
            payload = trace_jsonable(result)
            payload["stage"] = session.stage
            return TraceResponse.model_validate(payload)

    @app.get("/api/v1/sessions/{session_id}/save", response_model=SaveResponse)
    def save(session_id: str) -> SaveResponse:
        session, lock = store.get(session_id)
        with lock:
            return SaveResponse(
                id=session.id,
                stage=session.stage,
                session_xml=session.save().decode("utf-8"),
            )

    return app


app = create_app()
