"""FastAPI service wrapping the simulator.

POST /simulate runs one trip, POST /experiment runs the on/off safety
comparison; both take the full scenario document in the request body, so the
service itself is stateless and any number of clients can share it.
Domain errors surface as HTTP 400 with an ``error`` field naming the
exception class (the CLI maps ConfigError to exit code 2).
"""
from __future__ import annotations

import io
from dataclasses import asdict

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, RailtagError
from ..harness import TripResult, emit_report, run_experiment, run_trip
from ..scenario import Scenario, default_scenario, scenario_from_dict, scenario_to_dict
from .schemas import (
    ErrorResponse,
    ExperimentRequest,
    ExperimentResponse,
    ExperimentStatsModel,
    HealthResponse,
    ScenarioModel,
    SimulateRequest,
    SimulateResponse,
    TripResultModel,
)

_ERROR_RESPONSES = {400: {"model": ErrorResponse}}


def _to_scenario(model: ScenarioModel) -> Scenario:
    return scenario_from_dict(model.model_dump(exclude_none=True))


def _trip_model(result: TripResult) -> TripResultModel:
    return TripResultModel(
        safe=result.safe,
        incidents=[asdict(i) for i in result.incidents],
        ticks_used=result.ticks_used,
        final_pos=result.final_pos,
        station_stop_error=result.station_stop_error,
        unknown_tag_count=result.unknown_tag_count,
        timed_out=result.timed_out,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="railtag", version=__version__)

    @app.exception_handler(RailtagError)
    async def _domain_error(request: Request, exc: RailtagError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/scenario/default")
    def scenario_default() -> dict:
        return scenario_to_dict(default_scenario())

    @app.post("/simulate", response_model=SimulateResponse, responses=_ERROR_RESPONSES)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        scenario = _to_scenario(req.scenario)
        trace = io.StringIO() if req.include_trace else None
        decisions = io.StringIO() if req.include_decisions else None
        result = run_trip(
            scenario,
            controller_enabled=req.controller == "on",
            trial_seed=req.seed,
            trace=trace,
            decisions=decisions,
        )
        return SimulateResponse(
            result=_trip_model(result),
            trace_csv=trace.getvalue() if trace is not None else None,
            decisions_csv=decisions.getvalue() if decisions is not None else None,
        )

    @app.post("/experiment", response_model=ExperimentResponse, responses=_ERROR_RESPONSES)
    def experiment(req: ExperimentRequest) -> ExperimentResponse:
        scenario = _to_scenario(req.scenario)
        if req.hazardous > req.trips:
            raise ConfigError(f"hazardous ({req.hazardous}) exceeds trips ({req.trips})")
        modes = {"both": (True, False), "on": (True,), "off": (False,)}[req.modes]
        stats = [
            run_experiment(scenario, req.trips, req.hazardous, enabled, req.seed, req.parallel)
            for enabled in modes
        ]
        return ExperimentResponse(
            stats=[ExperimentStatsModel(**asdict(s)) for s in stats],
            report=emit_report(stats, req.format),
        )

    return app


app = create_app()
