"""Pydantic request/response models for the simulation service.

The scenario models mirror the scenario-file JSON layout one to one, so a
file produced by ``railtag init-scenario`` can be posted verbatim as the
``scenario`` field of a request.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class SegmentModel(BaseModel):
    kind: Literal["straight", "curve", "slope", "station"]
    start_pos: float
    length: float
    speed_limit: float
    id: Optional[int] = None
    direction: Optional[Literal["left", "right"]] = None
    radius: Optional[float] = None
    grade: Optional[float] = None
    stop_point: Optional[float] = None


class TrackModel(BaseModel):
    segments: list[SegmentModel]
    tag_advance_m: float = 150.0


class ConditionModel(BaseModel):
    type: Literal["slope_ahead", "bend_ahead", "station_ahead", "obstacle_ahead"]
    grade: Optional[float] = None
    direction: Optional[Literal["left", "right"]] = None
    radius: Optional[float] = None
    entry_pos: Optional[float] = None
    length: Optional[float] = None
    stop_pos: Optional[float] = None
    obstacle_class: Optional[Literal["human", "stopped_train"]] = None


class TagRecordModel(BaseModel):
    tag_code: int
    position: float
    condition: ConditionModel


class RadioModel(BaseModel):
    ref_power_dbm: float = -40.0
    path_loss_exponent: float = 2.0
    noise_sigma_db: float = 2.0
    read_range_m: float = 150.0
    read_probability: float = 0.98


class ControllerModel(BaseModel):
    service_decel: float = 1.0
    max_decel: float = 1.2
    lateral_accel_max: float = 0.8
    stop_margin: float = 5.0
    cruise_speed: float = 16.67
    rpm_step: float = 20.0
    tick_dt: float = 0.1


class HazardModel(BaseModel):
    kind: Literal["human", "stopped_train", "sharp_turn"]
    position: Optional[float] = None
    segment_id: Optional[int] = None


class ScenarioModel(BaseModel):
    track: TrackModel
    tagdb: Optional[list[TagRecordModel]] = None
    radio: RadioModel = RadioModel()
    controller: ControllerModel = ControllerModel()
    hazard: Optional[HazardModel] = None
    max_ticks: int = Field(4000, gt=0)


class IncidentModel(BaseModel):
    kind: str
    tick: int
    position: float
    speed_at_event: float


class TripResultModel(BaseModel):
    safe: bool
    incidents: list[IncidentModel]
    ticks_used: int
    final_pos: float
    station_stop_error: Optional[float] = None
    unknown_tag_count: int
    timed_out: bool


class SimulateRequest(BaseModel):
    scenario: ScenarioModel
    controller: Literal["on", "off"] = "on"
    seed: int = Field(ge=0)
    include_trace: bool = False
    include_decisions: bool = False


class SimulateResponse(BaseModel):
    result: TripResultModel
    trace_csv: Optional[str] = None
    decisions_csv: Optional[str] = None


class ExperimentRequest(BaseModel):
    scenario: ScenarioModel
    trips: int = Field(60, ge=0)
    hazardous: int = Field(16, ge=0)
    seed: int = Field(ge=0)
    format: Literal["csv", "json"] = "csv"
    parallel: int = Field(1, ge=1)
    modes: Literal["both", "on", "off"] = "both"


class ExperimentStatsModel(BaseModel):
    trips: int
    hazardous_trips: int
    safe_trips: int
    incidents_by_kind: dict[str, int]
    controller_enabled: bool
    master_seed: int


class ExperimentResponse(BaseModel):
    stats: list[ExperimentStatsModel]
    report: str


class ErrorResponse(BaseModel):
    error: str
    detail: str


class HealthResponse(BaseModel):
    status: str
    version: str
