"""railtag: tag-triggered train protection simulator.

Simulates a single metro line instrumented with active radio tags at
hazardous points, an onboard reader + controller that adapts train speed to
scanned conditions (slopes, bends, stations, obstacles), and a Monte Carlo
harness comparing incident rates with the controller on versus off.
"""

from .controller import ActuationCommand, ControlParams, ControllerState, controller_tick
from .dynamics import Incident, TrainState
from .errors import ConfigError, RailtagError
from .harness import (
    ExperimentStats,
    TripResult,
    emit_report,
    generate_scenarios,
    run_experiment,
    run_trip,
)
from .radio import RadioParams, ScanEvent
from .scenario import Hazard, Scenario, default_scenario, load_scenario, save_scenario
from .tagdb import TagDatabase, build_database, restore
from .track import Track, TrackSegment, build_track, place_tags, segment_at

__version__ = "0.1.0"

__all__ = [
    "ActuationCommand",
    "ConfigError",
    "ControlParams",
    "ControllerState",
    "ExperimentStats",
    "Hazard",
    "Incident",
    "RadioParams",
    "RailtagError",
    "ScanEvent",
    "Scenario",
    "TagDatabase",
    "Track",
    "TrackSegment",
    "TrainState",
    "TripResult",
    "build_database",
    "build_track",
    "controller_tick",
    "default_scenario",
    "emit_report",
    "generate_scenarios",
    "load_scenario",
    "place_tags",
    "restore",
    "run_experiment",
    "run_trip",
    "save_scenario",
    "segment_at",
    "__version__",
]
