"""Scenario assembly and the scenario-file format.

A scenario bundles everything one trip needs: the track, the installed
warning tags, the onboard database, radio and control parameters, an
optional hazard, and a tick budget. Scenario files are JSON documents with
top-level sections ``track``, ``tagdb``, ``radio``, ``controller``,
``hazard`` and ``max_ticks``; the ``tagdb`` section is a flat record list so
runs are reproducible bit-for-bit from the file alone. A null ``tagdb``
derives tags and records from the track.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .controller import ControlParams
from .errors import ConfigError
from .radio import RadioParams
from .tagdb import (
    BendAhead,
    Condition,
    ObstacleAhead,
    SlopeAhead,
    StationAhead,
    TagDatabase,
    build_database,
)
from .track import (
    Curve,
    DEFAULT_TAG_ADVANCE,
    Slope,
    StationZone,
    Straight,
    TagInstallation,
    Track,
    TrackSegment,
    build_track,
    place_tags,
)
from .dynamics import curve_speed_limit

HAZARD_HUMAN = "human"
HAZARD_STOPPED_TRAIN = "stopped_train"
HAZARD_SHARP_TURN = "sharp_turn"
HAZARD_KINDS = (HAZARD_HUMAN, HAZARD_STOPPED_TRAIN, HAZARD_SHARP_TURN)

# Radius given to a curve hijacked as a sharp-turn hazard: comfortable only
# well below cruise speed, and past the derailment limit at cruise.
SHARP_TURN_RADIUS = 120.0

DEFAULT_MAX_TICKS = 4000


@dataclass(frozen=True)
class Hazard:
    kind: str
    position: float | None = None    # human / stopped_train
    segment_id: int | None = None    # sharp_turn


@dataclass(frozen=True)
class Scenario:
    track: Track
    tags: tuple[TagInstallation, ...]
    db: TagDatabase
    radio: RadioParams
    control: ControlParams
    hazard: Hazard | None
    max_ticks: int
    tag_advance: float = DEFAULT_TAG_ADVANCE


def _validate_hazard(scenario: Scenario) -> None:
    hz = scenario.hazard
    if hz is None:
        return
    if hz.kind not in HAZARD_KINDS:
        raise ConfigError(f"unknown hazard kind {hz.kind!r}")
    if hz.kind in (HAZARD_HUMAN, HAZARD_STOPPED_TRAIN):
        if hz.position is None or not 0 <= hz.position < scenario.track.length:
            raise ConfigError(f"hazard position {hz.position} outside track extent")
    else:
        seg = next((s for s in scenario.track.segments if s.id == hz.segment_id), None)
        if seg is None or not isinstance(seg.kind, Curve):
            raise ConfigError(f"sharp_turn hazard must reference a curve segment, got {hz.segment_id}")
        if curve_speed_limit(seg.kind.radius, scenario.control.lateral_accel_max) >= scenario.control.cruise_speed:
            raise ConfigError(
                f"sharp_turn curve {hz.segment_id} does not require braking at cruise speed"
            )


def _validate_tags(track: Track, tags: list[TagInstallation], db: TagDatabase) -> None:
    from .tagdb import HUMAN_PREFIX, TRAIN_REAR_PREFIX

    codes = [t.tag_code for t in tags]
    if len(set(codes)) != len(codes):
        raise ConfigError("tag codes must be unique within a scenario")
    for tag in tags:
        if tag.tag_class == "infrastructure" and not 0 <= tag.position <= track.length:
            raise ConfigError(
                f"tag {tag.tag_code} at {tag.position} outside the track extent"
            )
    for code in db.fixed_records:
        if code & 0xFFFF0000 in (TRAIN_REAR_PREFIX, HUMAN_PREFIX):
            raise ConfigError(
                f"fixed record {code:#x} collides with the mobile-tag code ranges"
            )


def make_scenario(
    track: Track,
    radio: RadioParams | None = None,
    control: ControlParams | None = None,
    hazard: Hazard | None = None,
    max_ticks: int = DEFAULT_MAX_TICKS,
    tag_advance: float = DEFAULT_TAG_ADVANCE,
    tags: list[TagInstallation] | None = None,
    db: TagDatabase | None = None,
) -> Scenario:
    if tags is None:
        tags = place_tags(track, tag_advance)
    if db is None:
        db = build_database(track, tags)
    _validate_tags(track, tags, db)
    scenario = Scenario(
        track=track,
        tags=tuple(tags),
        db=db,
        radio=radio or RadioParams(),
        control=control or ControlParams(),
        hazard=hazard,
        max_ticks=max_ticks,
        tag_advance=tag_advance,
    )
    _validate_hazard(scenario)
    return scenario


def sharpened(scenario: Scenario, segment_id: int) -> Scenario:
    """A copy of the scenario with one curve tightened into a sharp turn.

    The tag layout is untouched; the database is rebuilt so the warning tag
    now reports the sharp radius.
    """
    segments = []
    found = False
    for seg in scenario.track.segments:
        if seg.id == segment_id:
            if not isinstance(seg.kind, Curve):
                raise ConfigError(f"segment {segment_id} is not a curve")
            segments.append(replace(seg, kind=replace(seg.kind, radius=SHARP_TURN_RADIUS)))
            found = True
        else:
            segments.append(seg)
    if not found:
        raise ConfigError(f"no segment with id {segment_id}")
    track = build_track(segments)
    out = replace(
        scenario,
        track=track,
        db=build_database(track, list(scenario.tags)),
        hazard=Hazard(HAZARD_SHARP_TURN, segment_id=segment_id),
    )
    _validate_hazard(out)
    return out


def default_scenario() -> Scenario:
    """The stock 2 km line: two gentle curves, an up/down slope pair, a station.

    Feature spacing keeps warning-tag read windows from overlapping, so each
    conditions the controller independently.
    """
    segments = [
        TrackSegment(0, 0.0, 300.0, Straight(), 22.22),
        TrackSegment(1, 300.0, 250.0, Curve("right", 400.0), 19.44),
        TrackSegment(2, 550.0, 300.0, Straight(), 22.22),
        TrackSegment(3, 850.0, 200.0, Slope(20.0), 22.22),
        TrackSegment(4, 1050.0, 300.0, Straight(), 22.22),
        TrackSegment(5, 1350.0, 200.0, Slope(-20.0), 22.22),
        TrackSegment(6, 1550.0, 150.0, Straight(), 22.22),
        TrackSegment(7, 1700.0, 200.0, Curve("left", 400.0), 19.44),
        TrackSegment(8, 1900.0, 100.0, StationZone(1960.0), 13.89),
    ]
    return make_scenario(build_track(segments))


# ---------------------------------------------------------------------------
# file format


def _segment_to_dict(seg: TrackSegment) -> dict:
    d = {"id": seg.id, "start_pos": seg.start_pos, "length": seg.length,
         "speed_limit": seg.speed_limit}
    kind = seg.kind
    if isinstance(kind, Straight):
        d["kind"] = "straight"
    elif isinstance(kind, Curve):
        d["kind"] = "curve"
        d["direction"] = kind.direction
        d["radius"] = kind.radius
    elif isinstance(kind, Slope):
        d["kind"] = "slope"
        d["grade"] = kind.grade
    else:
        d["kind"] = "station"
        d["stop_point"] = kind.stop_point
    return d


def _segment_from_dict(d: dict, index: int) -> TrackSegment:
    try:
        kind_name = d["kind"]
        if kind_name == "straight":
            kind = Straight()
        elif kind_name == "curve":
            kind = Curve(d["direction"], float(d["radius"]))
        elif kind_name == "slope":
            kind = Slope(float(d["grade"]))
        elif kind_name == "station":
            kind = StationZone(float(d["stop_point"]))
        else:
            raise ConfigError(f"unknown segment kind {kind_name!r}")
        return TrackSegment(
            id=int(d.get("id", index)),
            start_pos=float(d["start_pos"]),
            length=float(d["length"]),
            kind=kind,
            speed_limit=float(d["speed_limit"]),
        )
    except KeyError as exc:
        raise ConfigError(f"segment {index}: missing field {exc}") from exc


def _condition_to_dict(cond: Condition) -> dict:
    if isinstance(cond, SlopeAhead):
        return {"type": "slope_ahead", "grade": cond.grade,
                "entry_pos": cond.entry_pos, "length": cond.length}
    if isinstance(cond, BendAhead):
        return {"type": "bend_ahead", "direction": cond.direction, "radius": cond.radius,
                "entry_pos": cond.entry_pos, "length": cond.length}
    if isinstance(cond, StationAhead):
        return {"type": "station_ahead", "stop_pos": cond.stop_pos}
    return {"type": "obstacle_ahead", "obstacle_class": cond.obstacle_class}


def _condition_from_dict(d: dict) -> Condition:
    t = d.get("type")
    if t == "slope_ahead":
        return SlopeAhead(float(d["grade"]), float(d["entry_pos"]), float(d["length"]))
    if t == "bend_ahead":
        return BendAhead(d["direction"], float(d["radius"]),
                         float(d["entry_pos"]), float(d["length"]))
    if t == "station_ahead":
        return StationAhead(float(d["stop_pos"]))
    if t == "obstacle_ahead":
        return ObstacleAhead(d["obstacle_class"])
    raise ConfigError(f"unknown condition type {t!r}")


def scenario_to_dict(scenario: Scenario) -> dict:
    hz = scenario.hazard
    if hz is None:
        hazard = None
    elif hz.kind == HAZARD_SHARP_TURN:
        hazard = {"kind": hz.kind, "segment_id": hz.segment_id}
    else:
        hazard = {"kind": hz.kind, "position": hz.position}
    r = scenario.radio
    c = scenario.control
    return {
        "track": {
            "tag_advance_m": scenario.tag_advance,
            "segments": [_segment_to_dict(s) for s in scenario.track.segments],
        },
        "tagdb": [
            {
                "tag_code": tag.tag_code,
                "position": tag.position,
                "condition": _condition_to_dict(scenario.db.fixed_records[tag.tag_code]),
            }
            for tag in scenario.tags
        ],
        "radio": {
            "ref_power_dbm": r.ref_power_dbm,
            "path_loss_exponent": r.path_loss_exponent,
            "noise_sigma_db": r.noise_sigma_db,
            "read_range_m": r.read_range_m,
            "read_probability": r.read_probability,
        },
        "controller": {
            "service_decel": c.service_decel,
            "max_decel": c.max_decel,
            "lateral_accel_max": c.lateral_accel_max,
            "stop_margin": c.stop_margin,
            "cruise_speed": c.cruise_speed,
            "rpm_step": c.rpm_step,
            "tick_dt": c.tick_dt,
        },
        "hazard": hazard,
        "max_ticks": scenario.max_ticks,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a JSON object")
    try:
        track_doc = doc["track"]
        segments = [
            _segment_from_dict(s, i) for i, s in enumerate(track_doc["segments"])
        ]
    except KeyError as exc:
        raise ConfigError(f"scenario missing section {exc}") from exc
    track = build_track(segments)
    tag_advance = float(track_doc.get("tag_advance_m", DEFAULT_TAG_ADVANCE))

    tagdb_doc = doc.get("tagdb")
    if tagdb_doc is None:
        tags = None
        db = None
    else:
        tags = [
            TagInstallation(int(rec["tag_code"]), float(rec["position"]))
            for rec in tagdb_doc
        ]
        db = TagDatabase(
            fixed_records={
                int(rec["tag_code"]): _condition_from_dict(rec["condition"])
                for rec in tagdb_doc
            }
        )

    radio_doc = doc.get("radio") or {}
    ctrl_doc = doc.get("controller") or {}
    try:
        radio = RadioParams(
            ref_power_dbm=float(radio_doc.get("ref_power_dbm", -40.0)),
            path_loss_exponent=float(radio_doc.get("path_loss_exponent", 2.0)),
            noise_sigma_db=float(radio_doc.get("noise_sigma_db", 2.0)),
            read_range_m=float(radio_doc.get("read_range_m", 150.0)),
            read_probability=float(radio_doc.get("read_probability", 0.98)),
        )
        control = ControlParams(
            service_decel=float(ctrl_doc.get("service_decel", 1.0)),
            max_decel=float(ctrl_doc.get("max_decel", 1.2)),
            lateral_accel_max=float(ctrl_doc.get("lateral_accel_max", 0.8)),
            stop_margin=float(ctrl_doc.get("stop_margin", 5.0)),
            cruise_speed=float(ctrl_doc.get("cruise_speed", 16.67)),
            rpm_step=float(ctrl_doc.get("rpm_step", 20.0)),
            tick_dt=float(ctrl_doc.get("tick_dt", 0.1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad radio/controller parameters: {exc}") from exc

    hz_doc = doc.get("hazard")
    if hz_doc is None:
        hazard = None
    else:
        kind = hz_doc.get("kind")
        if kind == HAZARD_SHARP_TURN:
            hazard = Hazard(kind, segment_id=int(hz_doc["segment_id"]))
        elif kind in (HAZARD_HUMAN, HAZARD_STOPPED_TRAIN):
            hazard = Hazard(kind, position=float(hz_doc["position"]))
        else:
            raise ConfigError(f"unknown hazard kind {kind!r}")

    max_ticks = int(doc.get("max_ticks", DEFAULT_MAX_TICKS))
    if max_ticks <= 0:
        raise ConfigError(f"max_ticks must be > 0, got {max_ticks}")
    return make_scenario(
        track,
        radio=radio,
        control=control,
        hazard=hazard,
        max_ticks=max_ticks,
        tag_advance=tag_advance,
        tags=tags,
        db=db,
    )


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def save_scenario(scenario: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario_to_dict(scenario), f, indent=2)
        f.write("\n")
