"""Metro line geometry, fixed tag installations, and trip obstacles.

All positions and lengths are meters from the line origin, speeds are m/s,
grades are signed per-mille (positive = uphill). A track is a contiguous,
non-overlapping chain of typed segments; everything here is immutable after
construction so parallel trials can share it.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import GeometryError, OutOfTrack, OverlapError

MAX_SPEED = 55.56          # m/s, 200 km/h line cap
MIN_CURVE_RADIUS = 30.0    # m
MAX_GRADE = 60.0           # per-mille
DEFAULT_TAG_ADVANCE = 150.0  # m between a warning tag and its feature

TAG_CLASS_INFRASTRUCTURE = "infrastructure"
TAG_CLASS_TRAIN_REAR = "train_rear"
TAG_CLASS_HUMAN = "human"

OBSTACLE_HUMAN = "human"
OBSTACLE_STOPPED_TRAIN = "stopped_train"


@dataclass(frozen=True)
class Straight:
    pass


@dataclass(frozen=True)
class Curve:
    direction: str  # "left" | "right"
    radius: float


@dataclass(frozen=True)
class Slope:
    grade: float  # signed per-mille, positive = uphill


@dataclass(frozen=True)
class StationZone:
    stop_point: float  # absolute position of the stopping mark


SegmentKind = Straight | Curve | Slope | StationZone


@dataclass(frozen=True)
class TrackSegment:
    id: int
    start_pos: float
    length: float
    kind: SegmentKind
    speed_limit: float

    @property
    def end_pos(self) -> float:
        return self.start_pos + self.length


@dataclass(frozen=True)
class TagInstallation:
    tag_code: int
    position: float
    tag_class: str = TAG_CLASS_INFRASTRUCTURE


@dataclass(frozen=True)
class Obstacle:
    position: float
    obstacle_class: str  # "human" | "stopped_train"
    attached_tag: int


@dataclass(frozen=True)
class Track:
    segments: tuple[TrackSegment, ...]
    length: float
    # segment start positions, for bisect lookup
    _starts: tuple[float, ...] = field(repr=False, default=())

    def curve_segments(self) -> list[TrackSegment]:
        return [s for s in self.segments if isinstance(s.kind, Curve)]


def _validate_segment(seg: TrackSegment) -> None:
    if seg.length <= 0:
        raise GeometryError(f"segment {seg.id}: length must be > 0, got {seg.length}")
    if not 0 < seg.speed_limit <= MAX_SPEED:
        raise GeometryError(
            f"segment {seg.id}: speed_limit must be in (0, {MAX_SPEED}], got {seg.speed_limit}"
        )
    kind = seg.kind
    if isinstance(kind, Curve):
        if kind.radius < MIN_CURVE_RADIUS:
            raise GeometryError(f"segment {seg.id}: curve radius {kind.radius} < {MIN_CURVE_RADIUS}")
        if kind.direction not in ("left", "right"):
            raise GeometryError(f"segment {seg.id}: bad curve direction {kind.direction!r}")
    elif isinstance(kind, Slope):
        if kind.grade == 0:
            raise GeometryError(f"segment {seg.id}: slope grade must be nonzero")
        if abs(kind.grade) > MAX_GRADE:
            raise GeometryError(f"segment {seg.id}: |grade| {abs(kind.grade)} > {MAX_GRADE}")
    elif isinstance(kind, StationZone):
        if not seg.start_pos <= kind.stop_point <= seg.end_pos:
            raise GeometryError(
                f"segment {seg.id}: stop_point {kind.stop_point} outside "
                f"[{seg.start_pos}, {seg.end_pos}]"
            )


def build_track(segment_specs: list[TrackSegment]) -> Track:
    """Validate geometry and contiguity and assemble an immutable Track."""
    if not segment_specs:
        raise GeometryError("track needs at least one segment")
    expected_start = segment_specs[0].start_pos
    if expected_start != 0.0:
        raise OverlapError(f"first segment must start at 0, got {expected_start}")
    for seg in segment_specs:
        _validate_segment(seg)
        if not math.isclose(seg.start_pos, expected_start, abs_tol=1e-9):
            raise OverlapError(
                f"segment {seg.id} starts at {seg.start_pos}, expected {expected_start}"
            )
        expected_start = seg.start_pos + seg.length
    segments = tuple(segment_specs)
    return Track(
        segments=segments,
        length=expected_start,
        _starts=tuple(s.start_pos for s in segments),
    )


def segment_at(track: Track, pos: float) -> TrackSegment:
    """Segment containing pos; a boundary position belongs to the segment starting there."""
    if pos < 0 or pos >= track.length:
        raise OutOfTrack(f"position {pos} outside [0, {track.length})")
    idx = bisect_right(track._starts, pos) - 1
    return track.segments[idx]


def place_tags(track: Track, advance_distance: float = DEFAULT_TAG_ADVANCE) -> list[TagInstallation]:
    """One warning tag per curve entry, slope entry, and station stop point.

    Tags sit advance_distance before their feature, clamped at the origin.
    Codes are assigned sequentially from 1 in track order.
    """
    if advance_distance <= 0:
        raise GeometryError(f"advance_distance must be > 0, got {advance_distance}")
    tags = []
    code = 1
    for seg in track.segments:
        kind = seg.kind
        if isinstance(kind, (Curve, Slope)):
            feature_pos = seg.start_pos
        elif isinstance(kind, StationZone):
            feature_pos = kind.stop_point
        else:
            continue
        tags.append(
            TagInstallation(
                tag_code=code,
                position=max(0.0, feature_pos - advance_distance),
                tag_class=TAG_CLASS_INFRASTRUCTURE,
            )
        )
        code += 1
    return tags
