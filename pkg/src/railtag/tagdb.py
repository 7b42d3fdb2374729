"""Onboard ROM database mapping tag codes to environment conditions.

Fixed infrastructure tags get explicit records built from the track. Mobile
tags (rear wagons, wearables) cannot be enumerated at build time, so whole
code ranges resolve to obstacle conditions by prefix:

    0xFFFF0000..0xFFFFFFFF -> stopped train ahead
    0xFFFE0000..0xFFFEFFFF -> human ahead
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import DanglingTag, UnknownTag
from .track import (
    Curve,
    OBSTACLE_HUMAN,
    OBSTACLE_STOPPED_TRAIN,
    Slope,
    StationZone,
    TagInstallation,
    Track,
)

TRAIN_REAR_PREFIX = 0xFFFF0000
HUMAN_PREFIX = 0xFFFE0000
_PREFIX_MASK = 0xFFFF0000


@dataclass(frozen=True)
class SlopeAhead:
    grade: float       # signed per-mille, positive = uphill
    entry_pos: float
    length: float


@dataclass(frozen=True)
class BendAhead:
    direction: str     # "left" | "right"
    radius: float
    entry_pos: float
    length: float


@dataclass(frozen=True)
class StationAhead:
    stop_pos: float


@dataclass(frozen=True)
class ObstacleAhead:
    obstacle_class: str  # "human" | "stopped_train"


Condition = SlopeAhead | BendAhead | StationAhead | ObstacleAhead


@dataclass(frozen=True)
class TagDatabase:
    fixed_records: dict  # tag_code -> Condition

    def to_records(self) -> list[tuple[int, Condition]]:
        return sorted(self.fixed_records.items())


def _condition_for(track: Track, tag: TagInstallation) -> Condition:
    """The condition of the nearest feature at or ahead of the tag."""
    best = None
    best_pos = None
    for seg in track.segments:
        kind = seg.kind
        if isinstance(kind, Curve):
            feature_pos = seg.start_pos
            cond = BendAhead(kind.direction, kind.radius, seg.start_pos, seg.length)
        elif isinstance(kind, Slope):
            feature_pos = seg.start_pos
            cond = SlopeAhead(kind.grade, seg.start_pos, seg.length)
        elif isinstance(kind, StationZone):
            feature_pos = kind.stop_point
            cond = StationAhead(kind.stop_point)
        else:
            continue
        if feature_pos >= tag.position and (best_pos is None or feature_pos < best_pos):
            best, best_pos = cond, feature_pos
    if best is None:
        raise DanglingTag(f"tag {tag.tag_code} at {tag.position} references no feature")
    return best


def build_database(track: Track, tags: list[TagInstallation]) -> TagDatabase:
    """Record the feature condition behind every infrastructure tag."""
    records = {}
    for tag in tags:
        if tag.tag_class != "infrastructure":
            continue
        records[tag.tag_code] = _condition_for(track, tag)
    return TagDatabase(fixed_records=records)


def restore(db: TagDatabase, tag_code: int) -> Condition:
    """Look up a scanned code: fixed record first, then mobile-class prefixes."""
    cond = db.fixed_records.get(tag_code)
    if cond is not None:
        return cond
    prefix = tag_code & _PREFIX_MASK
    if prefix == TRAIN_REAR_PREFIX:
        return ObstacleAhead(OBSTACLE_STOPPED_TRAIN)
    if prefix == HUMAN_PREFIX:
        return ObstacleAhead(OBSTACLE_HUMAN)
    raise UnknownTag(f"tag code {tag_code:#x} has no record and no class prefix")
