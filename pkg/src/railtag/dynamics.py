"""Train kinematics under actuation commands, and incident detection.

The model is deliberately traction-ideal: speed is slaved to the mean wheel
rpm, so commanded rpm changes translate directly into speed changes. Gravity
acts only when the motors are not driving, i.e. while coasting (zero-delta
command) or braking on a slope segment. There is no rolling or air
resistance, which keeps the constant-deceleration braking distance exact:
v0^2 / (2 b).

Integration is semi-implicit: speed is updated first, then position advances
with the new speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import DomainError
from .track import Curve, Obstacle, Slope, Track, TrackSegment, segment_at

if TYPE_CHECKING:
    from .controller import ActuationCommand

G = 9.81                    # m/s^2
MAX_SPEED = 55.56           # m/s, line cap
STANDARD_GAUGE = 1.435      # m
DERAIL_LATERAL_ACCEL = 1.5  # m/s^2; above this in a curve the train leaves the rails
COLLISION_SPEED_FLOOR = 0.5  # m/s; slower contact is a successful stop, not an incident

INCIDENT_COLLISION_HUMAN = "collision_human"
INCIDENT_COLLISION_TRAIN = "collision_train"
INCIDENT_DERAILMENT = "derailment"

RPM_TO_RAD_PER_SEC = 2.0 * math.pi / 60.0


@dataclass
class TrainState:
    front_pos: float = 0.0
    speed: float = 0.0
    motor_rpm: float = 0.0
    left_rpm: float = 0.0
    right_rpm: float = 0.0
    mass: float = 200_000.0
    wheel_radius: float = 0.43
    controller_enabled: bool = True


@dataclass(frozen=True)
class Incident:
    kind: str
    tick: int
    position: float
    speed_at_event: float


def speed_from_rpm(rpm: float, wheel_radius: float = 0.43) -> float:
    """Linear speed of a wheel turning at rpm: v = 2*pi*r*rpm/60."""
    return RPM_TO_RAD_PER_SEC * wheel_radius * rpm


def rpm_from_speed(speed: float, wheel_radius: float = 0.43) -> float:
    return speed / (RPM_TO_RAD_PER_SEC * wheel_radius)


def curve_speed_limit(radius: float, lateral_accel_max: float) -> float:
    """Highest speed keeping lateral acceleration v^2/R at or below the limit."""
    if radius < 30.0:
        raise DomainError(f"radius {radius} below the 30 m minimum")
    return math.sqrt(lateral_accel_max * radius)


def differential_ratio(radius: float, gauge: float = STANDARD_GAUGE) -> float:
    """Inner/outer wheel rpm ratio for slip-free cornering at the given radius."""
    if radius <= gauge / 2:
        raise DomainError(f"radius {radius} must exceed half the gauge {gauge / 2}")
    return (radius - gauge / 2) / (radius + gauge / 2)


def step(
    state: TrainState,
    cmd: "ActuationCommand",
    segment: TrackSegment,
    dt: float,
    max_decel: float = 1.2,
) -> TrainState:
    """Advance the train one tick in place and return it.

    Braking overrides traction: the commanded deceleration (capped at
    max_decel) is converted into an equal rpm reduction on both sides, which
    keeps the wheel-speed consistency invariant exact. Wheel rpms never go
    negative.
    """
    k = RPM_TO_RAD_PER_SEC * state.wheel_radius
    left = state.left_rpm
    right = state.right_rpm
    grade_acc = 0.0
    kind = segment.kind
    if type(kind) is Slope:
        grade_acc = -G * kind.grade / 1000.0

    if cmd.brake:
        decel = min(cmd.brake_decel, max_decel)
        drpm = (-decel + grade_acc) * dt / k
        left = max(0.0, left + drpm)
        right = max(0.0, right + drpm)
    else:
        dl = cmd.delta_motor_rpm + cmd.delta_left_rpm
        dr = cmd.delta_motor_rpm + cmd.delta_right_rpm
        if dl == 0.0 and dr == 0.0:
            if grade_acc != 0.0:  # coasting on a slope
                drpm = grade_acc * dt / k
                left = max(0.0, left + drpm)
                right = max(0.0, right + drpm)
        else:
            left = max(0.0, left + dl)
            right = max(0.0, right + dr)

    speed = k * (left + right) / 2.0
    if speed > MAX_SPEED:
        scale = MAX_SPEED / speed
        left *= scale
        right *= scale
        speed = k * (left + right) / 2.0

    state.left_rpm = left
    state.right_rpm = right
    state.motor_rpm = (left + right) / 2.0
    state.speed = speed
    state.front_pos += speed * dt
    return state


def detect_incidents(
    state: TrainState,
    prev_state: TrainState,
    track: Track,
    obstacles: list[Obstacle],
    seen: set,
    tick: int,
    segment: TrackSegment | None = None,
    derail_accel: float = DERAIL_LATERAL_ACCEL,
    min_collision_speed: float = COLLISION_SPEED_FLOOR,
) -> list[Incident]:
    """Incidents caused by the step from prev_state to state.

    `seen` holds (kind, feature) keys already reported this trip; hits found
    here are added to it, so each incident is reported exactly once and the
    call is idempotent for identical arguments.
    """
    incidents = []
    pos = state.front_pos
    for obs in obstacles:
        if prev_state.front_pos < obs.position <= pos and state.speed > min_collision_speed:
            kind = (
                INCIDENT_COLLISION_HUMAN
                if obs.obstacle_class == "human"
                else INCIDENT_COLLISION_TRAIN
            )
            key = (kind, obs.position)
            if key not in seen:
                seen.add(key)
                incidents.append(Incident(kind, tick, obs.position, state.speed))
    if segment is None and 0 <= pos < track.length:
        segment = segment_at(track, pos)
    if segment is not None and type(segment.kind) is Curve:
        if state.speed * state.speed / segment.kind.radius > derail_accel:
            key = (INCIDENT_DERAILMENT, segment.id)
            if key not in seen:
                seen.add(key)
                incidents.append(Incident(INCIDENT_DERAILMENT, tick, pos, state.speed))
    return incidents
