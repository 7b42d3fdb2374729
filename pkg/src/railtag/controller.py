"""Onboard processor: tag scans in, actuation commands out.

Each simulation tick the controller resolves scanned tag codes against the
onboard database, keeps the resulting conditions active until the train has
passed them, and runs one resolver step per active condition:

  * slope resolver  - nudges motor rpm up on uphills / down on downhills
                      until speed is back inside the cruise band;
  * bend resolver   - trims the inner wheel toward the slip-free
                      differential ratio and sheds speed (ratio-preserving)
                      until at or below the curve's lateral-comfort speed;
  * stop resolver   - brakes along the braking curve v_safe(d) =
                      sqrt(2 b (d - margin)) for stations and ranged
                      obstacles, compensating any known downhill grade.

Resolution is tick-driven: is_suitable acts as a per-tick guard, and each
resolver applies at most one bounded rpm adjustment per rule per tick.
Simultaneous commands merge safety-first: braking wins, then the most
negative delta per channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dynamics import TrainState, curve_speed_limit, differential_ratio
from .errors import DomainError, UnknownTag
from .radio import ScanEvent
from .tagdb import (
    BendAhead,
    Condition,
    ObstacleAhead,
    SlopeAhead,
    StationAhead,
    TagDatabase,
    restore,
)

CRUISE_BAND = 0.5        # m/s tolerance around cruise speed for slopes
RATIO_TOLERANCE = 0.01   # relative tolerance on the differential wheel ratio
GRAVITY = 9.81


@dataclass(frozen=True)
class ControlParams:
    service_decel: float = 1.0
    max_decel: float = 1.2
    lateral_accel_max: float = 0.8
    stop_margin: float = 5.0
    cruise_speed: float = 16.67
    rpm_step: float = 20.0
    tick_dt: float = 0.1

    def __post_init__(self):
        if not 0 < self.service_decel <= self.max_decel:
            raise DomainError("need 0 < service_decel <= max_decel")
        if self.stop_margin <= 0:
            raise DomainError("stop_margin must be > 0")
        if self.tick_dt <= 0:
            raise DomainError("tick_dt must be > 0")
        if self.rpm_step <= 0:
            raise DomainError("rpm_step must be > 0")


@dataclass(frozen=True)
class ActuationCommand:
    delta_motor_rpm: float = 0.0
    delta_left_rpm: float = 0.0
    delta_right_rpm: float = 0.0
    brake: bool = False
    brake_decel: float = 0.0  # target deceleration while brake is set, m/s^2


ZERO_COMMAND = ActuationCommand()
# Off-mode trials hold the line speed they started with: no deltas, no brake.
CRUISE_HOLD = ZERO_COMMAND


@dataclass
class ActiveCondition:
    condition: Condition
    est_distance: float | None = None
    activated_tick: int = 0
    resolved: bool = False
    # stop-class conditions latch the brake on first trigger so one noisy
    # over-read distance sample cannot release it mid-stop
    braking: bool = False


@dataclass
class ControllerState:
    slope: ActiveCondition | None = None
    bend: ActiveCondition | None = None
    stops: dict = field(default_factory=dict)  # key -> ActiveCondition
    unknown_tag_count: int = 0

    def active_conditions(self) -> list[ActiveCondition]:
        out = []
        if self.slope is not None:
            out.append(self.slope)
        if self.bend is not None:
            out.append(self.bend)
        out.extend(self.stops.values())
        return out

    @property
    def idle(self) -> bool:
        return self.slope is None and self.bend is None and not self.stops


def on_scan(ctrl: ControllerState, events: list[ScanEvent], db: TagDatabase) -> ControllerState:
    """Fold this tick's scan events into the active-condition set.

    Slope and bend slots hold a single condition each (last scan wins);
    stations key on their stop position and obstacles on their tag code.
    Every scan refresh clears the resolved flag and updates the ranged
    distance. Unknown codes are counted and dropped.
    """
    for ev in events:
        try:
            cond = restore(db, ev.tag_code)
        except UnknownTag:
            ctrl.unknown_tag_count += 1
            continue
        if type(cond) is SlopeAhead:
            slot = ctrl.slope
            if slot is not None and slot.condition == cond:
                slot.est_distance = ev.est_distance
                slot.resolved = False
            else:
                ctrl.slope = ActiveCondition(cond, ev.est_distance, ev.tick)
        elif type(cond) is BendAhead:
            slot = ctrl.bend
            if slot is not None and slot.condition == cond:
                slot.est_distance = ev.est_distance
                slot.resolved = False
            else:
                ctrl.bend = ActiveCondition(cond, ev.est_distance, ev.tick)
        elif type(cond) is StationAhead:
            key = ("station", cond.stop_pos)
            slot = ctrl.stops.get(key)
            if slot is not None:
                slot.est_distance = ev.est_distance
                slot.resolved = False
            else:
                ctrl.stops[key] = ActiveCondition(cond, ev.est_distance, ev.tick)
        else:  # ObstacleAhead
            key = ("obstacle", ev.tag_code)
            slot = ctrl.stops.get(key)
            if slot is not None:
                slot.est_distance = ev.est_distance
                slot.resolved = False
            else:
                ctrl.stops[key] = ActiveCondition(cond, ev.est_distance, ev.tick)
    return ctrl


def expire_passed(ctrl: ControllerState, front_pos: float) -> None:
    """Drop conditions whose feature the train has fully passed."""
    slot = ctrl.slope
    if slot is not None:
        c = slot.condition
        if front_pos > c.entry_pos + c.length:
            ctrl.slope = None
    slot = ctrl.bend
    if slot is not None:
        c = slot.condition
        if front_pos > c.entry_pos + c.length:
            ctrl.bend = None
    if ctrl.stops:
        dead = [
            key
            for key, slot in ctrl.stops.items()
            if type(slot.condition) is StationAhead and front_pos > slot.condition.stop_pos
        ]
        for key in dead:
            del ctrl.stops[key]


def _stop_distance(state: TrainState, active: ActiveCondition) -> float:
    cond = active.condition
    if type(cond) is StationAhead:
        return cond.stop_pos - state.front_pos
    return active.est_distance if active.est_distance is not None else math.inf


def is_suitable(state: TrainState, active: ActiveCondition, params: ControlParams) -> bool:
    """The per-tick loop guard: is the current motion safe for this condition?

    A stationary train is always suitable. Slopes want speed inside the
    cruise band, bends want both the curve speed and the differential wheel
    ratio, stops want speed on or under the braking curve.
    """
    if state.speed == 0.0:
        return True
    cond = active.condition
    if type(cond) is SlopeAhead:
        return abs(state.speed - params.cruise_speed) <= CRUISE_BAND
    if type(cond) is BendAhead:
        v_curve = curve_speed_limit(cond.radius, params.lateral_accel_max)
        if state.speed > v_curve + 1e-12:
            return False
        if cond.direction == "right":
            inner, outer = state.right_rpm, state.left_rpm
        else:
            inner, outer = state.left_rpm, state.right_rpm
        if outer <= 0.0:
            return inner <= 0.0
        target = differential_ratio(cond.radius)
        return abs(inner / outer - target) <= RATIO_TOLERANCE * target
    # StationAhead / ObstacleAhead
    d = _stop_distance(state, active)
    v_safe = math.sqrt(2.0 * params.service_decel * max(d - params.stop_margin, 0.0))
    return state.speed <= v_safe


def slope_resolver_step(
    state: TrainState, active: ActiveCondition, params: ControlParams
) -> ActuationCommand:
    """Uphill: raise motor rpm one step; downhill: lower it; in band: nothing.

    The motor only counters the deviation the grade itself induces (slow on
    an uphill, fast on a downhill). On the opposite side of the band the
    resolver stays passive: gravity already pulls the coasting train back
    toward cruise, while a literal slope-signed step would drive it away.
    """
    if is_suitable(state, active, params):
        active.resolved = True
        return ZERO_COMMAND
    active.resolved = False
    if active.condition.grade > 0:
        if state.speed < params.cruise_speed:
            return ActuationCommand(delta_motor_rpm=params.rpm_step)
    elif state.speed > params.cruise_speed:
        return ActuationCommand(delta_motor_rpm=-params.rpm_step)
    return ZERO_COMMAND


def bend_resolver_step(
    state: TrainState, active: ActiveCondition, params: ControlParams
) -> ActuationCommand:
    """Trim the inner wheel toward the differential ratio; shed speed if over.

    The overspeed slowdown scales both wheels so the mean drops by one step
    while preserving their ratio; the direction rule then pulls the inner
    wheel toward ratio * outer by at most one further step. Bounded per-side
    change per tick: two steps.
    """
    if is_suitable(state, active, params):
        active.resolved = True
        return ZERO_COMMAND
    active.resolved = False
    cond = active.condition
    step = params.rpm_step
    if cond.direction == "right":
        inner, outer = state.right_rpm, state.left_rpm
    else:
        inner, outer = state.left_rpm, state.right_rpm
    mean = (inner + outer) / 2.0
    v_curve = curve_speed_limit(cond.radius, params.lateral_accel_max)
    if state.speed > v_curve and mean > 0.0:
        scale = max(0.0, (mean - step) / mean)
    else:
        scale = 1.0
    new_inner = inner * scale
    new_outer = outer * scale
    target = differential_ratio(cond.radius)
    trim = min(step, max(0.0, new_inner - target * new_outer))
    new_inner -= trim
    d_inner = new_inner - inner
    d_outer = new_outer - outer
    if cond.direction == "right":
        return ActuationCommand(delta_left_rpm=d_outer, delta_right_rpm=d_inner)
    return ActuationCommand(delta_left_rpm=d_inner, delta_right_rpm=d_outer)


def stop_resolver_step(
    state: TrainState,
    active: ActiveCondition,
    params: ControlParams,
    grade_comp: float = 0.0,
) -> ActuationCommand:
    """Brake whenever speed is above the braking curve for the remaining distance.

    The commanded deceleration is at least the service rate (so the stop
    completes instead of creeping along the curve asymptotically), raised by
    any known downhill acceleration, and capped at max_decel. Once braking
    has begun it continues to the full stop.
    """
    if state.speed == 0.0:
        active.resolved = True
        active.braking = False
        return ZERO_COMMAND
    if not active.braking and is_suitable(state, active, params):
        active.resolved = True
        return ZERO_COMMAND
    active.resolved = False
    active.braking = True
    d = _stop_distance(state, active)
    v = state.speed
    needed = v * v / (2.0 * max(d - params.stop_margin, 0.1))
    decel = min(max(needed, params.service_decel) + grade_comp, params.max_decel)
    return ActuationCommand(
        delta_left_rpm=-params.rpm_step,
        delta_right_rpm=-params.rpm_step,
        brake=True,
        brake_decel=decel,
    )


def arbitrate(commands: list[ActuationCommand]) -> ActuationCommand:
    """Safety-dominant merge of one command per active condition.

    Brake is OR-ed (strongest target deceleration wins, not summed). Each
    rpm channel takes the most negative request; positive requests survive
    only when nothing brakes and nothing is negative anywhere.
    """
    if not commands:
        return ZERO_COMMAND
    if len(commands) == 1:
        return commands[0]
    brake = False
    decel = 0.0
    negative = False
    for c in commands:
        if c.brake:
            brake = True
            decel = max(decel, c.brake_decel)
        if c.delta_motor_rpm < 0 or c.delta_left_rpm < 0 or c.delta_right_rpm < 0:
            negative = True
    if brake or negative:
        motor = min(c.delta_motor_rpm for c in commands)
        left = min(c.delta_left_rpm for c in commands)
        right = min(c.delta_right_rpm for c in commands)
        motor = min(motor, 0.0)
        left = min(left, 0.0)
        right = min(right, 0.0)
    else:
        motor = max(c.delta_motor_rpm for c in commands)
        left = max(c.delta_left_rpm for c in commands)
        right = max(c.delta_right_rpm for c in commands)
    if motor == 0.0 and left == 0.0 and right == 0.0 and not brake:
        return ZERO_COMMAND
    return ActuationCommand(motor, left, right, brake, decel)


def downhill_compensation(ctrl: ControllerState, front_pos: float) -> float:
    """Extra braking effort against a known downhill grade under the train."""
    slot = ctrl.slope
    if (
        slot is not None
        and slot.condition.grade < 0
        and front_pos >= slot.condition.entry_pos
    ):
        return GRAVITY * (-slot.condition.grade) / 1000.0
    return 0.0


def controller_tick(
    ctrl: ControllerState,
    train: TrainState,
    events: list[ScanEvent],
    db: TagDatabase,
    params: ControlParams,
) -> tuple[ControllerState, ActuationCommand]:
    """One control cycle: ingest scans, expire passed features, resolve, merge.

    With the controller disabled the scans are ignored entirely and the
    command stream is the constant cruise-hold.
    """
    if not train.controller_enabled:
        return ctrl, CRUISE_HOLD
    if events:
        on_scan(ctrl, events, db)
    if ctrl.idle:
        return ctrl, ZERO_COMMAND
    expire_passed(ctrl, train.front_pos)
    commands = []
    grade_comp = downhill_compensation(ctrl, train.front_pos)
    if ctrl.slope is not None:
        commands.append(slope_resolver_step(train, ctrl.slope, params))
    if ctrl.bend is not None:
        commands.append(bend_resolver_step(train, ctrl.bend, params))
    for slot in ctrl.stops.values():
        commands.append(stop_resolver_step(train, slot, params, grade_comp))
    return ctrl, arbitrate(commands)
