"""Trip execution, scenario generation, and the safety experiment.

One trip is a 10 Hz tick loop: scan the radio, run the controller, advance
the dynamics, check for incidents; it ends when the train reaches the end of
the line, comes to a permanent stop at a station or obstacle, collides, or
exhausts its tick budget.

Everything is deterministic: a trip is a pure function of (scenario,
controller_enabled, trial_seed), trial seeds derive from the experiment's
master seed by SHA-256 so trials are order-independent, and experiment
aggregation is associative. run_trip has an internal fast path that skips
through stretches where nothing can happen (constant speed, no tag within
read range entering or leaving, every active condition suitable and staying
so); it replays the radio's RNG draws literally, so simulated states are
bit-identical to the plain per-tick loop. Runs that write per-tick logs use
the plain loop.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from random import Random
from typing import IO, Sequence

from .controller import (
    CRUISE_BAND,
    ControllerState,
    controller_tick,
    is_suitable,
)
from .dynamics import (
    DERAIL_LATERAL_ACCEL,
    G,
    Incident,
    TrainState,
    RPM_TO_RAD_PER_SEC,
    curve_speed_limit,
    detect_incidents,
    rpm_from_speed,
    speed_from_rpm,
    step,
)
from .errors import ConfigError, UnknownTag
from .radio import scan
from .scenario import (
    HAZARD_HUMAN,
    HAZARD_KINDS,
    HAZARD_SHARP_TURN,
    HAZARD_STOPPED_TRAIN,
    Hazard,
    Scenario,
    sharpened,
)
from .tagdb import (
    BendAhead,
    HUMAN_PREFIX,
    ObstacleAhead,
    SlopeAhead,
    StationAhead,
    TRAIN_REAR_PREFIX,
    restore,
)
from .track import (
    Curve,
    Obstacle,
    Slope,
    TagInstallation,
    TAG_CLASS_HUMAN,
    TAG_CLASS_TRAIN_REAR,
)

TRACE_HEADER = "tick,pos_m,speed_mps,left_rpm,right_rpm,brake\n"
DECISION_HEADER = "tick,active_conditions,delta_motor_rpm,delta_left_rpm,delta_right_rpm,brake\n"

CSV_COLUMNS = (
    "trips,hazardous_trips,safe_trips,collisions_human,collisions_train,"
    "derailments,controller_enabled,master_seed"
)

_INCIDENT_KINDS = ("collision_human", "collision_train", "derailment")


@dataclass(frozen=True)
class TripResult:
    safe: bool
    incidents: tuple[Incident, ...]
    ticks_used: int
    final_pos: float
    station_stop_error: float | None
    unknown_tag_count: int
    timed_out: bool = False


@dataclass(frozen=True)
class ExperimentStats:
    trips: int
    hazardous_trips: int
    safe_trips: int
    incidents_by_kind: dict
    controller_enabled: bool
    master_seed: int


def derive_seed(master_seed: int, index: int, label: bytes = b"trial") -> int:
    """Stable 64-bit per-trial seed from (master_seed, index)."""
    if master_seed < 0 or index < 0:
        raise ConfigError("seeds and indices must be non-negative")
    digest = hashlib.sha256(
        b"railtag:" + label + b":"
        + master_seed.to_bytes(8, "big")
        + index.to_bytes(8, "big")
    ).digest()
    return int.from_bytes(digest[:8], "big")


def _mobile_tag_for(hazard: Hazard) -> TagInstallation:
    if hazard.kind == HAZARD_HUMAN:
        return TagInstallation(HUMAN_PREFIX + 1, hazard.position, TAG_CLASS_HUMAN)
    return TagInstallation(TRAIN_REAR_PREFIX + 1, hazard.position, TAG_CLASS_TRAIN_REAR)


def run_trip(
    scenario: Scenario,
    controller_enabled: bool,
    trial_seed: int,
    trace: IO[str] | None = None,
    decisions: IO[str] | None = None,
    fast: bool | None = None,
) -> TripResult:
    """Simulate one trip from the line origin at cruise speed."""
    if fast is None:
        fast = trace is None and decisions is None
    params = scenario.control
    radio_params = scenario.radio
    track = scenario.track
    segments = track.segments
    db = scenario.db
    dt = params.tick_dt
    max_ticks = scenario.max_ticks
    rng = Random(trial_seed)

    tags = sorted(scenario.tags, key=lambda t: t.position)
    obstacles: list[Obstacle] = []
    hz = scenario.hazard
    if hz is not None and hz.kind in (HAZARD_HUMAN, HAZARD_STOPPED_TRAIN):
        mobile = _mobile_tag_for(hz)
        tags.append(mobile)
        tags.sort(key=lambda t: t.position)
        obstacles.append(Obstacle(hz.position, hz.kind, mobile.tag_code))

    # start at line speed with exact wheel-speed consistency
    rpm0 = rpm_from_speed(params.cruise_speed)
    train = TrainState(
        front_pos=0.0,
        speed=speed_from_rpm(rpm0),
        motor_rpm=rpm0,
        left_rpm=rpm0,
        right_rpm=rpm0,
        controller_enabled=controller_enabled,
    )

    ctrl = ControllerState()
    seen: set = set()
    incidents: list[Incident] = []
    prev_proxy = TrainState()
    timed_out = False
    collided = False

    read_range = radio_params.read_range_m
    p_read = radio_params.read_probability
    sigma = radio_params.noise_sigma_db
    ntags = len(tags)
    # read-window cursors over the position-sorted tag list:
    # tags[i_exit:i_enter] are exactly the tags within read range right now
    i_exit = 0
    i_enter = 0
    # what each tag resolves to, for fast-path refresh checks (None = unknown)
    cond_cache = {}
    for t in tags:
        try:
            cond_cache[t.tag_code] = restore(db, t.tag_code)
        except UnknownTag:
            cond_cache[t.tag_code] = None

    if trace is not None:
        trace.write(TRACE_HEADER)
    if decisions is not None:
        decisions.write(DECISION_HEADER)

    seg_idx = 0
    last_idx = len(segments) - 1
    tick = 0

    def _fast_forward() -> int:
        """Skip ticks that provably replay as (scan-draws, zero command, coast)."""
        v = train.speed
        if v <= 0.6:
            return 0
        pos = train.front_pos
        seg = segments[seg_idx]
        kind = seg.kind
        on_slope = type(kind) is Slope
        band = False
        vcurve_cap = None

        if controller_enabled and not ctrl.idle:
            slot = ctrl.slope
            if slot is not None:
                if abs(v - params.cruise_speed) > CRUISE_BAND:
                    return 0
                if on_slope:
                    band = True
            slot = ctrl.bend
            if slot is not None:
                if not is_suitable(train, slot, params):
                    return 0
                if on_slope:
                    vcurve_cap = curve_speed_limit(
                        slot.condition.radius, params.lateral_accel_max
                    )
            if ctrl.stops:
                if on_slope:
                    return 0
                for stop_slot in ctrl.stops.values():
                    if stop_slot.braking or not is_suitable(train, stop_slot, params):
                        return 0

        if type(kind) is Curve:
            if v * v / kind.radius > DERAIL_LATERAL_ACCEL and ("derailment", seg.id) not in seen:
                return 0

        gate = seg.end_pos
        if i_enter < ntags:
            enter_gate = tags[i_enter].position - read_range
            if enter_gate < gate:
                gate = enter_gate
        window = tags[i_exit:i_enter]
        if window:
            exit_gate = window[0].position
            if exit_gate < gate:
                gate = exit_gate
            if controller_enabled:
                for t in window:
                    cond = cond_cache[t.tag_code]
                    if cond is None or type(cond) is ObstacleAhead:
                        return 0
                    if type(cond) is SlopeAhead:
                        slot = ctrl.slope
                    elif type(cond) is BendAhead:
                        slot = ctrl.bend
                    else:
                        slot = ctrl.stops.get(("station", cond.stop_pos))
                    if slot is None or slot.condition != cond:
                        return 0
        if controller_enabled and ctrl.stops:
            vdt_now = v * dt
            for stop_slot in ctrl.stops.values():
                cond = stop_slot.condition
                if type(cond) is StationAhead:
                    onset = (
                        cond.stop_pos
                        - params.stop_margin
                        - v * v / (2.0 * params.service_decel)
                        - 2.0 * vdt_now
                    )
                    if onset < gate:
                        gate = onset

        cap = max_ticks - tick
        n = 0
        if on_slope:
            k = RPM_TO_RAD_PER_SEC * train.wheel_radius
            grade_acc = -G * kind.grade / 1000.0
            drpm = grade_acc * dt / k
            left = train.left_rpm
            right = train.right_rpm
            lo = params.cruise_speed - CRUISE_BAND
            hi = params.cruise_speed + CRUISE_BAND
            if window:
                codes = len(window)
                r_ = rng.random
                g_ = rng.gauss
                while n < cap:
                    nl = left + drpm
                    if nl < 0.0:
                        nl = 0.0
                    nr = right + drpm
                    if nr < 0.0:
                        nr = 0.0
                    nv = k * (nl + nr) / 2.0
                    if nv <= 0.6:
                        break
                    if band and not (lo <= nv <= hi):
                        break
                    if vcurve_cap is not None and nv > vcurve_cap:
                        break
                    if pos + nv * dt >= gate:
                        break
                    for _ in range(codes):
                        if r_() <= p_read:
                            g_(0.0, sigma)
                    left, right, v = nl, nr, nv
                    pos += v * dt
                    n += 1
            else:
                while n < cap:
                    nl = left + drpm
                    if nl < 0.0:
                        nl = 0.0
                    nr = right + drpm
                    if nr < 0.0:
                        nr = 0.0
                    nv = k * (nl + nr) / 2.0
                    if nv <= 0.6:
                        break
                    if band and not (lo <= nv <= hi):
                        break
                    if vcurve_cap is not None and nv > vcurve_cap:
                        break
                    if pos + nv * dt >= gate:
                        break
                    left, right, v = nl, nr, nv
                    pos += v * dt
                    n += 1
            if n:
                train.left_rpm = left
                train.right_rpm = right
                train.motor_rpm = (left + right) / 2.0
                train.speed = v
                train.front_pos = pos
            return n

        vdt = v * dt
        if window:
            r_ = rng.random
            g_ = rng.gauss
            codes = len(window)
            if codes == 1:
                while n < cap and pos + vdt < gate:
                    if r_() <= p_read:
                        g_(0.0, sigma)
                    pos += vdt
                    n += 1
            else:
                while n < cap and pos + vdt < gate:
                    for _ in range(codes):
                        if r_() <= p_read:
                            g_(0.0, sigma)
                    pos += vdt
                    n += 1
        else:
            n = int((gate - pos) / vdt) - 2
            if n > cap:
                n = cap
            if n < 4:
                return 0
            for _ in range(n):
                pos += vdt
        if n:
            train.front_pos = pos
        return n

    while tick < max_ticks:
        pos = train.front_pos
        if fast:
            while i_exit < ntags and tags[i_exit].position < pos:
                i_exit += 1
            while i_enter < ntags and tags[i_enter].position - read_range <= pos:
                i_enter += 1
            skipped = _fast_forward()
            if skipped:
                tick += skipped
                pos = train.front_pos
                if tick >= max_ticks:
                    timed_out = True
                    break
            events = scan(pos, tags[i_exit:i_enter], radio_params, rng, tick)
        else:
            events = scan(pos, tags, radio_params, rng, tick)
        seg = segments[seg_idx]
        ctrl, cmd = controller_tick(ctrl, train, events, db, params)
        prev_proxy.front_pos = pos
        step(train, cmd, seg, dt, params.max_decel)
        new_pos = train.front_pos
        while seg_idx < last_idx and new_pos >= segments[seg_idx].end_pos:
            seg_idx += 1
        new_seg = segments[seg_idx] if new_pos < track.length else None
        if obstacles or (new_seg is not None and type(new_seg.kind) is Curve):
            fresh = detect_incidents(
                train, prev_proxy, track, obstacles, seen, tick, segment=new_seg
            )
            if fresh:
                incidents.extend(fresh)
                if any(i.kind != "derailment" for i in fresh):
                    collided = True
        if trace is not None:
            trace.write(
                f"{tick},{train.front_pos:.6f},{train.speed:.6f},"
                f"{train.left_rpm:.6f},{train.right_rpm:.6f},{int(cmd.brake)}\n"
            )
        if decisions is not None:
            active = len(ctrl.active_conditions()) if controller_enabled else 0
            decisions.write(
                f"{tick},{active},{cmd.delta_motor_rpm:.6f},{cmd.delta_left_rpm:.6f},"
                f"{cmd.delta_right_rpm:.6f},{int(cmd.brake)}\n"
            )
        tick += 1
        if collided:
            break
        if new_pos >= track.length:
            break
        if train.speed == 0.0 and ctrl.stops:
            break
    else:
        timed_out = True

    station_stop_error = None
    if train.speed == 0.0 and ctrl.stops:
        station_targets = [
            slot.condition.stop_pos
            for slot in ctrl.stops.values()
            if type(slot.condition) is StationAhead
        ]
        if station_targets:
            nearest = min(station_targets, key=lambda s: abs(train.front_pos - s))
            err = train.front_pos - nearest
            if abs(err) <= 50.0:
                station_stop_error = err

    return TripResult(
        safe=not incidents,
        incidents=tuple(incidents),
        ticks_used=tick,
        final_pos=train.front_pos,
        station_stop_error=station_stop_error,
        unknown_tag_count=ctrl.unknown_tag_count,
        timed_out=timed_out,
    )


def generate_scenarios(
    base: Scenario, total: int, hazardous: int, master_seed: int
) -> list[Scenario]:
    """Deterministic scenario list: `hazardous` trips draw one of the three
    hazard classes uniformly; obstacle positions fall in the middle 60% of
    the line; sharp turns tighten one of the template's curves."""
    if total < 0 or hazardous < 0 or hazardous > total:
        raise ConfigError(f"need 0 <= hazardous <= total, got {hazardous}/{total}")
    if base.hazard is not None:
        raise ConfigError("experiment template must not carry a hazard of its own")
    rng = Random(derive_seed(master_seed, 0, b"scenarios"))
    hazardous_idx = sorted(rng.sample(range(total), hazardous)) if total else []
    curve_ids = [s.id for s in base.track.curve_segments()]
    length = base.track.length
    lo, hi = 0.2 * length, 0.8 * length
    out = [base] * total
    for idx in hazardous_idx:
        kind = rng.choice(HAZARD_KINDS)
        if kind == HAZARD_SHARP_TURN:
            if not curve_ids:
                raise ConfigError("template track has no curves for a sharp-turn hazard")
            out[idx] = sharpened(base, rng.choice(curve_ids))
        else:
            out[idx] = replace(base, hazard=Hazard(kind, position=rng.uniform(lo, hi)))
    return out


def _trip_worker(args) -> TripResult:
    scenario, enabled, seed = args
    return run_trip(scenario, enabled, seed)


def run_experiment(
    template: Scenario,
    total: int,
    hazardous: int,
    controller_enabled: bool,
    master_seed: int,
    parallelism: int = 1,
) -> ExperimentStats:
    """Run `total` trips and aggregate incident statistics.

    The controller-on/off comparison is two of these calls with the same
    master seed: they share the scenario list and the per-trial seeds.
    """
    scenarios = generate_scenarios(template, total, hazardous, master_seed)
    jobs = [
        (scn, controller_enabled, derive_seed(master_seed, i))
        for i, scn in enumerate(scenarios)
    ]
    if parallelism > 1 and total > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_trip_worker, jobs, chunksize=max(1, total // (parallelism * 4))))
    else:
        results = [_trip_worker(job) for job in jobs]
    by_kind = {k: 0 for k in _INCIDENT_KINDS}
    for res in results:
        for inc in res.incidents:
            by_kind[inc.kind] += 1
    return ExperimentStats(
        trips=total,
        hazardous_trips=sum(1 for s in scenarios if s.hazard is not None),
        safe_trips=sum(1 for r in results if r.safe),
        incidents_by_kind=by_kind,
        controller_enabled=controller_enabled,
        master_seed=master_seed,
    )


def emit_report(stats: ExperimentStats | Sequence[ExperimentStats], fmt: str) -> str:
    """Serialize experiment statistics; byte-stable for identical inputs."""
    rows = [stats] if isinstance(stats, ExperimentStats) else list(stats)
    if fmt == "csv":
        lines = [CSV_COLUMNS]
        for s in rows:
            k = s.incidents_by_kind
            lines.append(
                f"{s.trips},{s.hazardous_trips},{s.safe_trips},"
                f"{k.get('collision_human', 0)},{k.get('collision_train', 0)},"
                f"{k.get('derailment', 0)},"
                f"{'true' if s.controller_enabled else 'false'},{s.master_seed}"
            )
        return "\n".join(lines) + "\n"
    if fmt == "json":
        payload = [
            {
                "trips": s.trips,
                "hazardous_trips": s.hazardous_trips,
                "safe_trips": s.safe_trips,
                "incidents_by_kind": {k: s.incidents_by_kind.get(k, 0) for k in _INCIDENT_KINDS},
                "controller_enabled": s.controller_enabled,
                "master_seed": s.master_seed,
            }
            for s in rows
        ]
        return json.dumps(payload, indent=2) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")
