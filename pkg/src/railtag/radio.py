"""Simulated active-tag reads and RSSI-based ranging.

Received power follows the log-distance path loss model with Gaussian
shadowing: rssi = ref_power - 10*n*log10(d/d0) + N(0, sigma^2), with the
reference distance d0 fixed at 1 m. Distance estimates invert that model
and are clamped so the controller always gets a usable number, however
noisy the read was.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

from .errors import DomainError
from .track import TagInstallation

D0 = 1.0  # reference distance, m


@dataclass(frozen=True)
class RadioParams:
    ref_power_dbm: float = -40.0
    path_loss_exponent: float = 2.0
    noise_sigma_db: float = 2.0
    read_range_m: float = 150.0
    read_probability: float = 0.98

    def __post_init__(self):
        if not 1.5 <= self.path_loss_exponent <= 4.0:
            raise DomainError(f"path_loss_exponent must be in [1.5, 4.0], got {self.path_loss_exponent}")
        if self.noise_sigma_db < 0:
            raise DomainError(f"noise_sigma_db must be >= 0, got {self.noise_sigma_db}")
        if not 0 < self.read_range_m <= 300.0:
            raise DomainError(f"read_range_m must be in (0, 300], got {self.read_range_m}")
        if not 0 < self.read_probability <= 1.0:
            raise DomainError(f"read_probability must be in (0, 1], got {self.read_probability}")


@dataclass(frozen=True)
class ScanEvent:
    tag_code: int
    rssi: float
    est_distance: float
    tick: int


def rssi_at(true_distance: float, params: RadioParams, rng: Random) -> float:
    """Received power in dBm at true_distance, with shadowing noise from rng."""
    if true_distance < D0:
        raise DomainError(f"distance {true_distance} below reference distance {D0}")
    loss = 10.0 * params.path_loss_exponent * math.log10(true_distance / D0)
    return params.ref_power_dbm - loss + rng.gauss(0.0, params.noise_sigma_db)


def estimate_distance(rssi: float, params: RadioParams) -> float:
    """Invert the path loss model; clamped to [d0, 10 * read_range]."""
    d = D0 * 10.0 ** ((params.ref_power_dbm - rssi) / (10.0 * params.path_loss_exponent))
    return min(max(d, D0), 10.0 * params.read_range_m)


def scan(
    reader_pos: float,
    tags: list[TagInstallation],
    params: RadioParams,
    rng: Random,
    tick: int,
) -> list[ScanEvent]:
    """Attempt one read of every tag ahead of the reader and within range.

    The antenna is forward-facing: tags behind the reader are never read.
    Each in-range tag is read independently with read_probability; distances
    closer than d0 rate-limit to d0. Events come back sorted by estimated
    distance, nearest first.
    """
    events = []
    read_range = params.read_range_m
    p = params.read_probability
    for tag in tags:
        gap = tag.position - reader_pos
        if gap < 0 or gap > read_range:
            continue
        if rng.random() <= p:
            rssi = rssi_at(max(gap, D0), params, rng)
            events.append(
                ScanEvent(
                    tag_code=tag.tag_code,
                    rssi=rssi,
                    est_distance=estimate_distance(rssi, params),
                    tick=tick,
                )
            )
    events.sort(key=lambda e: e.est_distance)
    return events
