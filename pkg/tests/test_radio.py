import random
import statistics

import pytest

from railtag.errors import DomainError
from railtag.radio import RadioParams, estimate_distance, rssi_at, scan
from railtag.track import TagInstallation


def quiet(**kw):
    defaults = dict(noise_sigma_db=0.0, read_probability=1.0)
    defaults.update(kw)
    return RadioParams(**defaults)


def test_reference_distance_identity():
    params = quiet()
    assert rssi_at(1.0, params, random.Random(0)) == params.ref_power_dbm


@pytest.mark.parametrize("d,expected", [(10.0, -60.0), (100.0, -80.0)])
def test_log_distance_values(d, expected):
    # oracle: ref - 10*n*log10(d) evaluated by hand for n=2, ref=-40
    params = quiet(ref_power_dbm=-40.0, path_loss_exponent=2.0)
    assert rssi_at(d, params, random.Random(0)) == pytest.approx(expected, abs=1e-9)


def test_below_reference_distance_rejected():
    with pytest.raises(DomainError):
        rssi_at(0.5, quiet(), random.Random(0))


def test_estimate_inverse_identity_at_reference():
    params = quiet()
    assert estimate_distance(params.ref_power_dbm, params) == 1.0


def test_estimate_known_value():
    params = quiet(ref_power_dbm=-40.0, path_loss_exponent=2.0)
    assert estimate_distance(-60.0, params) == pytest.approx(10.0, rel=1e-12)


@pytest.mark.parametrize("d", [2.0, 17.0, 140.0])
def test_noiseless_round_trip(d):
    params = quiet()
    est = estimate_distance(rssi_at(d, params, random.Random(0)), params)
    assert abs(est - d) < 1e-9 * d


def test_estimate_clamped():
    params = quiet(read_range_m=50.0)
    assert estimate_distance(0.0, params) == 1.0        # absurdly strong signal
    assert estimate_distance(-300.0, params) == 500.0   # absurdly weak: 10x range


def test_rssi_strictly_decreasing_without_noise():
    params = quiet()
    rng = random.Random(0)
    last = rssi_at(1.0, params, rng)
    for d in [1.5, 3.0, 8.0, 20.0, 70.0, 149.0]:
        cur = rssi_at(d, params, rng)
        assert cur < last
        last = cur


def test_median_estimate_near_true_distance_under_noise():
    params = RadioParams(noise_sigma_db=2.0, path_loss_exponent=2.0)
    rng = random.Random(20240817)
    samples = [
        estimate_distance(rssi_at(50.0, params, rng), params) for _ in range(100_000)
    ]
    med = statistics.median(samples)
    assert 45.0 <= med <= 56.0


def test_scan_empty_when_out_of_range():
    params = quiet(read_range_m=50.0)
    tags = [TagInstallation(1, 500.0)]
    assert scan(100.0, tags, params, random.Random(0), 0) == []


def test_scan_tag_at_reader_position_clamps_to_reference():
    params = quiet(read_range_m=50.0)
    tags = [TagInstallation(1, 100.0)]
    events = scan(100.0, tags, params, random.Random(0), 3)
    assert len(events) == 1
    assert events[0].est_distance == 1.0
    assert events[0].tick == 3


def test_scan_range_filter_matches_brute_force():
    params = quiet(read_range_m=50.0)
    tags = [TagInstallation(1, 120.0), TagInstallation(2, 160.0)]
    # brute force: tags ahead with gap <= 50 from reader at 100 -> only tag 1
    expected = [t.tag_code for t in tags if 0 <= t.position - 100.0 <= 50.0]
    events = scan(100.0, tags, params, random.Random(0), 0)
    assert [e.tag_code for e in events] == expected == [1]


def test_scan_ignores_tags_behind_reader():
    params = quiet(read_range_m=50.0)
    tags = [TagInstallation(1, 99.0)]
    assert scan(100.0, tags, params, random.Random(0), 0) == []


def test_scan_sorted_by_estimated_distance():
    params = RadioParams(noise_sigma_db=3.0, read_probability=1.0)
    tags = [TagInstallation(i, 100.0 + 10.0 * i) for i in range(5)]
    events = scan(95.0, tags, params, random.Random(7), 0)
    ests = [e.est_distance for e in events]
    assert ests == sorted(ests)


def test_scan_deterministic_for_equal_seeds():
    params = RadioParams()
    tags = [TagInstallation(1, 120.0), TagInstallation(2, 140.0)]
    a = scan(100.0, tags, params, random.Random(99), 5)
    b = scan(100.0, tags, params, random.Random(99), 5)
    assert a == b


def test_read_probability_filters_reads():
    params = RadioParams(read_probability=0.5, noise_sigma_db=0.0)
    tags = [TagInstallation(1, 120.0)]
    rng = random.Random(11)
    hits = sum(bool(scan(100.0, tags, params, rng, t)) for t in range(2000))
    assert 900 < hits < 1100


@pytest.mark.parametrize(
    "kw",
    [
        dict(path_loss_exponent=1.0),
        dict(path_loss_exponent=5.0),
        dict(noise_sigma_db=-1.0),
        dict(read_range_m=0.0),
        dict(read_range_m=400.0),
        dict(read_probability=0.0),
        dict(read_probability=1.5),
    ],
)
def test_bad_params_rejected(kw):
    with pytest.raises(DomainError):
        RadioParams(**kw)
