import random

import pytest

from railtag.errors import GeometryError, OutOfTrack, OverlapError
from railtag.track import (
    Curve,
    Slope,
    StationZone,
    Straight,
    TrackSegment,
    build_track,
    place_tags,
    segment_at,
)


def three_segment_track():
    return build_track(
        [
            TrackSegment(0, 0.0, 500.0, Straight(), 20.0),
            TrackSegment(1, 500.0, 200.0, Curve("right", 200.0), 15.0),
            TrackSegment(2, 700.0, 300.0, StationZone(900.0), 12.0),
        ]
    )


def test_single_segment_track():
    track = build_track([TrackSegment(0, 0.0, 1000.0, Straight(), 20.0)])
    assert track.length == 1000.0
    assert len(track.segments) == 1


def test_gap_between_segments_rejected():
    with pytest.raises(OverlapError):
        build_track(
            [
                TrackSegment(0, 0.0, 500.0, Straight(), 20.0),
                TrackSegment(1, 600.0, 300.0, Straight(), 20.0),
            ]
        )


def test_three_segment_length_is_sum_of_parts():
    # independent oracle: plain addition of the declared lengths
    lengths = [500.0, 200.0, 300.0]
    track = three_segment_track()
    assert track.length == sum(lengths)
    assert len(track.segments) == 3


def test_overlapping_segments_rejected():
    with pytest.raises(OverlapError):
        build_track(
            [
                TrackSegment(0, 0.0, 500.0, Straight(), 20.0),
                TrackSegment(1, 400.0, 300.0, Straight(), 20.0),
            ]
        )


@pytest.mark.parametrize(
    "bad",
    [
        TrackSegment(0, 0.0, -5.0, Straight(), 20.0),
        TrackSegment(0, 0.0, 100.0, Straight(), 0.0),
        TrackSegment(0, 0.0, 100.0, Straight(), 60.0),
        TrackSegment(0, 0.0, 100.0, Curve("right", 10.0), 20.0),
        TrackSegment(0, 0.0, 100.0, Curve("up", 100.0), 20.0),
        TrackSegment(0, 0.0, 100.0, Slope(0.0), 20.0),
        TrackSegment(0, 0.0, 100.0, Slope(75.0), 20.0),
        TrackSegment(0, 0.0, 100.0, StationZone(250.0), 20.0),
    ],
)
def test_bad_geometry_rejected(bad):
    with pytest.raises(GeometryError):
        build_track([bad])


def test_segment_at_origin_and_boundaries():
    track = three_segment_track()
    assert segment_at(track, 0.0).id == 0
    # a boundary position belongs to the segment that starts there
    assert segment_at(track, 500.0).id == 1
    assert segment_at(track, 700.0).id == 2
    assert segment_at(track, 750.0).id == 2


def test_segment_at_out_of_extent():
    track = three_segment_track()
    with pytest.raises(OutOfTrack):
        segment_at(track, 1000.0)
    with pytest.raises(OutOfTrack):
        segment_at(track, -0.1)


def test_segment_at_agrees_with_linear_scan():
    track = three_segment_track()
    rng = random.Random(1234)

    def linear_scan(pos):
        for seg in track.segments:
            if seg.start_pos <= pos < seg.end_pos:
                return seg
        raise AssertionError

    for _ in range(10_000):
        pos = rng.uniform(0.0, track.length - 1e-9)
        assert segment_at(track, pos) is linear_scan(pos)


def test_place_tags_nothing_to_mark():
    track = build_track([TrackSegment(0, 0.0, 1000.0, Straight(), 20.0)])
    assert place_tags(track) == []


def test_place_tags_positions():
    track = build_track(
        [
            TrackSegment(0, 0.0, 700.0, Straight(), 20.0),
            TrackSegment(1, 700.0, 300.0, StationZone(800.0), 12.0),
        ]
    )
    tags = place_tags(track, 150.0)
    assert len(tags) == 1
    assert tags[0].position == 650.0  # 800 - 150


def test_place_tags_clamped_at_origin():
    track = build_track(
        [
            TrackSegment(0, 0.0, 100.0, Straight(), 20.0),
            TrackSegment(1, 100.0, 300.0, Curve("left", 300.0), 20.0),
        ]
    )
    tags = place_tags(track, 150.0)
    assert tags[0].position == 0.0


def test_place_tags_one_per_feature_with_sequential_codes():
    track = three_segment_track()
    tags = place_tags(track, 150.0)
    # one curve + one station = 2 features
    assert [t.tag_code for t in tags] == [1, 2]
    for tag in tags:
        assert tag.tag_class == "infrastructure"
    track2 = build_track(
        [
            TrackSegment(0, 0.0, 400.0, Straight(), 20.0),
            TrackSegment(1, 400.0, 200.0, Slope(15.0), 20.0),
            TrackSegment(2, 600.0, 200.0, Slope(-15.0), 20.0),
            TrackSegment(3, 800.0, 200.0, Curve("left", 350.0), 20.0),
        ]
    )
    tags2 = place_tags(track2, 150.0)
    assert len(tags2) == 3
    features = [400.0, 600.0, 800.0]
    for tag, feature in zip(tags2, features):
        assert tag.position <= feature


def test_contiguity_invariant_holds_after_build():
    track = three_segment_track()
    for a, b in zip(track.segments, track.segments[1:]):
        assert b.start_pos == a.start_pos + a.length
