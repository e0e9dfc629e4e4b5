import random

import pytest

from occlubench.confidence_analysis import (
    ConfidenceSeries,
    build_series,
    diff_stats,
    improvement_fraction,
    mean_confidence,
    read_series_csv,
    sorted_view,
    write_series_csv,
)
from occlubench.kitti_io import (
    BoundingBox,
    Detection,
    FrameAnnotations,
    ObjectLabel,
)


def _gt(bbox, cls="Pedestrian"):
    return ObjectLabel(class_name=cls, truncated=0.0, occluded=0,
                       alpha=0.0, bbox=bbox)


def _det(bbox, score):
    return Detection(class_name="Pedestrian", bbox=bbox, score=score)


def _series(**rows):
    n = len(next(iter(rows.values())))
    return ConfidenceSeries(frames=[f"{i:04d}" for i in range(n)], values=rows)


class TestBuildSeries:
    def test_shape_and_frame_filter(self):
        box = BoundingBox(0, 0, 10, 20)
        gtset = {
            "b": FrameAnnotations("b", [_gt(box)]),
            "a": FrameAnnotations("a", [_gt(box)]),
            "c": FrameAnnotations("c", [_gt(BoundingBox(0, 0, 5, 5), "Car")]),
        }
        detsets = {
            "full": {"a": FrameAnnotations("a", [_det(box, 0.9)]),
                     "b": FrameAnnotations("b", [])},
            "upper": {"a": FrameAnnotations("a", []),
                      "b": FrameAnnotations("b", [_det(box, 0.4)])},
            "lower": {"a": FrameAnnotations("a", []),
                      "b": FrameAnnotations("b", [])},
        }
        series = build_series(detsets, gtset)
        assert series.frames == ["a", "b"]  # lexicographic, no car-only frame
        assert series.values["full"] == [0.9, 0.0]
        assert series.values["upper"] == [0.0, 0.4]
        assert series.values["lower"] == [0.0, 0.0]

    def test_missing_frame_counts_as_zero(self):
        box = BoundingBox(0, 0, 10, 20)
        gtset = {"a": FrameAnnotations("a", [_gt(box)])}
        series = build_series({"full": {}}, gtset)
        assert series.values["full"] == [0.0]

    def test_mean_confidence(self):
        s = _series(full=[0.8, 0.6, 0.7])
        assert mean_confidence(s, "full") == pytest.approx(0.7)


class TestSortedView:
    def test_permutation(self):
        s = _series(full=[0.5, 0.1, 0.9])
        perm, view = sorted_view(s, "full")
        assert perm == [1, 0, 2]
        assert view.values["full"] == [0.1, 0.5, 0.9]

    def test_stable_on_ties(self):
        s = _series(full=[0.5, 0.5], other=[1.0, 2.0])
        perm, view = sorted_view(s, "full")
        assert perm == [0, 1]
        assert view.values["other"] == [1.0, 2.0]

    def test_one_shared_permutation(self):
        rng = random.Random(2)
        n = 40
        s = _series(full=[round(rng.random(), 3) for _ in range(n)],
                    upper=[round(rng.random(), 3) for _ in range(n)],
                    lower=[round(rng.random(), 3) for _ in range(n)])
        perm, view = sorted_view(s, "full")
        for tag in ("full", "upper", "lower"):
            assert view.values[tag] == [s.values[tag][i] for i in perm]
        assert view.frames == [s.frames[i] for i in perm]

    def test_idempotent(self):
        s = _series(full=[0.3, 0.9, 0.1, 0.5])
        _, once = sorted_view(s, "full")
        _, twice = sorted_view(once, "full")
        assert twice.values == once.values

    def test_unknown_tag(self):
        with pytest.raises(KeyError):
            sorted_view(_series(full=[0.1]), "nope")


class TestDiffStats:
    def test_twelve_frame_fixture(self):
        # one full loss (0.6 drop) among eleven mild 0.1 drops
        baseline = [0.9] * 12
        variant = [0.3] + [0.8] * 11
        s = _series(baseline=baseline, variant=variant)
        stats = diff_stats(s, "baseline", "variant")
        assert stats.frac_lost == pytest.approx(1 / 12)
        expected_mean = (0.6 + 11 * 0.1) / 12
        assert stats.mean_decrease == pytest.approx(expected_mean, abs=1e-12)

    def test_identical_rows(self):
        s = _series(a=[0.5, 0.2, 0.9], b=[0.5, 0.2, 0.9])
        stats = diff_stats(s, "a", "b")
        assert stats.mean_decrease == 0.0
        assert stats.frac_unchanged == 1.0

    def test_total_loss(self):
        s = _series(a=[1.0, 1.0], b=[0.0, 0.0])
        stats = diff_stats(s, "a", "b")
        assert stats.frac_lost == 1.0
        assert stats.mean_decrease == 1.0

    def test_drop_to_zero_counts_as_lost(self):
        # 0.3 -> 0.0 is below the 0.5 margin but still a full loss
        s = _series(a=[0.3], b=[0.0])
        stats = diff_stats(s, "a", "b")
        assert stats.frac_lost == 1.0

    def test_fractions_partition(self):
        rng = random.Random(44)
        for _ in range(100):
            n = rng.randrange(1, 50)
            a = [round(rng.random(), 2) for _ in range(n)]
            b = [round(rng.random(), 2) for _ in range(n)]
            stats = diff_stats(_series(a=a, b=b), "a", "b")
            total = (stats.frac_lost + stats.frac_improved +
                     stats.frac_degraded + stats.frac_unchanged)
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_antisymmetric_mean(self):
        s = _series(a=[0.9, 0.4, 0.7], b=[0.2, 0.8, 0.7])
        forward = diff_stats(s, "a", "b").mean_decrease
        backward = diff_stats(s, "b", "a").mean_decrease
        assert forward == pytest.approx(-backward, abs=1e-15)

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            diff_stats(ConfidenceSeries(frames=[], values={"a": [], "b": []}),
                       "a", "b")


class TestImprovementFraction:
    def test_identical_rows_strict(self):
        s = _series(a=[0.5, 0.5], b=[0.5, 0.5])
        assert improvement_fraction(s, "a", "b") == 0.0

    def test_half(self):
        s = _series(a=[0.9, 0.1], b=[0.5, 0.5])
        assert improvement_fraction(s, "a", "b") == 0.5

    def test_counting_oracle(self):
        rng = random.Random(8)
        n = 200
        a = [round(rng.random(), 3) for _ in range(n)]
        b = [round(rng.random(), 3) for _ in range(n)]
        s = _series(a=a, b=b)
        expected = sum(1 for x, y in zip(a, b) if x > y) / n
        assert improvement_fraction(s, "a", "b") == expected


class TestSeriesCsv:
    def test_round_trip(self, tmp_path):
        s = _series(full=[0.125, 0.5], upper=[0.25, 0.75])
        path = tmp_path / "series.csv"
        write_series_csv(s, path)
        again = read_series_csv(path)
        assert again.frames == s.frames
        assert again.values == s.values
