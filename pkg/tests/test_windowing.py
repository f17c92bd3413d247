"""Windowing tests: count formula, flattening, label aggregation, tags."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tspec import (
    DataError,
    flatten,
    make_windows,
    unflatten,
    window_attack_tags,
    window_binary_labels,
    window_matrices,
)
from tests.conftest import make_timeline


def brute_force_starts(n, w, stride):
    return [s for s in range(0, n + 1) if s % stride == 0 and s + w <= n]


class TestMakeWindows:
    def test_count_small(self):
        windows = make_windows(make_timeline(range(5)), 3, 1)
        assert [w.start_index for w in windows] == [0, 1, 2]

    def test_count_disjoint(self):
        windows = make_windows(make_timeline(range(60)), 30, 30)
        assert len(windows) == 2
        assert [w.start_index for w in windows] == [0, 30]

    def test_insufficient_data(self):
        with pytest.raises(DataError, match="insufficient"):
            make_windows(make_timeline(range(10)), 30)

    @given(
        n=st.integers(1, 80),
        w=st.integers(1, 80),
        stride=st.integers(1, 10),
    )
    @settings(max_examples=60, deadline=None)
    def test_count_formula_matches_enumeration(self, n, w, stride):
        timeline = make_timeline(range(n), width=1)
        if n < w:
            with pytest.raises(DataError):
                make_windows(timeline, w, stride)
            return
        windows = make_windows(timeline, w, stride)
        assert len(windows) == (n - w) // stride + 1
        assert [x.start_index for x in windows] == brute_force_starts(n, w, stride)

    def test_windows_carry_labels_in_order(self):
        timeline = make_timeline(range(6), labels=[0, 1, 0, 1, 1, 0])
        windows = make_windows(timeline, 3, 1)
        assert windows[1].labels.tolist() == [1, 0, 1]

    def test_stride_one_overlap(self):
        timeline = make_timeline(range(12), width=3)
        windows = make_windows(timeline, 5, 1)
        for a, b in zip(windows, windows[1:]):
            assert np.array_equal(a.traffic[1:], b.traffic[:-1])


class TestFlatten:
    @pytest.mark.parametrize("w,f,expected", [(30, 37, 1110), (60, 23, 1380), (1, 4, 4)])
    def test_lengths(self, w, f, expected):
        timeline = make_timeline(range(w), width=f)
        vec = flatten(make_windows(timeline, w)[0])
        assert vec.shape == (expected,)

    def test_row_major_order(self):
        timeline = make_timeline(range(4), width=3)
        window = make_windows(timeline, 4)[0]
        vec = flatten(window)
        for p in range(4):
            for j in range(3):
                assert vec[p * 3 + j] == window.traffic[p, j]

    def test_single_row_identity(self):
        timeline = make_timeline(range(1), width=5)
        window = make_windows(timeline, 1)[0]
        assert np.array_equal(flatten(window), window.traffic[0])

    @given(w=st.integers(1, 12), f=st.integers(1, 8))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, w, f):
        rng = np.random.default_rng(w * 100 + f)
        timeline = make_timeline(range(w), width=f, rng=rng)
        window = make_windows(timeline, w)[0]
        assert np.array_equal(unflatten(flatten(window), w), window.traffic)

    def test_unflatten_rejects_misaligned(self):
        with pytest.raises(DataError):
            unflatten(np.arange(7.0), 2)

    def test_window_matrices_match_flatten(self):
        timeline = make_timeline(range(8), labels=[0, 1] * 4, width=2)
        features, labels, starts = window_matrices(timeline, 3, 2)
        windows = make_windows(timeline, 3, 2)
        assert starts.tolist() == [w.start_index for w in windows]
        for i, w in enumerate(windows):
            assert np.array_equal(features[i], flatten(w))
            assert np.array_equal(labels[i], w.labels)


class TestWindowLabels:
    def test_any_aggregate(self):
        bits = np.array([[0, 0, 0], [0, 1, 0], [1, 1, 1]])
        assert window_binary_labels(bits, "any").tolist() == [0, 1, 1]

    def test_majority_aggregate(self):
        bits = np.array([[0, 1, 0], [1, 1, 0], [1, 1, 1]])
        assert window_binary_labels(bits, "majority").tolist() == [0, 1, 1]

    def test_tags_majority_and_empty(self):
        timeline = make_timeline(
            range(6),
            labels=[0, 1, 1, 1, 0, 0],
            attacks=["", "scan", "scan", "dos", "", ""],
        )
        tags = window_attack_tags(timeline, 3, 1)
        assert tags == ("scan", "scan", "scan", "dos")

    def test_tags_tie_prefers_earliest(self):
        timeline = make_timeline(
            range(4), labels=[1, 1, 0, 0], attacks=["a", "b", "", ""]
        )
        assert window_attack_tags(timeline, 2, 1)[0] == "a"
