import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diskembed import disks, evaluation as ev, geometry
from diskembed.errors import ConfigError, InvalidArgumentError
from diskembed.model import EmbeddingTable

from conftest import SPACES


def random_table(space, rng, n=20):
    centers = np.array([geometry.random_point(space, rng, 0.5) for _ in range(n)])
    return EmbeddingTable(space, centers, rng.uniform(-0.5, 1.0, n))


def brute_best_f1(scores, labels):
    """Best F1 over every threshold that changes the prediction set."""
    best = 0.0
    for t in np.unique(scores):
        best = max(best, ev.f1_at(scores, labels, t).f1)
    return best


class TestScores:
    def test_self_pair_is_zero(self, space, rng):
        t = random_table(space, rng)
        assert np.all(ev.score_pairs(t, [(k, k) for k in range(t.n_nodes)]) == 0.0)

    def test_matches_protrusion(self, space, rng):
        t = random_table(space, rng)
        pairs = rng.integers(0, t.n_nodes, (50, 2))
        expected = [disks.protrusion(space, t.disk(j), t.disk(i)) for i, j in pairs]
        np.testing.assert_allclose(ev.score_pairs(t, pairs), expected, rtol=0, atol=1e-12)

    def test_out_of_range(self, rng):
        t = random_table(SPACES["euclidean"], rng)
        with pytest.raises(InvalidArgumentError):
            ev.score_pairs(t, [(0, 99)])

    def test_radius_shift_changes_nothing(self, space, rng):
        t = random_table(space, rng)
        pairs = rng.integers(0, t.n_nodes, (40, 2))
        shifted = EmbeddingTable(space, t.centers, t.radii + 3.25)
        np.testing.assert_allclose(ev.score_pairs(shifted, pairs), ev.score_pairs(t, pairs), atol=1e-12)

    def test_reversal_consistency(self, metric_space, rng):
        t = random_table(metric_space, rng)
        pairs = rng.integers(0, t.n_nodes, (40, 2))
        neg = EmbeddingTable(metric_space, t.centers, -t.radii)
        np.testing.assert_array_equal(ev.score_pairs(neg, pairs[:, ::-1]), ev.score_pairs(t, pairs))


class TestF1:
    def test_all_positive_predictor(self):
        r = ev.f1_at(np.zeros(11), [True] + [False] * 10, 0.0)
        assert r.precision == pytest.approx(1 / 11) and r.recall == 1.0
        assert r.f1 == pytest.approx(1 / 6)

    def test_empty_prediction(self):
        r = ev.f1_at([1.0, 2.0], [True, False], 0.0)
        assert r.precision == 0.0 and r.f1 == 0.0 and r.fn == 1 and r.tn == 1

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            ev.f1_at([1.0], [True, False], 0.0)

    def test_serialization(self):
        r = ev.f1_at([-1.0, 1.0], [True, False], 0.0, "test")
        assert json.loads(r.to_json())["f1"] == 1.0
        assert ev.EvalReport.csv_header() == "split,tau,precision,recall,f1,tp,fp,tn,fn"
        assert r.to_csv_row() == "test,0.0,1.0,1.0,1.0,1,0,1,0"


class TestTune:
    def test_separated(self):
        tau = ev.tune_threshold([-2.0, -1.0, 1.0, 3.0], [True, True, False, False])
        assert tau == 0.0

    def test_two_points(self):
        assert ev.tune_threshold([-1.0, 1.0], [True, False]) == 0.0

    def test_identical_scores(self):
        tau = ev.tune_threshold([0.5] * 4, [True, False, False, True])
        assert tau == 0.5
        assert ev.f1_at([0.5] * 4, [True, False, False, True], tau).f1 == pytest.approx(2 / 3)

    def test_single_class(self):
        with pytest.raises(ConfigError):
            ev.tune_threshold([0.0, 1.0], [True, True])

    def test_ties_go_to_smallest(self):
        # positives at 0 and 2, negative at 1: tau in [0, 1) and tau >= 2 both score
        # F1 differently; construct an exact tie
        scores = [0.0, 1.0, 2.0, 3.0]
        labels = [True, False, True, False]
        tau = ev.tune_threshold(scores, labels)
        f1s = {t: ev.f1_at(scores, labels, t).f1 for t in (0.5, 2.5)}
        assert tau == min(t for t, f in f1s.items() if f == max(f1s.values()))


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.booleans()), min_size=2, max_size=30))
def test_tuned_threshold_is_optimal(data):
    scores = np.array([s / 4 for s, _ in data])
    labels = np.array([y for _, y in data])
    if labels.all() or not labels.any():
        return
    tau = ev.tune_threshold(scores, labels)
    assert ev.f1_at(scores, labels, tau).f1 == pytest.approx(brute_best_f1(scores, labels))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.booleans()), min_size=1, max_size=30), st.floats(-5, 5), st.floats(0, 3))
def test_monotone_in_tau(data, tau, step):
    scores = [s for s, _ in data]
    labels = [y for _, y in data]
    a, b = ev.f1_at(scores, labels, tau), ev.f1_at(scores, labels, tau + step)
    assert b.recall >= a.recall
    assert b.tp + b.fp >= a.tp + a.fp
    assert a.total == len(data)
