import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guide.metrics import (MetricError, evaluate, pr_auc, rank_scores, recall_at_k, roc_auc,
                           save_curve, save_summary)


def pairwise_auc(scores, labels):
    pos, neg = scores[labels == 1], scores[labels == 0]
    diff = pos[:, None] - neg[None, :]
    return (np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / (pos.size * neg.size)


def random_instance(rng, n=None):
    n = n or int(rng.integers(2, 60))
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 1, 0
    # coarse rounding forces plenty of ties
    scores = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
    return scores, labels


def test_roc_examples():
    assert roc_auc([0.9, 0.8, 0.1], [1, 1, 0])[1] == 1.0
    assert roc_auc([0.1, 0.9], [1, 0])[1] == 0.0
    assert roc_auc([0.8, 0.7, 0.6, 0.5], [1, 0, 1, 0])[1] == 0.75


def test_roc_single_class_is_error():
    with pytest.raises(MetricError):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(MetricError):
        roc_auc([0.1, 0.2], [0, 0])


def test_input_checks():
    with pytest.raises(MetricError):
        roc_auc([0.1, 0.2], [1, 2])
    with pytest.raises(MetricError):
        roc_auc([0.1, np.nan], [1, 0])
    with pytest.raises(MetricError):
        pr_auc([0.1], [1, 0])


def test_ap_examples():
    assert pr_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])[1] == 1.0
    assert pr_auc([0.5] * 8, [1, 0, 0, 1, 0, 0, 0, 0])[1] == pytest.approx(0.25)
    assert pr_auc([0.9, 0.8, 0.7], [1, 0, 1])[1] == pytest.approx(5 / 6)
    with pytest.raises(MetricError):
        pr_auc([0.1, 0.2], [0, 0])


def test_recall_examples():
    labels = np.array([0, 1, 0, 1, 1])
    ranking = rank_scores([0.1, 0.9, 0.2, 0.8, 0.7])
    assert recall_at_k(ranking, labels, 3) == 1.0
    assert recall_at_k(ranking, labels, 2) == pytest.approx(2 / 3)
    for k in (0, 6):
        with pytest.raises(MetricError):
            recall_at_k(ranking, labels, k)


def test_ranking_tie_order():
    r = rank_scores([0.5, 0.9, 0.5, 0.1])
    assert r.order.tolist() == [1, 0, 2, 3]
    # ties at the K boundary resolve by ascending id
    assert recall_at_k(rank_scores([1.0, 1.0, 1.0]), np.array([0, 0, 1]), 2) == 0.0


def test_roc_matches_pairwise_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        scores, labels = random_instance(rng)
        assert abs(roc_auc(scores, labels)[1] - pairwise_auc(scores, labels)) <= 1e-12


def test_curve_invariants():
    rng = np.random.default_rng(1)
    for _ in range(30):
        scores, labels = random_instance(rng)
        roc, auc = roc_auc(scores, labels)
        assert np.all(np.diff(roc.x) >= 0) and 0 <= auc <= 1
        assert roc.x[-1] == 1 and roc.y[-1] == 1
        pr, ap = pr_auc(scores, labels)
        assert np.all(np.diff(pr.x) >= 0) and 0 <= ap <= 1


def test_recall_monotone_and_complete():
    rng = np.random.default_rng(2)
    for _ in range(50):
        scores, labels = random_instance(rng)
        ranking = rank_scores(scores)
        values = [recall_at_k(ranking, labels, k) for k in range(1, labels.size + 1)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[-1] == 1.0


TRANSFORMS = [np.exp, lambda s: 3 * s + 7, lambda s: np.arctan(s), lambda s: s ** 3]


def test_monotone_transform_invariance():
    rng = np.random.default_rng(3)
    for i in range(50):
        scores, labels = random_instance(rng)
        f = TRANSFORMS[i % len(TRANSFORMS)]
        base, _, _ = evaluate(scores, labels, ks=(1, labels.size))
        moved, _, _ = evaluate(f(scores), labels, ks=(1, labels.size))
        assert moved["roc_auc"] == pytest.approx(base["roc_auc"], abs=1e-12)
        assert moved["pr_auc"] == pytest.approx(base["pr_auc"], abs=1e-12)
        assert moved["recall_at"] == base["recall_at"]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.booleans()), min_size=2, max_size=40))
def test_roc_oracle_property(pairs):
    scores = np.array([p[0] for p in pairs], dtype=float)
    labels = np.array([int(p[1]) for p in pairs])
    if labels.min() == labels.max():
        return
    assert abs(roc_auc(scores, labels)[1] - pairwise_auc(scores, labels)) <= 1e-12


def test_summary_and_curve_files(tmp_path):
    summary, roc, pr = evaluate([0.9, 0.1, 0.8, 0.3], [1, 0, 0, 1], ks=(1, 2))
    assert set(summary) == {"roc_auc", "pr_auc", "recall_at"}
    assert set(summary["recall_at"]) == {"1", "2"}
    save_summary(summary, tmp_path / "m.json")
    assert json.loads((tmp_path / "m.json").read_text()) == summary
    save_curve(roc, tmp_path / "roc.csv", "fpr,tpr")
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[0] == "fpr,tpr" and len(lines) == roc.x.size + 1
