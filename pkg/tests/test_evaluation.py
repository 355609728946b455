import numpy as np
import pytest
from hypothesis import given, strategies as st

from gvdep.evaluation import (AblationResult, FoldScore, LengthMismatch, TooFewMatches, ablate,
                              box_stats, eleven_dominates, f1, make_folds, plateau_check,
                              read_ablation_csv, write_ablation_csv)


@pytest.mark.parametrize("n, sizes", [
    (51, [5] * 9 + [6]),
    (31, [3] * 9 + [4]),
    (10, [1] * 10),
])
def test_fold_sizes(n, sizes):
    assert make_folds(range(1000, 1000 + n), 10, seed=0).sizes() == sizes


@given(st.integers(10, 80), st.integers(0, 2**31))
def test_folds_partition_matches(n, seed):
    ids = list(range(n))
    plan = make_folds(ids, 10, seed)
    flat = [m for f in plan.test for m in f]
    assert sorted(flat) == ids
    for k in range(10):
        assert set(plan.train(k)).isdisjoint(plan.test[k])
        assert len(plan.train(k)) + len(plan.test[k]) == n


def test_folds_deterministic_and_seed_dependent():
    ids = list(range(51))
    assert make_folds(ids, seed=3) == make_folds(ids, seed=3)
    assert make_folds(ids, seed=3) != make_folds(ids, seed=4)


def test_too_few_matches():
    with pytest.raises(TooFewMatches):
        make_folds(range(9), 10)


def test_f1_examples():
    assert f1([1, 1, 0], [1, 0, 1]) == (0.5, 0.5, 0.5)
    assert f1([1, 0, 1], [1, 0, 1]) == (1.0, 1.0, 1.0)
    # all-negative predictions on data with 11,895 positives in 100,328
    labels = np.zeros(100_328, bool)
    labels[:11_895] = True
    preds = np.zeros_like(labels)
    assert np.mean(preds == labels) == pytest.approx(0.881, abs=5e-4)
    assert f1(preds, labels) == (0.0, 0.0, 0.0)
    with pytest.raises(LengthMismatch):
        f1([1, 0], [1])


def test_box_stats_outliers():
    b = box_stats([1, 2, 3, 4, 100])
    assert b.median == 3 and b.q1 == 2 and b.q3 == 4
    assert b.outliers == (100.0,)
    assert b.whisker_high == 4 and b.mean == 22


def _fake_predictor(curve):
    """F1 per n_nearest driven by ``curve``; labels fixed, predictions tuned per fold."""
    def predict(target, n, train_ids, test_ids):
        labels = np.array([1] * 10 + [0] * 10, bool)
        hits = curve[n] + (test_ids[0] % 2)
        probs = np.zeros(20)
        probs[:hits] = 0.9
        assert set(train_ids).isdisjoint(test_ids)
        return probs, labels
    return predict


def test_ablate_and_plateau():
    curve = {0: 1, 1: 2, 2: 4, 3: 6, 4: 6, 5: 6, 6: 6, 7: 6, 8: 6, 9: 6, 10: 6, 11: 6}
    plan = make_folds(range(20), 10, seed=1)
    result = ablate(_fake_predictor(curve), ["gains"], plan)
    assert len(result.scores) == 12 * 10
    check = plateau_check(result, "gains")
    assert check.passed and check.gain_over_zero > 0 and abs(check.gain_11_over_4) < 1e-12
    assert not eleven_dominates(result, "gains")


def test_eleven_dominates_detects_monotone_curve():
    curve = {n: n // 2 + 1 for n in range(12)}
    curve[11] = 9
    result = ablate(_fake_predictor(curve), ["scores"], make_folds(range(10), 10))
    assert eleven_dominates(result, "scores")


def test_ablation_csv_round_trip(tmp_path):
    res = AblationResult([FoldScore("gains", 3, 0, 0.5, 0.25, 1 / 3, 7)])
    write_ablation_csv(tmp_path / "a.csv", res)
    assert read_ablation_csv(tmp_path / "a.csv").scores == res.scores
    assert (tmp_path / "a.csv").read_text().splitlines()[0].startswith(
        "target,n_nearest,fold,precision,recall,f1")


def test_n11_equals_untruncated(syn_dataset):
    full = syn_dataset.features().matrix("vdep_109")
    assert np.array_equal(syn_dataset.matrix("gains", 11), full)


def test_no_leakage_and_full_coverage(syn_dataset):
    plan = make_folds(syn_dataset.match_ids, 10, seed=0)
    covered = np.zeros(len(syn_dataset.states), int)
    for k in range(10):
        tr, te = syn_dataset.rows(plan.train(k)), syn_dataset.rows(plan.test[k])
        assert np.intersect1d(tr, te).size == 0
        assert set(syn_dataset.row_match[tr]).isdisjoint(plan.test[k])
        covered[te] += 1
    assert np.all(covered == 1)
