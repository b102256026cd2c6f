"""Classifier tests against exhaustive oracles, plus cross-validation checks."""

import math

import numpy as np
import pytest

from multiq.classifiers import (
    BestFirstTree,
    KnnClassifier,
    LinearSvm,
    cross_validate,
    stratified_folds,
)
from multiq.errors import DataError
from multiq.features import MinMaxScaler


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def knn_oracle(X_train, y_train, x, k):
    """All-pairs sort with explicit tie handling, independent of the model."""
    d2 = [sum((float(a) - float(b)) ** 2 for a, b in zip(row, x)) for row in X_train]
    order = sorted(range(len(X_train)), key=lambda i: d2[i])
    kth = d2[order[k - 1]]
    neighbours = [i for i in range(len(X_train)) if d2[i] <= kth]
    votes = {}
    for i in neighbours:
        votes.setdefault(str(y_train[i]), []).append(math.sqrt(d2[i]))
    best = None
    for label in sorted(votes):
        dists = votes[label]
        key = (-len(dists), float(np.sort(np.array(dists)).sum()), label)
        if best is None or key < best:
            best = key
    return best[2]


def gini_oracle_best_threshold(values, labels):
    """Enumerate every midpoint threshold, return (best_gain, threshold)."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    n = len(values)

    def gini_times_n(subset):
        if len(subset) == 0:
            return 0.0
        _, counts = np.unique(subset, return_counts=True)
        return len(subset) - (counts ** 2).sum() / len(subset)

    parent = gini_times_n(labels)
    distinct = np.unique(values)
    best = None
    for lo, hi in zip(distinct, distinct[1:]):
        thr = (lo + hi) / 2.0
        left = labels[values <= thr]
        right = labels[values > thr]
        gain = parent - gini_times_n(left) - gini_times_n(right)
        if best is None or gain > best[0]:
            best = (gain, thr)
    return best


# ---------------------------------------------------------------------------
# KNN
# ---------------------------------------------------------------------------

class TestKnn:
    def test_single_training_sample(self):
        model = KnnClassifier(1).fit([[0.0, 0.0]], ["only"])
        assert model.predict(np.array([5.0, -3.0])) == "only"

    def test_majority_vote_1d(self):
        model = KnnClassifier(3).fit([[0.0], [1.0], [10.0]], ["a", "a", "b"])
        assert model.predict(np.array([0.4])) == "a"

    def test_query_on_training_point(self):
        X = [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
        model = KnnClassifier(1).fit(X, ["p", "q", "r"])
        assert model.predict(np.array([3.0, 4.0])) == "q"

    @pytest.mark.parametrize("k", [1, 3, 5, 7])
    def test_matches_exhaustive_oracle(self, k):
        rng = np.random.default_rng(100 + k)
        # quantized features force genuine distance ties
        X = np.round(rng.uniform(0, 3, (50, 4)) * 2) / 2
        y = rng.choice(["a", "b", "c"], 50)
        model = KnnClassifier(k).fit(X, y)
        queries = np.round(rng.uniform(0, 3, (40, 4)) * 2) / 2
        for x in queries:
            assert model.predict(x) == knn_oracle(X, y, x, k)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        X = np.round(rng.uniform(0, 2, (30, 3)), 1)
        y = rng.choice(["u", "v"], 30)
        queries = rng.uniform(0, 2, (20, 3))
        base = KnnClassifier(5).fit(X, y).predict(queries)
        for _ in range(5):
            perm = rng.permutation(len(y))
            np.testing.assert_array_equal(
                KnnClassifier(5).fit(X[perm], y[perm]).predict(queries), base)

    def test_k_equals_n_tie_winner_is_query_independent(self):
        # both classes share the same coordinates, so every query sees
        # exactly tied votes and tied summed distances: the smaller label
        # must win everywhere
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
        X = np.vstack([pts, pts])
        y = np.array(["b"] * 3 + ["a"] * 3)
        model = KnnClassifier(6).fit(X, y)
        rng = np.random.default_rng(11)
        for x in rng.uniform(-5, 5, (25, 2)):
            assert model.predict(x) == "a"

    def test_boundary_ties_admit_equidistant_samples(self):
        # query at 0: distances 1, 1, 1 -- k=1 admits all three, votes 2:1
        model = KnnClassifier(1).fit([[1.0], [-1.0], [1.0]], ["b", "b", "a"])
        assert model.predict(np.array([0.0])) == "b"

    def test_predict_before_fit_rejected(self):
        with pytest.raises(DataError, match="fit"):
            KnnClassifier(3).predict(np.zeros((1, 2)))

    def test_k_larger_than_training_rejected(self):
        with pytest.raises(DataError, match="k="):
            KnnClassifier(5).fit(np.zeros((3, 2)), ["a", "b", "a"])

    def test_invalid_k_rejected(self):
        with pytest.raises(ValueError):
            KnnClassifier(0)


# ---------------------------------------------------------------------------
# linear SVM
# ---------------------------------------------------------------------------

def make_blobs(rng, centers, n_per, spread=1.0):
    X = np.vstack([rng.normal(c, spread, (n_per, len(c))) for c in centers])
    y = np.array([f"c{i}" for i, _ in enumerate(centers) for _ in range(n_per)])
    return X, y


class TestLinearSvm:
    def test_separable_blobs_reach_full_training_accuracy(self):
        rng = np.random.default_rng(13)
        X, y = make_blobs(rng, [(0.0, 0.0), (10.0, 10.0)], 25)
        model = LinearSvm(lam=1e-3, epochs=200, seed=1).fit(X, y)
        assert (model.predict(X) == y).all()

    def test_three_class_blobs(self):
        rng = np.random.default_rng(17)
        X, y = make_blobs(rng, [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], 20)
        scaled = MinMaxScaler().fit(X).transform(X)
        model = LinearSvm(lam=1e-3, epochs=400, seed=1).fit(scaled, y)
        assert (model.predict(scaled) == y).mean() >= 0.99

    def test_identical_features_resolve_to_smaller_label(self):
        X = np.ones((4, 3))
        y = np.array(["zeta", "alpha", "zeta", "alpha"])
        model = LinearSvm(seed=5).fit(X, y)
        assert model.predict(np.ones(3)) == "alpha"
        scores = model.decision_scores(np.ones((1, 3)))
        assert scores[0, 0] == scores[0, 1]  # exact score tie

    def test_bitwise_reproducible(self):
        rng = np.random.default_rng(19)
        X, y = make_blobs(rng, [(0.0, 0.0), (4.0, 4.0)], 15)
        m1 = LinearSvm(lam=1e-3, epochs=100, seed=3).fit(X, y)
        m2 = LinearSvm(lam=1e-3, epochs=100, seed=3).fit(X, y)
        np.testing.assert_array_equal(m1.weights_, m2.weights_)
        np.testing.assert_array_equal(m1.biases_, m2.biases_)

    def test_single_class_rejected(self):
        with pytest.raises(DataError, match="class"):
            LinearSvm().fit(np.zeros((4, 2)), ["same"] * 4)

    def test_bad_hyperparameters_rejected(self):
        with pytest.raises(ValueError):
            LinearSvm(lam=0.0)
        with pytest.raises(ValueError):
            LinearSvm(epochs=0)


# ---------------------------------------------------------------------------
# best-first tree
# ---------------------------------------------------------------------------

class TestBestFirstTree:
    def test_pure_data_single_leaf(self):
        model = BestFirstTree().fit(np.arange(8.0)[:, None], ["same"] * 8)
        assert model.root_.feature is None
        assert (model.predict(np.array([[-5.0], [100.0]])) == "same").all()

    def test_first_split_matches_gini_oracle(self):
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        y = np.array(["a", "a", "b", "b"])
        model = BestFirstTree(min_leaf=1).fit(X, y)
        gain, thr = gini_oracle_best_threshold(X[:, 0], y)
        assert model.root_.feature == 0
        assert model.root_.threshold == pytest.approx(thr)  # 5.5
        assert model.root_.threshold == 5.5
        assert (model.predict(X) == y).all()

    def test_first_split_matches_oracle_on_random_1d(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            X = np.round(rng.uniform(0, 10, (30, 1)), 1)
            y = rng.choice(["a", "b"], 30)
            if len(np.unique(y)) < 2 or len(np.unique(X)) < 2:
                continue
            model = BestFirstTree(max_expansions=1, min_leaf=1).fit(X, y)
            oracle = gini_oracle_best_threshold(X[:, 0], y)
            if model.root_.feature is None:
                assert oracle[0] <= 1e-12
            else:
                assert model.root_.threshold == pytest.approx(oracle[1])

    def test_zero_budget_predicts_majority(self):
        X = np.arange(6.0)[:, None]
        y = np.array(["a", "a", "a", "a", "b", "b"])
        model = BestFirstTree(max_expansions=0).fit(X, y)
        assert (model.predict(X) == "a").all()

    def test_majority_tie_takes_smaller_label(self):
        X = np.zeros((4, 1))
        y = np.array(["zed", "ant", "zed", "ant"])
        model = BestFirstTree().fit(X, y)
        assert model.predict(np.zeros((1, 1)))[0] == "ant"

    def test_training_accuracy_nondecreasing_in_budget(self):
        rng = np.random.default_rng(29)
        X = rng.uniform(0, 1, (60, 4))
        y = rng.choice(["a", "b", "c"], 60)
        last = -1.0
        for budget in (0, 1, 2, 4, 8, 16, 32):
            model = BestFirstTree(max_expansions=budget, min_leaf=1).fit(X, y)
            acc = float((model.predict(X) == y).mean())
            assert acc >= last - 1e-12
            last = acc

    def test_accepted_splits_have_positive_gain(self):
        rng = np.random.default_rng(31)
        X = rng.uniform(0, 1, (80, 3))
        y = rng.choice(["a", "b"], 80)
        model = BestFirstTree(max_expansions=16).fit(X, y)

        def gini_times_n(labels):
            if len(labels) == 0:
                return 0.0
            _, counts = np.unique(labels, return_counts=True)
            return len(labels) - (counts ** 2).sum() / len(labels)

        def walk(node, rows):
            if node.feature is None:
                assert len(rows) >= 1
                return
            mask = X[rows, node.feature] <= node.threshold
            left, right = rows[mask], rows[~mask]
            gain = gini_times_n(y[rows]) - gini_times_n(y[left]) - gini_times_n(y[right])
            assert gain > 0.0
            assert len(left) >= model.min_leaf and len(right) >= model.min_leaf
            walk(node.left, left)
            walk(node.right, right)

        walk(model.root_, np.arange(len(y)))

    def test_empty_training_set_rejected(self):
        with pytest.raises(DataError, match="empty"):
            BestFirstTree().fit(np.empty((0, 2)), [])


# ---------------------------------------------------------------------------
# stratified folds + cross-validation
# ---------------------------------------------------------------------------

class _MajorityModel:
    def fit(self, X, y):
        labels, counts = np.unique(y, return_counts=True)
        self.label = labels[np.argmax(counts)]
        return self

    def predict(self, X):
        return np.full(len(X), self.label, dtype=object)


class TestStratifiedFolds:
    def test_partition_is_exact_and_balanced(self):
        rng = np.random.default_rng(37)
        X = rng.random((60, 3))
        y = np.repeat(["a", "b", "c"], 20)
        fold_id = stratified_folds(X, y, 5, seed=2)
        assert len(fold_id) == 60
        for f in range(5):
            members = fold_id == f
            assert members.sum() == 12
            for label in "abc":
                assert (members & (y == label)).sum() == 4

    def test_row_order_invariance(self):
        rng = np.random.default_rng(41)
        X = rng.random((30, 4))
        y = np.array(["a"] * 15 + ["b"] * 15)
        base = stratified_folds(X, y, 3, seed=6)
        perm = rng.permutation(30)
        permuted = stratified_folds(X[perm], y[perm], 3, seed=6)
        np.testing.assert_array_equal(permuted, base[perm])

    def test_small_class_rejected(self):
        X = np.zeros((5, 2))
        y = np.array(["a", "a", "a", "a", "b"])
        with pytest.raises(DataError, match="fewer"):
            stratified_folds(X, y, 2, seed=0)

    def test_fold_count_validated(self):
        with pytest.raises(DataError, match="folds"):
            stratified_folds(np.zeros((4, 1)), ["a", "a", "b", "b"], 1, seed=0)


class TestCrossValidate:
    def test_majority_model_on_balanced_three_classes(self):
        rng = np.random.default_rng(43)
        X = rng.random((90, 2))
        y = np.repeat(["a", "b", "c"], 30)
        acc = cross_validate(X, y, lambda A, b: _MajorityModel().fit(A, b), 10, seed=3)
        assert acc == pytest.approx(100.0 / 3.0, abs=2.0)

    def test_separable_knn1_is_perfect(self):
        rng = np.random.default_rng(47)
        X, y = make_blobs(rng, [(0.0, 0.0), (50.0, 50.0)], 20, spread=0.5)
        acc = cross_validate(X, y, lambda A, b: KnnClassifier(1).fit(A, b), 5, seed=4)
        assert acc == 100.0

    def test_deterministic(self):
        rng = np.random.default_rng(53)
        X = rng.random((40, 5))
        y = np.array(["a", "b"] * 20)
        build = lambda A, b: KnnClassifier(3).fit(A, b)
        assert cross_validate(X, y, build, 4, seed=9) == cross_validate(X, y, build, 4, seed=9)

    def test_builder_never_sees_test_fold(self):
        rng = np.random.default_rng(59)
        X = rng.random((24, 2))
        y = np.array(["a", "b"] * 12)
        fold_id = stratified_folds(X, y, 4, seed=1)
        seen = []

        class Spy:
            def fit(self, A, b):
                seen.append(A.copy())
                self.inner = KnnClassifier(1).fit(A, b)
                return self

            def predict(self, Q):
                return self.inner.predict(Q)

        cross_validate(X, y, lambda A, b: Spy().fit(A, b), 4, seed=1)
        for f, train_X in enumerate(seen):
            test_rows = X[fold_id == f]
            for row in test_rows:
                assert not (train_X == row).all(axis=1).any()

    def test_per_fold_scaler_differs_from_global_when_extrema_split(self):
        # one extreme point per class: whichever fold holds it out trains
        # a scaler with different extrema than the global fit
        X = np.array([[0.0], [1.0], [2.0], [3.0], [100.0], [-50.0]])
        y = np.array(["a", "a", "a", "b", "b", "b"])
        global_scaler = MinMaxScaler().fit(X)
        fold_id = stratified_folds(X, y, 3, seed=7)
        mismatched = 0
        for f in range(3):
            fold_scaler = MinMaxScaler().fit(X[fold_id != f])
            if (fold_scaler.mins != global_scaler.mins).any() or \
               (fold_scaler.maxs != global_scaler.maxs).any():
                mismatched += 1
        assert mismatched >= 2
