"""From-scratch classifiers (KNN, linear SVM, best-first Gini tree) and
stratified cross-validation.

Every tie rule is total and deterministic (distance, then label order), so
training and prediction are reproducible bit-for-bit across runs and across
permutations of the training rows.
"""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from .errors import DataError

#: Accepted split gains must exceed this floor; it guards against float
#: noise presenting a mathematically zero Gini reduction as positive.
_GAIN_EPS = 1e-12

_KNN_QUERY_CHUNK = 512


def _as_matrix(X) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {arr.shape}")
    return arr


def _as_labels(y, n: int) -> np.ndarray:
    arr = np.asarray(y)
    if arr.shape != (n,):
        raise ValueError(f"labels must be a flat sequence of length {n}, got shape {arr.shape}")
    return arr


class KnnClassifier:
    """k-nearest-neighbour vote over Euclidean distance.

    Distance ties at the k-th rank admit every equidistant training sample;
    vote ties fall back to the smaller summed distance, then to the
    lexicographically smaller label.
    """

    def __init__(self, k: int = 3):
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        self.k = k
        self.X_ = None
        self.y_ = None

    def fit(self, X, y):
        X = _as_matrix(X)
        y = _as_labels(y, len(X))
        if len(X) == 0:
            raise DataError("KNN needs at least one training sample")
        if self.k > len(X):
            raise DataError(f"k={self.k} exceeds the {len(X)} training samples")
        self.X_ = X
        self.y_ = y
        return self

    def predict(self, X):
        if self.X_ is None:
            raise DataError("predict called before fit")
        single = np.asarray(X).ndim == 1
        Q = _as_matrix(X)
        if Q.shape[1] != self.X_.shape[1]:
            raise ValueError(
                f"query has {Q.shape[1]} features, model was trained with {self.X_.shape[1]}"
            )
        out = np.empty(len(Q), dtype=self.y_.dtype)
        for lo in range(0, len(Q), _KNN_QUERY_CHUNK):
            chunk = Q[lo:lo + _KNN_QUERY_CHUNK]
            d2 = ((chunk[:, None, :] - self.X_[None, :, :]) ** 2).sum(axis=-1)
            for i, row in enumerate(d2):
                out[lo + i] = self._vote(row)
        return out[0] if single else out

    def _vote(self, d2_row: np.ndarray):
        kth = np.partition(d2_row, self.k - 1)[self.k - 1]
        neighbours = np.flatnonzero(d2_row <= kth)
        labels = self.y_[neighbours]
        dists = np.sqrt(d2_row[neighbours])
        best = None
        for label in np.unique(labels):
            members = labels == label
            count = int(members.sum())
            # summed in sorted order so the result is permutation-invariant
            total = float(np.sort(dists[members]).sum())
            key = (-count, total)
            if best is None or key < best[0]:
                best = (key, label)
        return best[1]


class LinearSvm:
    """One-vs-rest linear SVM trained by full-batch Pegasos subgradient steps.

    Each epoch applies one subgradient step of the hinge objective over the
    whole training set with step size 1/(lambda * t) and shrinkage
    (1 - 1/t). The full batch makes training exactly reproducible; `seed`
    is stored with the model for provenance. A constant bias column is
    appended to the features and regularized with the weights.
    """

    def __init__(self, lam: float = 1e-3, epochs: int = 200, seed: int = 42):
        if lam <= 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        if epochs < 1:
            raise ValueError(f"epochs must be positive, got {epochs}")
        self.lam = float(lam)
        self.epochs = int(epochs)
        self.seed = int(seed)
        self.classes_ = None
        self.weights_ = None   # (n_classes, n_features)
        self.biases_ = None    # (n_classes,)

    def fit(self, X, y):
        X = _as_matrix(X)
        y = _as_labels(y, len(X))
        classes = np.unique(y)
        if len(classes) < 2:
            raise DataError("linear SVM needs at least two classes")
        n = len(X)
        Xa = np.hstack([X, np.ones((n, 1))])
        weights = np.zeros((len(classes), Xa.shape[1]))
        for ci, label in enumerate(classes):
            target = np.where(y == label, 1.0, -1.0)
            w = np.zeros(Xa.shape[1])
            for t in range(1, self.epochs + 1):
                eta = 1.0 / (self.lam * t)
                margins = target * (Xa @ w)
                violated = margins < 1.0
                grad = self.lam * w - (target[violated, None] * Xa[violated]).sum(axis=0) / n
                w = w - eta * grad
            weights[ci] = w
        self.classes_ = classes
        self.weights_ = weights[:, :-1].copy()
        self.biases_ = weights[:, -1].copy()
        return self

    def decision_scores(self, X) -> np.ndarray:
        if self.weights_ is None:
            raise DataError("predict called before fit")
        X = _as_matrix(X)
        if X.shape[1] != self.weights_.shape[1]:
            raise ValueError(
                f"query has {X.shape[1]} features, model was trained with {self.weights_.shape[1]}"
            )
        return X @ self.weights_.T + self.biases_

    def predict(self, X):
        single = np.asarray(X).ndim == 1
        scores = self.decision_scores(X)
        # argmax returns the first maximum; classes_ is sorted, so score
        # ties resolve to the lexicographically smaller label
        picks = self.classes_[np.argmax(scores, axis=1)]
        return picks[0] if single else picks


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "label", "indices", "split")

    def __init__(self, indices):
        self.feature = None
        self.threshold = None
        self.left = None
        self.right = None
        self.label = None
        self.indices = indices
        self.split = None  # (gain, feature, threshold) candidate


class BestFirstTree:
    """Binary decision tree grown best-first on Gini impurity reduction.

    A priority queue keeps every expandable leaf keyed by the gain of its
    best split (threshold = midpoint between consecutive distinct sorted
    values); the globally best leaf is expanded until `max_expansions`
    splits have been made, no positive-gain split remains, or leaves are
    pure / smaller than 2 * min_leaf. Leaves predict their majority label,
    ties going to the lexicographically smaller one.
    """

    def __init__(self, max_expansions: int = 32, min_leaf: int = 2):
        if max_expansions < 0:
            raise ValueError(f"max_expansions must be >= 0, got {max_expansions}")
        if min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
        self.max_expansions = int(max_expansions)
        self.min_leaf = int(min_leaf)
        self.classes_ = None
        self.root_ = None

    def fit(self, X, y):
        X = _as_matrix(X)
        y = _as_labels(y, len(X))
        if len(X) == 0:
            raise DataError("cannot train a tree on an empty training set")
        self.classes_ = np.unique(y)
        codes = np.searchsorted(self.classes_, y)
        self.root_ = _TreeNode(np.arange(len(X)))
        queue = []
        counter = itertools.count()

        def consider(node):
            idx = node.indices
            if len(idx) < 2 * self.min_leaf or len(np.unique(codes[idx])) == 1:
                return
            split = self._best_split(X[idx], codes[idx])
            if split is not None:
                node.split = split
                heapq.heappush(queue, (-split[0], next(counter), node))

        consider(self.root_)
        expansions = 0
        while queue and expansions < self.max_expansions:
            _, _, node = heapq.heappop(queue)
            gain, feature, threshold = node.split
            idx = node.indices
            left_mask = X[idx, feature] <= threshold
            node.feature = feature
            node.threshold = threshold
            node.left = _TreeNode(idx[left_mask])
            node.right = _TreeNode(idx[~left_mask])
            node.indices = None
            node.split = None
            consider(node.left)
            consider(node.right)
            expansions += 1

        self._finalize(self.root_, codes)
        return self

    def _finalize(self, node, codes):
        if node.feature is not None:
            self._finalize(node.left, codes)
            self._finalize(node.right, codes)
            return
        counts = np.bincount(codes[node.indices], minlength=len(self.classes_))
        node.label = self.classes_[int(np.argmax(counts))]
        node.indices = None
        node.split = None

    def _best_split(self, Xn: np.ndarray, codes_n: np.ndarray):
        """Best (gain, feature, threshold) over all features, or None.

        Gain is the count-weighted Gini reduction n*G - nL*GL - nR*GR;
        ties prefer the smaller feature index, then the smaller threshold.
        """
        n, d = Xn.shape
        n_classes = int(codes_n.max()) + 1
        parent_counts = np.bincount(codes_n, minlength=n_classes).astype(np.float64)
        parent = n - (parent_counts ** 2).sum() / n
        best = None
        for f in range(d):
            order = np.argsort(Xn[:, f], kind="stable")
            v = Xn[order, f]
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), codes_n[order]] = 1.0
            cum = onehot.cumsum(axis=0)
            sizes = np.arange(1, n)
            boundary = v[:-1] < v[1:]
            boundary &= (sizes >= self.min_leaf) & (n - sizes >= self.min_leaf)
            cuts = np.flatnonzero(boundary)
            if len(cuts) == 0:
                continue
            left_counts = cum[cuts]
            right_counts = parent_counts[None, :] - left_counts
            n_left = (cuts + 1).astype(np.float64)
            n_right = n - n_left
            gini_left = n_left - (left_counts ** 2).sum(axis=1) / n_left
            gini_right = n_right - (right_counts ** 2).sum(axis=1) / n_right
            gains = parent - gini_left - gini_right
            j = int(np.argmax(gains))
            gain = float(gains[j])
            if gain <= _GAIN_EPS:
                continue
            lo, hi = v[cuts[j]], v[cuts[j] + 1]
            threshold = lo + (hi - lo) / 2.0
            if threshold >= hi:  # adjacent floats: keep the partition consistent
                threshold = lo
            if best is None or gain > best[0]:
                best = (gain, f, float(threshold))
        return best

    def predict(self, X):
        if self.root_ is None:
            raise DataError("predict called before fit")
        single = np.asarray(X).ndim == 1
        Q = _as_matrix(X)
        out = np.empty(len(Q), dtype=self.classes_.dtype)
        for i, x in enumerate(Q):
            node = self.root_
            while node.feature is not None:
                node = node.left if x[node.feature] <= node.threshold else node.right
            out[i] = node.label
        return out[0] if single else out


def stratified_folds(X, y, folds: int, seed: int) -> np.ndarray:
    """Deterministic stratified fold id per row.

    Rows are first put into a canonical order (sorted by feature values,
    then label) so the assignment depends only on the seed and the
    label-stratified content of the dataset, not on input row order. Each
    class is then shuffled with its own seeded generator and dealt
    round-robin across folds.
    """
    X = _as_matrix(X)
    y = _as_labels(y, len(X))
    if folds < 2:
        raise DataError(f"need at least 2 folds, got {folds}")
    classes, counts = np.unique(y, return_counts=True)
    for label, count in zip(classes, counts):
        if count < folds:
            raise DataError(
                f"class {label!r} has {count} samples, fewer than the {folds} folds"
            )
    label_codes = np.searchsorted(classes, y)
    keys = (label_codes,) + tuple(X[:, j] for j in range(X.shape[1] - 1, -1, -1))
    canonical = np.lexsort(keys)
    fold_id = np.empty(len(y), dtype=np.int64)
    for ci in range(len(classes)):
        rows = canonical[label_codes[canonical] == ci]
        perm = np.random.default_rng([seed, ci]).permutation(len(rows))
        fold_id[rows[perm]] = np.arange(len(rows)) % folds
    return fold_id


def cross_validate(X, y, build, folds: int, seed: int) -> float:
    """Pooled stratified-CV accuracy (percent) of models from `build`.

    ``build(X_train, y_train)`` must return a fitted predictor. It is
    called once per fold and sees only that fold's training rows, so any
    scaling or feature selection it performs cannot leak information from
    the held-out fold.
    """
    X = _as_matrix(X)
    y = _as_labels(y, len(X))
    fold_id = stratified_folds(X, y, folds, seed)
    predictions = np.empty(len(y), dtype=y.dtype)
    for f in range(folds):
        train = fold_id != f
        test = fold_id == f
        model = build(X[train], y[train])
        predictions[test] = model.predict(X[test])
    return float((predictions == y).mean() * 100.0)
