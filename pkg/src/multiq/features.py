"""Multi-q feature vectors from block histograms, scaling, attribute selection.

A feature vector lists Tsallis entropies channel-major within each entropic
index: (S_q1(1), S_q1(2), S_q1(3), S_q2(1), ...), channels 1..3 = red,
green, blue. The default grid spans 0.1 .. 2.0 in steps of 0.1, giving
3 * 20 = 60 features; the standard-entropy variant is the 3-feature
special case of a single index q = 1.
"""

from __future__ import annotations

import numpy as np

from . import entropy
from .classifiers import KnnClassifier, stratified_folds
from .errors import DataError
from .imaging import block_histograms

DEFAULT_Q_GRID: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(1, 21))

BGS_GRID: tuple[float, ...] = (1.0,)

CHANNELS = (1, 2, 3)


def validate_qgrid(qs) -> tuple[float, ...]:
    """Check a q grid: non-empty, finite, strictly increasing."""
    grid = tuple(float(q) for q in qs)
    if not grid:
        raise ValueError("q grid must not be empty")
    if not all(np.isfinite(grid)):
        raise ValueError(f"q grid contains non-finite values: {grid}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"q grid must be strictly increasing, got {grid}")
    return grid


def parse_qgrid(spec: str) -> tuple[float, ...]:
    """Parse an A:B:STEP grid spec, inclusive of both endpoints.

    ``"0.1:2.0:0.1"`` yields the default 20-value grid.
    """
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"q grid spec must be A:B:STEP, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ValueError(f"q grid spec must hold three numbers, got {spec!r}") from None
    if step <= 0 or stop < start:
        raise ValueError(f"q grid spec needs step > 0 and B >= A, got {spec!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return validate_qgrid(round(start + i * step, 10) for i in range(count))


def extract_from_histograms(hists: np.ndarray, qgrid=DEFAULT_Q_GRID) -> np.ndarray:
    """Feature vector from a (3, 256) stack of channel histograms."""
    hists = np.asarray(hists)
    if hists.ndim != 2 or hists.shape[0] != 3:
        raise ValueError(f"expected (3, n_bins) histograms, got shape {hists.shape}")
    grid = validate_qgrid(qgrid)
    per_channel = [entropy.tsallis_profile(entropy.normalize(h), grid) for h in hists]
    # stack to (n_q, 3) then flatten row-major: channel-major within each q
    return np.stack(per_channel, axis=1).ravel()


def extract_multiq(block: np.ndarray, qgrid=DEFAULT_Q_GRID) -> np.ndarray:
    """Multi-q feature vector of a pixel block; length 3 * len(qgrid)."""
    return extract_from_histograms(block_histograms(block), qgrid)


def extract_bgs(block: np.ndarray) -> np.ndarray:
    """Standard-entropy feature vector (H_1, H_2, H_3) of a pixel block."""
    return extract_from_histograms(block_histograms(block), BGS_GRID)


def feature_names(qgrid=DEFAULT_Q_GRID) -> list[str]:
    """Column names in layout order, e.g. S_q0.1_k1; q printed to one decimal."""
    grid = validate_qgrid(qgrid)
    return [f"S_q{q:.1f}_k{k}" for q in grid for k in CHANNELS]


class MinMaxScaler:
    """Per-feature min-max scaling to [0, 1] learned from training rows.

    Values outside the training range are clamped; features constant in
    the training data map to 0.
    """

    def __init__(self):
        self.mins = None
        self.maxs = None

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or len(X) == 0:
            raise DataError("scaler needs a non-empty 2-D training matrix")
        self.mins = X.min(axis=0)
        self.maxs = X.max(axis=0)
        return self

    def transform(self, X) -> np.ndarray:
        if self.mins is None:
            raise DataError("transform called before fit")
        arr = np.asarray(X, dtype=np.float64)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.shape[1] != len(self.mins):
            raise ValueError(
                f"expected {len(self.mins)} features, got {arr.shape[1]}"
            )
        span = self.maxs - self.mins
        scaled = np.where(span > 0, (arr - self.mins) / np.where(span > 0, span, 1.0), 0.0)
        scaled = np.clip(scaled, 0.0, 1.0)
        return scaled[0] if single else scaled


def select_attributes(X, y, target_count: int, folds: int = 5, seed: int = 42) -> np.ndarray:
    """Greedy forward selection maximizing KNN-3 cross-validated accuracy.

    Starting from the empty set, each step adds the feature whose addition
    maximizes stratified k-fold accuracy of a 3-nearest-neighbour
    classifier on the candidate subset, ties breaking toward the lower
    feature index. Stops after `target_count` features. The returned
    indices are sorted ascending; for a fixed seed the result does not
    depend on the row order of the training matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) == 0:
        raise DataError("selection needs a non-empty 2-D feature matrix")
    n_features = X.shape[1]
    if not 1 <= target_count <= n_features:
        raise ValueError(
            f"target_count must lie in [1, {n_features}], got {target_count}"
        )
    if len(np.unique(y)) < 2:
        raise DataError("attribute selection needs at least two classes")

    fold_id = stratified_folds(X, y, folds, seed)
    splits = [(fold_id != f, fold_id == f) for f in range(folds)]

    def subset_accuracy(columns) -> float:
        correct = 0
        for train, test in splits:
            knn = KnnClassifier(k=min(3, int(train.sum()))).fit(X[np.ix_(train, columns)], y[train])
            correct += int((knn.predict(X[np.ix_(test, columns)]) == y[test]).sum())
        return correct / len(y)

    selected: list[int] = []
    remaining = list(range(n_features))
    while len(selected) < target_count:
        best_feature = None
        best_acc = -1.0
        for f in remaining:
            acc = subset_accuracy(selected + [f])
            if acc > best_acc:
                best_acc = acc
                best_feature = f
        selected.append(best_feature)
        remaining.remove(best_feature)
    return np.array(sorted(selected), dtype=np.int64)
