"""End-to-end workflow: ingestion, training, evaluation, segmentation, and
the versioned on-disk model format.

A dataset is a directory with one subdirectory per class holding tile
images; each 16x16 block of a tile contributes one labeled sample. All
outputs are byte-deterministic for a fixed (dataset, config, seed).
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import features as feat
from .classifiers import (
    BestFirstTree,
    KnnClassifier,
    LinearSvm,
    stratified_folds,
)
from .errors import ConfigError, DataError, DecodeError
from .features import MinMaxScaler
from .imaging import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_PALETTE,
    block_histograms,
    partition_blocks,
    read_image,
    render_overlay,
    write_image,
)
from .report import HitRateReport, ReportRow

METHODS = ("multiq", "multiq-selected", "bgs")

CLASSIFIER_CHOICES = ("svm", "knn1", "knn3", "knn5", "knn7", "bftree")

MODEL_MAGIC = "multiq-model v1"

_IMAGE_SUFFIXES = (".ppm", ".png")


@dataclass
class RunConfig:
    method: str = "multiq"
    classifier: str = "knn3"
    qgrid: tuple = feat.DEFAULT_Q_GRID
    folds: int = 10
    seed: int = 42
    block_size: int = DEFAULT_BLOCK_SIZE
    alpha: float = 0.5
    select_count: int = 8
    svm_lambda: float = 1e-3
    svm_epochs: int = 200
    tree_expansions: int = 32
    tree_min_leaf: int = 2
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.classifier not in CLASSIFIER_CHOICES:
            raise ConfigError(
                f"unknown classifier {self.classifier!r}, expected one of {CLASSIFIER_CHOICES}"
            )
        self.qgrid = feat.validate_qgrid(self.qgrid)


@dataclass
class BlockRecord:
    label: str
    tile: str
    row: int
    col: int
    hists: np.ndarray  # (3, 256) channel histograms


@dataclass
class FeatureDataset:
    X: np.ndarray
    y: np.ndarray
    names: list[str]                  # feature column names
    keys: list[tuple[str, str, int, int]]  # (label, tile, block row, block col)
    warnings: list[str]


def _method_grid(method: str, qgrid) -> tuple[float, ...]:
    return feat.BGS_GRID if method == "bgs" else feat.validate_qgrid(qgrid)


def load_block_records(root, block_size: int = DEFAULT_BLOCK_SIZE) -> tuple[list[BlockRecord], list[str]]:
    """Scan a directory-per-class dataset into per-block histogram records.

    Files that fail to decode (or are smaller than one block) are skipped
    with a warning. Records are ordered by (class, file name, block row,
    block col); the class directory listing is normalized by name.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a readable directory")
    class_dirs = sorted((d for d in root.iterdir() if d.is_dir()), key=lambda d: d.name)
    if len(class_dirs) < 2:
        raise DataError(
            f"dataset needs at least two class directories, found {len(class_dirs)} in {root}"
        )
    for d in class_dirs:
        if any(ch in d.name for ch in ",\n\r"):
            raise DataError(f"class name {d.name!r} may not contain commas or newlines")
    records: list[BlockRecord] = []
    warnings: list[str] = []
    for class_dir in class_dirs:
        tiles = sorted(
            (f for f in class_dir.iterdir()
             if f.is_file() and f.suffix.lower() in _IMAGE_SUFFIXES),
            key=lambda f: f.name,
        )
        for tile_path in tiles:
            try:
                image = read_image(tile_path)
                grid = partition_blocks(image, block_size)
            except (DecodeError, ValueError, OSError) as exc:
                warnings.append(f"skipping {tile_path}: {exc}")
                continue
            for r in range(grid.rows):
                for c in range(grid.cols):
                    records.append(BlockRecord(
                        label=class_dir.name, tile=tile_path.name, row=r, col=c,
                        hists=block_histograms(grid.block(r, c)),
                    ))
    if not records:
        raise DataError(f"no decodable tiles found under {root}")
    return records, warnings


def features_from_records(records, method: str, qgrid) -> np.ndarray:
    grid = _method_grid(method, qgrid)
    return np.array([feat.extract_from_histograms(rec.hists, grid) for rec in records])


def ingest(root, config: RunConfig) -> FeatureDataset:
    """Dataset directory -> labeled feature matrix for the configured method."""
    records, warnings = load_block_records(root, config.block_size)
    grid = _method_grid(config.method, config.qgrid)
    X = features_from_records(records, config.method, config.qgrid)
    y = np.array([rec.label for rec in records])
    keys = [(rec.label, rec.tile, rec.row, rec.col) for rec in records]
    return FeatureDataset(X=X, y=y, names=feat.feature_names(grid), keys=keys, warnings=warnings)


def write_feature_csv(dataset: FeatureDataset, path) -> None:
    """One row per block: label, then features in layout order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + dataset.names)
        for key, row in zip(dataset.keys, dataset.X):
            writer.writerow([key[0]] + [repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# classifier construction and the trained-model bundle
# ---------------------------------------------------------------------------

def build_classifier(config: RunConfig):
    name = config.classifier
    if name.startswith("knn"):
        return KnnClassifier(k=int(name[3:]))
    if name == "svm":
        return LinearSvm(lam=config.svm_lambda, epochs=config.svm_epochs, seed=config.seed)
    return BestFirstTree(max_expansions=config.tree_expansions, min_leaf=config.tree_min_leaf)


@dataclass
class MethodModel:
    """A trained classifier plus everything needed to reapply it."""

    method: str
    classifier_name: str
    qgrid: tuple
    block_size: int
    seed: int
    labels: tuple
    scaler: MinMaxScaler
    mask: np.ndarray | None
    classifier: object

    @property
    def feature_count(self) -> int:
        return len(self.mask) if self.mask is not None else 3 * len(self.qgrid)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        expected = len(self.scaler.mins)
        if X.shape[1] != expected:
            raise DataError(
                f"model expects {expected} extracted features, got {X.shape[1]}"
            )
        scaled = self.scaler.transform(X)
        return scaled[:, self.mask] if self.mask is not None else scaled

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classifier.predict(self.transform(X))


def fit_method_model(X: np.ndarray, y: np.ndarray, config: RunConfig) -> MethodModel:
    """Fit scaler (and selection mask for multiq-selected), then the classifier."""
    labels = tuple(sorted(set(y)))
    if len(labels) < 2:
        raise DataError("training needs at least two classes")
    grid = _method_grid(config.method, config.qgrid)
    scaler = MinMaxScaler().fit(X)
    scaled = scaler.transform(X)
    mask = None
    if config.method == "multiq-selected":
        if config.select_count > X.shape[1]:
            raise ConfigError(
                f"selection target {config.select_count} exceeds the {X.shape[1]} features"
            )
        mask = feat.select_attributes(
            scaled, y, config.select_count, folds=config.folds, seed=config.seed
        )
        scaled = scaled[:, mask]
    classifier = build_classifier(config).fit(scaled, y)
    return MethodModel(
        method=config.method, classifier_name=config.classifier, qgrid=grid,
        block_size=config.block_size, seed=config.seed, labels=labels,
        scaler=scaler, mask=mask, classifier=classifier,
    )


def train(data_dir, config: RunConfig) -> tuple[MethodModel, FeatureDataset]:
    dataset = ingest(data_dir, config)
    model = fit_method_model(dataset.X, dataset.y, config)
    return model, dataset


# ---------------------------------------------------------------------------
# evaluation matrix
# ---------------------------------------------------------------------------

def evaluate_matrix(data_dir, methods, classifier_names, config: RunConfig) -> tuple[HitRateReport, list[str]]:
    """Cross-validated hit rate for every (classifier, method) pair.

    Scaler and selection mask are fit per training fold; the per-fold
    preprocessing is shared across classifier rows, which leaves the
    numbers identical to running each pair separately.
    """
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}, expected one of {METHODS}")
    for c in classifier_names:
        if c not in CLASSIFIER_CHOICES:
            raise ConfigError(f"unknown classifier {c!r}, expected one of {CLASSIFIER_CHOICES}")
    records, warnings = load_block_records(data_dir, config.block_size)
    y = np.array([rec.label for rec in records])
    rows: list[ReportRow] = []
    for method in methods:
        X = features_from_records(records, method, config.qgrid)
        fold_id = stratified_folds(X, y, config.folds, config.seed)
        fold_data = []
        for f in range(config.folds):
            tr, te = fold_id != f, fold_id == f
            scaler = MinMaxScaler().fit(X[tr])
            Xtr, Xte = scaler.transform(X[tr]), scaler.transform(X[te])
            if method == "multiq-selected":
                if config.select_count > X.shape[1]:
                    raise ConfigError(
                        f"selection target {config.select_count} exceeds the {X.shape[1]} features"
                    )
                mask = feat.select_attributes(
                    Xtr, y[tr], config.select_count, folds=config.folds, seed=config.seed
                )
                Xtr, Xte = Xtr[:, mask], Xte[:, mask]
            fold_data.append((Xtr, y[tr], Xte, te))
        feature_count = (config.select_count if method == "multiq-selected"
                         else X.shape[1])
        for name in classifier_names:
            predictions = np.empty(len(y), dtype=y.dtype)
            for Xtr, ytr, Xte, te in fold_data:
                clf = build_classifier(replace(config, classifier=name, method=method))
                predictions[te] = clf.fit(Xtr, ytr).predict(Xte)
            rows.append(ReportRow(
                classifier=name, method=method, feature_count=feature_count,
                hit_rate=float((predictions == y).mean() * 100.0),
            ))
    # present the table classifier-major, mirroring the row/column layout
    ordered = [row for name in classifier_names for row in rows if row.classifier == name]
    return HitRateReport(rows=ordered, folds=config.folds, seed=config.seed), warnings


# ---------------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------------

def _segment_features(args):
    hists, method, qgrid = args
    return feat.extract_from_histograms(hists, _method_grid(method, qgrid))


def segment_image(image: np.ndarray, model: MethodModel, alpha: float,
                  workers: int = 1) -> tuple[np.ndarray, list, dict]:
    """Classify every block of `image` and tint it with the class palette.

    Returns (overlay, per-block labels row-major, per-class block counts).
    Feature extraction may run across `workers` processes; blocks are
    reduced in row-major order either way, so the output bytes do not
    depend on the worker count.
    """
    grid = partition_blocks(image, model.block_size)
    hists = [block_histograms(b) for b in grid.blocks()]
    jobs = [(h, model.method, model.qgrid) for h in hists]
    if workers > 1:
        with Pool(processes=workers) as pool:
            vectors = pool.map(_segment_features, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
    else:
        vectors = [_segment_features(job) for job in jobs]
    predictions = model.predict(np.array(vectors))
    grid.labels = [str(p) for p in predictions]
    overlay = render_overlay(image, grid, DEFAULT_PALETTE, alpha)
    counts = {label: grid.labels.count(label) for label in sorted(set(grid.labels))}
    return overlay, grid.labels, counts


def segment_file(image_path, model_path, out_path, alpha: float, workers: int = 1) -> dict:
    """CLI back end: read image + model, write the overlay, return counts."""
    model = load_model(model_path)
    image = read_image(image_path)
    overlay, _, counts = segment_image(image, model, alpha, workers)
    write_image(out_path, overlay)
    return counts


# ---------------------------------------------------------------------------
# model persistence (line-oriented text, format version 1)
# ---------------------------------------------------------------------------

def _fmt_floats(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def save_model(model: MethodModel, path) -> None:
    """Write the versioned text model file.

    Layout: magic line, key-value header, then [scaler], optional
    [selection], one classifier section, and [end]. Floats are written
    with repr so they reload bit-exactly.
    """
    lines = [MODEL_MAGIC]
    lines.append(f"method: {model.method}")
    lines.append(f"classifier: {model.classifier_name}")
    lines.append(f"block_size: {model.block_size}")
    lines.append(f"seed: {model.seed}")
    lines.append("labels: " + ",".join(model.labels))
    lines.append("qgrid: " + _fmt_floats(model.qgrid))
    lines.append("[scaler]")
    lines.append("min: " + _fmt_floats(model.scaler.mins))
    lines.append("max: " + _fmt_floats(model.scaler.maxs))
    if model.mask is not None:
        lines.append("[selection]")
        lines.append("indices: " + ",".join(str(int(i)) for i in model.mask))
    clf = model.classifier
    if isinstance(clf, KnnClassifier):
        lines.append("[knn]")
        lines.append(f"k: {clf.k}")
        lines.append(f"samples: {len(clf.X_)}")
        for label, row in zip(clf.y_, clf.X_):
            lines.append(f"{label}," + _fmt_floats(row))
    elif isinstance(clf, LinearSvm):
        lines.append("[svm]")
        lines.append(f"lambda: {clf.lam!r}")
        lines.append(f"epochs: {clf.epochs}")
        lines.append(f"svm_seed: {clf.seed}")
        for label, w, b in zip(clf.classes_, clf.weights_, clf.biases_):
            lines.append(f"class: {label}")
            lines.append("weights: " + _fmt_floats(w))
            lines.append(f"bias: {float(b)!r}")
    elif isinstance(clf, BestFirstTree):
        lines.append("[bftree]")
        lines.append(f"max_expansions: {clf.max_expansions}")
        lines.append(f"min_leaf: {clf.min_leaf}")
        nodes = []
        _collect_nodes(clf.root_, nodes)
        lines.append(f"nodes: {len(nodes)}")
        for i, node in enumerate(nodes):
            if node.feature is not None:
                left = nodes.index(node.left)
                right = nodes.index(node.right)
                lines.append(f"node: {i},split,{node.feature},{node.threshold!r},{left},{right}")
            else:
                lines.append(f"node: {i},leaf,{node.label}")
    else:
        raise DataError(f"cannot serialize classifier of type {type(clf).__name__}")
    lines.append("[end]")
    Path(path).write_text("\n".join(lines) + "\n")


def _collect_nodes(node, acc):
    acc.append(node)
    if node.feature is not None:
        _collect_nodes(node.left, acc)
        _collect_nodes(node.right, acc)


class _ModelReader:
    def __init__(self, path):
        self.path = path
        self.lines = Path(path).read_text().splitlines()
        self.pos = 0

    def fail(self, reason: str):
        raise DecodeError(f"{self.path} line {self.pos}", reason)

    def next_line(self) -> str:
        if self.pos >= len(self.lines):
            self.fail("unexpected end of model file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect_key(self, key: str) -> str:
        line = self.next_line()
        prefix = f"{key}: "
        if not line.startswith(prefix):
            self.fail(f"expected {key!r} entry, got {line!r}")
        return line[len(prefix):]

    def expect_section(self, name: str):
        line = self.next_line()
        if line != f"[{name}]":
            self.fail(f"expected section [{name}], got {line!r}")
        return line


def load_model(path) -> MethodModel:
    """Read a model file back into a ready-to-predict MethodModel."""
    r = _ModelReader(path)
    if r.next_line() != MODEL_MAGIC:
        r.fail(f"not a model file (expected magic {MODEL_MAGIC!r})")
    method = r.expect_key("method")
    if method not in METHODS:
        r.fail(f"unknown method {method!r}")
    classifier_name = r.expect_key("classifier")
    if classifier_name not in CLASSIFIER_CHOICES:
        r.fail(f"unknown classifier {classifier_name!r}")
    block_size = int(r.expect_key("block_size"))
    seed = int(r.expect_key("seed"))
    labels = tuple(r.expect_key("labels").split(","))
    qgrid = tuple(float(v) for v in r.expect_key("qgrid").split(","))
    r.expect_section("scaler")
    scaler = MinMaxScaler()
    scaler.mins = np.array([float(v) for v in r.expect_key("min").split(",")])
    scaler.maxs = np.array([float(v) for v in r.expect_key("max").split(",")])
    mask = None
    line = r.next_line()
    if line == "[selection]":
        mask = np.array([int(v) for v in r.expect_key("indices").split(",")], dtype=np.int64)
        line = r.next_line()
    if line == "[knn]":
        classifier = _load_knn(r)
    elif line == "[svm]":
        classifier = _load_svm(r)
    elif line == "[bftree]":
        classifier = _load_bftree(r)
    else:
        r.fail(f"expected a classifier section, got {line!r}")
    if r.next_line() != "[end]":
        r.fail("missing [end] marker")
    return MethodModel(
        method=method, classifier_name=classifier_name, qgrid=qgrid,
        block_size=block_size, seed=seed, labels=labels,
        scaler=scaler, mask=mask, classifier=classifier,
    )


def _load_knn(r: _ModelReader) -> KnnClassifier:
    k = int(r.expect_key("k"))
    n = int(r.expect_key("samples"))
    labels, rows = [], []
    for _ in range(n):
        parts = r.next_line().split(",")
        labels.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    return KnnClassifier(k=k).fit(np.array(rows), np.array(labels))


def _load_svm(r: _ModelReader) -> LinearSvm:
    lam = float(r.expect_key("lambda"))
    epochs = int(r.expect_key("epochs"))
    seed = int(r.expect_key("svm_seed"))
    model = LinearSvm(lam=lam, epochs=epochs, seed=seed)
    classes, weights, biases = [], [], []
    while r.pos < len(r.lines) and r.lines[r.pos].startswith("class: "):
        classes.append(r.expect_key("class"))
        weights.append([float(v) for v in r.expect_key("weights").split(",")])
        biases.append(float(r.expect_key("bias")))
    if len(classes) < 2:
        r.fail("svm section must list at least two classes")
    model.classes_ = np.array(classes)
    model.weights_ = np.array(weights)
    model.biases_ = np.array(biases)
    return model


def _load_bftree(r: _ModelReader) -> BestFirstTree:
    from .classifiers import _TreeNode

    model = BestFirstTree(
        max_expansions=int(r.expect_key("max_expansions")),
        min_leaf=int(r.expect_key("min_leaf")),
    )
    n = int(r.expect_key("nodes"))
    specs = []
    for _ in range(n):
        body = r.expect_key("node")
        parts = body.split(",")
        specs.append(parts)
    nodes = [_TreeNode(None) for _ in range(n)]
    labels = []
    for parts, node in zip(specs, nodes):
        kind = parts[1]
        if kind == "split":
            node.feature = int(parts[2])
            node.threshold = float(parts[3])
            node.left = nodes[int(parts[4])]
            node.right = nodes[int(parts[5])]
        elif kind == "leaf":
            node.label = parts[2]
            labels.append(parts[2])
        else:
            r.fail(f"unknown node kind {kind!r}")
    if not nodes:
        r.fail("bftree section lists no nodes")
    model.classes_ = np.unique(np.array(labels))
    # leaf labels must live in an array dtype wide enough for every class
    for node in nodes:
        if node.label is not None:
            node.label = model.classes_[np.searchsorted(model.classes_, node.label)]
    model.root_ = nodes[0]
    return model


# ---------------------------------------------------------------------------
# extraction command back end
# ---------------------------------------------------------------------------

def extract_to_csv(out_path, config: RunConfig, data_dir=None, image_path=None) -> FeatureDataset:
    """Feature CSV for a dataset directory or a single image."""
    if (data_dir is None) == (image_path is None):
        raise ConfigError("exactly one of data_dir and image_path must be given")
    if data_dir is not None:
        dataset = ingest(data_dir, config)
    else:
        image = read_image(image_path)
        grid = partition_blocks(image, config.block_size)
        method_grid = _method_grid(config.method, config.qgrid)
        records = []
        name = Path(image_path).name
        for r in range(grid.rows):
            for c in range(grid.cols):
                records.append(BlockRecord(
                    label="unlabeled", tile=name, row=r, col=c,
                    hists=block_histograms(grid.block(r, c)),
                ))
        X = np.array([feat.extract_from_histograms(rec.hists, method_grid) for rec in records])
        dataset = FeatureDataset(
            X=X, y=np.array([rec.label for rec in records]),
            names=feat.feature_names(method_grid),
            keys=[(rec.label, rec.tile, rec.row, rec.col) for rec in records],
            warnings=[],
        )
    write_feature_csv(dataset, out_path)
    return dataset


def print_warnings(warnings: list[str]) -> None:
    for message in warnings:
        print(f"warning: {message}", file=sys.stderr)
    if warnings:
        print(f"warning: {len(warnings)} file(s) skipped", file=sys.stderr)
