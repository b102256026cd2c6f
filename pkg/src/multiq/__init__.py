"""Multi-q Tsallis entropy texture features for tile classification and
segmentation of RGB images."""

from .entropy import bgs_entropy, compose_entropies, normalize, q_log, tsallis_entropy
from .features import (
    DEFAULT_Q_GRID,
    MinMaxScaler,
    extract_bgs,
    extract_multiq,
    feature_names,
    parse_qgrid,
    select_attributes,
)
from .classifiers import BestFirstTree, KnnClassifier, LinearSvm, cross_validate
from .imaging import (
    DEFAULT_PALETTE,
    channel_histogram,
    decode_ppm,
    encode_ppm,
    partition_blocks,
    read_image,
    render_overlay,
    write_image,
)
from .pipeline import RunConfig, evaluate_matrix, load_model, save_model, segment_image, train

__version__ = "0.1.0"

__all__ = [
    "BestFirstTree",
    "DEFAULT_PALETTE",
    "DEFAULT_Q_GRID",
    "KnnClassifier",
    "LinearSvm",
    "MinMaxScaler",
    "RunConfig",
    "bgs_entropy",
    "channel_histogram",
    "compose_entropies",
    "cross_validate",
    "decode_ppm",
    "encode_ppm",
    "evaluate_matrix",
    "extract_bgs",
    "extract_multiq",
    "feature_names",
    "load_model",
    "normalize",
    "parse_qgrid",
    "partition_blocks",
    "q_log",
    "read_image",
    "render_overlay",
    "save_model",
    "segment_image",
    "select_attributes",
    "train",
    "tsallis_entropy",
    "write_image",
]
