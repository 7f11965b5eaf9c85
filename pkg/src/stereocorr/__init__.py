"""Block-matching stereo correspondence with an analog correlator model."""

from .analog import NoiseSpec, Stage, power_estimate
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .grid import BlockGrid, partition
from .image_io import GrayImage, ImageIOError, load_gray, load_ground_truth, save_gray
from .metrics import DisparityMap, OpCount, apply_disparity, correlation_coefficient, op_count
from .ncc import SearchWindow, match_ncc, ncc_diagonal, ncc_full
from .sad import match_sad, sad_block, sad_search

__all__ = [
    "BlockGrid", "ConfigError", "DisparityMap", "ExperimentConfig", "GrayImage", "ImageIOError",
    "NoiseSpec", "OpCount", "SearchWindow", "Stage", "apply_disparity", "correlation_coefficient",
    "load_config", "load_gray", "load_ground_truth", "match_ncc", "match_sad", "ncc_diagonal",
    "ncc_full", "op_count", "parse_config", "partition", "power_estimate", "sad_block",
    "sad_search", "save_gray",
]
