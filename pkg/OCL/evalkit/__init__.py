"""Linear probing, average precision, view-overlap analytics, sweeps and benchmarks."""

from OCL.evalkit.bench import bench_proposals, check_regression
from OCL.evalkit.features import FeatureSet, center_view, extract_features, features_from_state, multi_hot
from OCL.evalkit.metrics import average_precision, mean_average_precision
from OCL.evalkit.overlap import object_fraction, overlap_report
from OCL.evalkit.probe import ProbeConfig, ProbeResult, linear_probe
from OCL.evalkit.sweep import (
    DELTA_GRID,
    PRESETS,
    TEMPERATURE_GRID,
    SweepRow,
    SweepSpec,
    apply_point,
    run_point,
    run_sweep,
)

__all__ = [
    "DELTA_GRID",
    "FeatureSet",
    "PRESETS",
    "ProbeConfig",
    "ProbeResult",
    "SweepRow",
    "SweepSpec",
    "TEMPERATURE_GRID",
    "apply_point",
    "average_precision",
    "bench_proposals",
    "center_view",
    "check_regression",
    "extract_features",
    "features_from_state",
    "linear_probe",
    "mean_average_precision",
    "multi_hot",
    "object_fraction",
    "overlap_report",
    "run_point",
    "run_sweep",
]
