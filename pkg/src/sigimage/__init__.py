"""Encode multivariate sensor sequences as RGB line-plot images."""

__version__ = "0.1.0"

from .signal_core import (RangeMode, SensorDescriptor, SensorKind, SequenceRecord,
                          SigImageError, SignalError, SignalMatrix, matrix_value_range,
                          population_std, resample_linear)
from .ingest import (DatasetManifest, ManifestError, ParseError, flatten_skeleton,
                     load_manifest, load_sequence_csv, write_manifest, write_sequence_csv)
from .reduce_fuse import (ReductionConfig, apply_reduction, compute_tau, contribution_vector,
                          fuse, reduce, reduce_then_fuse)
from .render import (EncodingConfig, encode_image, read_png, sample_palette, temporal_color,
                     value_to_row, write_png)
from .augment import (AugmentSpec, augment_batch, perspective_warp, rotate, width_stretch)
from .classify import EvalReport, featurize, knn_predict, nearest_centroid
from .synth import SynthSpec, generate, write_dataset
from .pipeline import PipelineConfig, build_dataset, encode_many, evaluate

__all__ = [
    "RangeMode", "SensorDescriptor", "SensorKind", "SequenceRecord", "SigImageError",
    "SignalError", "SignalMatrix", "matrix_value_range", "population_std", "resample_linear",
    "DatasetManifest", "ManifestError", "ParseError", "flatten_skeleton", "load_manifest",
    "load_sequence_csv", "write_manifest", "write_sequence_csv",
    "ReductionConfig", "apply_reduction", "compute_tau", "contribution_vector", "fuse",
    "reduce", "reduce_then_fuse",
    "EncodingConfig", "encode_image", "read_png", "sample_palette", "temporal_color",
    "value_to_row", "write_png",
    "AugmentSpec", "augment_batch", "perspective_warp", "rotate", "width_stretch",
    "EvalReport", "featurize", "knn_predict", "nearest_centroid",
    "SynthSpec", "generate", "write_dataset",
    "PipelineConfig", "build_dataset", "encode_many", "evaluate",
]
