"""Streaming stratified sampling and sample-based segmentation of large
raw grayscale volumes.

The toolkit covers the full path from an arbitrarily large voxel stream to a
label volume: single-pass reservoir sampling with geometric skips, value-range
stratification with proportional allocation, univariate K-Means / mini-batch
K-Means / Gaussian mixture fitting on the sample, and a final linear
classification pass. Nothing ever holds more than a chunk buffer, the sample,
and the model in memory.
"""

__version__ = "0.1.0"

from .bound_lab import (
    BoundExperimentConfig,
    FidelityResult,
    IntervalFamily,
    Phantom,
    ScalingRow,
    error_scaling_experiment,
    fidelity_experiment,
    generate_phantom,
    interval_family,
    scaling_table,
    sup_interval_error,
)
from .clustering import (
    FitConfig,
    GmmModel,
    KMeansModel,
    VARIANCE_FLOOR,
    gmm_fit,
    kmeans_fit,
    minibatch_kmeans_fit,
    predict,
    predict_array,
    read_model,
    write_model,
)
from .errors import *  # noqa: F401,F403 - exception classes only
from .metrics import ContingencyTable, build_contingency, fowlkes_mallows, nmi_mean
from .sampler import (
    ReservoirSampler,
    ReservoirState,
    Sample,
    derive_seed,
    read_sample,
    reservoir_sample,
    skip_gap,
    update_weight,
    write_sample,
)
from .segmentation import (
    DEFAULT_SEED,
    PipelineConfig,
    SegmentationReport,
    classify_pass,
    report_kv,
    report_text,
    run_pipeline,
)
from .stratification import (
    Stratification,
    StratumAllocation,
    allocate,
    assign_stratum,
    exponential_boundaries,
    histogram_pass,
    linear_boundaries,
    mixed_boundaries,
    parse_strategy,
    simple_stratification,
    stratified_sample,
)
from .volume_io import (
    ArraySource,
    DEFAULT_CHUNK_LEN,
    ValueChunk,
    VolumeHandle,
    open_volume,
    parse_sidecar,
    stream_chunks,
    stream_raw_chunks,
    write_label_volume,
    write_labels,
    write_sidecar,
)
