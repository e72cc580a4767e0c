"""Transportation-mode classification toolkit for GPS trajectory logs.

Pipeline: ingest labeled point logs into trajectory samples, derive
per-point kinematic series and 70-value summary vectors, optionally drop
samples flagged by a median-deviation speed mask, then run cross-validated
classification experiments comparing the raw and masked pipelines.
"""

from .classify import (
    TrainConfig,
    load_model,
    predict,
    save_model,
    train_decision_tree,
    train_gaussian_nb,
    train_random_forest,
)
from .denoise import NoiseMask, apply_mask, median_mask, noise_mask_for
from .evaluate import (
    ClassSubsetConfig,
    EvalReport,
    SUBSET_PRESETS,
    accuracy,
    evaluate_matrix,
    evaluate_samples,
    f1,
    map_classes,
    map_matrix,
    paired_t_test,
    run_experiment,
    stratified_kfold,
)
from .ingest import (
    MODES,
    GpsPoint,
    LabelInterval,
    TrajectorySample,
    assemble_samples,
    filter_short,
    load_geolife,
    parse_labels,
    parse_plt,
    read_samples,
    write_samples,
)
from .normalize import MinMaxParams, fit_minmax, transform
from .pointfeat import (
    PointFeatureSeries,
    compute_point_features,
    haversine_distance,
    initial_bearing,
    rate_of_change,
)
from .synthgen import DEFAULT_PROFILES, ModeProfile, corrupt, generate, write_geolife_tree
from .trajfeat import (
    COLUMN_NAMES,
    FeatureMatrix,
    FeatureVector,
    SampleRef,
    featurize,
    featurize_samples,
    global_stats,
    percentiles,
    read_feature_csv,
    write_feature_csv,
)

__version__ = "0.1.0"
