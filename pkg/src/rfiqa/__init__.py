"""rfiqa: blind image-quality scoring by nearest-neighbor retrieval.

A query image is scored by retrieving content- and distortion-similar
instances from a store of human-annotated feature vectors and aggregating
their opinion scores. No quality regression is ever trained; the store itself
is the model.
"""

__version__ = "0.1.0"

from .distance import (
    DistanceMetric,
    cosine_distance,
    euclidean_distance,
    js_divergence,
    manhattan_distance,
)
from .errors import RfiqaError
from .evaluation import (
    EvalReport,
    Logistic5Params,
    fit_logistic5,
    per_distortion_breakdown,
    plcc,
    rmse,
    run_protocol,
    srocc,
)
from .prediction import (
    Aggregation,
    PredictionResult,
    aggregate_simple,
    aggregate_weighted,
    predict,
)
from .retrieval import (
    RetrievalConfig,
    RetrievalMode,
    RetrievedInstance,
    retrieve_flat_concat,
    retrieve_hierarchical,
)
from .store import (
    FeatureRecord,
    FeatureStore,
    Role,
    ScorePolarity,
    StoreManifest,
    StoreMode,
    build_store,
    load_store,
    reduce_features,
    save_store,
    split_dataset,
)

__all__ = [
    "__version__",
    "Aggregation",
    "DistanceMetric",
    "EvalReport",
    "FeatureRecord",
    "FeatureStore",
    "Logistic5Params",
    "PredictionResult",
    "RetrievalConfig",
    "RetrievalMode",
    "RetrievedInstance",
    "RfiqaError",
    "Role",
    "ScorePolarity",
    "StoreManifest",
    "StoreMode",
    "aggregate_simple",
    "aggregate_weighted",
    "build_store",
    "cosine_distance",
    "euclidean_distance",
    "fit_logistic5",
    "js_divergence",
    "load_store",
    "manhattan_distance",
    "per_distortion_breakdown",
    "plcc",
    "predict",
    "reduce_features",
    "retrieve_flat_concat",
    "retrieve_hierarchical",
    "rmse",
    "run_protocol",
    "save_store",
    "split_dataset",
    "srocc",
]
