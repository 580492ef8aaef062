"""Turning retrieved instances into a predicted quality score.

Two aggregators: a plain mean of the retrieved opinion scores, and an
inverse-distance weighted mean where an instance at total distance
``d_s + d_d`` gets weight ``1 / (d_s + d_d + eps)``. Both use exact
(``math.fsum``) summation so instance order can never change the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import EmptyInstanceList, NoEligibleGroups
from .retrieval import RetrievalConfig, RetrievedInstance, retrieve
from .store import FeatureStore

# Keeps the weight finite for an exact duplicate (distance 0) while letting it
# dominate every other instance, which is the intended limit.
WEIGHT_EPS = 1e-12


class Aggregation(str, Enum):
    SIMPLE = "simple"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class PredictionResult:
    score: float
    instances: tuple[RetrievedInstance, ...]
    aggregation: Aggregation


def aggregate_simple(instances: Sequence[RetrievedInstance]) -> float:
    """Mean opinion score of the instances actually retrieved."""
    if not instances:
        raise EmptyInstanceList("cannot aggregate zero instances")
    if len(instances) == 1:
        return float(instances[0].mos)
    return math.fsum(inst.mos for inst in instances) / len(instances)


def aggregate_weighted(instances: Sequence[RetrievedInstance]) -> float:
    """Inverse-distance weighted mean; closer instances count for more."""
    if not instances:
        raise EmptyInstanceList("cannot aggregate zero instances")
    if len(instances) == 1:
        # (w*y)/w can drift one ulp; a singleton mean is its own value
        return float(instances[0].mos)
    weights = [1.0 / (inst.d_s + inst.d_d + WEIGHT_EPS) for inst in instances]
    num = math.fsum(w * inst.mos for w, inst in zip(weights, instances))
    return num / math.fsum(weights)


def aggregate(instances: Sequence[RetrievedInstance], how: Aggregation) -> float:
    if Aggregation(how) is Aggregation.SIMPLE:
        return aggregate_simple(instances)
    return aggregate_weighted(instances)


def predict(
    store: FeatureStore,
    query_semantic,
    query_distortion,
    config: RetrievalConfig,
    aggregation: Aggregation = Aggregation.WEIGHTED,
) -> PredictionResult:
    """Retrieve per ``config`` and aggregate the scores of what came back.

    The full instance list rides along in the result for auditability. An
    empty eligible pool surfaces as :class:`EmptyInstanceList`.
    """
    aggregation = Aggregation(aggregation)
    try:
        instances = retrieve(store, query_semantic, query_distortion, config)
    except NoEligibleGroups as e:
        raise EmptyInstanceList(str(e)) from e
    score = aggregate(instances, aggregation)
    return PredictionResult(score, tuple(instances), aggregation)
