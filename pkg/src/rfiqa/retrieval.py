"""Nearest-neighbor instance retrieval over a feature store.

Two modes:

* hierarchical (synthetic stores): pick the k' pristine groups closest to the
  query in semantic space, then inside each group pick the k'' distorted
  records closest in distortion space;
* flat concatenated (authentic stores, or synthetic for ablations): a single
  scan over all distorted records using the concatenated
  (semantic || distortion) vectors, keeping the best k' * k''.

All scans are exact linear scans; the largest realistic store (~11k records)
searches in milliseconds, and ties always break by canonical record order so
results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .distance import DistanceMetric, batch_distance
from .errors import DimensionMismatch, NoEligibleGroups, UnknownGroup
from .store import FeatureStore, StoreMode


class RetrievalMode(str, Enum):
    HIERARCHICAL = "hierarchical"
    FLAT_CONCAT = "flat"


@dataclass(frozen=True)
class RetrievalConfig:
    """Knobs for one retrieval pass.

    ``exclude_group`` removes an entire pristine group from consideration
    (hierarchical) or, in authentic singleton grouping, the query's own
    record.
    """

    k_prime: int = 1
    k_double_prime: int = 1
    metric: DistanceMetric = DistanceMetric.COSINE
    mode: RetrievalMode = RetrievalMode.HIERARCHICAL
    exclude_group: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "metric", DistanceMetric(self.metric))
        object.__setattr__(self, "mode", RetrievalMode(self.mode))
        if self.k_prime < 1:
            raise ValueError(f"k_prime must be >= 1, got {self.k_prime}")
        if self.k_double_prime < 1:
            raise ValueError(f"k_double_prime must be >= 1, got {self.k_double_prime}")


@dataclass(frozen=True)
class RetrievedInstance:
    """A matched distorted record with its distances and opinion score.

    In flat mode the single concatenated-feature distance lives in ``d_s``
    and ``d_d`` is 0, so downstream weighting (which sums the two) works
    unchanged.
    """

    record_id: str
    group_id: str
    mos: float
    d_s: float
    d_d: float


def _check_query(query, dim: int, what: str) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.size != dim:
        raise DimensionMismatch(f"{what} query has length {q.size}, store expects {dim}")
    return q


def retrieve_pristine(
    store: FeatureStore,
    query_semantic,
    k_prime: int,
    metric: DistanceMetric = DistanceMetric.COSINE,
    exclude_group: str | None = None,
) -> list[tuple[str, float]]:
    """The k' pristine groups nearest to the query, as (group_id, d_s) pairs.

    Ascending by distance, ties broken by canonical record order. Returns
    fewer than k' pairs when fewer eligible groups exist.
    """
    if store.manifest.mode is not StoreMode.SYNTHETIC:
        raise ValueError("pristine retrieval needs a synthetic-mode store")
    q = _check_query(query_semantic, store.manifest.semantic_dim, "semantic")
    gids = store._pristine_group_ids
    mat = store._pristine_semantic
    keep = [i for i, g in enumerate(gids) if g != exclude_group]
    if not keep:
        raise NoEligibleGroups("every group is excluded")
    dists = batch_distance(metric, mat[keep], q)
    order = np.argsort(dists, kind="stable")[:k_prime]
    return [(gids[keep[i]], float(dists[i])) for i in order]


def retrieve_distorted(
    store: FeatureStore,
    group_id: str,
    query_distortion,
    k_double_prime: int,
    metric: DistanceMetric = DistanceMetric.COSINE,
) -> list[RetrievedInstance]:
    """The k'' distorted records of one group nearest in distortion space."""
    if group_id not in store.groups:
        raise UnknownGroup(group_id)
    q = _check_query(query_distortion, store.manifest.distortion_dim, "distortion")
    members = store.groups[group_id].distorted_indices
    if not members:
        raise UnknownGroup(f"group {group_id!r} has no distorted records")
    rows = np.stack([store.records[i].distortion_vec for i in members]).astype(np.float64)
    dists = batch_distance(metric, rows, q)
    order = np.argsort(dists, kind="stable")[:k_double_prime]
    out = []
    for i in order:
        rec = store.records[members[i]]
        out.append(
            RetrievedInstance(rec.record_id, rec.group_id, rec.mos, 0.0, float(dists[i]))
        )
    return out


def retrieve_hierarchical(
    store: FeatureStore, query_semantic, query_distortion, config: RetrievalConfig
) -> list[RetrievedInstance]:
    """Two-stage retrieval: k' groups by content, k'' instances per group."""
    groups = retrieve_pristine(
        store, query_semantic, config.k_prime, config.metric, config.exclude_group
    )
    out: list[RetrievedInstance] = []
    for gid, d_s in groups:
        for inst in retrieve_distorted(
            store, gid, query_distortion, config.k_double_prime, config.metric
        ):
            out.append(
                RetrievedInstance(inst.record_id, inst.group_id, inst.mos, d_s, inst.d_d)
            )
    return out


def retrieve_flat_concat(
    store: FeatureStore, query_semantic, query_distortion, config: RetrievalConfig
) -> list[RetrievedInstance]:
    """Single-stage retrieval on concatenated (semantic || distortion) vectors.

    Scans every distorted record, skipping ``config.exclude_group``; keeps the
    k' * k'' closest. The concatenated distance is stored in ``d_s``.
    """
    qs = _check_query(query_semantic, store.manifest.semantic_dim, "semantic")
    qd = _check_query(query_distortion, store.manifest.distortion_dim, "distortion")
    q = np.concatenate([qs, qd])
    idx = store._distorted_indices
    keep = [
        i
        for i in range(len(idx))
        if store.records[idx[i]].group_id != config.exclude_group
    ]
    if not keep:
        raise NoEligibleGroups("every distorted record is excluded")
    rows = np.concatenate(
        [store._distorted_semantic[keep], store._distorted_distortion[keep]], axis=1
    )
    dists = batch_distance(config.metric, rows, q)
    order = np.argsort(dists, kind="stable")[: config.k_prime * config.k_double_prime]
    out = []
    for i in order:
        rec = store.records[idx[keep[i]]]
        out.append(RetrievedInstance(rec.record_id, rec.group_id, rec.mos, float(dists[i]), 0.0))
    return out


def retrieve(
    store: FeatureStore, query_semantic, query_distortion, config: RetrievalConfig
) -> list[RetrievedInstance]:
    """Dispatch on ``config.mode``."""
    if config.mode is RetrievalMode.HIERARCHICAL:
        return retrieve_hierarchical(store, query_semantic, query_distortion, config)
    return retrieve_flat_concat(store, query_semantic, query_distortion, config)
