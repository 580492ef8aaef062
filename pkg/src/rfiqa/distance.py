"""Feature-space distance metrics: cosine, Euclidean, Manhattan, JS divergence.

Every metric comes in a scalar form (two vectors) and a batched form (matrix
of row vectors against one query), used by the retrieval scans. Inputs may be
float32; all accumulation happens in float64.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import LengthMismatch

# Norms below this are treated as zero; a zero vector is maximally distant
# under cosine so it can never win a nearest-neighbor race.
ZERO_NORM_EPS = 1e-12


class DistanceMetric(str, Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    JS = "js"


def _check_pair(u, v) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.size != v.size:
        raise LengthMismatch(f"vector lengths differ: {u.size} vs {v.size}")
    return u, v


def cosine_distance(u, v) -> float:
    """1 - cos(u, v), in [0, 2]. Zero-norm inputs give 2.0."""
    u, v = _check_pair(u, v)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < ZERO_NORM_EPS or nv < ZERO_NORM_EPS:
        return 2.0
    return float(1.0 - np.dot(u, v) / (nu * nv))

def euclidean_distance(u, v) -> float:
    u, v = _check_pair(u, v)
    return float(np.sqrt(np.sum((u - v) ** 2)))


def manhattan_distance(u, v) -> float:
    u, v = _check_pair(u, v)
    return float(np.sum(np.abs(u - v)))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _kl_bits(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    # 0 * log(0/m) = 0; m is 0 only where p and q both underflowed.
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * (np.log2(np.where(p > 0.0, p, 1.0)) - np.log2(np.where(m > 0.0, m, 1.0))), 0.0)
    return terms.sum(axis=-1)


def js_divergence(u_logits, v_logits) -> float:
    """Jensen-Shannon divergence (base-2) between softmax(u) and softmax(v).

    Symmetric, in [0, 1], zero iff the two distributions coincide. Inputs are
    treated as logits, so adding a constant to either argument changes nothing.
    """
    u, v = _check_pair(u_logits, v_logits)
    if u.size == 0:
        raise LengthMismatch("js_divergence needs vectors of length >= 1")
    p = _softmax(u)
    q = _softmax(v)
    m = 0.5 * (p + q)
    return float(0.5 * _kl_bits(p, m) + 0.5 * _kl_bits(q, m))


def distance(metric: DistanceMetric, u, v) -> float:
    return {
        DistanceMetric.COSINE: cosine_distance,
        DistanceMetric.EUCLIDEAN: euclidean_distance,
        DistanceMetric.MANHATTAN: manhattan_distance,
        DistanceMetric.JS: js_divergence,
    }[DistanceMetric(metric)](u, v)


def batch_distance(metric: DistanceMetric, rows: np.ndarray, query) -> np.ndarray:
    """Distance from ``query`` to every row of ``rows`` (float64 result).

    Matches the scalar functions to floating-point noise; retrieval relies on
    this for its linear scans.
    """
    metric = DistanceMetric(metric)
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != query.size:
        raise LengthMismatch(
            f"row matrix is {rows.shape}, query has length {query.size}"
        )
    if rows.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if metric is DistanceMetric.COSINE:
        # per-row reductions, not gemv: BLAS matvec kernels round differently
        # depending on a row's position, which would make results depend on
        # store record order
        row_norms = np.sqrt(np.sum(rows * rows, axis=1))
        qn = np.linalg.norm(query)
        out = np.full(rows.shape[0], 2.0)
        if qn >= ZERO_NORM_EPS:
            ok = row_norms >= ZERO_NORM_EPS
            out[ok] = 1.0 - np.sum(rows[ok] * query, axis=1) / (row_norms[ok] * qn)
        return out
    if metric is DistanceMetric.EUCLIDEAN:
        return np.sqrt(np.sum((rows - query) ** 2, axis=1))
    if metric is DistanceMetric.MANHATTAN:
        return np.sum(np.abs(rows - query), axis=1)
    p = _softmax(rows)
    q = _softmax(query)
    m = 0.5 * (p + q)
    return 0.5 * _kl_bits(p, m) + 0.5 * _kl_bits(np.broadcast_to(q, p.shape), m)
