"""Correlation statistics, logistic remapping, and the evaluation protocol.

The protocol mirrors standard quality-assessment practice: split the store
into train/test sides (group-wise for synthetic data), predict every test
record from the train-side retrieval pool only, score with SROCC / PLCC /
RMSE, repeat with consecutive seeds, and report exact medians.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .errors import DegenerateInput, FitDiverged, LengthMismatch
from .prediction import Aggregation, predict
from .retrieval import RetrievalConfig
from .store import FeatureStore, StoreMode, _round_half_up, split_dataset

WORKERS_ENV = "RFIQA_WORKERS"

# separate Philox stream so pool subsampling never correlates with the split
_POOL_STREAM = 0x706F6F6C


def _check_pair(pred, gt, min_len: int) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    g = np.asarray(gt, dtype=np.float64).reshape(-1)
    if p.size != g.size:
        raise LengthMismatch(f"{p.size} predictions vs {g.size} ground-truth values")
    if p.size < min_len:
        raise LengthMismatch(f"need at least {min_len} points, got {p.size}")
    return p, g


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied runs share the average of their positions."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    va = np.dot(da, da)
    vb = np.dot(db, db)
    if va == 0.0 or vb == 0.0:
        raise DegenerateInput("constant input has no defined correlation")
    return float(np.dot(da, db) / math.sqrt(va * vb))


def srocc(pred, gt) -> float:
    """Spearman rank correlation, tie-aware (Pearson of average ranks).

    For tie-free data this equals the classic 1 - 6*sum(d^2)/(K(K^2-1)).
    """
    p, g = _check_pair(pred, gt, 2)
    return _pearson(_average_ranks(p), _average_ranks(g))


def plcc(pred, gt) -> float:
    """Pearson linear correlation coefficient."""
    p, g = _check_pair(pred, gt, 2)
    return _pearson(p, g)


def rmse(pred, gt) -> float:
    """Root mean squared prediction error."""
    p, g = _check_pair(pred, gt, 1)
    return float(np.sqrt(np.mean((p - g) ** 2)))


# --- five-parameter logistic remapping ------------------------------------------


@dataclass(frozen=True)
class Logistic5Params:
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float

    def as_array(self) -> np.ndarray:
        return np.array([self.b1, self.b2, self.b3, self.b4, self.b5])


def logistic5(s: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """q(s) = b1 * (1/2 - 1/(1 + exp(b2*(s - b3)))) + b4*s + b5."""
    b1, b2, b3, b4, b5 = beta
    z = b2 * (np.asarray(s, dtype=np.float64) - b3)
    return b1 * (0.5 - _stable_inv_logistic(z)) + b4 * s + b5


def _stable_inv_logistic(z: np.ndarray) -> np.ndarray:
    # 1 / (1 + exp(z)) without overflow for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    ez = np.exp(-z[pos])
    out[pos] = ez / (1.0 + ez)
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


def _jacobian(s: np.ndarray, beta: np.ndarray) -> np.ndarray:
    b1, b2, b3, _, _ = beta
    z = b2 * (s - b3)
    g = _stable_inv_logistic(z)
    gg = g * (1.0 - g)
    return np.column_stack(
        [0.5 - g, b1 * gg * (s - b3), -b1 * gg * b2, s, np.ones_like(s)]
    )


def fit_logistic5(
    pred, gt, max_iter: int = 500, rel_tol: float = 1e-10
) -> tuple[Logistic5Params, np.ndarray]:
    """Fit the 5-parameter logistic mapping pred -> gt by damped Gauss-Newton.

    Starts from b1 = range(gt), b2 = 1/std(pred), b3 = mean(pred), b4 = 0,
    b5 = mean(gt); iterates until the relative SSE improvement drops below
    ``rel_tol`` or ``max_iter`` passes. Because the model nests every affine
    map (b1 = 0), the fit is finished off against an ordinary least-squares
    line and the better of the two is returned, so the mapped SSE never
    exceeds the best pure-linear SSE.
    """
    s, y = _check_pair(pred, gt, 5)
    std = float(s.std())
    if std == 0.0:
        raise DegenerateInput("constant predictions cannot be remapped")
    beta = np.array(
        [float(y.max() - y.min()), 1.0 / std, float(s.mean()), 0.0, float(y.mean())]
    )
    sse = float(np.sum((logistic5(s, beta) - y) ** 2))
    lam = 1e-3
    for _ in range(max_iter):
        r = logistic5(s, beta) - y
        jac = _jacobian(s, beta)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        improved = False
        while lam <= 1e12:
            try:
                step = np.linalg.solve(jtj + lam * np.eye(5), -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = beta + step
            cand_sse = float(np.sum((logistic5(s, cand) - y) ** 2))
            if math.isfinite(cand_sse) and cand_sse <= sse:
                improved = True
                break
            lam *= 10.0
        if not improved:
            break
        gain = sse - cand_sse
        beta, sse = cand, cand_sse
        lam = max(lam * 0.3, 1e-12)
        if gain < rel_tol * max(sse, 1e-300):
            break
    # linear (b1 = 0) closed form; keep whichever SSE is lower
    a_mat = np.column_stack([s, np.ones_like(s)])
    (slope, icept), *_ = np.linalg.lstsq(a_mat, y, rcond=None)
    lin_sse = float(np.sum((slope * s + icept - y) ** 2))
    if lin_sse < sse:
        beta = np.array([0.0, beta[1], beta[2], slope, icept])
    if not np.isfinite(beta).all():
        raise FitDiverged(f"non-finite parameters {beta}")
    mapped = logistic5(s, beta)
    return Logistic5Params(*(float(b) for b in beta)), mapped


# --- split / repeat protocol ------------------------------------------------------


@dataclass(frozen=True)
class RepeatResult:
    seed: int
    n_test: int
    srocc: float
    plcc: float
    rmse: float
    plcc_fitted: float | None = None
    rmse_fitted: float | None = None


@dataclass(frozen=True)
class EvalReport:
    repeats: tuple[RepeatResult, ...]
    median_srocc: float
    median_plcc: float
    median_rmse: float
    median_plcc_fitted: float | None
    median_rmse_fitted: float | None
    failed_repeats: int
    per_distortion: dict[str, float] | None
    protocol: dict


def _exclusion_for(store: FeatureStore, record) -> str:
    # synthetic: shut out the whole pristine group (a safety net; group-wise
    # splits already keep it out of the pool). authentic: shut out the record.
    if store.manifest.mode is StoreMode.SYNTHETIC:
        return record.group_id
    return record.record_id


def predict_test_side(
    store: FeatureStore,
    train_ids: list[str],
    test_ids: list[str],
    config: RetrievalConfig,
    aggregation: Aggregation,
) -> tuple[np.ndarray, np.ndarray, list]:
    """Score every test record against the train-side pool.

    Returns (predictions, ground truth, test records) in test-id order.
    """
    pool = store.subset(train_ids)
    records = [store.record(rid) for rid in test_ids]
    preds = np.empty(len(records))
    gts = np.empty(len(records))
    for i, rec in enumerate(records):
        cfg = dc_replace(config, exclude_group=_exclusion_for(store, rec))
        result = predict(pool, rec.semantic_vec, rec.distortion_vec, cfg, aggregation)
        preds[i] = result.score
        gts[i] = rec.mos
    return preds, gts, records


def subsample_pool(
    store: FeatureStore, train_ids: list[str], fraction: float, seed: int
) -> list[str]:
    """Shrink the retrieval pool to a fraction of the train side.

    Synthetic stores are subsampled group-wise (whole pristine groups stay or
    go together, matching the dataset's structure); authentic stores
    record-wise. At least one group / record always survives.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"pool fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return list(train_ids)
    rng = np.random.Generator(np.random.Philox(key=[seed, _POOL_STREAM]))
    if store.manifest.mode is StoreMode.SYNTHETIC:
        groups = sorted({store.record(r).group_id for r in train_ids})
        keep = max(1, _round_half_up(fraction * len(groups)))
        perm = rng.permutation(len(groups))
        kept = {groups[i] for i in perm[:keep]}
        return sorted(r for r in train_ids if store.record(r).group_id in kept)
    rids = sorted(train_ids)
    keep = max(1, _round_half_up(fraction * len(rids)))
    perm = rng.permutation(len(rids))
    return sorted(rids[i] for i in perm[:keep])


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_protocol(
    store: FeatureStore,
    config: RetrievalConfig,
    aggregation: Aggregation = Aggregation.WEIGHTED,
    train_fraction: float = 0.8,
    n_repeats: int = 15,
    base_seed: int = 0,
    fit_logistic: bool = False,
    per_distortion_seed: int | None = None,
    pool_fraction: float = 1.0,
) -> EvalReport:
    """Repeat split/predict/score ``n_repeats`` times and take medians.

    Repeat r uses split seed ``base_seed + r``. ``pool_fraction`` < 1 shrinks
    the retrieval pool after splitting (see :func:`subsample_pool`); the test
    side is untouched. A repeat whose test side is degenerate (constant
    predictions or labels) is dropped from the medians and counted in
    ``failed_repeats``. Repeats are independent, so they may run on
    ``RFIQA_WORKERS`` threads; results are reassembled by repeat index, which
    keeps the report identical at any worker count.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")

    def one_repeat(r: int) -> RepeatResult | None:
        seed = base_seed + r
        train_ids, test_ids = split_dataset(store, train_fraction, seed)
        if pool_fraction < 1.0:
            train_ids = subsample_pool(store, train_ids, pool_fraction, seed)
        preds, gts, _ = predict_test_side(store, train_ids, test_ids, config, aggregation)
        try:
            row = RepeatResult(
                seed=seed,
                n_test=len(test_ids),
                srocc=srocc(preds, gts),
                plcc=plcc(preds, gts),
                rmse=rmse(preds, gts),
            )
        except DegenerateInput:
            return None
        if fit_logistic:
            try:
                _, mapped = fit_logistic5(preds, gts)
                row = dc_replace(
                    row, plcc_fitted=plcc(mapped, gts), rmse_fitted=rmse(mapped, gts)
                )
            except (DegenerateInput, FitDiverged):
                pass
        return row

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one_repeat, range(n_repeats)))
    else:
        rows = [one_repeat(r) for r in range(n_repeats)]
    kept = [r for r in rows if r is not None]
    if not kept:
        raise DegenerateInput("every repeat failed; nothing to report")

    def med(values):
        vals = [v for v in values if v is not None]
        return statistics.median(vals) if vals else None

    per_distortion = None
    if per_distortion_seed is not None:
        per_distortion = per_distortion_breakdown(
            store, config, aggregation, per_distortion_seed, train_fraction
        )
    return EvalReport(
        repeats=tuple(kept),
        median_srocc=med(r.srocc for r in kept),
        median_plcc=med(r.plcc for r in kept),
        median_rmse=med(r.rmse for r in kept),
        median_plcc_fitted=med(r.plcc_fitted for r in kept) if fit_logistic else None,
        median_rmse_fitted=med(r.rmse_fitted for r in kept) if fit_logistic else None,
        failed_repeats=len(rows) - len(kept),
        per_distortion=per_distortion,
        protocol={
            "train_fraction": train_fraction,
            "n_repeats": n_repeats,
            "base_seed": base_seed,
            "k_prime": config.k_prime,
            "k_double_prime": config.k_double_prime,
            "metric": config.metric.value,
            "mode": config.mode.value,
            "aggregation": Aggregation(aggregation).value,
            "fit_logistic": fit_logistic,
            "pool_fraction": pool_fraction,
            "pool_subsampling": "group-wise"
            if store.manifest.mode is StoreMode.SYNTHETIC
            else "record-wise",
            "dataset_name": store.manifest.dataset_name,
            "reduction_factor": store.manifest.reduction_factor,
        },
    )


def per_type_srocc(types, preds, gts) -> dict[str, float]:
    """SROCC within each distortion-type subset of a prediction list.

    Subsets with fewer than two records, a missing type tag, or constant
    values are left out of the map.
    """
    preds = np.asarray(preds, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    by_type: dict[str, list[int]] = {}
    for i, dtype in enumerate(types):
        if dtype is not None:
            by_type.setdefault(dtype, []).append(i)
    out: dict[str, float] = {}
    for dtype in sorted(by_type):
        idx = by_type[dtype]
        if len(idx) < 2:
            continue
        try:
            out[dtype] = srocc(preds[idx], gts[idx])
        except DegenerateInput:
            continue
    return out


def per_distortion_breakdown(
    store: FeatureStore,
    config: RetrievalConfig,
    aggregation: Aggregation,
    seed: int,
    train_fraction: float = 0.8,
) -> dict[str, float]:
    """SROCC within each distortion type of one split's test side.

    Uses a single split (the seed is recorded in reports); types whose test
    subset is degenerate are simply absent.
    """
    train_ids, test_ids = split_dataset(store, train_fraction, seed)
    preds, gts, records = predict_test_side(store, train_ids, test_ids, config, aggregation)
    return per_type_srocc([rec.distortion_type for rec in records], preds, gts)
