"""Content-distortion consistency analysis.

Quantifies how strongly quality judgments transfer between groups whose
pristine images look alike: for pairs of pristine groups, pair their distorted
records cell-by-cell on (distortion_type, distortion_level) and correlate the
two opinion-score lists. High semantic similarity should come with high
aligned correlation; the emitted scatter makes that relationship visible.

Also includes the similar-instance predictor: score each record with the
opinion score of its aligned twin in a partner group and evaluate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .distance import cosine_distance
from .errors import (
    DegenerateInput,
    InsufficientAlignment,
    InsufficientGroups,
    MissingAlignment,
    UnknownGroup,
)
from .evaluation import fit_logistic5, plcc, rmse, srocc
from .store import FeatureStore, StoreMode


@dataclass(frozen=True)
class ConsistencyPoint:
    """One scatter point: a pristine pair, its similarity, aligned SROCC."""

    group_a: str
    group_b: str
    semantic_similarity: float
    aligned_srocc: float
    n_aligned: int
    listed_by: str  # "a", "b", or "both": which side's top-n produced the pair


def _pristine_sim(store: FeatureStore, ga: str, gb: str) -> float:
    a = store.pristine_record(ga)
    b = store.pristine_record(gb)
    return 1.0 - cosine_distance(a.semantic_vec, b.semantic_vec)


def pristine_similarity_pairs(
    store: FeatureStore, top_n: int
) -> list[tuple[str, str, float, str]]:
    """For each group, its top-n most similar other groups by cosine similarity.

    Pairs are deduplicated as unordered pairs; the last field records whether
    the pair appeared in group a's list, group b's, or both. Sorted by
    similarity descending (ties by group ids).
    """
    if store.manifest.mode is not StoreMode.SYNTHETIC:
        raise ValueError("similarity pairs need a synthetic-mode store")
    gids = [g for g in store.groups if store.pristine_record(g) is not None]
    if len(gids) < 2:
        raise InsufficientGroups(f"need at least 2 pristine groups, have {len(gids)}")
    listed: dict[tuple[str, str], set[str]] = {}
    sims: dict[tuple[str, str], float] = {}
    for ga in gids:
        scored = []
        for gb in gids:
            if gb == ga:
                continue
            scored.append((-_pristine_sim(store, ga, gb), gb))
        scored.sort()
        for negsim, gb in scored[:top_n]:
            key = (min(ga, gb), max(ga, gb))
            sims[key] = -negsim
            listed.setdefault(key, set()).add("a" if ga == key[0] else "b")
    out = []
    for (ka, kb), sim in sims.items():
        tag = "both" if len(listed[(ka, kb)]) == 2 else listed[(ka, kb)].pop()
        out.append((ka, kb, sim, tag))
    out.sort(key=lambda row: (-row[2], row[0], row[1]))
    return out


def _aligned_cells(store: FeatureStore, group_id: str) -> dict[tuple, float]:
    if group_id not in store.groups:
        raise UnknownGroup(group_id)
    cells: dict[tuple, float] = {}
    for rec in store.group_distorted(group_id):
        key = (rec.distortion_type, rec.distortion_level)
        cells.setdefault(key, rec.mos)  # first record per cell, canonical order
    return cells


def aligned_quality_correlation(
    store: FeatureStore, group_a: str, group_b: str
) -> tuple[float, int]:
    """SROCC of the two groups' opinion scores over their shared
    (distortion_type, distortion_level) cells, plus how many cells aligned."""
    cells_a = _aligned_cells(store, group_a)
    cells_b = _aligned_cells(store, group_b)
    shared = sorted(set(cells_a) & set(cells_b), key=repr)
    if len(shared) < 2:
        raise InsufficientAlignment(
            f"groups {group_a!r} and {group_b!r} share {len(shared)} cells, need >= 2"
        )
    mos_a = [cells_a[k] for k in shared]
    mos_b = [cells_b[k] for k in shared]
    return srocc(mos_a, mos_b), len(shared)


def consistency_scatter(store: FeatureStore, top_n: int) -> list[ConsistencyPoint]:
    """Similarity pairs annotated with aligned quality correlations.

    Pairs without enough alignment (or with constant labels) are skipped.
    """
    points = []
    for ga, gb, sim, tag in pristine_similarity_pairs(store, top_n):
        try:
            rho, n = aligned_quality_correlation(store, ga, gb)
        except (InsufficientAlignment, DegenerateInput):
            continue
        points.append(ConsistencyPoint(ga, gb, sim, rho, n, tag))
    return points


def si_predictor_eval(
    store: FeatureStore, pairing: Mapping[str, str]
) -> dict[str, float]:
    """Evaluate the similar-instance predictor over a group pairing.

    Every distorted record in a paired group is predicted by the opinion
    score of the partner group's record in the same distortion cell. SROCC is
    computed on the raw predictions; PLCC and RMSE after the five-parameter
    logistic remapping.
    """
    preds, gts = [], []
    for group, partner in pairing.items():
        cells = _aligned_cells(store, partner)
        for rec in store.group_distorted(group):
            key = (rec.distortion_type, rec.distortion_level)
            if key not in cells:
                raise MissingAlignment(
                    f"partner {partner!r} has no record for cell {key} of group {group!r}"
                )
            preds.append(cells[key])
            gts.append(rec.mos)
    raw_srocc = srocc(preds, gts)
    _, mapped = fit_logistic5(preds, gts)
    return {"srocc": raw_srocc, "plcc": plcc(mapped, gts), "rmse": rmse(mapped, gts)}


def emit_scatter(
    points: Sequence[ConsistencyPoint],
    path: str | Path,
    preamble: Sequence[str] = (),
) -> None:
    """Write scatter points as CSV, sorted by similarity descending.

    ``preamble`` lines (already '#'-prefixed) go before the header.
    """
    if not points:
        raise ValueError("no points to emit")
    rows = sorted(points, key=lambda p: (-p.semantic_similarity, p.group_a, p.group_b))
    with open(path, "w", newline="", encoding="utf-8") as f:
        for line in preamble:
            f.write(line + "\n")
        writer = csv.writer(f)
        writer.writerow(
            ["group_a", "group_b", "semantic_similarity", "aligned_srocc", "n_aligned"]
        )
        for p in rows:
            writer.writerow(
                [p.group_a, p.group_b, repr(p.semantic_similarity), repr(p.aligned_srocc), p.n_aligned]
            )


def parse_scatter(path: str | Path) -> list[ConsistencyPoint]:
    """Read back a CSV written by :func:`emit_scatter` (listed_by is not stored)."""
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        rows = (line for line in f if not line.startswith("#"))
        for row in csv.DictReader(rows):
            out.append(
                ConsistencyPoint(
                    group_a=row["group_a"],
                    group_b=row["group_b"],
                    semantic_similarity=float(row["semantic_similarity"]),
                    aligned_srocc=float(row["aligned_srocc"]),
                    n_aligned=int(row["n_aligned"]),
                    listed_by="",
                )
            )
    return out
