"""Synthetic stores with planted ground truth, for tests and fixtures.

These builders fabricate feature geometry with a known answer so the whole
engine can be verified end to end without any real image data:

* :func:`make_planted_store` clusters groups into content archetypes and gives
  every record a distortion vector that encodes its (type, level) cell. The
  opinion score is a fixed function of (archetype, type, level) plus Gaussian
  noise, so nearest-neighbor score transfer provably works and its accuracy
  can be measured.
* :func:`make_similarity_gradient_store` places groups along a semantic arc
  and blends each group's scoring function between two base functions with a
  weight tied to its position, planting a positive relationship between
  pristine similarity and aligned score correlation.
* :func:`make_toy_store` is the small fixture bundled with the repo.

Vector layouts use constant blocks so windowed max pooling (up to the block
width) preserves the planted geometry instead of destroying it.
"""

from __future__ import annotations

import math

import numpy as np

from .store import (
    FeatureRecord,
    FeatureStore,
    Role,
    ScorePolarity,
    StoreManifest,
    StoreMode,
    build_store,
)

DISTORTION_NAMES = (
    "gauss_blur",
    "white_noise",
    "jpeg",
    "contrast_shift",
    "color_quantize",
    "pixelate",
    "jitter",
    "brighten",
)


def _block_pattern(dim: int, block: int, hot: dict[int, float], base: float) -> np.ndarray:
    """Vector of constant ``block``-wide blocks: ``base`` everywhere plus overrides."""
    vec = np.full(dim, base, dtype=np.float64)
    for b, value in hot.items():
        lo = b * block
        if lo < 0 or lo >= dim:
            raise ValueError(f"block {b} out of range for dim {dim} (block width {block})")
        vec[lo : min(lo + block, dim)] = value
    return vec


def _semantic_base(archetype: int, dim: int, block: int) -> np.ndarray:
    return _block_pattern(dim, block, {archetype: 2.0}, 0.2)


def _distortion_base(dtype: int, level: int, n_levels: int, dim: int, block: int) -> np.ndarray:
    # levels steer the direction of two shared blocks so cosine distance
    # orders them; the type block separates distortion families
    theta = 0.5 * math.pi * (level - 1) / max(n_levels - 1, 1)
    n_blocks = dim // block
    return _block_pattern(
        dim,
        block,
        {
            dtype: 2.0,
            n_blocks - 3: 1.0 + math.cos(theta),
            n_blocks - 2: 1.0 + math.sin(theta),
        },
        0.2,
    )


def make_planted_store(
    n_groups: int = 50,
    n_types: int = 5,
    n_levels: int = 4,
    n_archetypes: int = 5,
    semantic_dim: int = 512,
    distortion_dim: int = 512,
    noise_frac: float = 0.1,
    seed: int = 0,
    block: int = 64,
    dataset_name: str = "planted",
) -> FeatureStore:
    """Synthetic-mode store whose quality is a known function plus noise.

    Every group carries the full (type x level) factorial of distorted
    records. The opinion score of a record in archetype a with distortion
    cell (t, l) is ``f(a, t, l) + N(0, sigma)``, ``sigma = noise_frac *
    range(f)``; f is level-dominant with archetype- and type-dependent
    offsets, so scores transfer between same-archetype groups.
    """
    if n_types > len(DISTORTION_NAMES):
        raise ValueError(f"at most {len(DISTORTION_NAMES)} distortion types supported")
    if n_archetypes * block > semantic_dim:
        raise ValueError("semantic_dim too small for this many archetype blocks")
    if (n_types + 3) * block > distortion_dim:
        raise ValueError("distortion_dim too small for type plus level blocks")
    rng = np.random.Generator(np.random.Philox(seed))

    # deterministic modifier grid in [-1, 1] per (archetype, type)
    modifier = rng.uniform(-1.0, 1.0, size=(n_archetypes, n_types))

    def f(a: int, t: int, level: int) -> float:
        return 9.0 - 7.0 * (level - 1) / max(n_levels - 1, 1) + 1.2 * modifier[a, t]

    values = [
        f(a, t, l)
        for a in range(n_archetypes)
        for t in range(n_types)
        for l in range(1, n_levels + 1)
    ]
    sigma = noise_frac * (max(values) - min(values))

    records: list[FeatureRecord] = []
    for g in range(n_groups):
        a = g % n_archetypes
        gid = f"g{g:03d}"
        sem_group = _semantic_base(a, semantic_dim, block) + rng.normal(
            0.0, 0.05, semantic_dim
        )
        records.append(
            FeatureRecord(
                record_id=f"{gid}_ref",
                group_id=gid,
                role=Role.PRISTINE,
                semantic_vec=sem_group,
            )
        )
        for t in range(n_types):
            for level in range(1, n_levels + 1):
                records.append(
                    FeatureRecord(
                        record_id=f"{gid}_{DISTORTION_NAMES[t]}_l{level}",
                        group_id=gid,
                        role=Role.DISTORTED,
                        semantic_vec=sem_group + rng.normal(0.0, 0.01, semantic_dim),
                        distortion_vec=_distortion_base(
                            t, level, n_levels, distortion_dim, block
                        )
                        + rng.normal(0.0, 0.02, distortion_dim),
                        mos=f(a, t, level) + rng.normal(0.0, sigma),
                        distortion_type=DISTORTION_NAMES[t],
                        distortion_level=level,
                    )
                )
    manifest = StoreManifest(
        dataset_name=dataset_name,
        mode=StoreMode.SYNTHETIC,
        score_polarity=ScorePolarity.HIGHER_BETTER,
        semantic_dim=semantic_dim,
        distortion_dim=distortion_dim,
    )
    return build_store(records, manifest)


def make_similarity_gradient_store(
    n_groups: int = 25,
    n_types: int = 6,
    n_levels: int = 5,
    semantic_dim: int = 256,
    distortion_dim: int = 32,
    mos_noise: float = 0.15,
    seed: int = 0,
    block: int = 64,
) -> FeatureStore:
    """Store where score agreement between groups tracks pristine similarity.

    Group g sits at angle ``w_g * pi/2`` on a two-block semantic arc, so the
    cosine similarity of two pristine records is ``cos(dw * pi/2)``. Its
    scoring function interpolates between two independent base grids with
    weight ``w_g``: nearby groups score their aligned cells almost
    identically, far-apart groups disagree. Distortion vectors are plain
    noise; the consistency analysis never reads them.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    base = rng.uniform(1.0, 9.0, size=(n_types, n_levels))
    flipped = rng.uniform(1.0, 9.0, size=(n_types, n_levels))
    n_blocks = semantic_dim // block

    records: list[FeatureRecord] = []
    for g in range(n_groups):
        w = g / max(n_groups - 1, 1)
        theta = 0.5 * math.pi * w
        gid = f"g{g:03d}"
        sem = _block_pattern(
            semantic_dim,
            block,
            {0: 2.0 * math.cos(theta), n_blocks - 1: 2.0 * math.sin(theta)},
            0.0,
        )
        records.append(
            FeatureRecord(
                record_id=f"{gid}_ref", group_id=gid, role=Role.PRISTINE, semantic_vec=sem
            )
        )
        for t in range(n_types):
            for level in range(1, n_levels + 1):
                score = (1.0 - w) * base[t, level - 1] + w * flipped[t, level - 1]
                records.append(
                    FeatureRecord(
                        record_id=f"{gid}_{DISTORTION_NAMES[t]}_l{level}",
                        group_id=gid,
                        role=Role.DISTORTED,
                        semantic_vec=sem + rng.normal(0.0, 0.01, semantic_dim),
                        distortion_vec=rng.normal(0.0, 1.0, distortion_dim),
                        mos=score + rng.normal(0.0, mos_noise),
                        distortion_type=DISTORTION_NAMES[t],
                        distortion_level=level,
                    )
                )
    manifest = StoreManifest(
        dataset_name="similarity-gradient",
        mode=StoreMode.SYNTHETIC,
        score_polarity=ScorePolarity.HIGHER_BETTER,
        semantic_dim=semantic_dim,
        distortion_dim=distortion_dim,
    )
    return build_store(records, manifest)


def make_toy_store(seed: int = 2024) -> FeatureStore:
    """The bundled smoke-test fixture: 8 groups x 6 distorted records."""
    return make_planted_store(
        n_groups=8,
        n_types=2,
        n_levels=3,
        n_archetypes=2,
        semantic_dim=64,
        distortion_dim=64,
        noise_frac=0.05,
        seed=seed,
        block=8,
        dataset_name="toy",
    )


def make_authentic_store(
    n_records: int = 200,
    semantic_dim: int = 64,
    distortion_dim: int = 32,
    seed: int = 0,
) -> FeatureStore:
    """Authentic-mode store of singleton records with clustered features."""
    rng = np.random.Generator(np.random.Philox(seed))
    n_clusters = 5
    centers_s = rng.normal(0.0, 1.0, (n_clusters, semantic_dim))
    centers_d = rng.normal(0.0, 1.0, (n_clusters, distortion_dim))
    cluster_mos = rng.uniform(1.0, 9.0, n_clusters)
    records = []
    for i in range(n_records):
        c = int(rng.integers(n_clusters))
        rid = f"wild{i:04d}"
        records.append(
            FeatureRecord(
                record_id=rid,
                group_id=rid,
                role=Role.DISTORTED,
                semantic_vec=centers_s[c] + rng.normal(0.0, 0.2, semantic_dim),
                distortion_vec=centers_d[c] + rng.normal(0.0, 0.2, distortion_dim),
                mos=float(cluster_mos[c] + rng.normal(0.0, 0.3)),
            )
        )
    manifest = StoreManifest(
        dataset_name="authentic-planted",
        mode=StoreMode.AUTHENTIC,
        score_polarity=ScorePolarity.HIGHER_BETTER,
        semantic_dim=semantic_dim,
        distortion_dim=distortion_dim,
    )
    return build_store(records, manifest)
