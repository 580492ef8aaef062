import numpy as np
import pytest

from rfiqa.store import (
    FeatureRecord,
    Role,
    ScorePolarity,
    StoreManifest,
    StoreMode,
    build_store,
)


def manifest(mode=StoreMode.SYNTHETIC, ds=4, dd=3, name="test", polarity=ScorePolarity.HIGHER_BETTER):
    return StoreManifest(
        dataset_name=name,
        mode=mode,
        score_polarity=polarity,
        semantic_dim=ds,
        distortion_dim=dd,
    )


def random_synthetic_store(rng, n_groups, max_per_group, ds=4, dd=3, tag_types=None):
    """Small random synthetic store; every group gets 1..max_per_group records."""
    records = []
    for g in range(n_groups):
        gid = f"g{g:03d}"
        records.append(
            FeatureRecord(
                record_id=f"{gid}_ref",
                group_id=gid,
                role=Role.PRISTINE,
                semantic_vec=rng.normal(0, 1, ds),
            )
        )
        for j in range(int(rng.integers(1, max_per_group + 1))):
            dtype = None
            if tag_types:
                dtype = tag_types[int(rng.integers(len(tag_types)))]
            records.append(
                FeatureRecord(
                    record_id=f"{gid}_d{j:02d}",
                    group_id=gid,
                    role=Role.DISTORTED,
                    semantic_vec=rng.normal(0, 1, ds),
                    distortion_vec=rng.normal(0, 1, dd),
                    mos=float(rng.uniform(0, 10)),
                    distortion_type=dtype,
                    distortion_level=int(rng.integers(1, 6)) if dtype else None,
                )
            )
    return build_store(records, manifest(ds=ds, dd=dd))


def random_authentic_store(rng, n_records, ds=4, dd=3):
    records = []
    for i in range(n_records):
        rid = f"r{i:04d}"
        records.append(
            FeatureRecord(
                record_id=rid,
                group_id=rid,
                role=Role.DISTORTED,
                semantic_vec=rng.normal(0, 1, ds),
                distortion_vec=rng.normal(0, 1, dd),
                mos=float(rng.uniform(0, 10)),
            )
        )
    return build_store(records, manifest(mode=StoreMode.AUTHENTIC, ds=ds, dd=dd))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))


@pytest.fixture
def small_store(rng):
    return random_synthetic_store(rng, n_groups=6, max_per_group=5)
