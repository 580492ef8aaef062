"""Annotated feature collections: data model, on-disk format, splits, pooling.

A store holds one record per image. Synthetic-mode stores group distorted
records under their pristine parent; authentic-mode stores are flat, every
record being its own singleton group (``group_id == record_id``).

On disk a store is a directory with two files:

``manifest.json``
    Store-level metadata plus one entry per record, in canonical order, with
    the byte offsets of its vectors inside ``vectors.bin``.
``vectors.bin``
    8-byte magic ``RFIQAFS1``, a little-endian uint32 format version, then
    each record's semantic vector followed by its distortion vector as packed
    little-endian float32 values.

Vectors are stored as float32 and round-trip bit-exactly at that precision;
all distance arithmetic elsewhere happens in float64.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BadMagic,
    CorruptManifest,
    DimensionMismatch,
    DuplicateRecordId,
    EmptySplit,
    InvalidFactor,
    MissingMos,
    UnsupportedVersion,
)

MAGIC = b"RFIQAFS1"
FORMAT_VERSION = 1

MANIFEST_FILE = "manifest.json"
VECTORS_FILE = "vectors.bin"


class Role(str, Enum):
    PRISTINE = "pristine"
    DISTORTED = "distorted"


class StoreMode(str, Enum):
    SYNTHETIC = "synthetic"
    AUTHENTIC = "authentic"


class ScorePolarity(str, Enum):
    """Whether a larger opinion score means better or worse quality.

    Metadata only: scores are aggregated and correlated as-is, never flipped.
    """

    HIGHER_BETTER = "higher_better"
    LOWER_BETTER = "lower_better"


def _as_float32(vec) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float32).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FeatureRecord:
    """One image: identity, group membership, vectors, and annotations.

    ``mos`` is required for distorted records and forbidden for pristine ones.
    A pristine record may carry an empty distortion vector (the distortion
    stage never queries pristine records).
    """

    record_id: str
    group_id: str
    role: Role
    semantic_vec: np.ndarray
    distortion_vec: np.ndarray = field(default_factory=lambda: _as_float32([]))
    mos: float | None = None
    distortion_type: str | None = None
    distortion_level: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "semantic_vec", _as_float32(self.semantic_vec))
        object.__setattr__(self, "distortion_vec", _as_float32(self.distortion_vec))
        object.__setattr__(self, "role", Role(self.role))
        if not np.isfinite(self.semantic_vec).all():
            raise ValueError(f"record {self.record_id!r}: non-finite semantic vector")
        if self.distortion_vec.size and not np.isfinite(self.distortion_vec).all():
            raise ValueError(f"record {self.record_id!r}: non-finite distortion vector")
        if self.role is Role.DISTORTED:
            if self.mos is None or not math.isfinite(self.mos):
                raise MissingMos(f"distorted record {self.record_id!r} has no finite mos")
        elif self.mos is not None:
            raise ValueError(f"pristine record {self.record_id!r} must not carry a mos")
        if self.distortion_level is not None and self.distortion_level < 1:
            raise ValueError(f"record {self.record_id!r}: distortion_level must be >= 1")


@dataclass(frozen=True)
class StoreManifest:
    """Store-level metadata.

    ``semantic_dim`` / ``distortion_dim`` always describe the vectors as
    currently stored; ``reduction_factor`` records the cumulative max-pooling
    applied since the original export (1 = unreduced).
    """

    dataset_name: str
    mode: StoreMode
    score_polarity: ScorePolarity
    semantic_dim: int
    distortion_dim: int
    reduction_factor: int = 1
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "mode", StoreMode(self.mode))
        object.__setattr__(self, "score_polarity", ScorePolarity(self.score_polarity))
        if self.semantic_dim < 1 or self.distortion_dim < 1:
            raise ValueError("semantic_dim and distortion_dim must be >= 1")
        if self.reduction_factor < 1:
            raise InvalidFactor(f"reduction_factor must be >= 1, got {self.reduction_factor}")


@dataclass(frozen=True)
class Group:
    """One pristine image and its distorted variants (indices are canonical)."""

    group_id: str
    pristine_index: int | None
    distorted_indices: tuple[int, ...]


class FeatureStore:
    """Immutable, indexed collection of feature records.

    Construction validates every invariant; afterwards the store is safe to
    share across threads. Use :func:`build_store` / :func:`load_store` rather
    than the constructor in new code.
    """

    def __init__(self, records: Sequence[FeatureRecord], manifest: StoreManifest):
        if not records:
            raise ValueError("a store needs at least one record")
        self._records: tuple[FeatureRecord, ...] = tuple(records)
        self._manifest = manifest
        self._index: dict[str, int] = {}
        for i, rec in enumerate(self._records):
            if rec.record_id in self._index:
                raise DuplicateRecordId(rec.record_id)
            self._index[rec.record_id] = i
        self._validate_dims()
        self._groups = self._build_groups()
        self._build_arrays()

    # -- construction helpers -------------------------------------------------

    def _validate_dims(self):
        m = self._manifest
        for rec in self._records:
            if rec.semantic_vec.size != m.semantic_dim:
                raise DimensionMismatch(
                    f"record {rec.record_id!r}: semantic vector has length "
                    f"{rec.semantic_vec.size}, store expects {m.semantic_dim}"
                )
            if rec.role is Role.DISTORTED:
                if rec.distortion_vec.size != m.distortion_dim:
                    raise DimensionMismatch(
                        f"record {rec.record_id!r}: distortion vector has length "
                        f"{rec.distortion_vec.size}, store expects {m.distortion_dim}"
                    )
            elif rec.distortion_vec.size not in (0, m.distortion_dim):
                raise DimensionMismatch(
                    f"pristine record {rec.record_id!r}: distortion vector has length "
                    f"{rec.distortion_vec.size}, expected 0 or {m.distortion_dim}"
                )

    def _build_groups(self) -> dict[str, Group]:
        from .errors import OrphanDistortedRecord  # local to avoid name clutter

        mode = self._manifest.mode
        pristine: dict[str, int] = {}
        distorted: dict[str, list[int]] = {}
        order: list[str] = []
        for i, rec in enumerate(self._records):
            if rec.group_id not in distorted:
                distorted[rec.group_id] = []
                order.append(rec.group_id)
            if rec.role is Role.PRISTINE:
                if mode is StoreMode.AUTHENTIC:
                    raise ValueError(
                        f"authentic store cannot contain pristine record {rec.record_id!r}"
                    )
                if rec.group_id in pristine:
                    raise ValueError(f"group {rec.group_id!r} has more than one pristine record")
                pristine[rec.group_id] = i
            else:
                if mode is StoreMode.AUTHENTIC and rec.group_id != rec.record_id:
                    raise ValueError(
                        f"authentic record {rec.record_id!r} must use its own id as group_id"
                    )
                distorted[rec.group_id].append(i)
        if mode is StoreMode.SYNTHETIC:
            for gid, members in distorted.items():
                if members and gid not in pristine:
                    rid = self._records[members[0]].record_id
                    raise OrphanDistortedRecord(
                        f"distorted record {rid!r}: group {gid!r} has no pristine record"
                    )
        return {
            gid: Group(gid, pristine.get(gid), tuple(distorted[gid]))
            for gid in order
        }

    def _build_arrays(self):
        recs = self._records
        self._distorted_indices = np.array(
            [i for i, r in enumerate(recs) if r.role is Role.DISTORTED], dtype=np.intp
        )
        d_recs = [recs[i] for i in self._distorted_indices]
        ds, dd = self._manifest.semantic_dim, self._manifest.distortion_dim
        self._distorted_semantic = _stack([r.semantic_vec for r in d_recs], ds)
        self._distorted_distortion = _stack([r.distortion_vec for r in d_recs], dd)
        self._distorted_mos = np.array([r.mos for r in d_recs], dtype=np.float64)
        self._distorted_mos.flags.writeable = False
        # pristine rows ordered by group insertion order (canonical)
        gids = [g.group_id for g in self._groups.values() if g.pristine_index is not None]
        self._pristine_group_ids = tuple(gids)
        self._pristine_semantic = _stack(
            [recs[self._groups[g].pristine_index].semantic_vec for g in gids], ds
        )

    # -- public surface --------------------------------------------------------

    @property
    def manifest(self) -> StoreManifest:
        return self._manifest

    @property
    def records(self) -> tuple[FeatureRecord, ...]:
        return self._records

    @property
    def groups(self) -> Mapping[str, Group]:
        return self._groups

    @property
    def n_groups(self) -> int:
        return len(self._groups)

    @property
    def distorted_record_ids(self) -> tuple[str, ...]:
        return tuple(self._records[i].record_id for i in self._distorted_indices)

    def record(self, record_id: str) -> FeatureRecord:
        try:
            return self._records[self._index[record_id]]
        except KeyError:
            raise KeyError(f"no record {record_id!r} in store") from None

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._index

    def __len__(self) -> int:
        return len(self._records)

    def canonical_index(self, record_id: str) -> int:
        return self._index[record_id]

    def group_distorted(self, group_id: str) -> tuple[FeatureRecord, ...]:
        return tuple(self._records[i] for i in self._groups[group_id].distorted_indices)

    def pristine_record(self, group_id: str) -> FeatureRecord | None:
        idx = self._groups[group_id].pristine_index
        return None if idx is None else self._records[idx]

    def subset(self, distorted_ids: Iterable[str]) -> "FeatureStore":
        """Sub-store containing the given distorted records.

        In synthetic mode the pristine parents of every touched group come
        along, so the result is a valid retrieval pool. Canonical order is
        preserved.
        """
        wanted = set(distorted_ids)
        keep_groups = {self._records[self._index[rid]].group_id for rid in wanted}
        out = []
        for rec in self._records:
            if rec.role is Role.DISTORTED and rec.record_id in wanted:
                out.append(rec)
            elif rec.role is Role.PRISTINE and rec.group_id in keep_groups:
                out.append(rec)
        return FeatureStore(out, self._manifest)


def _stack(vectors: list[np.ndarray], dim: int) -> np.ndarray:
    if vectors:
        mat = np.stack(vectors).astype(np.float32, copy=False)
    else:
        mat = np.empty((0, dim), dtype=np.float32)
    mat.flags.writeable = False
    return mat


def build_store(records: Sequence[FeatureRecord], manifest: StoreManifest) -> FeatureStore:
    """Validate records against the manifest and index them into a store."""
    return FeatureStore(records, manifest)


# --- persistence ---------------------------------------------------------------


def save_store(store: FeatureStore, path: str | Path) -> None:
    """Write ``manifest.json`` and ``vectors.bin`` under ``path`` (a directory)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    offset = len(MAGIC) + 4
    chunks = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    entries = []
    for rec in store.records:
        sem = np.ascontiguousarray(rec.semantic_vec, dtype="<f4")
        dis = np.ascontiguousarray(rec.distortion_vec, dtype="<f4")
        entry = {
            "record_id": rec.record_id,
            "group_id": rec.group_id,
            "role": rec.role.value,
            "mos": rec.mos,
            "distortion_type": rec.distortion_type,
            "distortion_level": rec.distortion_level,
            "semantic_offset": offset,
            "semantic_dim": int(sem.size),
        }
        chunks.append(sem.tobytes())
        offset += sem.nbytes
        entry["distortion_offset"] = offset
        entry["distortion_dim"] = int(dis.size)
        chunks.append(dis.tobytes())
        offset += dis.nbytes
        entries.append(entry)
    m = store.manifest
    doc = {
        "format_version": m.format_version,
        "dataset_name": m.dataset_name,
        "mode": m.mode.value,
        "score_polarity": m.score_polarity.value,
        "semantic_dim": m.semantic_dim,
        "distortion_dim": m.distortion_dim,
        "reduction_factor": m.reduction_factor,
        "records": entries,
    }
    (path / VECTORS_FILE).write_bytes(b"".join(chunks))
    with open(path / MANIFEST_FILE, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_store(path: str | Path) -> FeatureStore:
    """Read a store directory back. Inverse of :func:`save_store`, bit-exact."""
    path = Path(path)
    return load_store_files(path / MANIFEST_FILE, path / VECTORS_FILE)


def load_store_files(manifest_path: str | Path, vectors_path: str | Path) -> FeatureStore:
    """Load a store from explicit manifest / vector file paths."""
    try:
        with open(manifest_path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise CorruptManifest(f"{manifest_path}: not valid JSON ({e})") from e
    blob = Path(vectors_path).read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{vectors_path}: bad magic {blob[:len(MAGIC)]!r}")
    if len(blob) < len(MAGIC) + 4:
        raise CorruptManifest(f"{vectors_path}: truncated header")
    (bin_version,) = struct.unpack_from("<I", blob, len(MAGIC))
    if bin_version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{vectors_path}: format version {bin_version}")
    try:
        manifest = StoreManifest(
            dataset_name=doc["dataset_name"],
            mode=doc["mode"],
            score_polarity=doc["score_polarity"],
            semantic_dim=doc["semantic_dim"],
            distortion_dim=doc["distortion_dim"],
            reduction_factor=doc.get("reduction_factor", 1),
            format_version=doc["format_version"],
        )
        entries = doc["records"]
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptManifest(f"{manifest_path}: {e}") from e
    if manifest.format_version != bin_version:
        raise CorruptManifest(
            f"manifest format_version {manifest.format_version} != "
            f"vector file version {bin_version}"
        )
    cursor = len(MAGIC) + 4
    records = []
    for entry in entries:
        try:
            sem = _read_vector(blob, entry["semantic_offset"], entry["semantic_dim"], cursor)
            cursor = entry["semantic_offset"] + 4 * entry["semantic_dim"]
            dis = _read_vector(blob, entry["distortion_offset"], entry["distortion_dim"], cursor)
            cursor = entry["distortion_offset"] + 4 * entry["distortion_dim"]
            records.append(
                FeatureRecord(
                    record_id=entry["record_id"],
                    group_id=entry["group_id"],
                    role=Role(entry["role"]),
                    semantic_vec=sem,
                    distortion_vec=dis,
                    mos=entry["mos"],
                    distortion_type=entry.get("distortion_type"),
                    distortion_level=entry.get("distortion_level"),
                )
            )
        except (KeyError, TypeError) as e:
            raise CorruptManifest(f"{manifest_path}: malformed record entry ({e})") from e
    if cursor != len(blob):
        raise CorruptManifest(
            f"{vectors_path}: {len(blob)} bytes on disk, manifest accounts for {cursor}"
        )
    return FeatureStore(records, manifest)


def _read_vector(blob: bytes, offset: int, dim: int, expected_offset: int) -> np.ndarray:
    if offset != expected_offset:
        raise CorruptManifest(f"vector offset {offset} does not match layout ({expected_offset})")
    end = offset + 4 * dim
    if end > len(blob):
        raise CorruptManifest(f"vector at offset {offset} runs past end of file")
    return np.frombuffer(blob, dtype="<f4", count=dim, offset=offset)


# --- feature reduction ----------------------------------------------------------


def _max_pool(vec: np.ndarray, factor: int) -> np.ndarray:
    """1-D max pooling with stride == window == factor; trailing partial window kept."""
    n = vec.size
    if n == 0 or factor == 1:
        return vec
    n_out = -(-n // factor)
    padded = np.full(n_out * factor, -np.inf, dtype=np.float64)
    padded[:n] = vec
    return padded.reshape(n_out, factor).max(axis=1).astype(np.float32)


def reduce_features(store: FeatureStore, factor: int) -> FeatureStore:
    """Shrink every vector by windowed max pooling.

    Each vector of length D becomes length ceil(D / factor), element i being
    the max of ``v[i*factor : min((i+1)*factor, D)]``. The manifest dims track
    the new lengths and ``reduction_factor`` multiplies by ``factor``.
    """
    if factor < 1:
        raise InvalidFactor(f"pooling factor must be >= 1, got {factor}")
    if factor == 1:
        return store
    old = store.manifest
    manifest = replace(
        old,
        semantic_dim=-(-old.semantic_dim // factor),
        distortion_dim=-(-old.distortion_dim // factor),
        reduction_factor=old.reduction_factor * factor,
    )
    records = [
        replace(
            rec,
            semantic_vec=_max_pool(rec.semantic_vec, factor),
            distortion_vec=_max_pool(rec.distortion_vec, factor),
        )
        for rec in store.records
    ]
    return FeatureStore(records, manifest)


# --- dataset splitting -----------------------------------------------------------


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_dataset(
    store: FeatureStore, train_fraction: float, seed: int
) -> tuple[list[str], list[str]]:
    """Deterministic train/test partition of the distorted records.

    Synthetic mode shuffles pristine groups (so no group ever spans both
    sides) and sends the first round(train_fraction * N) groups to the train
    side; authentic mode shuffles and splits records directly. The shuffle
    uses numpy's Philox counter-based generator keyed on ``seed`` over the
    lexicographically sorted ids, so the partition depends only on (ids,
    fraction, seed), never on record order. Output lists are sorted.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.Generator(np.random.Philox(seed))
    if store.manifest.mode is StoreMode.SYNTHETIC:
        gids = sorted(g.group_id for g in store.groups.values() if g.distorted_indices)
        perm = rng.permutation(len(gids))
        n_train = _round_half_up(train_fraction * len(gids))
        train_groups = {gids[i] for i in perm[:n_train]}
        train_ids, test_ids = [], []
        for rec in store.records:
            if rec.role is not Role.DISTORTED:
                continue
            (train_ids if rec.group_id in train_groups else test_ids).append(rec.record_id)
        train_ids.sort()
        test_ids.sort()
    else:
        rids = sorted(store.distorted_record_ids)
        perm = rng.permutation(len(rids))
        n_train = _round_half_up(train_fraction * len(rids))
        chosen = {rids[i] for i in perm[:n_train]}
        train_ids = [r for r in rids if r in chosen]
        test_ids = [r for r in rids if r not in chosen]
    if not train_ids or not test_ids:
        raise EmptySplit(
            f"fraction {train_fraction} leaves {len(train_ids)} train / "
            f"{len(test_ids)} test distorted records"
        )
    return train_ids, test_ids
