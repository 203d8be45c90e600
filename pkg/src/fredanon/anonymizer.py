"""Level-indexed k-anonymous releases by MDAV microaggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    QUASI,
    SENSITIVE,
    AttributeSchema,
    Dataset,
    ValidationError,
    column_matrix,
    fit_normalization,
    load_dataset,
    write_dataset,
)
from .kernels import mdav_labels


def level_to_k(level: int) -> int:
    """Anonymity parameter for a level; level 0 is the minimal k = 2."""
    if int(level) != level or level < 0:
        raise ValidationError(f"anonymization level must be a non-negative integer, got {level!r}")
    return int(level) + 2


@dataclass(frozen=True)
class Partition:
    """Equivalence classes (row-index tuples) with per-class column means."""

    classes: tuple[tuple[int, ...], ...]
    centroids: np.ndarray
    k: int

    def __post_init__(self):
        classes = tuple(tuple(int(i) for i in c) for c in self.classes)
        object.__setattr__(self, "classes", classes)
        cent = np.array(self.centroids, dtype=np.float64, copy=True)
        cent.setflags(write=False)
        object.__setattr__(self, "centroids", cent)
        flat = [i for c in classes for i in c]
        if sorted(flat) != list(range(len(flat))):
            raise ValidationError("partition classes must be disjoint and cover rows 0..m-1")
        hi = max(2 * self.k - 1, self.k)
        bad = [len(c) for c in classes if not self.k <= len(c) <= hi]
        if bad:
            raise ValidationError(f"class sizes {bad} outside [{self.k}, {hi}]")
        if cent.shape[0] != len(classes):
            raise ValidationError("one centroid row per class required")

    @classmethod
    def from_labels(cls, X, labels, k: int) -> "Partition":
        X = np.asarray(X, dtype=np.float64)
        labels = np.asarray(labels)
        classes = [tuple(np.flatnonzero(labels == c)) for c in range(int(labels.max()) + 1)]
        centroids = np.array([X[list(c)].mean(axis=0) for c in classes]).reshape(len(classes), X.shape[1])
        return cls(tuple(classes), centroids, k)

    @property
    def m(self) -> int:
        return sum(len(c) for c in self.classes)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.classes)

    @property
    def labels(self) -> np.ndarray:
        out = np.empty(self.m, dtype=np.int64)
        for c, members in enumerate(self.classes):
            out[list(members)] = c
        return out

    def expand(self) -> np.ndarray:
        """Centroid row for every record, in record order."""
        return self.centroids[self.labels]


def mdav_partition(qi, k: int) -> Partition:
    """Fixed-size MDAV clustering of the rows of ``qi`` (distances on ``qi`` as given)."""
    X = np.asarray(qi, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("quasi-identifier matrix must be a non-empty 2-D array")
    if not np.isfinite(X).all():
        raise ValidationError("quasi-identifier matrix has non-finite entries")
    k = int(k)
    if k < 2:
        raise ValidationError(f"k must be at least 2, got {k}")
    if k > X.shape[0]:
        raise ValidationError(f"k exceeds record count (k={k}, m={X.shape[0]})")
    return Partition.from_labels(X, mdav_labels(X, k), k)


@dataclass(frozen=True)
class AnonymizedRelease:
    dataset: Dataset
    partition: Partition
    level: int | None
    k: int

    @property
    def m(self) -> int:
        return self.dataset.m

    @property
    def quasi_identifiers(self) -> tuple[str, ...]:
        return self.dataset.schema.names_with((QUASI,))


def _quasi_columns(p: Dataset) -> tuple[str, ...]:
    qi = p.schema.names_with((QUASI,))
    if not qi:
        raise ValidationError("dataset has no quasi-identifier columns")
    for name in qi:
        if not p.schema.column(name).is_numeric:
            raise ValidationError(f"quasi-identifier {name!r} must be numeric for microaggregation")
    return qi


def _release(p: Dataset, partition: Partition, level, k) -> AnonymizedRelease:
    qi = _quasi_columns(p)
    values = partition.expand()
    updates = {name: values[:, j] for j, name in enumerate(qi)}
    sens = p.schema.names_with((SENSITIVE,))
    updates.update({name: np.full(p.m, np.nan) for name in sens})
    return AnonymizedRelease(p.replace(suppressed=frozenset(sens), **updates), partition, level, k)


def basic_anonymization(p: Dataset, level: int) -> AnonymizedRelease:
    """k-anonymize the quasi-identifiers of ``p`` (k = level + 2) and suppress sensitive columns.

    Clustering distances use min-max scaled quasi-identifiers when the schema
    asks for normalization; released centroids are always in original units.
    """
    k = level_to_k(level)
    if k > p.m:
        raise ValidationError(f"k exceeds record count (k={k}, m={p.m})")
    qi = _quasi_columns(p)
    X = column_matrix(p, qi)
    Xd = fit_normalization(p, p.schema.normalize).scale_matrix(X, qi)
    labels = mdav_partition(Xd, k).labels
    return _release(p, Partition.from_labels(X, labels, k), level, k)


def identity_release(p: Dataset) -> AnonymizedRelease:
    """Unanonymized baseline (k = 1): quasi-identifiers kept, sensitive suppressed."""
    X = column_matrix(p, _quasi_columns(p))
    return _release(p, Partition.from_labels(X, np.arange(p.m), 1), None, 1)


def equivalence_class_sizes(r: AnonymizedRelease) -> tuple[int, ...]:
    return r.partition.sizes


# --------------------------------------------------------------------------
# release files
# --------------------------------------------------------------------------

def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def release_sidecar(r: AnonymizedRelease) -> dict:
    ids = r.dataset.ids
    return {
        "level": r.level,
        "k": r.k,
        "class_sizes": list(r.partition.sizes),
        "quasi_identifiers": list(r.quasi_identifiers),
        "centroids": r.partition.centroids.tolist(),
        "classes": [[str(ids[i]) for i in c] for c in r.partition.classes],
    }


def write_release(r: AnonymizedRelease, csv_path) -> tuple[Path, Path]:
    csv_path = Path(csv_path)
    write_dataset(r.dataset, csv_path)
    side = sidecar_path(csv_path)
    side.write_text(json.dumps(release_sidecar(r), indent=2) + "\n", encoding="utf-8")
    return csv_path, side


def load_release(csv_path, schema: AttributeSchema) -> AnonymizedRelease:
    """Read a release CSV plus its JSON sidecar (same stem)."""
    schema = schema.primary()
    d = load_dataset(csv_path, schema, allow_suppressed=schema.names_with((SENSITIVE,)))
    side = sidecar_path(csv_path)
    if not side.exists():
        raise ValidationError(f"release sidecar {side} not found")
    meta = json.loads(side.read_text(encoding="utf-8"))
    index = {v: i for i, v in enumerate(d.ids)}
    try:
        classes = tuple(tuple(index[v] for v in members) for members in meta["classes"])
    except KeyError as exc:
        raise ValidationError(f"sidecar names identifier {exc} absent from the release") from None
    partition = Partition(classes, np.asarray(meta["centroids"], dtype=np.float64), int(meta["k"]))
    return AnonymizedRelease(d, partition, meta.get("level"), int(meta["k"]))
