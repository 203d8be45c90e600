"""Schemas, datasets, min-max normalization and identifier joins."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

IDENTIFIER = "identifier"
QUASI = "quasi-identifier"
SENSITIVE = "sensitive"
AUXILIARY = "auxiliary"
ROLES = (IDENTIFIER, QUASI, SENSITIVE, AUXILIARY)
KINDS = ("numeric", "categorical")


class ValidationError(ValueError):
    """Input that violates a schema, dataset or configuration contract."""


@dataclass(frozen=True)
class Column:
    name: str
    role: str
    kind: str = "numeric"
    universe: tuple[float, float] | None = None
    categories: Mapping[str, float] | None = None

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError(f"column name must be a non-empty string, got {self.name!r}")
        if not isinstance(self.role, str) or self.role not in ROLES:
            raise ValidationError(f"column {self.name!r}: role must be exactly one of {ROLES}, got {self.role!r}")
        if self.kind not in KINDS:
            raise ValidationError(f"column {self.name!r}: kind must be one of {KINDS}, got {self.kind!r}")
        if self.universe is not None:
            lo, hi = (float(v) for v in self.universe)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValidationError(f"column {self.name!r}: universe needs finite min < max, got {self.universe!r}")
            object.__setattr__(self, "universe", (lo, hi))
        if self.categories is not None:
            if self.kind != "categorical":
                raise ValidationError(f"column {self.name!r}: categories given for a {self.kind} column")
            cats = {str(k): float(v) for k, v in self.categories.items()}
            if not all(math.isfinite(v) for v in cats.values()):
                raise ValidationError(f"column {self.name!r}: category scores must be finite")
            object.__setattr__(self, "categories", MappingProxyType(cats))

    @property
    def is_numeric(self) -> bool:
        return self.kind == "numeric"

    @property
    def scorable(self) -> bool:
        """True when the column can be turned into numbers."""
        return self.kind == "numeric" or self.categories is not None

    def to_dict(self) -> dict:
        out = {"name": self.name, "role": self.role, "kind": self.kind}
        if self.universe is not None:
            out["universe"] = list(self.universe)
        if self.categories is not None:
            out["categories"] = dict(self.categories)
        return out


@dataclass(frozen=True)
class AttributeSchema:
    columns: tuple[Column, ...]
    normalize: bool = True

    def __post_init__(self):
        cols = tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        names = [c.name for c in cols]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValidationError(f"duplicate column names: {dupes}")
        n_id = sum(c.role == IDENTIFIER for c in cols)
        if n_id != 1:
            raise ValidationError(f"schema needs exactly one identifier column, found {n_id}")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "AttributeSchema":
        if not isinstance(doc, Mapping) or not isinstance(doc.get("columns"), list):
            raise ValidationError('schema document needs a "columns" array')
        cols = []
        for entry in doc["columns"]:
            if not isinstance(entry, Mapping):
                raise ValidationError(f"schema column entry must be an object, got {entry!r}")
            unknown = set(entry) - {"name", "role", "kind", "universe", "categories"}
            if unknown:
                raise ValidationError(f"unknown schema keys {sorted(unknown)} in {entry.get('name')!r}")
            cols.append(
                Column(
                    name=entry.get("name"),
                    role=entry.get("role"),
                    kind=entry.get("kind", "numeric"),
                    universe=tuple(entry["universe"]) if entry.get("universe") is not None else None,
                    categories=entry.get("categories"),
                )
            )
        return cls(tuple(cols), normalize=bool(doc.get("normalize", True)))

    def to_dict(self) -> dict:
        return {"columns": [c.to_dict() for c in self.columns], "normalize": self.normalize}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def identifier(self) -> str:
        return next(c.name for c in self.columns if c.role == IDENTIFIER)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def names_with(self, roles: Iterable[str]) -> tuple[str, ...]:
        roles = set(roles)
        return tuple(c.name for c in self.columns if c.role in roles)

    def subset(self, roles: Iterable[str]) -> "AttributeSchema":
        """Identifier plus the columns carrying any of ``roles``."""
        roles = set(roles) | {IDENTIFIER}
        return AttributeSchema(tuple(c for c in self.columns if c.role in roles), self.normalize)

    def select(self, names: Iterable[str]) -> "AttributeSchema":
        names = set(names) | {self.identifier}
        return AttributeSchema(tuple(c for c in self.columns if c.name in names), self.normalize)

    def primary(self) -> "AttributeSchema":
        return self.subset((QUASI, SENSITIVE))

    def auxiliary(self) -> "AttributeSchema":
        return self.subset((AUXILIARY,))

    def with_universes(self, universes: Mapping[str, tuple[float, float]]) -> "AttributeSchema":
        cols = tuple(
            Column(c.name, c.role, c.kind, universes[c.name], c.categories) if c.name in universes else c
            for c in self.columns
        )
        return AttributeSchema(cols, self.normalize)


def load_schema(path) -> AttributeSchema:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return AttributeSchema.from_dict(doc)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Identifier-keyed table. Numeric columns are float64, others object arrays.

    Columns listed in ``suppressed`` hold NaN and carry no original values.
    """

    schema: AttributeSchema
    columns: Mapping[str, np.ndarray]
    suppressed: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        cols = {}
        for c in self.schema.columns:
            if c.name not in self.columns:
                raise ValidationError(f"missing column {c.name!r}")
            raw = self.columns[c.name]
            if c.is_numeric and c.role != IDENTIFIER:
                arr = np.asarray(raw, dtype=np.float64)
            else:
                arr = np.asarray([str(v) for v in raw], dtype=object)
            cols[c.name] = _frozen(arr)
        extra = set(self.columns) - set(cols)
        if extra:
            raise ValidationError(f"unexpected columns {sorted(extra)}")
        lengths = {len(a) for a in cols.values()}
        if len(lengths) != 1:
            raise ValidationError("columns have different lengths")
        object.__setattr__(self, "columns", MappingProxyType(cols))
        object.__setattr__(self, "suppressed", frozenset(self.suppressed))
        self._validate()

    def _validate(self):
        if self.m < 1:
            raise ValidationError("dataset has no rows (need m >= 1)")
        ids = self.columns[self.schema.identifier]
        if len(set(ids)) != len(ids):
            seen, dupes = set(), []
            for v in ids:
                if v in seen:
                    dupes.append(v)
                seen.add(v)
            raise ValidationError(f"duplicate identifiers: {sorted(set(dupes))}")
        for c in self.schema.columns:
            if c.role == IDENTIFIER:
                continue
            vals = self.columns[c.name]
            if c.name in self.suppressed:
                if c.is_numeric and not np.isnan(vals).all():
                    raise ValidationError(f"suppressed column {c.name!r} still carries values")
                continue
            if c.is_numeric:
                if not np.isfinite(vals).all():
                    raise ValidationError(f"column {c.name!r} has non-finite values")
                if c.universe is not None:
                    lo, hi = c.universe
                    bad = (vals < lo) | (vals > hi)
                    if bad.any():
                        row = int(np.argmax(bad))
                        raise ValidationError(
                            f"column {c.name!r} row {row}: value {vals[row]!r} outside universe [{lo}, {hi}]"
                        )
            elif c.categories is not None:
                unknown = sorted(set(vals) - set(c.categories))
                if unknown:
                    raise ValidationError(f"column {c.name!r}: labels without a category score: {unknown}")

    @property
    def m(self) -> int:
        return len(next(iter(self.columns.values())))

    @property
    def n(self) -> int:
        return len(self.schema.columns)

    @property
    def ids(self) -> np.ndarray:
        return self.columns[self.schema.identifier]

    def __len__(self):
        return self.m

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def scores(self, name: str) -> np.ndarray:
        """Numeric values of a column, mapping categorical labels to scores."""
        col = self.schema.column(name)
        if col.role == IDENTIFIER or not col.scorable:
            raise ValidationError(f"column {name!r} is not numeric and has no category map")
        vals = self.columns[name]
        if col.is_numeric:
            return vals
        return np.array([col.categories[v] for v in vals], dtype=np.float64)

    def rows(self) -> list[dict]:
        names = self.schema.names
        return [{n: self.columns[n][i] for n in names} for i in range(self.m)]

    def replace(self, schema: AttributeSchema | None = None, suppressed=None, **updates) -> "Dataset":
        cols = dict(self.columns)
        cols.update(updates)
        return Dataset(
            schema if schema is not None else self.schema,
            cols,
            self.suppressed if suppressed is None else suppressed,
        )


def _parse_number(text: str, name: str, row: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"column {name!r} row {row}: non-numeric value {text!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"column {name!r} row {row}: non-finite value {text!r}")
    return v


def read_csv_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file (no header row)") from None
        body = [r for r in reader if r]
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise ValidationError(f"{path}: row {i} has {len(r)} fields, header has {len(header)}")
    return header, body


def check_header(header: Sequence[str], schema: AttributeSchema, path="") -> None:
    missing = [n for n in schema.names if n not in header]
    extra = [h for h in header if h not in schema.names]
    if missing or extra:
        raise ValidationError(f"{path}: header mismatch (missing {missing}, extra {extra})")
    if len(set(header)) != len(header):
        raise ValidationError(f"{path}: repeated header names")


def load_dataset(path, schema: AttributeSchema, allow_suppressed: Iterable[str] = ()) -> Dataset:
    """Read a CSV file whose header matches ``schema`` exactly.

    Columns named in ``allow_suppressed`` may be entirely empty; they load as
    suppressed (NaN) columns.
    """
    header, body = read_csv_table(path)
    check_header(header, schema, path)
    pos = {h: i for i, h in enumerate(header)}
    cols = {}
    suppressed = set()
    allow_suppressed = set(allow_suppressed)
    for c in schema.columns:
        cells = [r[pos[c.name]] for r in body]
        if c.name in allow_suppressed and cells and all(s.strip() == "" for s in cells):
            suppressed.add(c.name)
            cols[c.name] = np.full(len(cells), np.nan)
        elif c.is_numeric and c.role != IDENTIFIER:
            cols[c.name] = [_parse_number(s, c.name, i) for i, s in enumerate(cells)]
        else:
            cols[c.name] = cells
    if not body:
        raise ValidationError(f"{path}: no data rows (need m >= 1)")
    return Dataset(schema, cols, frozenset(suppressed))


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return repr(float(v))
    return str(v)


def write_dataset(d: Dataset, path) -> None:
    """Write ``d`` as CSV; suppressed fields are emitted empty."""
    names = d.schema.names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(d.m):
            w.writerow([_fmt(d.columns[n][i]) for n in names])


# --------------------------------------------------------------------------
# normalization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationParams:
    """Per-column affine min-max maps. Constant columns are recorded, not scaled."""

    bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    constant: tuple[str, ...] = ()
    enabled: bool = True
    universes: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for name, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ValidationError(f"normalization bounds for {name!r} need min < max")
        object.__setattr__(self, "bounds", MappingProxyType(dict(self.bounds)))
        object.__setattr__(self, "universes", MappingProxyType(dict(self.universes)))

    def scale(self, name: str, values):
        if name not in self.bounds:
            return np.asarray(values, dtype=np.float64)
        lo, hi = self.bounds[name]
        return (np.asarray(values, dtype=np.float64) - lo) / (hi - lo)

    def unscale(self, name: str, values):
        if name not in self.bounds:
            return np.asarray(values, dtype=np.float64)
        lo, hi = self.bounds[name]
        return np.asarray(values, dtype=np.float64) * (hi - lo) + lo

    def scale_matrix(self, X, names: Sequence[str]) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.column_stack([self.scale(n, X[:, j]) for j, n in enumerate(names)]) if names else X

    def unscale_matrix(self, X, names: Sequence[str]) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.column_stack([self.unscale(n, X[:, j]) for j, n in enumerate(names)]) if names else X

    def to_dict(self) -> dict:
        return {
            "enabled": self.enabled,
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "constant": list(self.constant),
        }


IDENTITY_PARAMS = NormalizationParams(enabled=False)


def fit_normalization(d: Dataset, enabled: bool = True) -> NormalizationParams:
    if not enabled:
        return IDENTITY_PARAMS
    bounds, constant, universes = {}, [], {}
    for c in d.schema.columns:
        if not c.is_numeric or c.role == IDENTIFIER or c.name in d.suppressed:
            continue
        vals = d.columns[c.name]
        lo, hi = float(vals.min()), float(vals.max())
        if hi > lo:
            bounds[c.name] = (lo, hi)
            if c.universe is not None:
                universes[c.name] = c.universe
        else:
            constant.append(c.name)
    return NormalizationParams(bounds, tuple(constant), True, universes)


def normalize(d: Dataset, enabled: bool = True) -> tuple[Dataset, NormalizationParams]:
    """Min-max scale every non-constant numeric column of ``d`` into [0, 1]."""
    params = fit_normalization(d, enabled)
    if not params.bounds:
        return d, params
    scaled = {n: params.scale(n, d.columns[n]) for n in params.bounds}
    universes = {
        n: tuple(float(v) for v in params.scale(n, d.schema.column(n).universe))
        for n in params.bounds
        if d.schema.column(n).universe is not None
    }
    return d.replace(schema=d.schema.with_universes(universes), **scaled), params


def denormalize(d: Dataset, params: NormalizationParams) -> Dataset:
    if not params.bounds:
        return d
    restored = {n: params.unscale(n, d.columns[n]) for n in params.bounds if n in d.columns}
    # original universes are restored verbatim; re-scaling them would drift
    universes = {
        n: params.universes.get(n) or tuple(float(v) for v in params.unscale(n, d.schema.column(n).universe))
        for n in restored
        if d.schema.column(n).universe is not None
    }
    return d.replace(schema=d.schema.with_universes(universes), **restored)


# --------------------------------------------------------------------------
# matrix views and joins
# --------------------------------------------------------------------------

def numeric_view(d: Dataset, roles: Iterable[str]) -> np.ndarray:
    """m x c matrix of the scorable columns with the given roles, schema order."""
    roles = set(roles)
    bad_roles = roles - set(ROLES)
    if bad_roles:
        raise ValidationError(f"unknown roles {sorted(bad_roles)}")
    names = [c.name for c in d.schema.columns if c.role in roles and c.role != IDENTIFIER]
    if not names:
        raise ValidationError(f"no columns selected for roles {sorted(roles)}")
    return column_matrix(d, names)


def column_matrix(d: Dataset, names: Sequence[str]) -> np.ndarray:
    if not names:
        raise ValidationError("empty column selection")
    return np.column_stack([d.scores(n) for n in names])


@dataclass(frozen=True)
class JoinedView:
    release: object
    auxiliary: Dataset
    pairs: tuple[tuple[int, int | None], ...]

    @property
    def matched(self) -> int:
        return sum(j is not None for _, j in self.pairs)


def join_on_identifier(release, aux: Dataset) -> JoinedView:
    """Pair every release row with the auxiliary row sharing its identifier.

    ``release`` may be a Dataset or anything with a ``.dataset`` attribute.
    """
    rel = getattr(release, "dataset", release)
    key = rel.schema.identifier
    if aux.schema.identifier != key:
        raise ValidationError(
            f"identifier columns differ: release {key!r} vs auxiliary {aux.schema.identifier!r}"
        )
    index: dict[str, int] = {}
    for j, v in enumerate(aux.ids):
        if v in index:
            raise ValidationError(f"auxiliary dataset has duplicate identifier {v!r}")
        index[v] = j
    pairs = tuple((i, index.get(v)) for i, v in enumerate(rel.ids))
    return JoinedView(release, aux, pairs)
