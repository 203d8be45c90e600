"""Mamdani fuzzy inference used as the adversary's fusion operator.

Pipeline per record: fuzzify inputs, fire rules (min/max connective times
rule weight), clip each consequent at its firing strength, aggregate by
pointwise max, defuzzify by exact centroid. Rules that mention an input the
record lacks do not fire; a record with no firing rule gets the midpoint of
the output universe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .data import AUXILIARY, QUASI, SENSITIVE, AttributeSchema, Dataset, ValidationError, join_on_identifier
from .kernels import clipped_centroid

RELEASE = "release"
AUX = "auxiliary"
OUTPUT = "output"
_SOURCE_ALIASES = {
    "release": RELEASE,
    "release-column": RELEASE,
    "auxiliary": AUX,
    "auxiliary-column": AUX,
    "output": OUTPUT,
}
_SHAPES = {"triangular": 3, "trapezoidal": 4}


@dataclass(frozen=True)
class MembershipFunction:
    shape: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValidationError(f"unknown membership shape {self.shape!r}")
        p = tuple(float(v) for v in self.params)
        if len(p) != _SHAPES[self.shape] or not all(math.isfinite(v) for v in p):
            raise ValidationError(f"{self.shape} needs {_SHAPES[self.shape]} finite parameters, got {self.params!r}")
        object.__setattr__(self, "params", p)
        if any(x > y for x, y in zip(p, p[1:])):
            raise ValidationError(f"membership parameters must be non-decreasing, got {p}")
        if self.shape == "triangular" and p[0] == p[2]:
            raise ValidationError(f"degenerate triangle {p}")
        if self.shape == "trapezoidal" and not (p[1] < p[2] or p[0] < p[1]):
            raise ValidationError(f"degenerate trapezoid {p}")

    @classmethod
    def triangular(cls, a, b, c) -> "MembershipFunction":
        return cls("triangular", (a, b, c))

    @classmethod
    def trapezoidal(cls, a, b, c, d) -> "MembershipFunction":
        return cls("trapezoidal", (a, b, c, d))

    @property
    def corners(self) -> tuple[float, float, float, float]:
        p = self.params
        return (p[0], p[1], p[1], p[2]) if self.shape == "triangular" else p

    @property
    def support(self) -> tuple[float, float]:
        a, _, _, d = self.corners
        return a, d

    def degree(self, x):
        a, b, c, d = self.corners
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        out = np.where((x >= b) & (x <= c), 1.0, out)
        if b > a:
            out = np.where((x > a) & (x < b), (x - a) / (b - a), out)
        if d > c:
            out = np.where((x > c) & (x < d), (d - x) / (d - c), out)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"shape": self.shape, "params": list(self.params)}


def fuzzify(x: float, f: MembershipFunction) -> float:
    return f.degree(x)


@dataclass(frozen=True)
class FuzzyVariable:
    name: str
    source: str
    universe: tuple[float, float]
    terms: Mapping[str, MembershipFunction]

    def __post_init__(self):
        if self.source not in _SOURCE_ALIASES:
            raise ValidationError(f"variable {self.name!r}: unknown source {self.source!r}")
        object.__setattr__(self, "source", _SOURCE_ALIASES[self.source])
        lo, hi = (float(v) for v in self.universe)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValidationError(f"variable {self.name!r}: universe needs lo < hi")
        object.__setattr__(self, "universe", (lo, hi))
        if not self.terms:
            raise ValidationError(f"variable {self.name!r} has no terms")
        for label, mf in self.terms.items():
            a, d = mf.support
            if a < lo or d > hi:
                raise ValidationError(
                    f"variable {self.name!r} term {label!r}: support [{a}, {d}] outside universe [{lo}, {hi}]"
                )
        object.__setattr__(self, "terms", MappingProxyType(dict(self.terms)))

    def clamp(self, x: float) -> float:
        lo, hi = self.universe
        return min(max(x, lo), hi)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "source": self.source,
            "universe": list(self.universe),
            "terms": {k: v.to_dict() for k, v in self.terms.items()},
        }


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: tuple[tuple[str, str], ...]
    consequent: str
    connective: str = "and"
    weight: float = 1.0

    def __post_init__(self):
        ante = tuple((str(v), str(t)) for v, t in self.antecedent)
        if not ante:
            raise ValidationError("rule antecedent is empty")
        object.__setattr__(self, "antecedent", ante)
        if self.connective not in ("and", "or"):
            raise ValidationError(f"rule connective must be 'and' or 'or', got {self.connective!r}")
        w = float(self.weight)
        if not 0.0 <= w <= 1.0:
            raise ValidationError(f"rule weight must lie in [0, 1], got {self.weight!r}")
        object.__setattr__(self, "weight", w)

    def to_dict(self) -> dict:
        return {
            "if": [list(c) for c in self.antecedent],
            "connective": self.connective,
            "then": self.consequent,
            "weight": self.weight,
        }


@dataclass(frozen=True)
class FuzzyInferenceSystem:
    variables: tuple[FuzzyVariable, ...]
    rules: tuple[FuzzyRule, ...]
    _out_params: np.ndarray = field(init=False, repr=False, compare=False)
    _out_index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        variables = tuple(self.variables)
        rules = tuple(self.rules)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "rules", rules)
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate variable names")
        outputs = [v for v in variables if v.source == OUTPUT]
        if len(outputs) != 1:
            raise ValidationError(f"exactly one output variable required, found {len(outputs)}")
        if not rules:
            raise ValidationError("rule base is empty")
        by_name = {v.name: v for v in variables}
        out = outputs[0]
        for n, rule in enumerate(rules):
            for var, term in rule.antecedent:
                if var not in by_name:
                    raise ValidationError(f"rule {n}: unknown variable {var!r}")
                if by_name[var].source == OUTPUT:
                    raise ValidationError(f"rule {n}: output variable {var!r} used as an input")
                if term not in by_name[var].terms:
                    raise ValidationError(f"rule {n}: variable {var!r} has no term {term!r}")
            if rule.consequent not in out.terms:
                raise ValidationError(f"rule {n}: output {out.name!r} has no term {rule.consequent!r}")
        labels = list(out.terms)
        params = np.array([out.terms[t].corners for t in labels], dtype=np.float64)
        params.setflags(write=False)
        object.__setattr__(self, "_out_params", params)
        object.__setattr__(self, "_out_index", MappingProxyType({t: i for i, t in enumerate(labels)}))

    @property
    def output(self) -> FuzzyVariable:
        return next(v for v in self.variables if v.source == OUTPUT)

    @property
    def inputs(self) -> tuple[FuzzyVariable, ...]:
        return tuple(v for v in self.variables if v.source != OUTPUT)

    def variable(self, name: str) -> FuzzyVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FuzzyInferenceSystem":
        try:
            variables = tuple(
                FuzzyVariable(
                    name=v["name"],
                    source=v["source"],
                    universe=tuple(v["universe"]),
                    terms={
                        label: MembershipFunction(spec["shape"], tuple(spec["params"]))
                        for label, spec in v["terms"].items()
                    },
                )
                for v in doc["variables"]
            )
            rules = tuple(
                FuzzyRule(
                    antecedent=tuple(tuple(c) for c in r["if"]),
                    consequent=r["then"],
                    connective=r.get("connective", "and"),
                    weight=r.get("weight", 1.0),
                )
                for r in doc["rules"]
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed FIS document: {exc!r}") from None
        return cls(variables, rules)

    def to_dict(self) -> dict:
        return {"variables": [v.to_dict() for v in self.variables], "rules": [r.to_dict() for r in self.rules]}


def check_against_schema(fis: FuzzyInferenceSystem, schema: AttributeSchema) -> None:
    """Every variable must name a schema column of a compatible role and kind."""
    wanted = {RELEASE: (QUASI,), AUX: (AUXILIARY,), OUTPUT: (SENSITIVE,)}
    for v in fis.variables:
        try:
            col = schema.column(v.name)
        except KeyError:
            raise ValidationError(f"FIS variable {v.name!r} names no schema column") from None
        if col.role not in wanted[v.source]:
            raise ValidationError(f"FIS variable {v.name!r} ({v.source}) maps to a {col.role} column")
        if not col.scorable:
            raise ValidationError(f"FIS variable {v.name!r}: categorical column without a category map")


def parse_fis(path, schema: AttributeSchema | None = None) -> FuzzyInferenceSystem:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    fis = FuzzyInferenceSystem.from_dict(doc)
    if schema is not None:
        check_against_schema(fis, schema)
    return fis


def _present(x) -> bool:
    return x is not None and not (isinstance(x, float) and math.isnan(x))


def _strengths(fis: FuzzyInferenceSystem, columns: Mapping[str, np.ndarray], m: int) -> np.ndarray:
    """(m, R) firing strengths; NaN inputs count as missing and silence their rules."""
    degrees: dict[tuple[str, str], np.ndarray] = {}
    out = np.zeros((m, len(fis.rules)))
    for r, rule in enumerate(fis.rules):
        parts = []
        for var, term in rule.antecedent:
            key = (var, term)
            if key not in degrees:
                x = columns.get(var)
                if x is None:
                    degrees[key] = np.full(m, np.nan)
                else:
                    v = fis.variable(var)
                    x = np.asarray(x, dtype=np.float64)
                    lo, hi = v.universe
                    deg = v.terms[term].degree(np.clip(x, lo, hi))
                    degrees[key] = np.where(np.isnan(x), np.nan, deg)
            parts.append(degrees[key])
        stack = np.vstack(parts)
        agg = stack.min(axis=0) if rule.connective == "and" else stack.max(axis=0)
        missing = np.isnan(stack).any(axis=0)
        out[:, r] = np.where(missing, 0.0, rule.weight * np.nan_to_num(agg))
    return out


def evaluate_rule(rule: FuzzyRule, inputs: Mapping[str, float], fis: FuzzyInferenceSystem) -> float:
    """Firing strength; 0 when any antecedent variable is missing from ``inputs``."""
    degrees = []
    for var, term in rule.antecedent:
        x = inputs.get(var)
        if not _present(x):
            return 0.0
        v = fis.variable(var)
        degrees.append(v.terms[term].degree(v.clamp(float(x))))
    agg = min(degrees) if rule.connective == "and" else max(degrees)
    return rule.weight * agg


def _consequent_weights(fis: FuzzyInferenceSystem, strengths: np.ndarray) -> np.ndarray:
    # max-aggregation of rules sharing a consequent term: (m, R) -> (m, T)
    w = np.zeros((strengths.shape[0], len(fis._out_index)))
    for r, rule in enumerate(fis.rules):
        t = fis._out_index[rule.consequent]
        np.maximum(w[:, t], strengths[:, r], out=w[:, t])
    return w


def _defuzzify(fis: FuzzyInferenceSystem, w: np.ndarray) -> float:
    y = clipped_centroid(fis._out_params, w)
    lo, hi = fis.output.universe
    if math.isnan(y):
        return 0.5 * (lo + hi)
    return min(max(y, lo), hi)


def infer_record(fis: FuzzyInferenceSystem, inputs: Mapping[str, float]) -> float:
    cols = {k: np.array([float(v) if _present(v) else np.nan]) for k, v in inputs.items()}
    w = _consequent_weights(fis, _strengths(fis, cols, 1))
    return _defuzzify(fis, w[0])


def fuse(fis: FuzzyInferenceSystem, release, aux: Dataset | None) -> np.ndarray:
    """Estimate the sensitive column for every release row (m x 1, release order).

    ``release`` is an AnonymizedRelease (or a Dataset). ``aux`` may be None for
    a release-only adversary.
    """
    rel = getattr(release, "dataset", release)
    m = rel.m
    cols: dict[str, np.ndarray] = {}
    aux_vars = []
    for v in fis.inputs:
        if v.source == RELEASE:
            if v.name not in rel.schema.names:
                raise ValidationError(f"FIS variable {v.name!r} is not a release column")
            cols[v.name] = rel.scores(v.name)
        else:
            if aux is not None and v.name not in aux.schema.names:
                raise ValidationError(f"FIS variable {v.name!r} is not an auxiliary column")
            aux_vars.append(v.name)
    if aux is not None and aux_vars:
        pairs = join_on_identifier(rel, aux).pairs
        rows = np.array([-1 if j is None else j for _, j in pairs])
        hit = rows >= 0
        for name in aux_vars:
            vals = np.full(m, np.nan)
            vals[hit] = aux.scores(name)[rows[hit]]
            cols[name] = vals
    w = _consequent_weights(fis, _strengths(fis, cols, m))
    return np.array([_defuzzify(fis, w[i]) for i in range(m)]).reshape(m, 1)
