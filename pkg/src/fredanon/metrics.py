"""Dissimilarity, discernibility utility, information gain and objectives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import ValidationError

SCALAR = "scalar"
TRACE = "trace"


@dataclass(frozen=True)
class DissimilarityValue:
    value: float
    columns: tuple[str, ...] = ()
    m: int = 0

    def __float__(self):
        return self.value


def dissimilarity(a, b, columns: Sequence[str] = ()) -> DissimilarityValue:
    """Mean squared distance ``Tr((a - b)^T (a - b)) / m`` between two m x c tables."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.shape[0] == 0:
        raise ValidationError("dissimilarity of empty tables is undefined")
    diff = a - b
    if not np.isfinite(diff).all():
        raise ValidationError("dissimilarity inputs must be finite")
    m = a.shape[0]
    return DissimilarityValue(float(np.trace(diff.T @ diff)) / m, tuple(columns), m)


def discernibility_cost(class_sizes: Sequence[int], k: int, dataset_size: int) -> tuple[int, np.ndarray]:
    """``(C_DM, per-record costs)`` with records laid out class by class.

    A record in a class of size ``s >= k`` costs ``s``; a record in an
    undersized class costs ``|D|``. Class costs are therefore ``s**2`` and
    ``|D| * s`` and the per-record costs sum to ``C_DM``.
    """
    sizes = [int(s) for s in class_sizes]
    if any(s < 1 for s in sizes):
        raise ValidationError("class sizes must be positive")
    if sum(sizes) != dataset_size:
        raise ValidationError(f"class sizes sum to {sum(sizes)}, dataset size is {dataset_size}")
    per_record = np.concatenate([np.full(s, s if s >= k else dataset_size, dtype=np.int64) for s in sizes])
    c_dm = sum(s * s if s >= k else dataset_size * s for s in sizes)
    return c_dm, per_record


@dataclass(frozen=True)
class UtilityValue:
    U: float
    u: np.ndarray
    k: int
    dataset_size: int
    c_dm: int


def utility_from_sizes(class_sizes: Sequence[int], k: int, dataset_size: int | None = None) -> UtilityValue:
    n = sum(class_sizes) if dataset_size is None else dataset_size
    c_dm, costs = discernibility_cost(class_sizes, k, n)
    u = 1.0 / costs
    u.setflags(write=False)
    return UtilityValue(1.0 / c_dm, u, k, n, c_dm)


def utility(release) -> UtilityValue:
    """``U = 1 / C_DM`` with per-record ``u_i = 1 / C_i`` in record order."""
    part = release.partition
    util = utility_from_sizes(part.sizes, release.k, part.m)
    order = np.concatenate([np.asarray(c, dtype=np.int64) for c in part.classes])
    u = np.empty_like(util.u)
    u[order] = util.u
    u.setflags(write=False)
    return UtilityValue(util.U, u, util.k, util.dataset_size, util.c_dm)


def information_gain(before: DissimilarityValue, after: DissimilarityValue) -> float:
    return float(before) - float(after)


@dataclass(frozen=True)
class ObjectiveConfig:
    w1: float = 0.5
    w2: float = 0.5
    tp: float = 0.0
    tu: float = 0.0
    mode: str = SCALAR
    w1_table: np.ndarray | None = None
    w2_table: np.ndarray | None = None

    def __post_init__(self):
        for name in ("w1", "w2", "tp", "tu"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.w1 < 0 or self.w2 < 0:
            raise ValidationError("weights must be non-negative")
        if self.w1 + self.w2 <= 0:
            raise ValidationError("weights must not both be zero")
        if self.mode not in (SCALAR, TRACE):
            raise ValidationError(f"mode must be {SCALAR!r} or {TRACE!r}, got {self.mode!r}")

    def to_dict(self) -> dict:
        return {"w1": self.w1, "w2": self.w2, "tp": self.tp, "tu": self.tu, "mode": self.mode}


def objective_scalar(after, u, cfg: ObjectiveConfig) -> float:
    """``H = W1 * (P o P_hat) + W2 * U``."""
    U = u.U if isinstance(u, UtilityValue) else float(u)
    return cfg.w1 * float(after) + cfg.w2 * U


def objective_trace_weighted(residuals, u, cfg: ObjectiveConfig) -> float:
    """Trace-weighted objective with elementwise weights on squared residuals.

    ``H = sum(W1 * R**2) / m + sum(W2 * u**2) / m``; scalar weights give
    ``w1 * dissimilarity + w2 * sum(u**2) / m``.
    """
    R = np.asarray(residuals, dtype=np.float64)
    if R.ndim == 1:
        R = R[:, None]
    uu = np.asarray(u.u if isinstance(u, UtilityValue) else u, dtype=np.float64).reshape(-1)
    m = R.shape[0]
    if uu.shape[0] != m:
        raise ValidationError(f"utility column has {uu.shape[0]} entries, residuals have {m} rows")
    W1 = cfg.w1 if cfg.w1_table is None else np.asarray(cfg.w1_table, dtype=np.float64)
    W2 = cfg.w2 if cfg.w2_table is None else np.asarray(cfg.w2_table, dtype=np.float64).reshape(-1)
    if np.ndim(W1) and np.shape(W1) != R.shape:
        raise ValidationError(f"W1 table shape {np.shape(W1)} does not match residuals {R.shape}")
    if np.ndim(W2) and np.shape(W2) != uu.shape:
        raise ValidationError(f"W2 table shape {np.shape(W2)} does not match utility column {uu.shape}")
    return float(np.sum(W1 * R * R)) / m + float(np.sum(W2 * uu * uu)) / m


@dataclass(frozen=True)
class MetricSet:
    level: int
    k: int
    before: float
    after: float
    gain: float
    utility: float
    objective: float
    feasible_protection: bool
    feasible_utility: bool

    @property
    def feasible(self) -> bool:
        return self.feasible_protection and self.feasible_utility

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "k": self.k,
            "dissimilarity_before": self.before,
            "dissimilarity_after": self.after,
            "gain": self.gain,
            "utility": self.utility,
            "objective": self.objective,
            "feasible_protection": self.feasible_protection,
            "feasible_utility": self.feasible_utility,
        }
