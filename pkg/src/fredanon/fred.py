"""Incremental anonymization sweep that picks the most fusion-resilient useful release."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import fuzzy
from .anonymizer import AnonymizedRelease, basic_anonymization, level_to_k
from .data import QUASI, Dataset, NormalizationParams, ValidationError, column_matrix, fit_normalization
from .fuzzy import FuzzyInferenceSystem
from .metrics import (
    TRACE,
    MetricSet,
    ObjectiveConfig,
    dissimilarity,
    information_gain,
    objective_scalar,
    objective_trace_weighted,
    utility,
)

UTILITY_BELOW = "utility-below-threshold"
LEVEL_CAP = "level-cap"
K_EXCEEDS_M = "k-exceeds-m"

QUASI_BASELINE = "quasi-identifier"
RELEASE_ONLY_BASELINE = "release-only"


@dataclass(frozen=True)
class FredConfig:
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    level_floor: int = 0
    level_cap: int | None = None
    parallel: bool = False
    workers: int | None = None
    baseline: str = QUASI_BASELINE

    def __post_init__(self):
        level_to_k(self.level_floor)
        if self.level_cap is not None:
            level_to_k(self.level_cap)
        if self.baseline not in (QUASI_BASELINE, RELEASE_ONLY_BASELINE):
            raise ValidationError(f"unknown baseline {self.baseline!r}")

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.to_dict(),
            "level_floor": self.level_floor,
            "level_cap": self.level_cap,
            "baseline": self.baseline,
        }


@dataclass(frozen=True)
class CandidateRecord:
    index: int
    level: int
    release: AnonymizedRelease
    metrics: MetricSet


@dataclass(frozen=True)
class FredResult:
    all_levels: tuple[MetricSet, ...]
    candidates: tuple[CandidateRecord, ...]
    optimum: CandidateRecord | None
    termination: str
    estimates: tuple[np.ndarray, ...] = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        opt = self.optimum
        return {
            "levels": [ms.to_dict() for ms in self.all_levels],
            "candidates": [{"index": c.index, "level": c.level, "k": c.metrics.k} for c in self.candidates],
            "optimum": None
            if opt is None
            else {"index": opt.index, "level": opt.level, **opt.metrics.to_dict()},
            "termination": self.termination,
        }


def is_fusion_resilient(after, tp: float) -> bool:
    return float(after) >= tp


class AttackModel:
    """Original data, auxiliary data and fusion system, with the metric scaling fixed once."""

    def __init__(self, p: Dataset, q: Dataset | None, fis: FuzzyInferenceSystem,
                 params: NormalizationParams | None = None):
        self.p = p
        self.q = q
        self.fis = fis
        self.params = params if params is not None else fit_normalization(p, p.schema.normalize)
        self.qi = p.schema.names_with((QUASI,))
        self.target = fis.output.name
        if self.target not in p.schema.names:
            raise ValidationError(f"FIS output {self.target!r} is not a column of the private data")
        self.qi_scaled = self.params.scale_matrix(column_matrix(p, self.qi), self.qi)
        self.truth_scaled = self.params.scale_matrix(column_matrix(p, [self.target]), [self.target])

    def release(self, level: int) -> AnonymizedRelease:
        return basic_anonymization(self.p, level)

    def estimate(self, release: AnonymizedRelease, with_aux: bool = True) -> np.ndarray:
        return fuzzy.fuse(self.fis, release, self.q if with_aux else None)

    def evaluate(self, release: AnonymizedRelease, cfg: FredConfig) -> tuple[MetricSet, np.ndarray]:
        obj = cfg.objective
        est = self.estimate(release)
        est_scaled = self.params.scale_matrix(est, [self.target])
        after = dissimilarity(self.truth_scaled, est_scaled, [self.target])
        if cfg.baseline == RELEASE_ONLY_BASELINE:
            base = self.params.scale_matrix(self.estimate(release, with_aux=False), [self.target])
            before = dissimilarity(self.truth_scaled, base, [self.target])
        else:
            rel_qi = self.params.scale_matrix(column_matrix(release.dataset, self.qi), self.qi)
            before = dissimilarity(self.qi_scaled, rel_qi, self.qi)
        util = utility(release)
        if obj.mode == TRACE:
            H = objective_trace_weighted(self.truth_scaled - est_scaled, util, obj)
        else:
            H = objective_scalar(after, util, obj)
        ms = MetricSet(
            level=release.level,
            k=release.k,
            before=before.value,
            after=after.value,
            gain=information_gain(before, after),
            utility=util.U,
            objective=H,
            feasible_protection=is_fusion_resilient(after, obj.tp),
            feasible_utility=util.U >= obj.tu,
        )
        return ms, est

    def evaluate_many(self, releases: Sequence[AnonymizedRelease], cfg: FredConfig):
        if cfg.parallel and len(releases) > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                return list(pool.map(lambda r: self.evaluate(r, cfg), releases))
        return [self.evaluate(r, cfg) for r in releases]


def sweep(p: Dataset, q: Dataset | None, fis: FuzzyInferenceSystem, levels: Iterable[int],
          cfg: FredConfig | None = None) -> tuple[list[AnonymizedRelease], list[MetricSet], list[np.ndarray]]:
    """Evaluate the given levels unconditionally (no gating, no early stop)."""
    cfg = cfg or FredConfig()
    model = AttackModel(p, q, fis)
    releases = [model.release(lv) for lv in levels]
    out = model.evaluate_many(releases, cfg)
    return releases, [ms for ms, _ in out], [est for _, est in out]


def select_optimal(candidates: Sequence[CandidateRecord], tu: float) -> CandidateRecord | None:
    """Largest H among candidates with ``U >= tu``; ties go to the smaller level."""
    best = None
    for c in candidates:
        if c.metrics.utility < tu:
            continue
        if best is None or c.metrics.objective > best.metrics.objective or (
            c.metrics.objective == best.metrics.objective and c.level < best.level
        ):
            best = c
    return best


def fred_anonymize(p: Dataset, q: Dataset | None, fis: FuzzyInferenceSystem, cfg: FredConfig) -> FredResult:
    """Raise the level from the floor until utility drops below ``tu``, the cap,
    or ``k > m``; keep levels passing the protection gate; return the best H.

    The level whose utility first drops below the threshold is still evaluated
    and reported, but cannot be the optimum.
    """
    if level_to_k(cfg.level_floor) > p.m:
        raise ValidationError(f"k exceeds record count at the floor level (m={p.m})")
    model = AttackModel(p, q, fis)
    tu = cfg.objective.tu
    releases = []
    level = cfg.level_floor
    while True:
        if level_to_k(level) > p.m:
            reason = K_EXCEEDS_M
            break
        if cfg.level_cap is not None and level > cfg.level_cap:
            reason = LEVEL_CAP
            break
        rel = model.release(level)
        releases.append(rel)
        if utility(rel).U < tu:
            reason = UTILITY_BELOW
            break
        level += 1
    evaluated = model.evaluate_many(releases, cfg)
    all_levels = tuple(ms for ms, _ in evaluated)
    candidates = []
    for rel, ms in zip(releases, all_levels):
        if ms.feasible_protection:
            candidates.append(CandidateRecord(len(candidates), rel.level, rel, ms))
    return FredResult(
        all_levels=all_levels,
        candidates=tuple(candidates),
        optimum=select_optimal(candidates, tu),
        termination=reason,
        estimates=tuple(est for _, est in evaluated),
    )
