"""Deterministic 200-record benchmark: private table, auxiliary table, schema and FIS.

Record ``i`` (0-based) takes coordinates from the additive recurrence

    u_j(i) = frac(0.3 + (i + 1) / g**j),   j = 1..5,

where ``g`` is the real root of ``x**6 = x + 1`` (the 5-D generalized golden
ratio). Then

    Invst Vol   = 1 + 9 u_1
    Invst Amt   = 1 + 9 u_2
    Valuation   = 1 + 9 u_3
    grade       = 1 + floor(5 u_4)            (Employment label, 5 levels)
    Property    = 6000 u_5
    Income      = 40000 + 10000 (grade - 1) + 6000 u_5 + 14000 u_3

so income depends on both auxiliary columns and on one quasi-identifier,
which the release blurs more as k grows. Nothing is random; the files in ``fixtures/`` are exactly
what :func:`write_benchmark` produces.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import AttributeSchema, Dataset, write_dataset
from .fuzzy import FuzzyInferenceSystem

GRADES = ("Intern", "Staff", "Manager", "Director", "Executive")
N_RECORDS = 200
DIMS = 5
OFFSET = 0.3


def _ratio(d: int) -> float:
    # real root of x**(d+1) = x + 1 by fixed-point iteration
    g = 2.0
    for _ in range(200):
        g = (1.0 + g) ** (1.0 / (d + 1))
    return g


def coordinates(m: int = N_RECORDS) -> np.ndarray:
    g = _ratio(DIMS)
    alpha = np.array([g ** -(j + 1) for j in range(DIMS)])
    i = np.arange(1, m + 1, dtype=np.float64)[:, None]
    return np.mod(OFFSET + i * alpha, 1.0)


SCHEMA_DOC = {
    "normalize": True,
    "columns": [
        {"name": "ID", "role": "identifier", "kind": "categorical"},
        {"name": "Invst Vol", "role": "quasi-identifier", "kind": "numeric", "universe": [1, 10]},
        {"name": "Invst Amt", "role": "quasi-identifier", "kind": "numeric", "universe": [1, 10]},
        {"name": "Valuation", "role": "quasi-identifier", "kind": "numeric", "universe": [1, 10]},
        {"name": "Income", "role": "sensitive", "kind": "numeric", "universe": [40000, 100000]},
        {"name": "Employment", "role": "auxiliary", "kind": "categorical",
         "categories": {label: i + 1 for i, label in enumerate(GRADES)}},
        {"name": "Property Holdings", "role": "auxiliary", "kind": "numeric", "universe": [0, 6000]},
    ],
}


def schema() -> AttributeSchema:
    return AttributeSchema.from_dict(SCHEMA_DOC)


def datasets(m: int = N_RECORDS) -> tuple[Dataset, Dataset]:
    u = coordinates(m)
    s = schema()
    ids = [f"R{i:03d}" for i in range(m)]
    grade = 1 + np.floor(5 * u[:, 3]).astype(int)
    p = Dataset(
        s.primary(),
        {
            "ID": ids,
            "Invst Vol": 1 + 9 * u[:, 0],
            "Invst Amt": 1 + 9 * u[:, 1],
            "Valuation": 1 + 9 * u[:, 2],
            "Income": 40000 + 10000 * (grade - 1) + 6000 * u[:, 4] + 14000 * u[:, 2],
        },
    )
    q = Dataset(
        s.auxiliary(),
        {
            "ID": ids,
            "Employment": [GRADES[g - 1] for g in grade],
            "Property Holdings": 6000 * u[:, 4],
        },
    )
    return p, q


def _tri(a, b, c):
    return {"shape": "triangular", "params": [a, b, c]}


def fis_doc() -> dict:
    grade_terms = {label: _tri(max(1, g - 1), g, min(5, g + 1)) for g, label in enumerate(GRADES, start=1)}
    val_terms = {"Low": _tri(1, 1, 5.5), "Mid": _tri(1, 5.5, 10), "High": _tri(5.5, 10, 10)}
    out_terms = {}
    rules = []
    for g, label in enumerate(GRADES, start=1):
        for p_step, prop in enumerate(("Small", "Large")):
            for v_step, val in enumerate(val_terms):
                centre = 40000 + 10000 * (g - 1) + 6000 * p_step + 7000 * v_step
                term = f"{label}-{prop}-{val}"
                out_terms[term] = _tri(max(40000, centre - 3000), centre, min(100000, centre + 3000))
                rules.append({
                    "if": [["Employment", label], ["Property Holdings", prop], ["Valuation", val]],
                    "connective": "and",
                    "then": term,
                    "weight": 1.0,
                })
    return {
        "variables": [
            {"name": "Valuation", "source": "release", "universe": [1, 10],
             "terms": val_terms},
            {"name": "Employment", "source": "auxiliary", "universe": [1, 5], "terms": grade_terms},
            {"name": "Property Holdings", "source": "auxiliary", "universe": [0, 6000],
             "terms": {"Small": _tri(0, 0, 6000), "Large": _tri(0, 6000, 6000)}},
            {"name": "Income", "source": "output", "universe": [40000, 100000], "terms": out_terms},
        ],
        "rules": rules,
    }


def fis() -> FuzzyInferenceSystem:
    return FuzzyInferenceSystem.from_dict(fis_doc())


def write_benchmark(directory) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    p, q = datasets()
    paths = {
        "data": directory / "benchmark_private.csv",
        "aux": directory / "benchmark_aux.csv",
        "schema": directory / "benchmark_schema.json",
        "fis": directory / "benchmark_fis.json",
    }
    write_dataset(p, paths["data"])
    write_dataset(q, paths["aux"])
    paths["schema"].write_text(json.dumps(SCHEMA_DOC, indent=2) + "\n", encoding="utf-8")
    paths["fis"].write_text(json.dumps(fis_doc(), indent=2) + "\n", encoding="utf-8")
    return paths
