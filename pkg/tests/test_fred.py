import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fredanon.fuzzy
from fredanon.anonymizer import basic_anonymization
from fredanon.data import ValidationError
from fredanon.fred import (
    K_EXCEEDS_M,
    LEVEL_CAP,
    RELEASE_ONLY_BASELINE,
    UTILITY_BELOW,
    CandidateRecord,
    FredConfig,
    fred_anonymize,
    is_fusion_resilient,
    select_optimal,
    sweep,
)
from fredanon.metrics import MetricSet, ObjectiveConfig
from tests.fred_oracle import level_table
from tests.oracles import fred_exhaustive

# (tp, tu, w1, w2, level cap)
CONFIGS = [
    (0.0, 0.0003, 0.5, 0.5, None),
    (0.0006, 0.00048, 0.5, 0.5, None),
    (0.0009, 0.0003, 0.5, 0.5, None),
    (0.0009, 0.0003, 0.8, 0.2, None),
    (0.0, 0.00035, 1.0, 0.01, None),
    (0.0012, 0.0004, 0.5, 0.5, None),
    (0.0, 0.0002, 0.3, 0.7, 8),
    (0.00065, 0.0005, 0.1, 0.9, None),
    (0.1, 0.0005, 0.5, 0.5, None),
    (0.0008, 0.00025, 0.5, 0.5, 20),
]


@pytest.fixture(scope="module")
def table(bench):
    _, p, q, fis = bench
    return level_table(p, q, fis, 25)


def _cand(level, H, U=1.0, after=1.0):
    ms = MetricSet(level, level + 2, 0.0, after, -after, U, H, True, True)
    return CandidateRecord(0, level, None, ms)


def _config(tp, tu, w1, w2, cap, **kw):
    return FredConfig(objective=ObjectiveConfig(w1=w1, w2=w2, tp=tp, tu=tu), level_cap=cap, **kw)


class TestGates:
    def test_above(self):
        assert is_fusion_resilient(3.2, 3.075)

    def test_boundary_inclusive(self):
        assert is_fusion_resilient(3.075, 3.075)

    def test_zero(self):
        assert not is_fusion_resilient(0.0, 0.5)


class TestSelectOptimal:
    def test_single(self):
        c = _cand(4, 0.3)
        assert select_optimal([c], 0.0) is c

    def test_argmax(self):
        cands = [_cand(3, 1.2), _cand(5, 1.9), _cand(8, 1.7)]
        assert select_optimal(cands, 0.0).level == 5

    def test_tie_smaller_level(self):
        assert select_optimal([_cand(8, 1.9), _cand(5, 1.9)], 0.0).level == 5

    def test_utility_gate(self):
        cands = [_cand(3, 1.2, U=0.5), _cand(5, 1.9, U=0.1)]
        assert select_optimal(cands, 0.2).level == 3
        assert select_optimal(cands, 0.6) is None

    def test_empty(self):
        assert select_optimal([], 0.0) is None


class TestFred:
    @pytest.mark.parametrize("cfg", CONFIGS, ids=[f"cfg{i}" for i in range(len(CONFIGS))])
    def test_matches_exhaustive(self, bench, table, cfg):
        _, p, q, fis = bench
        tp, tu, w1, w2, cap = cfg
        res = fred_anonymize(p, q, fis, _config(*cfg))
        level, H, evaluated = fred_exhaustive(table, tp, tu, w1, w2, cap)
        assert [ms.level for ms in res.all_levels] == evaluated
        if level is None:
            assert res.optimum is None
        else:
            assert res.optimum.level == level
            assert res.optimum.metrics.objective == pytest.approx(H, rel=1e-12)
        for c in res.candidates:
            assert c.metrics.after >= tp
        if res.optimum is not None:
            assert res.optimum.metrics.utility >= tu

    def test_termination_reasons(self, bench):
        _, p, q, fis = bench
        assert fred_anonymize(p, q, fis, _config(*CONFIGS[0])).termination == UTILITY_BELOW
        assert fred_anonymize(p, q, fis, _config(*CONFIGS[6])).termination == LEVEL_CAP

    def test_infeasible_tp(self, bench):
        _, p, q, fis = bench
        res = fred_anonymize(p, q, fis, _config(10.0, 0.0005, 0.5, 0.5, None))
        assert res.candidates == () and res.optimum is None and len(res.all_levels) > 0

    def test_parallel_identical(self, bench):
        _, p, q, fis = bench
        for cfg in (CONFIGS[1], CONFIGS[6]):
            serial = fred_anonymize(p, q, fis, _config(*cfg))
            par = fred_anonymize(p, q, fis, _config(*cfg, parallel=True, workers=4))
            assert json.dumps(serial.to_dict()) == json.dumps(par.to_dict())
            assert b"".join(e.tobytes() for e in serial.estimates) == b"".join(e.tobytes() for e in par.estimates)

    def test_stop_is_monotone(self, bench, monkeypatch):
        _, p, q, fis = bench
        calls = []
        real = fredanon.fuzzy.fuse

        def counting(f, release, aux):
            calls.append(release.level)
            return real(f, release, aux)

        monkeypatch.setattr(fredanon.fuzzy, "fuse", counting)
        res = fred_anonymize(p, q, fis, _config(*CONFIGS[1]))
        stop = res.all_levels[-1].level
        assert sorted(calls) == list(range(stop + 1))
        assert res.all_levels[-1].utility < 0.00048

    def test_floor(self, bench):
        _, p, q, fis = bench
        cfg = FredConfig(objective=ObjectiveConfig(tu=0.0005), level_floor=3)
        res = fred_anonymize(p, q, fis, cfg)
        assert res.all_levels[0].level == 3

    def test_floor_beyond_m(self, demo):
        _, p, q, fis = demo
        with pytest.raises(ValidationError, match="k exceeds"):
            fred_anonymize(p, q, fis, FredConfig(level_floor=5))

    def test_trace_mode(self, bench):
        _, p, q, fis = bench
        cfg = FredConfig(objective=ObjectiveConfig(tu=0.0005, mode="trace"))
        res = fred_anonymize(p, q, fis, cfg)
        ms = res.all_levels[0]
        truth = (p["Income"] - p["Income"].min()) / np.ptp(p["Income"])
        est = (res.estimates[0][:, 0] - p["Income"].min()) / np.ptp(p["Income"])
        u = 1 / np.array([len(c) for c in basic_anonymization(p, 0).partition.classes for _ in c])
        expect = 0.5 * np.mean((truth - est) ** 2) + 0.5 * np.mean(u**2)
        assert ms.objective == pytest.approx(expect, rel=1e-12)

    def test_release_only_baseline(self, bench):
        _, p, q, fis = bench
        _, rows, _ = sweep(p, q, fis, [0, 5], FredConfig(baseline=RELEASE_ONLY_BASELINE))
        _, qi_rows, _ = sweep(p, q, fis, [0, 5], FredConfig())
        assert [r.after for r in rows] == [r.after for r in qi_rows]
        assert rows[0].before != qi_rows[0].before


@settings(max_examples=15, deadline=None)
@given(m=st.integers(2, 24), start=st.integers(0, 150))
def test_loop_bounded_by_m(bench, m, start):
    _, p, q, fis = bench
    sub = p.replace(**{n: p[n][start:start + m] for n in p.schema.names})
    res = fred_anonymize(sub, q, fis, FredConfig())
    # with T_u = 0 nothing stops the loop except k > m
    assert len(res.all_levels) == m - 1
    assert res.termination == K_EXCEEDS_M
