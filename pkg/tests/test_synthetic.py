import numpy as np

from fredanon import synthetic
from fredanon.data import load_dataset, load_schema
from fredanon.fuzzy import check_against_schema


def test_fixture_files_match_generator(tmp_path, fixtures_dir):
    paths = synthetic.write_benchmark(tmp_path)
    for path in paths.values():
        assert path.read_bytes() == (fixtures_dir / path.name).read_bytes(), path.name


def test_loaded_fixture_equals_in_memory(fixtures_dir):
    schema = load_schema(fixtures_dir / "benchmark_schema.json")
    p = load_dataset(fixtures_dir / "benchmark_private.csv", schema.primary())
    mem, _ = synthetic.datasets()
    for name in p.schema.names:
        assert list(p[name]) == list(mem[name])


def test_ratio_root():
    g = synthetic._ratio(synthetic.DIMS)
    assert abs(g ** (synthetic.DIMS + 1) - g - 1) < 1e-12


def test_fis_consistent_with_schema():
    check_against_schema(synthetic.fis(), synthetic.schema())


def test_generator_shape():
    p, q = synthetic.datasets()
    assert p.m == q.m == synthetic.N_RECORDS
    assert set(q["Employment"]) == set(synthetic.GRADES)
    inc = p["Income"]
    assert 40000 <= inc.min() and inc.max() <= 100000
    assert np.unique(p["Valuation"]).size == p.m
