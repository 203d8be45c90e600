import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fredanon.data import (
    AUXILIARY,
    QUASI,
    ROLES,
    SENSITIVE,
    AttributeSchema,
    Dataset,
    ValidationError,
    denormalize,
    join_on_identifier,
    load_dataset,
    load_schema,
    normalize,
    numeric_view,
    write_dataset,
)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def _simple_schema(**extra):
    doc = {
        "normalize": True,
        "columns": [
            {"name": "ID", "role": "identifier", "kind": "categorical"},
            {"name": "x", "role": "quasi-identifier", "kind": "numeric"},
            {"name": "y", "role": "sensitive", "kind": "numeric", "universe": [0, 100]},
        ],
    }
    doc.update(extra)
    return AttributeSchema.from_dict(doc)


class TestLoad:
    def test_four_customers_shape(self, demo):
        _, p, _, _ = demo
        assert (p.m, p.n) == (4, 5)
        assert list(p.ids) == ["Alice", "Bob", "Christine", "Robert"]

    def test_empty_body(self, tmp_path):
        path = _write(tmp_path / "d.csv", "ID,x,y\n")
        with pytest.raises(ValidationError, match="m >= 1"):
            load_dataset(path, _simple_schema())

    def test_duplicate_identifier(self, tmp_path):
        path = _write(tmp_path / "d.csv", "ID,x,y\nAlice,1,2\nAlice,3,4\n")
        with pytest.raises(ValidationError, match="duplicate identifiers.*Alice"):
            load_dataset(path, _simple_schema())

    @pytest.mark.parametrize(
        "text, pattern",
        [
            ("ID,x\nA,1\n", "missing"),
            ("ID,x,y,z\nA,1,2,3\n", "extra"),
            ("ID,x,y\nA,one,2\n", "non-numeric"),
            ("ID,x,y\nA,1,200\n", "outside universe"),
            ("ID,x,y\nA,nan,2\n", "non-finite"),
            ("", "empty file"),
        ],
    )
    def test_rejections(self, tmp_path, text, pattern):
        path = _write(tmp_path / "d.csv", text)
        with pytest.raises(ValidationError, match=pattern):
            load_dataset(path, _simple_schema())

    def test_quoted_fields(self, demo):
        _, _, q, _ = demo
        assert q["Employment"][1] == "Manager, Verizon"
        assert q.scores("Employment")[3] == 10.0

    def test_unknown_category(self, tmp_path, demo):
        schema = demo[0]
        path = _write(tmp_path / "a.csv", 'Name,Employment,Property Holdings\nZed,"Janitor, Mars",1\n')
        with pytest.raises(ValidationError, match="Janitor"):
            load_dataset(path, schema.auxiliary())

    def test_write_round_trip(self, tmp_path, bench):
        _, p, _, _ = bench
        write_dataset(p, tmp_path / "p.csv")
        back = load_dataset(tmp_path / "p.csv", p.schema)
        for name in p.schema.names:
            assert list(back[name]) == list(p[name])


class TestSchema:
    def test_needs_one_identifier(self):
        with pytest.raises(ValidationError, match="exactly one identifier"):
            AttributeSchema.from_dict({"columns": [{"name": "a", "role": "quasi-identifier"}]})

    def test_universe_order(self):
        with pytest.raises(ValidationError, match="min < max"):
            _simple_schema(columns=[
                {"name": "ID", "role": "identifier", "kind": "categorical"},
                {"name": "x", "role": "quasi-identifier", "universe": [3, 3]},
            ])

    def test_round_trip(self, demo):
        schema = demo[0]
        assert AttributeSchema.from_dict(schema.to_dict()) == schema

    def test_bad_json(self, tmp_path):
        with pytest.raises(ValidationError, match="invalid JSON"):
            load_schema(_write(tmp_path / "s.json", "{nope"))

    @settings(max_examples=60, deadline=None)
    @given(
        roles=st.lists(st.sampled_from(ROLES), min_size=2, max_size=3, unique=True),
        position=st.integers(0, 2),
        as_duplicate=st.booleans(),
    )
    def test_two_roles_rejected(self, roles, position, as_duplicate):
        cols = [
            {"name": "ID", "role": "identifier", "kind": "categorical"},
            {"name": "a", "role": "quasi-identifier"},
            {"name": "b", "role": "sensitive"},
        ]
        target = cols[position]
        if as_duplicate:
            # the same column listed again under a second role
            other = next(r for r in roles if r != target["role"])
            cols.append({**target, "role": other})
        else:
            target["role"] = roles
        with pytest.raises(ValidationError):
            AttributeSchema.from_dict({"columns": cols})


class TestNormalize:
    def _ds(self, ys):
        ids = [f"r{i}" for i in range(len(ys))]
        return Dataset(_simple_schema(), {"ID": ids, "x": [1.0] * len(ys), "y": ys})

    def test_endpoints(self):
        d = self._ds([40.0, 70.0, 100.0])
        out, params = normalize(d)
        assert list(out["y"]) == [0.0, 0.5, 1.0]
        assert params.bounds["y"] == (40.0, 100.0)
        # the constant column is passed through and flagged
        assert list(out["x"]) == [1.0, 1.0, 1.0]
        assert params.constant == ("x",)

    def test_disabled(self):
        d = self._ds([40.0, 70.0, 100.0])
        out, params = normalize(d, enabled=False)
        assert out is d and not params.bounds and not params.enabled

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=30))
    def test_round_trip(self, ys):
        d = self._ds(ys)
        out, params = normalize(d)
        for n in params.bounds:
            assert out[n].min() >= 0.0 and out[n].max() <= 1.0
        back = denormalize(out, params)
        np.testing.assert_allclose(back["y"], d["y"], rtol=1e-9, atol=1e-9 * 100)
        assert back.schema == d.schema


class TestJoin:
    def test_demo_fully_matched(self, demo):
        _, p, q, _ = demo
        view = join_on_identifier(p, q)
        assert view.pairs == ((0, 0), (1, 1), (2, 2), (3, 3))

    def test_missing_row(self, demo):
        schema, p, q, _ = demo
        keep = [0, 2, 3]
        q2 = Dataset(q.schema, {n: [q[n][i] for i in keep] for n in q.schema.names})
        view = join_on_identifier(p, q2)
        assert len(view.pairs) == 4 and view.pairs[1] == (1, None) and view.matched == 3

    def test_disjoint(self, demo):
        _, p, q, _ = demo
        q2 = Dataset(q.schema, {**{n: q[n] for n in q.schema.names}, "Name": ["w", "x", "y", "z"]})
        assert all(j is None for _, j in join_on_identifier(p, q2).pairs)

    def test_identifier_names_must_match(self, bench, demo):
        with pytest.raises(ValidationError, match="identifier columns differ"):
            join_on_identifier(bench[1], demo[2])

    @settings(max_examples=100, deadline=None)
    @given(
        rel_ids=st.lists(st.text("abcdef", min_size=1, max_size=3), min_size=1, max_size=25, unique=True),
        aux_ids=st.lists(st.text("abcdef", min_size=1, max_size=3), min_size=1, max_size=25, unique=True),
    )
    def test_pair_count(self, rel_ids, aux_ids):
        rs = AttributeSchema.from_dict({"columns": [{"name": "ID", "role": "identifier", "kind": "categorical"},
                                                    {"name": "x", "role": "quasi-identifier"}]})
        as_ = AttributeSchema.from_dict({"columns": [{"name": "ID", "role": "identifier", "kind": "categorical"},
                                                     {"name": "z", "role": "auxiliary"}]})
        rel = Dataset(rs, {"ID": rel_ids, "x": np.zeros(len(rel_ids))})
        aux = Dataset(as_, {"ID": aux_ids, "z": np.zeros(len(aux_ids))})
        view = join_on_identifier(rel, aux)
        assert len(view.pairs) == rel.m
        assert [i for i, _ in view.pairs] == list(range(rel.m))
        matched = [j for _, j in view.pairs if j is not None]
        assert len(matched) == len(set(matched)) == len(set(rel_ids) & set(aux_ids))
        for i, j in view.pairs:
            if j is not None:
                assert rel_ids[i] == aux_ids[j]


class TestNumericView:
    def test_quasi(self, demo):
        p = demo[1]
        np.testing.assert_array_equal(numeric_view(p, {QUASI}), [[8, 7, 4], [5, 4, 4], [4, 5, 5], [9, 8, 9]])

    def test_sensitive(self, demo):
        p = demo[1]
        np.testing.assert_array_equal(numeric_view(p, {SENSITIVE}), [[91250], [74340], [75123], [98230]])

    def test_empty_selection(self, demo):
        with pytest.raises(ValidationError, match="no columns"):
            numeric_view(demo[1], set())

    def test_categorical_scores(self, demo):
        q = demo[2]
        np.testing.assert_array_equal(numeric_view(q, {AUXILIARY})[:, 0], [9.5, 6, 3, 10])

    def test_unmapped_categorical(self):
        schema = AttributeSchema.from_dict({"columns": [
            {"name": "ID", "role": "identifier", "kind": "categorical"},
            {"name": "c", "role": "auxiliary", "kind": "categorical"},
        ]})
        d = Dataset(schema, {"ID": ["a"], "c": ["x"]})
        with pytest.raises(ValidationError):
            numeric_view(d, {AUXILIARY})

    def test_order_stable(self, bench):
        p = bench[1]
        a = numeric_view(p, {QUASI, SENSITIVE})
        b = numeric_view(p, {QUASI, SENSITIVE})
        assert a.shape == (p.m, 4)
        assert a.tobytes() == b.tobytes()


def test_datasets_are_read_only(demo):
    p = demo[1]
    with pytest.raises(ValueError):
        p["Income"][0] = 1.0
    with pytest.raises(TypeError):
        p.columns["Income"] = None


def test_schema_file_matches_fixture(fixtures_dir):
    doc = json.loads((fixtures_dir / "demo_schema.json").read_text())
    assert [c["name"] for c in doc["columns"]][0] == "Name"
