import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sqlgrpo.schema import (
    ConstraintError,
    DatabaseState,
    IntegrityError,
    Schema,
    SchemaParseError,
    generate_random_state,
    load_schema,
    load_state,
    save_state,
    schema_from_tables,
    validate_state,
)


@st.composite
def random_schemas(draw):
    n_tables = draw(st.integers(1, 4))
    tables, fks = [], []
    pks = []
    for t in range(n_tables):
        n_cols = draw(st.integers(1, 4))
        cols = [(f"c{i}", draw(st.sampled_from(["int", "real", "text"]))) for i in range(n_cols)]
        pk = []
        if draw(st.booleans()):
            cols[0] = ("c0", draw(st.sampled_from(["int", "text"])))
            pk = ["c0"]
        # reference an earlier keyed table from a fresh column of the matching type
        parents = [(p, ty) for p, ty in pks if ty is not None]
        if parents and draw(st.booleans()):
            p, ty = draw(st.sampled_from(parents))
            cols.append((f"fk_{p}", ty))
            fks.append((f"t{t}.fk_{p}", f"{p}.c0"))
        tables.append((f"t{t}", cols, pk))
        pks.append((f"t{t}", cols[0][1] if pk else None))
    return schema_from_tables(f"db{draw(st.integers(0, 999))}", tables, fks)


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_movies_schema_file_loads(tmp_path, movies):
    s = load_schema(write(tmp_path, movies.to_json()))
    assert [t.name for t in s.tables] == ["actor", "casting"]
    assert len(s.foreign_keys) == 1
    assert str(s.foreign_keys[0]) == "casting.actorid -> actor.id"


def test_empty_schema_is_valid(tmp_path):
    s = load_schema(write(tmp_path, {"db_id": "empty", "tables": [], "foreign_keys": []}))
    assert s.tables == ()


def test_dangling_foreign_key(tmp_path):
    obj = {"db_id": "d", "tables": [{"name": "a", "columns": [{"name": "x", "type": "int"}], "primary_key": ["x"]}],
           "foreign_keys": [{"from": "a.x", "to": "missing.id"}]}
    with pytest.raises(IntegrityError):
        load_schema(write(tmp_path, obj))


def test_duplicate_table_names_case_insensitive():
    with pytest.raises(IntegrityError):
        schema_from_tables("d", [("T", [("a", "int")], []), ("t", [("b", "int")], [])])


def test_fk_type_mismatch():
    with pytest.raises(IntegrityError):
        schema_from_tables("d", [("p", [("id", "int")], ["id"]), ("c", [("pid", "text")], [])], [("c.pid", "p.id")])


def test_malformed_schema_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SchemaParseError):
        load_schema(p)


def test_fixture_state_is_valid(movies, fixture_state):
    assert validate_state(movies, fixture_state) == []
    assert len(fixture_state.table_rows("actor")) == 2
    assert len(fixture_state.table_rows("casting")) == 8


def test_duplicate_pk_is_one_violation(movies, fixture_state):
    rows = dict(fixture_state.rows)
    rows["actor"] = rows["actor"] + ((1, "again"),)
    v = validate_state(movies, DatabaseState("movies", rows))
    assert [x.kind for x in v] == ["pk"]


def test_dangling_fk_value_is_one_violation(movies, fixture_state):
    rows = dict(fixture_state.rows)
    rows["casting"] = rows["casting"] + ((99, 500),)
    v = validate_state(movies, DatabaseState("movies", rows))
    assert [x.kind for x in v] == ["fk"]


def test_type_and_arity_violations(movies):
    st_ = DatabaseState("movies", {"actor": ((1, 2), (2,)), "casting": ()})
    kinds = sorted(x.kind for x in validate_state(movies, st_))
    assert kinds == ["arity", "type"]


def test_generate_is_deterministic(movies):
    a = generate_random_state(movies, 7, 8)
    b = generate_random_state(movies, 7, 8)
    assert a.dumps() == b.dumps()


def test_generated_casting_has_duplicate_pair(movies):
    rows = generate_random_state(movies, 7, 8).table_rows("casting")
    assert len(set(rows)) < len(rows)


def test_size_hint_must_be_positive(movies):
    with pytest.raises(ValueError):
        generate_random_state(movies, 0, 0)


def test_unsatisfiable_constraint():
    s = schema_from_tables("d", [("t", [("id", "int"), ("parent", "int")], ["id"])], [("t.parent", "t.id")])
    with pytest.raises(ConstraintError):
        generate_random_state(s, 0, 3)


def test_state_file_round_trip(tmp_path, movies):
    a = generate_random_state(movies, 3, 6)
    save_state(a, tmp_path / "st.json")
    b = load_state(tmp_path / "st.json", movies)
    assert a.dumps() == b.dumps()


def test_real_column_reloads_as_float(tmp_path):
    s = schema_from_tables("d", [("t", [("x", "real")], [])])
    p = write(tmp_path, {"schema_id": "d", "rows": {"t": [[3], [None]]}}, "st.json")
    st_ = load_state(p, s)
    assert st_.table_rows("t") == ((3.0,), (None,))
    assert isinstance(st_.table_rows("t")[0][0], float)
    assert validate_state(s, st_) == []


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(random_schemas(), st.integers(0, 10**6), st.integers(1, 12))
def test_generated_states_validate(schema, seed, size):
    state = generate_random_state(schema, seed, size)
    assert validate_state(schema, state) == []
    assert generate_random_state(schema, seed, size).dumps() == state.dumps()
    for t in schema.tables:
        assert len(state.table_rows(t.name)) == size


@settings(max_examples=100, deadline=None)
@given(random_schemas())
def test_schema_json_round_trip(schema):
    assert Schema.from_json(json.loads(json.dumps(schema.to_json()))) == schema
