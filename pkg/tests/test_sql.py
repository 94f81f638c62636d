import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import GOLD, VARIANT
from sqlgrpo.schema import generate_random_state, schema_from_tables
from sqlgrpo.sql import (
    AggCall,
    AmbiguityError,
    BinaryOp,
    ColumnRef,
    LexError,
    Literal,
    ParseError,
    Select,
    TableRef,
    canonical,
    extract_refs,
    parse,
    render,
    resolve,
)
from strategies import selects
from querygen import QueryGen

import random


def test_actor_count_gold_ast():
    ast = parse(GOLD)
    assert ast.having == BinaryOp(">", AggCall("COUNT", ColumnRef("casting", "movieid"), True), Literal(3))
    assert ast.group_by == (ColumnRef("actor", "id"), ColumnRef("actor", "name"))


def test_minimal_select():
    assert parse("SELECT name FROM actor") == Select(items=(ColumnRef(None, "name"),), from_=TableRef("actor"))


def test_select_from_is_parse_error_at_from():
    with pytest.raises(ParseError) as ei:
        parse("SELECT FROM")
    assert ei.value.position == 7
    assert ei.value.found == "FROM"
    assert "expression" in ei.value.expected


def test_lex_error():
    with pytest.raises(LexError) as ei:
        parse("SELECT $ FROM t")
    assert ei.value.position == 7


@pytest.mark.parametrize("bad", ["SELECT", "SELECT a FROM", "SELECT a FROM t WHERE", "SELECT a b c FROM t",
                                 "SELECT a FROM t LIMIT -1", "SELECT foo(a) FROM t", "SELECT 'open FROM t"])
def test_malformed_queries_raise(bad):
    with pytest.raises((ParseError, LexError)):
        parse(bad)


def test_keywords_case_insensitive():
    assert parse("select name from actor where id >= 2 order by name desc") == \
        parse("SELECT name FROM actor WHERE id >= 2 ORDER BY name DESC")


def test_resolved_render(movies):
    assert render(resolve(parse("select  name from actor"), movies)) == "SELECT actor.name FROM actor"


def test_aliases_normalized_away(movies):
    aliased = "SELECT a.name FROM actor AS a JOIN casting c ON a.id = c.actorid"
    plain = "SELECT actor.name FROM actor JOIN casting ON actor.id = casting.actorid"
    assert canonical(aliased, movies) == canonical(plain, movies)


@pytest.mark.parametrize("q", [GOLD, VARIANT])
def test_actor_count_render_round_trip(q):
    a = parse(q)
    assert parse(render(a)) == a
    assert render(parse(render(a))) == render(a)


def test_string_literal_escaping():
    a = parse("SELECT name FROM actor WHERE name = 'O''Hara'")
    assert a.where.right == Literal("O'Hara")
    assert "'O''Hara'" in render(a)


def test_actor_count_refs(movies):
    r = extract_refs(GOLD, movies)
    assert r.tables == {"actor", "casting"}
    assert r.columns == {"actor.name", "actor.id", "casting.actorid", "casting.movieid"}
    assert r.invalid == set()


def test_no_refs(movies):
    r = extract_refs("SELECT 1", movies)
    assert not r.tables and not r.columns and not r.invalid


def test_unknown_column_is_invalid(movies):
    assert extract_refs("SELECT actor.wage FROM actor", movies).invalid == {"actor.wage"}


def test_unknown_table_is_invalid(movies):
    r = extract_refs("SELECT a.name FROM actor AS a JOIN nope ON a.id = nope.x", movies)
    assert "nope" in r.invalid
    assert r.tables == {"actor"}


def test_ambiguous_column():
    s = schema_from_tables("d", [("p", [("id", "int")], ["id"]), ("q", [("id", "int")], ["id"])])
    with pytest.raises(AmbiguityError):
        extract_refs("SELECT id FROM p JOIN q ON p.id = q.id", s)


def test_refs_alias_and_case_invariant(movies):
    a = extract_refs("select X.NAME from ACTOR as X", movies)
    b = extract_refs("SELECT actor.name FROM actor", movies)
    assert a == b


@settings(max_examples=1200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(selects())
def test_parse_render_round_trip(ast):
    text = render(ast)
    assert parse(text) == ast
    assert render(parse(text)) == text


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_extract_refs_total_and_disjoint(seed):
    from sqlgrpo.corpus import SCHEMA_BUILDERS
    rng = random.Random(seed)
    schema = SCHEMA_BUILDERS[rng.choice(sorted(SCHEMA_BUILDERS))]()
    state = generate_random_state(schema, seed, 4)
    q = QueryGen(schema, state, rng).query()
    try:
        r = extract_refs(q, schema)
    except AmbiguityError:
        return
    valid = r.tables | r.columns
    assert not (r.invalid & valid)
    for c in r.columns:
        t, col = c.split(".")
        assert schema.table(t).column(col) is not None
