"""Name resolution against a schema and schema-reference extraction.

Resolution qualifies every column with its binding and rewrites identifiers to
the schema's spelling. A table that occurs once in a FROM clause loses its
alias (its columns are qualified with the base table name); tables that occur
several times keep their aliases, which execution needs to tell them apart.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ..schema import Schema, Table
from .ast import (
    AggCall,
    AmbiguityError,
    Between,
    BinaryOp,
    ColumnRef,
    InList,
    InSubquery,
    IsNull,
    Join,
    Like,
    Literal,
    Not,
    OrderItem,
    ResolutionError,
    ScalarSubquery,
    Select,
    Star,
    TableRef,
)
from .parser import parse


@dataclass(frozen=True)
class SchemaRefs:
    tables: frozenset[str] = frozenset()
    columns: frozenset[str] = frozenset()
    invalid: frozenset[str] = frozenset()

    @property
    def valid(self) -> frozenset[str]:
        return self.tables | self.columns


@dataclass
class _Collector:
    strict: bool
    tables: set[str] = field(default_factory=set)
    columns: set[str] = field(default_factory=set)
    invalid: set[str] = field(default_factory=set)

    def bad(self, name: str, message: str):
        if self.strict:
            raise ResolutionError(message)
        self.invalid.add(name)


@dataclass
class _Binding:
    key: str  # name the query uses (alias or table name)
    out: str  # name after normalization
    table: Table | None
    base: str


class _Scope:
    def __init__(self, bindings: list[_Binding]):
        self.bindings = bindings

    def lookup(self, qualifier: str) -> _Binding | None:
        low = qualifier.lower()
        for b in self.bindings:
            if b.key.lower() == low:
                return b
        # a lone aliased table may still be named by its base name
        matches = [b for b in self.bindings if b.base.lower() == low]
        return matches[0] if len(matches) == 1 else None


def _bind_tables(sel: Select, schema: Schema, col: _Collector) -> tuple[_Scope, Select]:
    refs = sel.table_refs
    counts: dict[str, int] = {}
    for r in refs:
        counts[r.name.lower()] = counts.get(r.name.lower(), 0) + 1
    bindings: list[_Binding] = []
    new_refs: list[TableRef] = []
    seen_keys: set[str] = set()
    for r in refs:
        table = schema.table(r.name)
        base = table.name if table else r.name
        if table is None:
            col.bad(r.name, f"no such table: {r.name}")
        else:
            col.tables.add(table.name)
        key = r.alias or r.name
        if key.lower() in seen_keys:
            raise AmbiguityError(f"table name {key!r} bound more than once")
        seen_keys.add(key.lower())
        if counts[r.name.lower()] == 1:
            out, new_ref = base, TableRef(base, None)
        else:
            out, new_ref = key, TableRef(base, r.alias)
        bindings.append(_Binding(key, out, table, base))
        new_refs.append(new_ref)
    if not refs:
        return _Scope([]), sel
    joins = tuple(Join(t, j.on) for t, j in zip(new_refs[1:], sel.joins))
    return _Scope(bindings), dataclasses.replace(sel, from_=new_refs[0], joins=joins)


def _resolve_column(ref: ColumnRef, scope: _Scope, col: _Collector) -> ColumnRef:
    if ref.table is not None:
        b = scope.lookup(ref.table)
        if b is None:
            col.bad(f"{ref.table}.{ref.column}", f"no such column: {ref.table}.{ref.column}")
            return ref
        if b.table is None:
            col.bad(f"{b.base}.{ref.column}", f"no such column: {ref.table}.{ref.column}")
            return ref
        c = b.table.column(ref.column)
        if c is None:
            col.bad(f"{b.table.name}.{ref.column}", f"no such column: {ref.table}.{ref.column}")
            return ref
        col.columns.add(f"{b.table.name}.{c.name}")
        return ColumnRef(b.out, c.name)
    hits = [(b, b.table.column(ref.column)) for b in scope.bindings if b.table is not None]
    hits = [(b, c) for b, c in hits if c is not None]
    if len(hits) > 1:
        raise AmbiguityError(f"ambiguous column name: {ref.column}")
    if not hits:
        col.bad(ref.column, f"no such column: {ref.column}")
        return ref
    b, c = hits[0]
    col.columns.add(f"{b.table.name}.{c.name}")
    return ColumnRef(b.out, c.name)


def _resolve_expr(e, scope: _Scope, schema: Schema, col: _Collector):
    if e is None or isinstance(e, (Literal, Star)):
        return e
    if isinstance(e, ColumnRef):
        return _resolve_column(e, scope, col)
    r = lambda x: _resolve_expr(x, scope, schema, col)  # noqa: E731
    if isinstance(e, BinaryOp):
        return BinaryOp(e.op, r(e.left), r(e.right))
    if isinstance(e, Not):
        return Not(r(e.operand))
    if isinstance(e, InList):
        return InList(r(e.expr), tuple(r(v) for v in e.values), e.negated)
    if isinstance(e, InSubquery):
        return InSubquery(r(e.expr), _resolve_select(e.query, schema, col), e.negated)
    if isinstance(e, Like):
        return Like(r(e.expr), r(e.pattern), e.negated)
    if isinstance(e, Between):
        return Between(r(e.expr), r(e.low), r(e.high), e.negated)
    if isinstance(e, IsNull):
        return IsNull(r(e.expr), e.negated)
    if isinstance(e, ScalarSubquery):
        return ScalarSubquery(_resolve_select(e.query, schema, col))
    if isinstance(e, AggCall):
        return AggCall(e.func, r(e.arg), e.distinct)
    raise TypeError(f"unexpected node {type(e).__name__}")


def _resolve_select(sel: Select, schema: Schema, col: _Collector) -> Select:
    # subqueries are uncorrelated: each gets a fresh scope
    scope, sel = _bind_tables(sel, schema, col)
    r = lambda x: _resolve_expr(x, scope, schema, col)  # noqa: E731
    return Select(
        items=tuple(r(i) for i in sel.items),
        from_=sel.from_,
        joins=tuple(Join(j.table, r(j.on)) for j in sel.joins),
        where=r(sel.where),
        group_by=tuple(r(g) for g in sel.group_by),
        having=r(sel.having),
        order_by=tuple(OrderItem(r(o.expr), o.descending) for o in sel.order_by),
        limit=sel.limit,
        distinct=sel.distinct,
    )


def resolve(ast: Select, schema: Schema) -> Select:
    """Fully qualify ``ast``; raises ResolutionError/AmbiguityError on bad names."""
    return _resolve_select(ast, schema, _Collector(strict=True))


def extract_refs(ast: Select | str, schema: Schema) -> SchemaRefs:
    """Tables and ``table.column`` names used by ``ast``; unknown names go to ``invalid``.

    ``*`` contributes no column references. Raises AmbiguityError when an
    unqualified column matches more than one FROM table.
    """
    if isinstance(ast, str):
        ast = parse(ast)
    col = _Collector(strict=False)
    _resolve_select(ast, schema, col)
    invalid = frozenset(col.invalid - col.tables - col.columns)
    return SchemaRefs(frozenset(col.tables), frozenset(col.columns), invalid)
