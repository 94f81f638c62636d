"""Immutable AST for the supported SQL subset.

Nodes are frozen dataclasses, so ``==`` is structural equality. Literals also
compare their Python type, which keeps ``1`` and ``1.0`` apart.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator, Union

AGGREGATES = ("COUNT", "SUM", "AVG", "MIN", "MAX")
COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")
ARITHMETIC = ("+", "-", "*", "/")
LOGICAL = ("AND", "OR")


class SqlError(Exception):
    """Base class for all SQL failures (lexing, parsing, resolution, execution)."""


class LexError(SqlError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class ParseError(SqlError):
    def __init__(self, message: str, position: int, expected: frozenset[str] = frozenset(), found: str = ""):
        exp = f"; expected one of {sorted(expected)}" if expected else ""
        super().__init__(f"{message} at offset {position}{exp}")
        self.position = position
        self.expected = expected
        self.found = found


class ExecutionError(SqlError):
    pass


class ResolutionError(ExecutionError):
    """Unknown table or column."""


class AmbiguityError(ResolutionError):
    pass


@dataclass(frozen=True)
class ColumnRef:
    table: str | None
    column: str


@dataclass(frozen=True, eq=False)
class Literal:
    value: int | float | str | None

    def __eq__(self, other):
        return (
            isinstance(other, Literal)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((type(self.value).__name__, self.value))


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not:
    operand: Expr


@dataclass(frozen=True)
class InList:
    expr: Expr
    values: tuple[Expr, ...]
    negated: bool = False


@dataclass(frozen=True)
class InSubquery:
    expr: Expr
    query: Select
    negated: bool = False


@dataclass(frozen=True)
class Like:
    expr: Expr
    pattern: Expr
    negated: bool = False


@dataclass(frozen=True)
class Between:
    expr: Expr
    low: Expr
    high: Expr
    negated: bool = False


@dataclass(frozen=True)
class IsNull:
    expr: Expr
    negated: bool = False


@dataclass(frozen=True)
class ScalarSubquery:
    query: Select


@dataclass(frozen=True)
class AggCall:
    func: str
    arg: Expr | None  # None means COUNT(*)
    distinct: bool = False


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: str | None = None

    @property
    def binding(self) -> str:
        return self.alias or self.name


@dataclass(frozen=True)
class Join:
    table: TableRef
    on: Expr


@dataclass(frozen=True)
class OrderItem:
    expr: Expr
    descending: bool = False


@dataclass(frozen=True)
class Select:
    items: tuple[Expr | Star, ...]
    from_: TableRef | None = None
    joins: tuple[Join, ...] = ()
    where: Expr | None = None
    group_by: tuple[Expr, ...] = ()
    having: Expr | None = None
    order_by: tuple[OrderItem, ...] = ()
    limit: int | None = None
    distinct: bool = False

    @property
    def table_refs(self) -> tuple[TableRef, ...]:
        if self.from_ is None:
            return ()
        return (self.from_,) + tuple(j.table for j in self.joins)


Expr = Union[ColumnRef, Literal, BinaryOp, Not, InList, InSubquery, Like, Between, IsNull, ScalarSubquery, AggCall]


def children(node) -> Iterator:
    """Direct child nodes, descending into tuples."""
    for f in fields(node):
        v = getattr(node, f.name)
        if isinstance(v, tuple):
            yield from (x for x in v if _is_node(x))
        elif _is_node(v):
            yield v


def _is_node(x) -> bool:
    return hasattr(x, "__dataclass_fields__")


def walk(node, into_subqueries: bool = True) -> Iterator:
    """Pre-order traversal. Subquery bodies are skipped unless ``into_subqueries``."""
    yield node
    for ch in children(node):
        if not into_subqueries and isinstance(ch, Select) and not isinstance(node, Select):
            continue
        yield from walk(ch, into_subqueries)


def contains_aggregate(expr) -> bool:
    return any(isinstance(n, AggCall) for n in walk(expr, into_subqueries=False))
