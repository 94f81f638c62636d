"""Deterministic relational interpreter for the SQL subset.

Pipeline: FROM/JOIN (nested loops, ON filter) -> WHERE -> GROUP BY -> HAVING ->
projection -> DISTINCT -> ORDER BY -> LIMIT.

Predicates use three-valued logic; only rows whose condition is true survive
WHERE/ON/HAVING, so a comparison against Null never selects a row. Integer
division truncates toward zero and division by zero yields Null. In grouped
queries a bare column takes the value from the group's first row.
"""
from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass
from typing import Any, Callable

from .schema import DatabaseState, Schema
from .sql import (
    AggCall,
    Between,
    BinaryOp,
    ColumnRef,
    ExecutionError,
    InList,
    InSubquery,
    IsNull,
    Like,
    Literal,
    Not,
    ScalarSubquery,
    Select,
    Star,
    parse,
    render_expr,
    resolve,
)
from .sql.ast import contains_aggregate

REL_TOL = 1e-9
_I64 = (-(2**63), 2**63 - 1)


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    ordered: bool = False

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row arity does not match column count")


# ---------------------------------------------------------------- values

def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _typename(v) -> str:
    if isinstance(v, bool):
        return "boolean"
    return {int: "int", float: "real", str: "text"}.get(type(v), type(v).__name__)


def _check_comparable(a, b, op: str):
    if (_is_num(a) and _is_num(b)) or (isinstance(a, str) and isinstance(b, str)):
        return
    raise ExecutionError(f"type error: cannot compare {_typename(a)} {op} {_typename(b)}")


def _compare(op: str, a, b):
    if a is None or b is None:
        return None
    _check_comparable(a, b, op)
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _arith(op: str, a, b):
    if a is None or b is None:
        return None
    if not (_is_num(a) and _is_num(b)):
        raise ExecutionError(f"type error: {_typename(a)} {op} {_typename(b)}")
    if op == "/":
        if b == 0:
            return None
        if isinstance(a, int) and isinstance(b, int):
            q = abs(a) // abs(b)
            return q if (a >= 0) == (b >= 0) else -q
        return a / b
    r = a + b if op == "+" else a - b if op == "-" else a * b
    if isinstance(r, int) and not (_I64[0] <= r <= _I64[1]):
        return float(r)
    return r


def _truth(v, where: str):
    if v is None or isinstance(v, bool):
        return v
    raise ExecutionError(f"type error: {where} expects a boolean, got {_typename(v)}")


def _and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _not(a):
    return None if a is None else not a


@functools.lru_cache(maxsize=512)
def _like_regex(pattern: str) -> re.Pattern:
    out = []
    for ch in pattern:
        if ch == "%":
            out.append(".*")
        elif ch == "_":
            out.append(".")
        else:
            out.append(re.escape(_ascii_lower(ch)))
    return re.compile("".join(out), re.DOTALL)


def _ascii_lower(s: str) -> str:
    # LIKE folds ASCII letters only
    return "".join(c.lower() if "A" <= c <= "Z" else c for c in s)


def _sort_key(v):
    # Null < numbers < text
    if v is None:
        return (0, 0)
    if isinstance(v, bool):
        return (1, int(v))
    if _is_num(v):
        return (1, v)
    return (2, v)


def _output(v):
    return int(v) if isinstance(v, bool) else v


# ---------------------------------------------------------------- compiler

class _Env:
    """Column layout of the joined row: (binding, column) -> offset."""

    def __init__(self, layout: dict[tuple[str, str], int], width: int):
        self.layout = layout
        self.width = width


# compiled expressions take (row, group); group is None outside aggregation
Compiled = Callable[[Any, Any], Any]


class _Compiler:
    def __init__(self, schema: Schema, state: DatabaseState, env: _Env):
        self.schema = schema
        self.state = state
        self.env = env

    def compile(self, e, allow_agg: bool) -> Compiled:
        if isinstance(e, Literal):
            v = e.value
            return lambda row, group: v
        if isinstance(e, ColumnRef):
            key = (e.table.lower() if e.table else "", e.column.lower())
            if key not in self.env.layout:
                raise ExecutionError(f"no such column: {render_expr(e)}")
            idx = self.env.layout[key]
            return lambda row, group: None if row is None else row[idx]
        if isinstance(e, Star):
            raise ExecutionError("'*' is only allowed as a select item or in COUNT(*)")
        if isinstance(e, AggCall):
            if not allow_agg:
                raise ExecutionError(f"misuse of aggregate {e.func}()")
            return self._aggregate(e)
        c = lambda x: self.compile(x, allow_agg)  # noqa: E731
        if isinstance(e, BinaryOp):
            left, right = c(e.left), c(e.right)
            op = e.op
            if op == "AND":
                return lambda row, g: _and(_truth(left(row, g), "AND"), _truth(right(row, g), "AND"))
            if op == "OR":
                return lambda row, g: _or(_truth(left(row, g), "OR"), _truth(right(row, g), "OR"))
            if op in ("+", "-", "*", "/"):
                return lambda row, g: _arith(op, left(row, g), right(row, g))
            return lambda row, g: _compare(op, left(row, g), right(row, g))
        if isinstance(e, Not):
            inner = c(e.operand)
            return lambda row, g: _not(_truth(inner(row, g), "NOT"))
        if isinstance(e, IsNull):
            inner = c(e.expr)
            neg = e.negated
            return lambda row, g: (inner(row, g) is None) != neg
        if isinstance(e, Between):
            x, lo, hi = c(e.expr), c(e.low), c(e.high)
            neg = e.negated

            def between(row, g):
                v = x(row, g)
                r = _and(_compare(">=", v, lo(row, g)), _compare("<=", v, hi(row, g)))
                return _not(r) if neg else r
            return between
        if isinstance(e, Like):
            x, pat = c(e.expr), c(e.pattern)
            neg = e.negated

            def like(row, g):
                v, p = x(row, g), pat(row, g)
                if v is None or p is None:
                    return None
                if not (isinstance(v, str) and isinstance(p, str)):
                    raise ExecutionError(f"type error: LIKE needs text, got {_typename(v)} LIKE {_typename(p)}")
                r = _like_regex(p).fullmatch(_ascii_lower(v)) is not None
                return not r if neg else r
            return like
        if isinstance(e, InList):
            x = c(e.expr)
            vals = [c(v) for v in e.values]
            neg = e.negated
            return lambda row, g: _in(x(row, g), [f(row, g) for f in vals], neg)
        if isinstance(e, InSubquery):
            x = c(e.expr)
            sub = self._subquery(e.query, "IN")
            neg = e.negated
            return lambda row, g: _in(x(row, g), [r[0] for r in sub().rows], neg)
        if isinstance(e, ScalarSubquery):
            sub = self._subquery(e.query, "scalar")

            def scalar(row, g):
                res = sub()
                return res.rows[0][0] if res.rows else None
            return scalar
        raise ExecutionError(f"unsupported expression {type(e).__name__}")

    def _subquery(self, q: Select, kind: str):
        cache: list[ResultTable] = []

        def run() -> ResultTable:
            if not cache:
                res = _execute_resolved(q, self.schema, self.state)
                if len(res.columns) != 1:
                    raise ExecutionError(f"{kind} subquery must return one column, got {len(res.columns)}")
                cache.append(res)
            return cache[0]
        return run

    def _aggregate(self, e: AggCall) -> Compiled:
        func = e.func
        if e.arg is None:
            return lambda row, group: len(group)
        if contains_aggregate(e.arg):
            raise ExecutionError(f"misuse of aggregate: nested aggregate in {func}()")
        arg = self.compile(e.arg, allow_agg=False)
        distinct = e.distinct

        def agg(row, group):
            vals = [v for v in (arg(r, None) for r in group) if v is not None]
            if distinct:
                seen, uniq = set(), []
                for v in vals:
                    if v not in seen:
                        seen.add(v)
                        uniq.append(v)
                vals = uniq
            if func == "COUNT":
                return len(vals)
            if any(isinstance(v, bool) for v in vals):
                raise ExecutionError(f"type error: {func}() over boolean")
            if func in ("SUM", "AVG"):
                if any(not _is_num(v) for v in vals):
                    raise ExecutionError(f"type error: {func}() over text")
                if not vals:
                    return None
                total = vals[0]
                for v in vals[1:]:
                    total = total + v
                if func == "SUM":
                    return total
                return float(total) / len(vals)
            if not vals:
                return None
            for v in vals[1:]:
                _check_comparable(vals[0], v, func)
            return min(vals) if func == "MIN" else max(vals)
        return agg


def _in(v, candidates: list, negated: bool):
    # membership in an empty set is false even for NULL
    if not candidates:
        return negated
    if v is None:
        return None
    found = False
    saw_null = False
    for cnd in candidates:
        r = _compare("=", v, cnd)
        if r is None:
            saw_null = True
        elif r:
            found = True
            break
    res = True if found else (None if saw_null else False)
    return _not(res) if negated else res


# ---------------------------------------------------------------- execution

def _check_aggregate_placement(sel: Select):
    for name, part in (("WHERE", sel.where), ("GROUP BY", sel.group_by), ("ON", tuple(j.on for j in sel.joins))):
        nodes = part if isinstance(part, tuple) else (part,)
        for n in nodes:
            if n is not None and contains_aggregate(n):
                raise ExecutionError(f"misuse of aggregate in {name}")


def _from_rows(sel: Select, schema: Schema, state: DatabaseState, compiler_factory) -> tuple[_Env, list[tuple]]:
    layout: dict[tuple[str, str], int] = {}
    width = 0
    tables = []
    for ref in sel.table_refs:
        table = schema.table(ref.name)
        if table is None:
            raise ExecutionError(f"no such table: {ref.name}")
        tables.append((ref, table))
    rows: list[tuple] = [()]
    for k, (ref, table) in enumerate(tables):
        binding = ref.binding.lower()
        for i, col in enumerate(table.columns):
            layout[(binding, col.name.lower())] = width + i
        width += len(table.columns)
        env = _Env(dict(layout), width)
        data = state.table_rows(table.name)
        if k == 0:
            rows = [tuple(r) for r in data]
            continue
        on = compiler_factory(env).compile(sel.joins[k - 1].on, allow_agg=False)
        joined = []
        for left in rows:
            for right in data:
                combo = left + tuple(right)
                if _truth(on(combo, None), "ON") is True:
                    joined.append(combo)
        rows = joined
    return _Env(layout, width), rows


def _execute_resolved(sel: Select, schema: Schema, state: DatabaseState) -> ResultTable:
    _check_aggregate_placement(sel)
    env, rows = _from_rows(sel, schema, state, lambda env: _Compiler(schema, state, env))
    comp = _Compiler(schema, state, env)

    if sel.where is not None:
        pred = comp.compile(sel.where, allow_agg=False)
        rows = [r for r in rows if _truth(pred(r, None), "WHERE") is True]

    aggregated = bool(sel.group_by) or sel.having is not None or any(
        contains_aggregate(x) for x in list(sel.items) + [o.expr for o in sel.order_by] if not isinstance(x, Star)
    )

    # expand '*' into every FROM column
    item_fns: list[Compiled] = []
    columns: list[str] = []
    for item in sel.items:
        if isinstance(item, Star):
            if not sel.table_refs:
                raise ExecutionError("no tables specified for '*'")
            for ref in sel.table_refs:
                table = schema.table(ref.name)
                for col in table.columns:
                    item_fns.append(comp.compile(ColumnRef(ref.binding, col.name), allow_agg=aggregated))
                    columns.append(col.name)
        else:
            item_fns.append(comp.compile(item, allow_agg=aggregated))
            columns.append(item.column if isinstance(item, ColumnRef) else render_expr(item))

    order_fns: list[tuple[Compiled | int, bool]] = []
    for o in sel.order_by:
        if isinstance(o.expr, Literal) and isinstance(o.expr.value, int):
            pos = o.expr.value
            if not 1 <= pos <= len(columns):
                raise ExecutionError(f"ORDER BY term out of range: {pos}")
            order_fns.append((pos - 1, o.descending))
        else:
            order_fns.append((comp.compile(o.expr, allow_agg=aggregated), o.descending))

    # contexts: (representative row, group rows or None)
    contexts: list[tuple[Any, Any]]
    if aggregated:
        if sel.group_by:
            keys = [comp.compile(g, allow_agg=False) for g in sel.group_by]
            groups: dict[tuple, list[tuple]] = {}
            for r in rows:
                groups.setdefault(tuple(k(r, None) for k in keys), []).append(r)
            contexts = [(g[0], g) for g in groups.values()]
        else:
            contexts = [(rows[0] if rows else None, rows)]
        if sel.having is not None:
            hv = comp.compile(sel.having, allow_agg=True)
            contexts = [(r, g) for r, g in contexts if _truth(hv(r, g), "HAVING") is True]
    else:
        contexts = [(r, None) for r in rows]

    out: list[tuple[tuple, tuple]] = []
    for r, g in contexts:
        values = tuple(_output(f(r, g)) for f in item_fns)
        keys = tuple(values[f] if isinstance(f, int) else _output(f(r, g)) for f, _ in order_fns)
        out.append((values, keys))

    if sel.distinct:
        seen: set = set()
        uniq = []
        for values, keys in out:
            if values not in seen:
                seen.add(values)
                uniq.append((values, keys))
        out = uniq

    if order_fns:
        for i in reversed(range(len(order_fns))):
            desc = order_fns[i][1]
            try:
                out.sort(key=lambda vk: _sort_key(vk[1][i]), reverse=desc)
            except TypeError as e:
                raise ExecutionError(f"type error in ORDER BY: {e}") from e

    result = [v for v, _ in out]
    if sel.limit is not None:
        result = result[: sel.limit]
    return ResultTable(tuple(columns), tuple(result), ordered=bool(sel.order_by))


def execute(ast: Select | str, schema: Schema, state: DatabaseState) -> ResultTable:
    """Run ``ast`` on ``state``. All failures surface as ExecutionError (or a SqlError subclass)."""
    if isinstance(ast, str):
        ast = parse(ast)
    resolved = resolve(ast, schema)
    return _execute_resolved(resolved, schema, state)


# ---------------------------------------------------------------- comparison

def _values_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if _is_num(a) and _is_num(b):
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=0.0)
    return type(a) is type(b) and a == b


def _rows_equal(r1: tuple, r2: tuple) -> bool:
    return len(r1) == len(r2) and all(_values_equal(a, b) for a, b in zip(r1, r2))


def _canon_key(row: tuple):
    out = []
    for v in row:
        if v is None:
            out.append((0, ""))
        elif _is_num(v):
            out.append((1, f"{float(v):.8e}"))
        else:
            out.append((2, str(v)))
    return tuple(out)


def compare_results(a: ResultTable, b: ResultTable) -> bool:
    """True when the two results are equal (sequences if either is ordered, else multisets)."""
    if len(a.columns) != len(b.columns) or len(a.rows) != len(b.rows):
        return False
    if a.ordered or b.ordered:
        return all(_rows_equal(x, y) for x, y in zip(a.rows, b.rows))
    xs = sorted(a.rows, key=_canon_key)
    ys = sorted(b.rows, key=_canon_key)
    if all(_rows_equal(x, y) for x, y in zip(xs, ys)):
        return True
    # rounding in the sort key can split near-equal reals; fall back to matching
    remaining = list(b.rows)
    for x in a.rows:
        for i, y in enumerate(remaining):
            if _rows_equal(x, y):
                del remaining[i]
                break
        else:
            return False
    return True
