"""Canonical single-line SQL printer. ``parse(render(ast)) == ast``."""
from __future__ import annotations

import re

from .ast import (
    AggCall,
    Between,
    BinaryOp,
    ColumnRef,
    InList,
    InSubquery,
    IsNull,
    Like,
    Literal,
    Not,
    ScalarSubquery,
    Select,
    Star,
    TableRef,
)
from .parser import KEYWORDS

_PLAIN_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# binding strength; higher binds tighter
_PREC = {"OR": 1, "AND": 2, "NOT": 3, "PRED": 4, "+": 5, "-": 5, "*": 6, "/": 6, "ATOM": 7}


def _prec(e) -> int:
    if isinstance(e, BinaryOp):
        return _PREC.get(e.op, _PREC["PRED"])
    if isinstance(e, Not):
        return _PREC["NOT"]
    if isinstance(e, (InList, InSubquery, Like, Between, IsNull)):
        return _PREC["PRED"]
    return _PREC["ATOM"]


def ident(name: str) -> str:
    if _PLAIN_IDENT.match(name) and name.upper() not in KEYWORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def _literal(v) -> str:
    if v is None:
        return "NULL"
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    if isinstance(v, float):
        r = repr(v)
        return r if any(ch in r for ch in ".e") else r + ".0"
    return str(v)


def _wrap(e, min_prec: int) -> str:
    s = render_expr(e)
    return f"({s})" if _prec(e) < min_prec else s


def render_expr(e) -> str:
    if isinstance(e, ColumnRef):
        return f"{ident(e.table)}.{ident(e.column)}" if e.table else ident(e.column)
    if isinstance(e, Literal):
        return _literal(e.value)
    if isinstance(e, Star):
        return "*"
    if isinstance(e, AggCall):
        if e.arg is None:
            return f"{e.func}(*)"
        return f"{e.func}({'DISTINCT ' if e.distinct else ''}{render_expr(e.arg)})"
    if isinstance(e, ScalarSubquery):
        return f"({render(e.query)})"
    if isinstance(e, BinaryOp):
        p = _prec(e)
        if p == _PREC["PRED"]:
            # comparisons do not chain: wrap anything at predicate level or looser
            return f"{_wrap(e.left, p + 1)} {e.op} {_wrap(e.right, p + 1)}"
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, Not):
        return f"NOT {_wrap(e.operand, _PREC['NOT'])}"
    neg = "NOT " if getattr(e, "negated", False) else ""
    lhs = _PREC["PRED"] + 1
    if isinstance(e, InList):
        return f"{_wrap(e.expr, lhs)} {neg}IN ({', '.join(render_expr(v) for v in e.values)})"
    if isinstance(e, InSubquery):
        return f"{_wrap(e.expr, lhs)} {neg}IN ({render(e.query)})"
    if isinstance(e, Like):
        return f"{_wrap(e.expr, lhs)} {neg}LIKE {_wrap(e.pattern, lhs)}"
    if isinstance(e, Between):
        return f"{_wrap(e.expr, lhs)} {neg}BETWEEN {_wrap(e.low, lhs)} AND {_wrap(e.high, lhs)}"
    if isinstance(e, IsNull):
        return f"{_wrap(e.expr, lhs)} IS {'NOT ' if e.negated else ''}NULL"
    raise TypeError(f"cannot render {type(e).__name__}")


def _table(t: TableRef) -> str:
    return ident(t.name) + (f" AS {ident(t.alias)}" if t.alias else "")


def render(sel: Select) -> str:
    parts = ["SELECT"]
    if sel.distinct:
        parts.append("DISTINCT")
    parts.append(", ".join(render_expr(i) for i in sel.items))
    if sel.from_ is not None:
        parts.append("FROM " + _table(sel.from_))
        for j in sel.joins:
            parts.append(f"JOIN {_table(j.table)} ON {render_expr(j.on)}")
    if sel.where is not None:
        parts.append("WHERE " + render_expr(sel.where))
    if sel.group_by:
        parts.append("GROUP BY " + ", ".join(render_expr(g) for g in sel.group_by))
    if sel.having is not None:
        parts.append("HAVING " + render_expr(sel.having))
    if sel.order_by:
        parts.append(
            "ORDER BY " + ", ".join(render_expr(o.expr) + (" DESC" if o.descending else "") for o in sel.order_by)
        )
    if sel.limit is not None:
        parts.append(f"LIMIT {sel.limit}")
    return " ".join(parts)
