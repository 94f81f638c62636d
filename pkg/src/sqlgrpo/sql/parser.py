"""Lexer and recursive-descent parser for the SQL subset.

Precedence, loosest first: OR, AND, NOT, comparison/IN/LIKE/BETWEEN/IS,
additive, multiplicative, primary. Comparisons do not chain.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    AGGREGATES,
    AggCall,
    Between,
    BinaryOp,
    ColumnRef,
    InList,
    InSubquery,
    IsNull,
    Join,
    LexError,
    Like,
    Literal,
    Not,
    OrderItem,
    ParseError,
    ScalarSubquery,
    Select,
    Star,
    TableRef,
)

KEYWORDS = frozenset(
    """SELECT DISTINCT FROM JOIN INNER ON WHERE GROUP BY HAVING ORDER ASC DESC LIMIT
    AND OR NOT IN LIKE BETWEEN IS NULL AS""".split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<real>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<str>'(?:[^']|'')*')
  | (?P<qident>"(?:[^"]|"")+"|`[^`]+`)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><>|!=|<=|>=|[=<>(),.*+\-/;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # KW IDENT INT REAL STR OP EOF
    value: object
    pos: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        return repr(self.value) if self.kind != "KW" else str(self.value)


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LexError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        raw = m.group()
        if kind == "ws":
            pass
        elif kind == "real":
            out.append(Token("REAL", float(raw), pos))
        elif kind == "int":
            out.append(Token("INT", int(raw), pos))
        elif kind == "str":
            out.append(Token("STR", raw[1:-1].replace("''", "'"), pos))
        elif kind == "qident":
            body = raw[1:-1]
            out.append(Token("IDENT", body.replace('""', '"') if raw[0] == '"' else body, pos))
        elif kind == "ident":
            up = raw.upper()
            out.append(Token("KW", up, pos) if up in KEYWORDS else Token("IDENT", raw, pos))
        else:
            out.append(Token("OP", "!=" if raw == "<>" else raw, pos))
        pos = m.end()
    out.append(Token("EOF", None, len(text)))
    return out


_CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
_EXPR_START = frozenset({"expression"})


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def is_kw(self, *words: str) -> bool:
        return self.tok.kind == "KW" and self.tok.value in words

    def is_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.value in ops

    def error(self, expected: frozenset[str] | set[str], what: str | None = None):
        t = self.tok
        msg = what or f"unexpected {t.describe()}"
        raise ParseError(msg, t.pos, frozenset(expected), t.describe())

    def expect_kw(self, word: str) -> Token:
        if not self.is_kw(word):
            self.error({word})
        return self.advance()

    def expect_op(self, op: str) -> Token:
        if not self.is_op(op):
            self.error({op})
        return self.advance()

    # ---- statements

    def parse_statement(self) -> Select:
        sel = self.parse_select()
        if self.is_op(";"):
            self.advance()
        if self.tok.kind != "EOF":
            self.error({"end of input"})
        return sel

    def parse_select(self) -> Select:
        self.expect_kw("SELECT")
        distinct = False
        if self.is_kw("DISTINCT"):
            self.advance()
            distinct = True
        items = [self.parse_item()]
        while self.is_op(","):
            self.advance()
            items.append(self.parse_item())
        from_ = None
        joins: list[Join] = []
        if self.is_kw("FROM"):
            self.advance()
            from_ = self.parse_table_ref()
            while self.is_kw("JOIN", "INNER"):
                if self.is_kw("INNER"):
                    self.advance()
                self.expect_kw("JOIN")
                t = self.parse_table_ref()
                self.expect_kw("ON")
                joins.append(Join(t, self.parse_expr()))
        where = None
        if self.is_kw("WHERE"):
            self.advance()
            where = self.parse_expr()
        group_by: list = []
        if self.is_kw("GROUP"):
            self.advance()
            self.expect_kw("BY")
            group_by.append(self.parse_expr())
            while self.is_op(","):
                self.advance()
                group_by.append(self.parse_expr())
        having = None
        if self.is_kw("HAVING"):
            self.advance()
            having = self.parse_expr()
        order_by: list[OrderItem] = []
        if self.is_kw("ORDER"):
            self.advance()
            self.expect_kw("BY")
            order_by.append(self.parse_order_item())
            while self.is_op(","):
                self.advance()
                order_by.append(self.parse_order_item())
        limit = None
        if self.is_kw("LIMIT"):
            self.advance()
            if self.tok.kind != "INT":
                self.error({"integer"})
            limit = self.advance().value
        return Select(
            items=tuple(items),
            from_=from_,
            joins=tuple(joins),
            where=where,
            group_by=tuple(group_by),
            having=having,
            order_by=tuple(order_by),
            limit=limit,
            distinct=distinct,
        )

    def parse_item(self):
        if self.is_op("*"):
            self.advance()
            return Star()
        return self.parse_expr()

    def parse_table_ref(self) -> TableRef:
        if self.tok.kind != "IDENT":
            self.error({"table name"})
        name = self.advance().value
        alias = None
        if self.is_kw("AS"):
            self.advance()
            if self.tok.kind != "IDENT":
                self.error({"alias"})
            alias = self.advance().value
        elif self.tok.kind == "IDENT":
            alias = self.advance().value
        return TableRef(name, alias)

    def parse_order_item(self) -> OrderItem:
        e = self.parse_expr()
        desc = False
        if self.is_kw("ASC", "DESC"):
            desc = self.advance().value == "DESC"
        return OrderItem(e, desc)

    # ---- expressions

    def parse_expr(self):
        left = self.parse_and()
        while self.is_kw("OR"):
            self.advance()
            left = BinaryOp("OR", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.is_kw("AND"):
            self.advance()
            left = BinaryOp("AND", left, self.parse_not())
        return left

    def parse_not(self):
        if self.is_kw("NOT"):
            self.advance()
            return Not(self.parse_not())
        return self.parse_predicate()

    def parse_predicate(self):
        left = self.parse_additive()
        if self.is_op(*_CMP_OPS):
            op = self.advance().value
            return BinaryOp(op, left, self.parse_additive())
        negated = False
        if self.is_kw("NOT") and self.peek().kind == "KW" and self.peek().value in ("IN", "LIKE", "BETWEEN"):
            self.advance()
            negated = True
        if self.is_kw("IN"):
            self.advance()
            self.expect_op("(")
            if self.is_kw("SELECT"):
                q = self.parse_select()
                self.expect_op(")")
                return InSubquery(left, q, negated)
            values = [self.parse_expr()]
            while self.is_op(","):
                self.advance()
                values.append(self.parse_expr())
            self.expect_op(")")
            return InList(left, tuple(values), negated)
        if self.is_kw("LIKE"):
            self.advance()
            return Like(left, self.parse_additive(), negated)
        if self.is_kw("BETWEEN"):
            self.advance()
            low = self.parse_additive()
            self.expect_kw("AND")
            return Between(left, low, self.parse_additive(), negated)
        if negated:
            self.error({"IN", "LIKE", "BETWEEN"})
        if self.is_kw("IS"):
            self.advance()
            neg = False
            if self.is_kw("NOT"):
                self.advance()
                neg = True
            self.expect_kw("NULL")
            return IsNull(left, neg)
        return left

    def parse_additive(self):
        left = self.parse_multiplicative()
        while self.is_op("+", "-"):
            op = self.advance().value
            left = BinaryOp(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self):
        left = self.parse_primary()
        while self.is_op("*", "/"):
            op = self.advance().value
            left = BinaryOp(op, left, self.parse_primary())
        return left

    def parse_primary(self):
        t = self.tok
        if t.kind in ("INT", "REAL", "STR"):
            self.advance()
            return Literal(t.value)
        if t.kind == "KW" and t.value == "NULL":
            self.advance()
            return Literal(None)
        if t.kind == "OP" and t.value == "-" and self.peek().kind in ("INT", "REAL"):
            self.advance()
            return Literal(-self.advance().value)
        if t.kind == "OP" and t.value == "(":
            self.advance()
            if self.is_kw("SELECT"):
                q = self.parse_select()
                self.expect_op(")")
                return ScalarSubquery(q)
            e = self.parse_expr()
            self.expect_op(")")
            return e
        if t.kind == "IDENT":
            if self.peek().kind == "OP" and self.peek().value == "(":
                return self.parse_call()
            self.advance()
            if self.is_op("."):
                self.advance()
                if self.tok.kind != "IDENT":
                    self.error({"column name"})
                return ColumnRef(t.value, self.advance().value)
            return ColumnRef(None, t.value)
        self.error({"expression"})

    def parse_call(self):
        name_tok = self.advance()
        func = str(name_tok.value).upper()
        if func not in AGGREGATES:
            raise ParseError(f"unknown function {name_tok.value!r}", name_tok.pos, frozenset(AGGREGATES), str(name_tok.value))
        self.expect_op("(")
        if func == "COUNT" and self.is_op("*"):
            self.advance()
            self.expect_op(")")
            return AggCall("COUNT", None, False)
        distinct = False
        if self.is_kw("DISTINCT"):
            self.advance()
            distinct = True
        arg = self.parse_expr()
        self.expect_op(")")
        return AggCall(func, arg, distinct)


def parse(sql_text: str) -> Select:
    """Parse one SELECT statement (optionally ``;``-terminated)."""
    return _Parser(sql_text).parse_statement()


def parse_expr(text: str):
    p = _Parser(text)
    e = p.parse_expr()
    if p.tok.kind != "EOF":
        p.error({"end of input"})
    return e
