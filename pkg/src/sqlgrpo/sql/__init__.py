"""SQL subset frontend: parsing, canonical printing and name resolution."""
from .ast import (
    AGGREGATES,
    AggCall,
    AmbiguityError,
    Between,
    BinaryOp,
    ColumnRef,
    ExecutionError,
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
    ResolutionError,
    ScalarSubquery,
    Select,
    SqlError,
    Star,
    TableRef,
)
from .parser import parse, tokenize
from .render import render, render_expr
from .resolve import SchemaRefs, extract_refs, resolve


def canonical(sql: str | Select, schema) -> str:
    """Resolved, rendered form; equal for queries that differ only in layout, case or aliases."""
    ast = parse(sql) if isinstance(sql, str) else sql
    return render(resolve(ast, schema))
