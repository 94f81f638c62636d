"""Relational schemas, concrete database states, and the seeded state fuzzer.

Values are plain Python scalars: ``int`` (64-bit range), ``float`` (finite),
``str`` and ``None`` for Null. ``bool`` is never a stored value.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

COLUMN_TYPES = ("int", "real", "text")
INT_MIN, INT_MAX = -(2**63), 2**63 - 1

# Null probability for nullable columns in generated states.
NULL_RATE = 0.1
# Probability that a row of a key-less table repeats an earlier row.
DUPLICATE_RATE = 0.25

_WORDS = (
    "Alice", "Bob", "Carla", "Dan", "Erin", "Farid", "Gao", "Hana", "Ivan",
    "Jun", "Kofi", "Lena", "Mai", "Nico", "Omar", "Pia", "Quan", "Rosa",
    "Sven", "Tuan", "Uma", "Vera", "Wei", "Xenia", "Yuki", "Zoe", "Anh",
    "Bea", "Chen", "Dara", "Emil", "Fay", "Gus", "Hugo", "Ines", "Jana",
    "Kai", "Lia", "Mina", "Noor", "Otto", "Paz", "Remi", "Sara", "Tom",
    "Ugo", "Vito", "Wren", "Yara", "Zeno",
)


class SchemaError(ValueError):
    """Base class for schema and state problems."""


class SchemaParseError(SchemaError):
    pass


class IntegrityError(SchemaError):
    pass


class ConstraintError(SchemaError):
    """Raised when the fuzzer cannot satisfy key constraints."""


@dataclass(frozen=True)
class Column:
    name: str
    type: str


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    primary_key: tuple[str, ...] = ()

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column_index(self, name: str) -> int | None:
        low = name.lower()
        for i, c in enumerate(self.columns):
            if c.name.lower() == low:
                return i
        return None

    def column(self, name: str) -> Column | None:
        i = self.column_index(name)
        return None if i is None else self.columns[i]


@dataclass(frozen=True)
class ForeignKey:
    child_table: str
    child_column: str
    parent_table: str
    parent_column: str

    def __str__(self) -> str:
        return f"{self.child_table}.{self.child_column} -> {self.parent_table}.{self.parent_column}"


@dataclass(frozen=True)
class Schema:
    db_id: str
    tables: tuple[Table, ...] = ()
    foreign_keys: tuple[ForeignKey, ...] = ()

    def __post_init__(self):
        problems = _schema_problems(self)
        if problems:
            raise IntegrityError("; ".join(problems))

    def table(self, name: str) -> Table | None:
        low = name.lower()
        for t in self.tables:
            if t.name.lower() == low:
                return t
        return None

    @property
    def table_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tables)

    def to_json(self) -> dict[str, Any]:
        return {
            "db_id": self.db_id,
            "tables": [
                {
                    "name": t.name,
                    "columns": [{"name": c.name, "type": c.type} for c in t.columns],
                    "primary_key": list(t.primary_key),
                }
                for t in self.tables
            ],
            "foreign_keys": [
                {"from": f"{fk.child_table}.{fk.child_column}", "to": f"{fk.parent_table}.{fk.parent_column}"}
                for fk in self.foreign_keys
            ],
        }

    @classmethod
    def from_json(cls, obj: Any) -> Schema:
        try:
            tables = tuple(
                Table(
                    name=str(t["name"]),
                    columns=tuple(Column(str(c["name"]), str(c["type"]).lower()) for c in t["columns"]),
                    primary_key=tuple(str(k) for k in t.get("primary_key", [])),
                )
                for t in obj.get("tables", [])
            )
            fks = []
            for fk in obj.get("foreign_keys", []):
                ct, cc = _split_ref(fk["from"])
                pt, pc = _split_ref(fk["to"])
                fks.append(ForeignKey(ct, cc, pt, pc))
            db_id = str(obj["db_id"])
        except (KeyError, TypeError, AttributeError) as e:
            raise SchemaParseError(f"malformed schema object: {e!r}") from e
        return cls(db_id, tables, tuple(fks))


def _split_ref(ref: Any) -> tuple[str, str]:
    if not isinstance(ref, str) or ref.count(".") != 1:
        raise SchemaParseError(f"foreign key endpoint must look like 'table.column', got {ref!r}")
    t, c = ref.split(".")
    return t, c


def _schema_problems(schema: Schema) -> list[str]:
    problems = []
    seen: set[str] = set()
    for t in schema.tables:
        if t.name.lower() in seen:
            problems.append(f"duplicate table {t.name!r}")
        seen.add(t.name.lower())
        cols: set[str] = set()
        for c in t.columns:
            if c.name.lower() in cols:
                problems.append(f"duplicate column {t.name}.{c.name}")
            cols.add(c.name.lower())
            if c.type not in COLUMN_TYPES:
                problems.append(f"bad type {c.type!r} for {t.name}.{c.name}")
        for k in t.primary_key:
            if k.lower() not in cols:
                problems.append(f"primary key column {t.name}.{k} does not exist")
    for fk in schema.foreign_keys:
        child, parent = schema.table(fk.child_table), schema.table(fk.parent_table)
        ccol = child.column(fk.child_column) if child else None
        pcol = parent.column(fk.parent_column) if parent else None
        if ccol is None or pcol is None:
            problems.append(f"dangling foreign key {fk}")
        elif ccol.type != pcol.type:
            problems.append(f"foreign key type mismatch {fk} ({ccol.type} vs {pcol.type})")
    return problems


def load_schema(path: str | Path) -> Schema:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaParseError(f"{path}: {e}") from e
    if not isinstance(obj, dict):
        raise SchemaParseError(f"{path}: top-level value must be an object")
    return Schema.from_json(obj)


@dataclass(frozen=True)
class DatabaseState:
    schema_id: str
    rows: Mapping[str, tuple[tuple, ...]] = field(default_factory=dict)
    seed: int | None = None

    def table_rows(self, name: str) -> tuple[tuple, ...]:
        if name in self.rows:
            return self.rows[name]
        low = name.lower()
        for k, v in self.rows.items():
            if k.lower() == low:
                return v
        return ()

    def to_json(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"schema_id": self.schema_id}
        if self.seed is not None:
            obj["seed"] = self.seed
        obj["rows"] = {t: [list(r) for r in rows] for t, rows in self.rows.items()}
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=False)

    @classmethod
    def from_json(cls, obj: Any, schema: Schema | None = None) -> DatabaseState:
        try:
            rows = {}
            for tname, trows in obj["rows"].items():
                table = schema.table(tname) if schema else None
                name = table.name if table else tname
                rows[name] = tuple(tuple(_coerce(v, table, i) for i, v in enumerate(r)) for r in trows)
            seed = obj.get("seed")
            return cls(str(obj["schema_id"]), rows, None if seed is None else int(seed))
        except (KeyError, TypeError, AttributeError) as e:
            raise SchemaParseError(f"malformed state object: {e!r}") from e


def _coerce(v, table: Table | None, i: int):
    # JSON has no int/real distinction for whole numbers.
    if table is not None and i < len(table.columns) and table.columns[i].type == "real":
        if isinstance(v, int) and not isinstance(v, bool):
            return float(v)
    return v


def load_state(path: str | Path, schema: Schema | None = None) -> DatabaseState:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaParseError(f"{path}: {e}") from e
    return DatabaseState.from_json(obj, schema)


def save_state(state: DatabaseState, path: str | Path) -> None:
    Path(path).write_text(state.dumps() + "\n", encoding="utf-8")


def value_matches(value, col_type: str) -> bool:
    if value is None:
        return True
    if col_type == "int":
        return isinstance(value, int) and not isinstance(value, bool) and INT_MIN <= value <= INT_MAX
    if col_type == "real":
        return isinstance(value, float) and math.isfinite(value)
    if col_type == "text":
        return isinstance(value, str)
    return False


@dataclass(frozen=True)
class Violation:
    kind: str  # "schema" | "arity" | "type" | "pk" | "fk"
    table: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.table}: {self.detail}"


def validate_state(schema: Schema, state: DatabaseState) -> list[Violation]:
    """Return every integrity violation of ``state``; an empty list means ok."""
    out: list[Violation] = []
    if state.schema_id != schema.db_id:
        out.append(Violation("schema", "", f"state is for {state.schema_id!r}, schema is {schema.db_id!r}"))
    for tname in state.rows:
        if schema.table(tname) is None:
            out.append(Violation("schema", tname, "unknown table"))
    for t in schema.tables:
        pk_idx = [t.column_index(k) for k in t.primary_key]
        seen_pk: set[tuple] = set()
        for n, row in enumerate(state.table_rows(t.name)):
            if len(row) != len(t.columns):
                out.append(Violation("arity", t.name, f"row {n} has {len(row)} values, expected {len(t.columns)}"))
                continue
            for c, v in zip(t.columns, row):
                if not value_matches(v, c.type):
                    out.append(Violation("type", t.name, f"row {n}: {c.name}={v!r} is not {c.type}"))
            if pk_idx:
                key = tuple(row[i] for i in pk_idx)
                if any(k is None for k in key):
                    out.append(Violation("pk", t.name, f"row {n}: null primary key {key!r}"))
                elif key in seen_pk:
                    out.append(Violation("pk", t.name, f"row {n}: duplicate primary key {key!r}"))
                seen_pk.add(key)
    for fk in schema.foreign_keys:
        child, parent = schema.table(fk.child_table), schema.table(fk.parent_table)
        ci, pi = child.column_index(fk.child_column), parent.column_index(fk.parent_column)
        parent_vals = {r[pi] for r in state.table_rows(parent.name) if len(r) == len(parent.columns)}
        for n, row in enumerate(state.table_rows(child.name)):
            if len(row) != len(child.columns):
                continue
            v = row[ci]
            if v is not None and v not in parent_vals:
                out.append(Violation("fk", child.name, f"row {n}: {fk.child_column}={v!r} has no parent in {parent.name}"))
    return out


def _fk_order(schema: Schema) -> list[Table]:
    parents: dict[str, set[str]] = {t.name: set() for t in schema.tables}
    for fk in schema.foreign_keys:
        c, p = schema.table(fk.child_table).name, schema.table(fk.parent_table).name
        if c != p:
            parents[c].add(p)
    order: list[Table] = []
    done: set[str] = set()
    pending = list(schema.tables)
    while pending:
        ready = [t for t in pending if parents[t.name] <= done]
        if not ready:
            raise ConstraintError(f"cyclic foreign keys among {[t.name for t in pending]}")
        for t in ready:
            order.append(t)
            done.add(t.name)
        pending = [t for t in pending if t.name not in done]
    return order


def _value_pool(col: Column, size: int, rng: random.Random) -> list:
    if col.type == "int":
        return list(range(1, 2 * size + 1))
    if col.type == "real":
        return sorted({round(rng.uniform(0.0, 10.0 * size), 1) for _ in range(2 * size)})
    words = list(_WORDS)
    while len(words) < size:
        words.append(f"{_WORDS[len(words) % len(_WORDS)]}{len(words)}")
    return sorted(rng.sample(words, size))


def generate_random_state(schema: Schema, seed: int, size_hint: int, null_rate: float = NULL_RATE,
                          duplicate_rate: float = DUPLICATE_RATE) -> DatabaseState:
    """Seeded random state with ``size_hint`` rows per table.

    Pools are kept small on purpose so that duplicate values, duplicate rows in
    key-less tables and equal group sizes show up often.
    """
    if size_hint < 1:
        raise ValueError("size_hint must be >= 1")
    rng = random.Random(seed)
    generated: dict[str, list[tuple]] = {}
    for t in _fk_order(schema):
        fk_pools: dict[int, list] = {}
        for fk in schema.foreign_keys:
            if schema.table(fk.child_table).name != t.name:
                continue
            parent = schema.table(fk.parent_table)
            if parent.name == t.name:
                raise ConstraintError(f"self-referencing foreign key {fk} is not supported by the fuzzer")
            pi = parent.column_index(fk.parent_column)
            vals = sorted({r[pi] for r in generated[parent.name] if r[pi] is not None}, key=repr)
            fk_pools[t.column_index(fk.child_column)] = vals
        pools = [fk_pools.get(i, _value_pool(c, size_hint, rng)) for i, c in enumerate(t.columns)]
        pk_idx = {t.column_index(k) for k in t.primary_key}
        if pk_idx:
            capacity = math.prod(len(pools[i]) for i in pk_idx)
            if capacity < size_hint:
                raise ConstraintError(
                    f"{t.name}: only {capacity} distinct primary keys possible, need {size_hint}"
                )
        rows: list[tuple] = []
        seen_pk: set[tuple] = set()
        attempts = 0
        while len(rows) < size_hint:
            attempts += 1
            if attempts > 200 * size_hint:
                raise ConstraintError(f"{t.name}: could not draw {size_hint} unique primary keys")
            if not pk_idx and rows and rng.random() < duplicate_rate:
                rows.append(rows[rng.randrange(len(rows))])
                continue
            row = []
            for i, pool in enumerate(pools):
                if i in pk_idx:
                    if not pool:
                        raise ConstraintError(f"{t.name}.{t.columns[i].name}: empty key pool")
                    row.append(rng.choice(pool))
                elif not pool or rng.random() < null_rate:
                    row.append(None)
                else:
                    row.append(rng.choice(pool))
            if pk_idx:
                key = tuple(row[i] for i in sorted(pk_idx))
                if key in seen_pk:
                    continue
                seen_pk.add(key)
            rows.append(tuple(row))
        generated[t.name] = rows
    ordered = {t.name: tuple(generated[t.name]) for t in schema.tables}
    return DatabaseState(schema.db_id, ordered, seed)


def schema_from_tables(db_id: str, tables: Iterable[tuple[str, Iterable[tuple[str, str]], Iterable[str]]],
                       foreign_keys: Iterable[tuple[str, str]] = ()) -> Schema:
    """Shorthand constructor used by tests and the corpus builder."""
    ts = tuple(Table(n, tuple(Column(c, ty) for c, ty in cols), tuple(pk)) for n, cols, pk in tables)
    fks = tuple(ForeignKey(*_split_ref(a), *_split_ref(b)) for a, b in foreign_keys)
    return Schema(db_id, ts, fks)
