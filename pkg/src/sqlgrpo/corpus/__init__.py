"""Template-generated parallel mini-corpus over three small schemas.

Each pattern instance yields one gold SQL string and seven questions (one per
language). Literal values are drawn from the canonical state so that most gold
queries return rows.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from ..dataset import LANGS, Example, write_jsonl
from ..schema import DatabaseState, Schema, generate_random_state, save_state, schema_from_tables
from . import templates as T

DEFAULT_SCHEMAS = ("movies", "school", "shop")
STATE_SIZE = 10


def movies_schema() -> Schema:
    return schema_from_tables(
        "movies",
        [("actor", [("id", "int"), ("name", "text")], ["id"]),
         ("casting", [("actorid", "int"), ("movieid", "int")], [])],
        [("casting.actorid", "actor.id")],
    )


def movies_fixture() -> DatabaseState:
    """Two actors; A has 3 distinct movies over 4 casting rows, B has 4."""
    return DatabaseState("movies", {
        "actor": ((1, "A"), (2, "B")),
        "casting": ((1, 101), (1, 102), (1, 103), (1, 103), (2, 201), (2, 202), (2, 203), (2, 204)),
    })


def school_schema() -> Schema:
    return schema_from_tables(
        "school",
        [("student", [("id", "int"), ("name", "text"), ("age", "int"), ("city", "text")], ["id"]),
         ("course", [("id", "int"), ("title", "text"), ("credits", "int")], ["id"]),
         ("enrolled", [("student_id", "int"), ("course_id", "int"), ("grade", "real")], [])],
        [("enrolled.student_id", "student.id"), ("enrolled.course_id", "course.id")],
    )


def shop_schema() -> Schema:
    return schema_from_tables(
        "shop",
        [("customer", [("id", "int"), ("name", "text"), ("country", "text")], ["id"]),
         ("product", [("id", "int"), ("name", "text"), ("price", "real"), ("category", "text")], ["id"]),
         ("orders", [("id", "int"), ("customer_id", "int"), ("product_id", "int"), ("quantity", "int")], ["id"])],
        [("orders.customer_id", "customer.id"), ("orders.product_id", "product.id")],
    )


SCHEMA_BUILDERS = {"movies": movies_schema, "school": school_schema, "shop": shop_schema}


@dataclass(frozen=True)
class TableProfile:
    label: str | None
    num: tuple[str, ...] = ()
    text: tuple[str, ...] = ()
    group: tuple[str, ...] = ()


@dataclass(frozen=True)
class JoinProfile:
    parent: str
    pk: str
    label: str
    child: str
    fk: str
    counted: str  # child column for COUNT(DISTINCT ...)
    num: str  # numeric child column for filters


@dataclass(frozen=True)
class SchemaProfile:
    tables: dict[str, TableProfile]
    joins: tuple[JoinProfile, ...] = field(default=())


PROFILES = {
    "movies": SchemaProfile(
        {"actor": TableProfile("name", ("id",), ("name",)),
         "casting": TableProfile(None, ("movieid",), (), ("actorid", "movieid"))},
        (JoinProfile("actor", "id", "name", "casting", "actorid", "movieid", "movieid"),),
    ),
    "school": SchemaProfile(
        {"student": TableProfile("name", ("age",), ("name", "city"), ("city", "age")),
         "course": TableProfile("title", ("credits",), ("title",), ("credits",)),
         "enrolled": TableProfile(None, ("grade",), (), ("course_id", "student_id"))},
        (JoinProfile("student", "id", "name", "enrolled", "student_id", "course_id", "grade"),
         JoinProfile("course", "id", "title", "enrolled", "course_id", "student_id", "grade")),
    ),
    "shop": SchemaProfile(
        {"customer": TableProfile("name", (), ("name", "country"), ("country",)),
         "product": TableProfile("name", ("price",), ("name", "category"), ("category",)),
         "orders": TableProfile(None, ("quantity",), (), ("customer_id", "product_id"))},
        (JoinProfile("customer", "id", "name", "orders", "customer_id", "product_id", "quantity"),
         JoinProfile("product", "id", "name", "orders", "product_id", "customer_id", "quantity")),
    ),
}


def canonical_state(db_id: str, schema: Schema, seed: int) -> DatabaseState:
    if db_id == "movies":
        return movies_fixture()
    # canonical states carry no NULLs so that every gold query has readable results
    return generate_random_state(schema, seed, STATE_SIZE, null_rate=0.0)


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


class _Instancer:
    def __init__(self, schema: Schema, profile: SchemaProfile, state: DatabaseState, rng: random.Random):
        self.schema, self.profile, self.state, self.rng = schema, profile, state, rng

    def values(self, table: str, column: str) -> list:
        i = self.schema.table(table).column_index(column)
        return sorted({r[i] for r in self.state.table_rows(table) if r[i] is not None}, key=repr)

    def pick_select(self, table: str, avoid: str | None = None) -> str:
        prof = self.profile.tables[table]
        if prof.label and prof.label != avoid:
            return prof.label
        cols = [c for c in self.schema.table(table).column_names if c != avoid]
        return self.rng.choice(cols)

    def tables_with(self, attr: str) -> list[str]:
        return [t for t, p in self.profile.tables.items() if getattr(p, attr)]

    def applicable(self) -> list[str]:
        out = ["list", "count_all"]
        if self.tables_with("num"):
            out += ["where_num", "agg", "order_limit", "between", "vs_avg", "count_where"]
        if self.tables_with("text"):
            out += ["where_text", "like"]
        if self.tables_with("group"):
            out += ["distinct", "count_distinct", "group_count", "group_having"]
        if self.profile.joins:
            out += ["join_having_distinct", "join_having_count", "join_where", "not_in"]
        return out

    def draw(self) -> tuple[str, str, dict]:
        """One (pattern, gold SQL, slots) triple; slots hold language-independent fills."""
        rng = self.rng
        kind = rng.choice(self.applicable())
        if kind in ("list", "count_all"):
            t = rng.choice(list(self.profile.tables))
            if kind == "count_all":
                return kind, f"SELECT COUNT(*) FROM {t}", {"t": t}
            c = self.pick_select(t)
            return kind, f"SELECT {c} FROM {t}", {"t": t, "c": c}
        if kind in ("where_num", "agg", "order_limit", "between", "vs_avg", "count_where"):
            t = rng.choice(self.tables_with("num"))
            n = rng.choice(self.profile.tables[t].num)
            c = self.pick_select(t, avoid=n)
            vals = self.values(t, n)
            slots = {"t": t, "n": n, "c": c}
            if kind in ("where_num", "count_where"):
                op = rng.choice(list(T.CMP))
                v = _fmt(rng.choice(vals))
                slots["cmp"] = ("CMP", op, v)
                if kind == "count_where":
                    return kind, f"SELECT COUNT(*) FROM {t} WHERE {n} {op} {v}", slots
                return kind, f"SELECT {c} FROM {t} WHERE {n} {op} {v}", slots
            if kind == "agg":
                f = rng.choice(list(T.AGG))
                slots["agg"] = ("AGG", f)
                return kind, f"SELECT {f}({n}) FROM {t}", slots
            if kind == "order_limit":
                d = rng.choice(list(T.ORDER_DIR))
                k = rng.randint(1, 3)
                slots.update(dir=("ORDER_DIR", d), k=str(k))
                suffix = " DESC" if d == "DESC" else ""
                return kind, f"SELECT {c} FROM {t} ORDER BY {n}{suffix} LIMIT {k}", slots
            if kind == "between":
                a, b = sorted(rng.sample(vals, 2)) if len(vals) > 1 else (vals[0], vals[0])
                slots.update(a=_fmt(a), b=_fmt(b))
                return kind, f"SELECT {c} FROM {t} WHERE {n} BETWEEN {_fmt(a)} AND {_fmt(b)}", slots
            op = rng.choice(list(T.AVG_DIR))
            slots["dir"] = ("AVG_DIR", op)
            return kind, f"SELECT {c} FROM {t} WHERE {n} {op} (SELECT AVG({n}) FROM {t})", slots
        if kind in ("where_text", "like"):
            t = rng.choice(self.tables_with("text"))
            tc = rng.choice(self.profile.tables[t].text)
            c = self.pick_select(t, avoid=tc)
            val = rng.choice(self.values(t, tc))
            slots = {"t": t, "tc": tc, "c": c}
            if kind == "where_text":
                slots["val"] = val
                return kind, f"SELECT {c} FROM {t} WHERE {tc} = '{val}'", slots
            s = val.lower()[: rng.randint(1, 2)]
            slots["s"] = s
            return kind, f"SELECT {c} FROM {t} WHERE {tc} LIKE '%{s}%'", slots
        if kind in ("distinct", "count_distinct", "group_count", "group_having"):
            t = rng.choice(self.tables_with("group"))
            g = rng.choice(self.profile.tables[t].group)
            if kind == "distinct":
                return kind, f"SELECT DISTINCT {g} FROM {t}", {"t": t, "c": g}
            if kind == "count_distinct":
                return kind, f"SELECT COUNT(DISTINCT {g}) FROM {t}", {"t": t, "c": g}
            if kind == "group_count":
                return kind, f"SELECT {g}, COUNT(*) FROM {t} GROUP BY {g}", {"t": t, "g": g}
            op, v = rng.choice(list(T.COUNT_CMP)), rng.randint(1, 3)
            return kind, f"SELECT {g} FROM {t} GROUP BY {g} HAVING COUNT(*) {op} {v}", \
                {"t": t, "g": g, "cnt": ("COUNT_CMP", op, str(v))}
        j = rng.choice(self.profile.joins)
        on = f"{j.parent}.{j.pk} = {j.child}.{j.fk}"
        slots = {"p": j.parent, "ch": j.child, "label": j.label}
        if kind in ("join_having_distinct", "join_having_count"):
            op, v = rng.choice(list(T.COUNT_CMP)), rng.randint(1, 4)
            slots["cnt"] = ("COUNT_CMP", op, str(v))
            if kind == "join_having_distinct":
                slots["x"] = j.counted
                agg = f"COUNT(DISTINCT {j.child}.{j.counted})"
            else:
                agg = "COUNT(*)"
            sql = (f"SELECT {j.parent}.{j.label} FROM {j.parent} JOIN {j.child} ON {on} "
                   f"GROUP BY {j.parent}.{j.pk}, {j.parent}.{j.label} HAVING {agg} {op} {v}")
            return kind, sql, slots
        op = rng.choice([">", ">=", "<", "<="])
        v = _fmt(rng.choice(self.values(j.child, j.num)))
        slots.update(n=j.num, cmp=("CMP", op, v))
        if kind == "join_where":
            sql = (f"SELECT DISTINCT {j.parent}.{j.label} FROM {j.parent} JOIN {j.child} ON {on} "
                   f"WHERE {j.child}.{j.num} {op} {v}")
            return kind, sql, slots
        sql = (f"SELECT {j.label} FROM {j.parent} WHERE {j.pk} NOT IN "
               f"(SELECT {j.fk} FROM {j.child} WHERE {j.num} {op} {v})")
        return kind, sql, slots


def render_question(kind: str, slots: dict, lang: str) -> str:
    fills = {}
    for key, val in slots.items():
        if isinstance(val, tuple):
            table = getattr(T, val[0])[val[1]][lang]
            fills[key] = table.format(v=val[2]) if len(val) > 2 else table
        else:
            fills[key] = val
    return T.QUESTIONS[kind][lang].format(**fills)


def is_dev_index(k: int) -> bool:
    return k % 5 == 4


def mkdata(outdir: str | Path, seed: int = 1, schemas=DEFAULT_SCHEMAS, questions_per_schema: int = 40) -> dict:
    """Write ``schemas/``, ``train.jsonl`` and ``dev.jsonl`` under ``outdir``.

    Every fifth question id goes to dev, so both splits hold all seven
    languages of each question they contain. Returns a summary dict.
    """
    if questions_per_schema < 1 or seed < 0:
        raise ValueError("seed must be >= 0 and questions_per_schema >= 1")
    outdir = Path(outdir)
    (outdir / "schemas").mkdir(parents=True, exist_ok=True)
    train: list[Example] = []
    dev: list[Example] = []
    for si, db_id in enumerate(schemas):
        if db_id not in SCHEMA_BUILDERS:
            raise ValueError(f"unknown schema {db_id!r}; choose from {sorted(SCHEMA_BUILDERS)}")
        schema = SCHEMA_BUILDERS[db_id]()
        state = canonical_state(db_id, schema, seed * 1000 + si)
        (outdir / "schemas" / f"{db_id}.schema.json").write_text(
            _dump(schema.to_json()), encoding="utf-8")
        save_state(state, outdir / "schemas" / f"{db_id}.state.json")
        inst = _Instancer(schema, PROFILES[db_id], state, random.Random(f"{seed}:{db_id}"))
        seen: set[str] = set()
        k = 0
        attempts = 0
        while k < questions_per_schema:
            attempts += 1
            if attempts > 10000:
                raise RuntimeError(f"{db_id}: could not draw {questions_per_schema} distinct questions")
            kind, sql, slots = inst.draw()
            if sql in seen:
                continue
            seen.add(sql)
            qid = f"{db_id}-{k:03d}"
            bucket = dev if is_dev_index(k) else train
            for lang in LANGS:
                bucket.append(Example(qid, db_id, lang, render_question(kind, slots, lang), sql))
            k += 1
    write_jsonl(train, outdir / "train.jsonl")
    write_jsonl(dev, outdir / "dev.jsonl")
    return {"train": len(train), "dev": len(dev), "total": len(train) + len(dev)}


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=1) + "\n"


__all__ = ["DEFAULT_SCHEMAS", "PROFILES", "SCHEMA_BUILDERS", "canonical_state", "mkdata", "movies_fixture",
           "movies_schema", "render_question", "school_schema", "shop_schema"]
