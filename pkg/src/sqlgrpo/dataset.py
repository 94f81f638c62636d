"""Parallel multilingual Text-to-SQL examples and JSON-lines ingestion."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .executor import execute
from .schema import DatabaseState, Schema, SchemaError, load_schema, load_state, validate_state
from .sql import SqlError, canonical, parse

LANGS = ("vi", "es", "ja", "de", "en", "zh", "fr")
REQUIRED_FIELDS = ("id", "db_id", "lang", "question", "gold_sql")


@dataclass(frozen=True)
class Example:
    id: str
    db_id: str
    lang: str
    question: str
    gold_sql: str

    def to_json(self) -> dict:
        return {"id": self.id, "db_id": self.db_id, "lang": self.lang, "question": self.question,
                "gold_sql": self.gold_sql}


@dataclass
class Dataset:
    examples: list[Example]
    split: str
    schemas: dict[str, Schema] = field(default_factory=dict)
    states: dict[str, DatabaseState] = field(default_factory=dict)
    _canon: dict[str, str] = field(default_factory=dict, repr=False)
    _english: dict[str, str] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    @property
    def languages(self) -> list[str]:
        present = {e.lang for e in self.examples}
        return [lang for lang in LANGS if lang in present]

    def canonical_sql(self, ex: Example) -> str:
        key = f"{ex.db_id}\x00{ex.gold_sql}"
        if key not in self._canon:
            self._canon[key] = canonical(ex.gold_sql, self.schemas[ex.db_id])
        return self._canon[key]

    def subset(self, examples: list[Example], split: str | None = None) -> Dataset:
        return Dataset(list(examples), split or self.split, self.schemas, self.states, self._canon)

    def english_reference(self, ex: Example) -> str:
        """The English question parallel to ``ex`` (itself when no English twin exists)."""
        if self._english is None:
            self._english = {e.id: e.question for e in self.examples if e.lang == "en"}
        return self._english.get(ex.id, ex.question)


class IngestError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__(f"{len(diagnostics)} problem(s):\n" + "\n".join(diagnostics))
        self.diagnostics = diagnostics


def _sort_key(ex: Example):
    return (ex.id, LANGS.index(ex.lang) if ex.lang in LANGS else len(LANGS))


def load_schemas(schema_dir: str | Path) -> tuple[dict[str, Schema], dict[str, DatabaseState]]:
    """Load ``<db>.schema.json`` files and their canonical ``<db>.state.json`` siblings."""
    schema_dir = Path(schema_dir)
    schemas: dict[str, Schema] = {}
    states: dict[str, DatabaseState] = {}
    for p in sorted(schema_dir.glob("*.schema.json")):
        s = load_schema(p)
        schemas[s.db_id] = s
        sp = p.with_name(p.name.replace(".schema.json", ".state.json"))
        if sp.exists():
            states[s.db_id] = load_state(sp, s)
    return schemas, states


def ingest(path: str | Path, schema_dir: str | Path | None = None, split: str | None = None) -> Dataset:
    """Load and validate a JSON-lines dataset.

    Every problem is reported with its line number; any problem raises
    IngestError. The result is sorted by (id, language), so line order does
    not matter.
    """
    path = Path(path)
    schema_dir = Path(schema_dir) if schema_dir else path.parent / "schemas"
    schemas, states = load_schemas(schema_dir)
    diags: list[str] = []
    for db_id, st in states.items():
        for v in validate_state(schemas[db_id], st):
            diags.append(f"{db_id}.state.json: {v}")
    examples: list[Example] = []
    seen: dict[tuple[str, str], int] = {}
    canon_by_id: dict[str, tuple[str, str, int]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{path.name}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            diags.append(f"{where}: bad JSON ({e.msg})")
            continue
        if not isinstance(obj, dict):
            diags.append(f"{where}: expected an object")
            continue
        missing = [k for k in REQUIRED_FIELDS if not isinstance(obj.get(k), str)]
        if missing:
            diags.append(f"{where}: missing or non-string field(s) {missing}")
            continue
        ex = Example(*(obj[k] for k in REQUIRED_FIELDS))
        if ex.lang not in LANGS:
            diags.append(f"{where}: unknown language {ex.lang!r}")
            continue
        if (ex.id, ex.lang) in seen:
            diags.append(f"{where}: duplicate (id, lang) ({ex.id}, {ex.lang}) first seen on line {seen[(ex.id, ex.lang)]}")
            continue
        seen[(ex.id, ex.lang)] = lineno
        schema = schemas.get(ex.db_id)
        if schema is None:
            diags.append(f"{where}: no schema file for db_id {ex.db_id!r}")
            continue
        state = states.get(ex.db_id)
        if state is None:
            diags.append(f"{where}: no canonical state for db_id {ex.db_id!r}")
            continue
        try:
            ast = parse(ex.gold_sql)
            execute(ast, schema, state)
            canon = canonical(ast, schema)
        except SqlError as e:
            diags.append(f"{where}: bad gold SQL: {e}")
            continue
        prev = canon_by_id.get(ex.id)
        if prev is None:
            canon_by_id[ex.id] = (ex.db_id, canon, lineno)
        elif prev[:2] != (ex.db_id, canon):
            diags.append(f"{where}: id {ex.id} disagrees with line {prev[2]} on db_id/gold SQL")
            continue
        examples.append(ex)
    if diags:
        raise IngestError(diags)
    examples.sort(key=_sort_key)
    return Dataset(examples, split or path.stem, schemas, states)


def write_jsonl(examples: list[Example], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            f.write(json.dumps(ex.to_json(), ensure_ascii=False) + "\n")


__all__ = ["LANGS", "Dataset", "Example", "IngestError", "SchemaError", "ingest", "load_schemas", "write_jsonl"]
