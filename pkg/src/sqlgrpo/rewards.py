"""Per-candidate reward signals and their weighted sum."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .executor import ResultTable, compare_results, execute
from .schema import DatabaseState, Schema
from .sql import AmbiguityError, Select, SqlError, extract_refs, parse, render, resolve

SEM_MODES = ("question", "sql")


@dataclass(frozen=True)
class RewardWeights:
    w_exec: float = 1.0
    w_syntax: float = 0.5
    w_schema: float = 0.5
    w_sem: float = 0.2

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"reward weight {k} must be a finite non-negative number, got {v!r}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.w_exec, self.w_syntax, self.w_schema, self.w_sem])


@dataclass(frozen=True)
class RewardBundle:
    r_exec: float
    r_syntax: float
    r_schema: float
    r_sem: float
    r_total: float
    error: str | None = None

    def to_json(self) -> dict:
        return asdict(self)


def _parse(candidate) -> tuple[Select | None, str | None]:
    if isinstance(candidate, Select):
        return candidate, None
    if candidate is None:
        return None, "no candidate"
    try:
        return parse(candidate), None
    except SqlError as e:
        return None, f"parse error: {e}"
    except RecursionError:
        return None, "parse error: expression nested too deeply"


def try_execute(candidate, schema: Schema, state: DatabaseState) -> tuple[ResultTable | None, str | None]:
    """Result of ``candidate`` or the error text; never raises for bad SQL."""
    ast, err = _parse(candidate)
    if ast is None:
        return None, err
    try:
        return execute(ast, schema, state), None
    except SqlError as e:
        return None, f"execution error: {e}"
    except RecursionError:
        return None, "execution error: query nested too deeply"


def exec_reward(candidate, gold, schema: Schema, state: DatabaseState,
                gold_result: ResultTable | None = None) -> int:
    res, _ = try_execute(candidate, schema, state)
    if res is None:
        return 0
    if gold_result is None:
        gold_result = execute(gold if isinstance(gold, Select) else parse(gold), schema, state)
    return int(compare_results(res, gold_result))


def syntax_reward(candidate, schema: Schema, state: DatabaseState) -> int:
    return int(try_execute(candidate, schema, state)[0] is not None)


def schema_reward(candidate, gold, schema: Schema) -> float:
    """F1 of (table and column) references against the gold query, times the valid-reference rate."""
    ast, _ = _parse(candidate)
    if ast is None:
        return 0.0
    try:
        c = extract_refs(ast, schema)
    except AmbiguityError:
        return 0.0
    g = extract_refs(gold if isinstance(gold, Select) else parse(gold), schema)
    cv, gv = c.valid, g.valid
    n_refs = len(cv) + len(c.invalid)
    validity = 1.0 if n_refs == 0 else len(cv) / n_refs
    if not cv:
        return 0.0
    f1 = 2.0 * len(cv & gv) / (len(cv) + len(gv))
    return f1 * validity


def semantic_text(candidate_sql: str, schema: Schema | None = None) -> str:
    """The string embedded for a candidate: its resolved rendering when possible, else the raw text."""
    try:
        ast = parse(candidate_sql)
    except (SqlError, RecursionError):
        return candidate_sql.strip()
    if schema is not None:
        try:
            return render(resolve(ast, schema))
        except SqlError:
            pass
    return render(ast)


class SemanticScorer:
    """Cosine similarities from an encoder, with a cache of embeddings by text."""

    def __init__(self, encoder, cache_size: int = 200_000):
        self.encoder = encoder
        self.cache: dict[str, np.ndarray] = {}
        self.cache_size = cache_size

    def vectors(self, texts: list[str]) -> list[np.ndarray]:
        missing = sorted({t for t in texts if t not in self.cache})
        if missing:
            if len(self.cache) + len(missing) > self.cache_size:
                self.cache.clear()
            for t, v in zip(missing, self.encoder.embed_batch(missing)):
                self.cache[t] = v
        return [self.cache[t] for t in texts]

    def similarity(self, a: str, b: str) -> float:
        if not a.strip() or not b.strip():
            return 0.0
        u, v = self.vectors([a, b])
        return float(np.clip(np.dot(u, v), -1.0, 1.0))

    def score(self, question: str, reference: str | None, mode: str, candidate_sql: str | None,
              schema: Schema | None = None) -> float:
        if mode == "question":
            return self.similarity(question, reference if reference is not None else question)
        if mode == "sql":
            if not candidate_sql or not candidate_sql.strip():
                return 0.0
            return self.similarity(question, semantic_text(candidate_sql, schema))
        raise ValueError(f"sem mode must be one of {SEM_MODES}, got {mode!r}")


def semantic_reward(encoder, question: str, reference: str, mode: str, candidate_sql: str,
                    schema: Schema | None = None) -> float:
    return SemanticScorer(encoder).score(question, reference, mode, candidate_sql, schema)


def combine(bundle, weights: RewardWeights = RewardWeights()) -> float:
    """Weighted sum; ``bundle`` is a RewardBundle or an (exec, syntax, schema, sem) tuple."""
    if isinstance(bundle, RewardBundle):
        bundle = (bundle.r_exec, bundle.r_syntax, bundle.r_schema, bundle.r_sem)
    e, s, sc, se = bundle
    return weights.w_exec * e + weights.w_syntax * s + weights.w_schema * sc + weights.w_sem * se


def score(candidate_sql: str, gold_sql, schema: Schema, state: DatabaseState,
          weights: RewardWeights = RewardWeights(), scorer: SemanticScorer | None = None,
          question: str | None = None, reference: str | None = None, mode: str = "sql",
          gold_result: ResultTable | None = None) -> RewardBundle:
    """All four signals for one candidate.

    The semantic signal is 0 when ``w_sem`` is 0; no encoder is needed then.
    """
    res, err = try_execute(candidate_sql, schema, state)
    r_syntax = int(res is not None)
    if res is None:
        r_exec = 0
    else:
        if gold_result is None:
            gold_result = execute(gold_sql if isinstance(gold_sql, Select) else parse(gold_sql), schema, state)
        r_exec = int(compare_results(res, gold_result))
    r_schema = schema_reward(candidate_sql, gold_sql, schema)
    r_sem = 0.0
    if weights.w_sem > 0.0:
        if scorer is None:
            raise ValueError("w_sem > 0 needs an encoder-backed SemanticScorer")
        if question is None:
            raise ValueError("the semantic signal needs the question text")
        r_sem = scorer.score(question, reference, mode, candidate_sql, schema)
    total = combine((r_exec, r_syntax, r_schema, r_sem), weights)
    return RewardBundle(float(r_exec), float(r_syntax), float(r_schema), float(r_sem), total, err)


__all__ = ["RewardBundle", "RewardWeights", "SEM_MODES", "SemanticScorer", "combine", "exec_reward",
           "schema_reward", "score", "semantic_reward", "semantic_text", "syntax_reward", "try_execute"]
