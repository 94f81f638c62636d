"""Execution accuracy, multi-state semantic accuracy and Table-shaped reports."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .dataset import LANGS, Dataset
from .executor import ResultTable, compare_results, execute
from .rewards import try_execute
from .schema import DatabaseState, Schema, generate_random_state
from .sql import SqlError, parse

CANCELLATION_NOTE = (
    "sem_mode=question gives every candidate of a prompt the same semantic reward, so the "
    "group-standardized advantages equal those of w_sem=0; differences between such arms are sampling noise."
)


@dataclass(frozen=True)
class EvalConfig:
    k_states: int = 5
    state_seed: int = 0
    state_size: int = 8
    max_state_tries: int = 50


class StateBank:
    """Random states per schema, keyed by seed, generated on demand and cached."""

    def __init__(self, config: EvalConfig = EvalConfig()):
        self.config = config
        self._cache: dict[tuple[str, int], DatabaseState] = {}

    def get(self, schema: Schema, seed: int) -> DatabaseState:
        key = (schema.db_id, seed)
        if key not in self._cache:
            self._cache[key] = generate_random_state(schema, seed, self.config.state_size)
        return self._cache[key]

    def states_for(self, gold, schema: Schema, canonical: DatabaseState) -> list[tuple[DatabaseState, ResultTable]]:
        """Canonical state plus K-1 random states on which ``gold`` executes, with gold's results.

        A random state on which the gold query fails is skipped and the next
        seed is tried.
        """
        gold_ast = gold if not isinstance(gold, str) else parse(gold)
        out = [(canonical, execute(gold_ast, schema, canonical))]
        seed = self.config.state_seed
        tries = 0
        while len(out) < self.config.k_states:
            tries += 1
            if tries > self.config.max_state_tries:
                raise RuntimeError(f"could not find {self.config.k_states} states on which the gold query runs")
            st = self.get(schema, seed)
            seed += 1
            try:
                out.append((st, execute(gold_ast, schema, st)))
            except SqlError:
                continue
        return out


def sem_equivalent(candidate: str, gold: str, schema: Schema, canonical: DatabaseState,
                   config: EvalConfig = EvalConfig(), bank: StateBank | None = None) -> bool:
    """True iff ``candidate`` runs without error and matches ``gold`` on all K states."""
    bank = bank or StateBank(config)
    try:
        cand_ast = parse(candidate)
    except (SqlError, RecursionError):
        return False
    for state, gold_res in bank.states_for(gold, schema, canonical):
        res, err = try_execute(cand_ast, schema, state)
        if res is None or not compare_results(res, gold_res):
            return False
    return True


@dataclass
class LangScore:
    n: int = 0
    exec_ok: int = 0
    sem_ok: int = 0

    @property
    def exec_acc(self) -> float:
        return 100.0 * self.exec_ok / self.n if self.n else 0.0

    @property
    def sem_acc(self) -> float:
        return 100.0 * self.sem_ok / self.n if self.n else 0.0


@dataclass
class EvalReport:
    arm: str
    split: str
    per_lang: dict[str, dict] = field(default_factory=dict)
    overall: dict = field(default_factory=dict)
    fingerprint: dict = field(default_factory=dict)
    predictions: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> EvalReport:
        return cls(**obj)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> EvalReport:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def exec_acc(self, lang: str | None = None) -> float:
        return (self.per_lang[lang] if lang else self.overall)["exec_acc"]

    def sem_acc(self, lang: str | None = None) -> float:
        return (self.per_lang[lang] if lang else self.overall)["sem_acc"]


def score_predictions(dataset: Dataset, predictions: list[str], arm: str = "model",
                      config: EvalConfig = EvalConfig(), fingerprint: dict | None = None) -> EvalReport:
    """ExecAcc on the canonical state and SemAcc over K states for given predictions."""
    if len(predictions) != len(dataset):
        raise ValueError("one prediction per example is required")
    bank = StateBank(config)
    scores: dict[str, LangScore] = {}
    total = LangScore()
    rows = []
    for ex, pred in zip(dataset, predictions):
        schema, canon = dataset.schemas[ex.db_id], dataset.states[ex.db_id]
        ok_exec = try_execute(pred, schema, canon)[0] is not None
        ok_sem = ok_exec and sem_equivalent(pred, ex.gold_sql, schema, canon, config, bank)
        for s in (scores.setdefault(ex.lang, LangScore()), total):
            s.n += 1
            s.exec_ok += ok_exec
            s.sem_ok += ok_sem
        rows.append({"id": ex.id, "lang": ex.lang, "prediction": pred, "exec": ok_exec, "sem": ok_sem})
    per_lang = {lang: _summary(scores[lang]) for lang in LANGS if lang in scores}
    fp = {"k_states": config.k_states, "state_seed": config.state_seed, "state_size": config.state_size}
    fp.update(fingerprint or {})
    return EvalReport(arm, dataset.split, per_lang, _summary(total), fp, rows)


def _summary(s: LangScore) -> dict:
    return {"n": s.n, "exec_acc": s.exec_acc, "sem_acc": s.sem_acc}


def predict(policy, dataset: Dataset) -> list[str]:
    """Greedy predictions for every example."""
    from .policy import Sampler, completion_text, serialize_prompt
    sampler = Sampler(policy)
    out = []
    for ex in dataset:
        prompt = serialize_prompt(ex.question, dataset.schemas[ex.db_id], ex.lang, policy.tokenizer)
        out.append(completion_text(sampler.greedy(prompt)))
    return out


def evaluate(policy, dataset: Dataset, arm: str = "model", config: EvalConfig = EvalConfig(),
             fingerprint: dict | None = None) -> EvalReport:
    return score_predictions(dataset, predict(policy, dataset), arm, config, fingerprint)


def exec_acc(policy, dataset: Dataset) -> float:
    preds = predict(policy, dataset)
    ok = sum(try_execute(p, dataset.schemas[e.db_id], dataset.states[e.db_id])[0] is not None
             for e, p in zip(dataset, preds))
    return 100.0 * ok / len(dataset) if len(dataset) else 0.0


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def report(runs: list[EvalReport]) -> str:
    """Markdown grid: languages x arms of "Exec / Sem", an averages row, and Δ SemAcc for two or more arms.

    Averages are the arithmetic mean over language rows. Δ SemAcc is the last
    arm minus the first.
    """
    if not runs:
        raise ValueError("report needs at least one evaluation")
    langs = [lang for lang in LANGS if any(lang in r.per_lang for r in runs)]
    header = ["Language"] + [r.arm for r in runs]
    delta = len(runs) >= 2
    if delta:
        header.append("Δ SemAcc")
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]

    def cell(r: EvalReport, lang: str) -> str:
        s = r.per_lang.get(lang)
        return "-" if s is None else f"{_fmt(s['exec_acc'])} / {_fmt(s['sem_acc'])}"

    for lang in langs:
        row = [lang] + [cell(r, lang) for r in runs]
        if delta:
            a, b = runs[0].per_lang.get(lang), runs[-1].per_lang.get(lang)
            row.append("-" if a is None or b is None else f"{b['sem_acc'] - a['sem_acc']:+.2f}")
        lines.append("| " + " | ".join(row) + " |")
    avgs = []
    for r in runs:
        vals = [r.per_lang[lang] for lang in langs if lang in r.per_lang]
        avgs.append((sum(v["exec_acc"] for v in vals) / len(vals), sum(v["sem_acc"] for v in vals) / len(vals)))
    row = ["Average"] + [f"{_fmt(e)} / {_fmt(s)}" for e, s in avgs]
    if delta:
        row.append(f"{avgs[-1][1] - avgs[0][1]:+.2f}")
    lines.append("| " + " | ".join(row) + " |")
    text = "Scores are ExecAcc / SemAcc (%).\n\n" + "\n".join(lines) + "\n"
    flagged = [r.arm for r in runs if r.fingerprint.get("sem_mode") == "question"
               and float(r.fingerprint.get("w_sem", 0.0)) > 0.0]
    if flagged:
        text += f"\n**Note** ({', '.join(flagged)}): {CANCELLATION_NOTE}\n"
    return text


def gold_predictions(dataset: Dataset) -> list[str]:
    return [e.gold_sql for e in dataset]


__all__ = ["CANCELLATION_NOTE", "EvalConfig", "EvalReport", "StateBank", "evaluate", "exec_acc", "gold_predictions",
           "predict", "report", "score_predictions", "sem_equivalent"]
