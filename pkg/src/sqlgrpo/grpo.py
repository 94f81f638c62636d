"""Group-relative policy optimisation with a KL penalty to a frozen reference."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .autodiff import AdamW, clip_grad_norm, grad_norm, lr_schedule, ops
from .autodiff.tensor import no_grad
from .dataset import Dataset, Example
from .executor import execute
from .policy import PAD, Policy, Sampler, log_softmax_np, serialize_prompt
from .rewards import RewardWeights, SemanticScorer, score


class GrpoDivergenceError(FloatingPointError):
    pass


@dataclass
class GrpoConfig:
    group_size: int = 8
    beta: float = 0.02
    # desk defaults; the reference setup used 16 prompts, 3000 steps and lr 5e-6
    batch_prompts: int = 4
    steps: int = 300
    lr: float = 3e-4
    warmup_steps: int = 10
    weight_decay: float = 0.0
    temperature: float = 1.0
    adv_eps: float = 1e-8
    grad_clip: float = 1.0
    weights: RewardWeights = field(default_factory=RewardWeights)
    sem_mode: str = "sql"
    rolling_window: int = 20
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.weights, dict):
            self.weights = RewardWeights(**self.weights)
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.sem_mode not in ("question", "sql"):
            raise ValueError("sem_mode must be 'question' or 'sql'")


def group_advantages(rewards, eps: float = 1e-8) -> np.ndarray:
    """``(r - mean) / (std + eps)`` with the population std; all zeros when std < 1e-8."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.size < 2:
        raise ValueError("a group needs at least two rewards")
    std = r.std()
    if std < 1e-8:
        return np.zeros_like(r)
    return (r - r.mean()) / (std + eps)


def kl_divergence(p, q) -> tuple[np.ndarray, float]:
    """Exact categorical KL(p || q) per position (last axis = vocabulary) and its mean."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)
    per = terms.sum(axis=-1)
    return per, float(per.mean()) if per.size else 0.0


class TrainLog:
    """Append-only per-step records, mirrored to a JSON-lines file when a path is given."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[dict] = []
        self.path = Path(path) if path else None
        if self.path:
            self.path.write_text("", encoding="utf-8")

    def append(self, rec: dict) -> None:
        self.records.append(rec)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(rec) + "\n")

    @staticmethod
    def read(path: str | Path) -> list[dict]:
        return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


@dataclass
class PromptContext:
    example: Example
    prompt: list[int]
    gold_result: object
    reference: str


def _pad(rows: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    t = max(len(r) for r in rows)
    ids = np.full((len(rows), t), PAD, dtype=np.int64)
    mask = np.zeros((len(rows), t))
    for i, r in enumerate(rows):
        ids[i, :len(r)] = r
        mask[i, :len(r)] = 1.0
    return ids, mask


def group_loss(policy: Policy, ref: Policy, prompt, completions: list[list[int]], adv: np.ndarray,
               beta: float) -> tuple:
    """Length-normalised policy-gradient + β·KL loss of one group (a graph node) and its mean token KL."""
    ids, mask = _pad(completions)
    lengths = mask.sum(axis=1)
    g = len(completions)
    logp = ops.log_softmax(policy.forward_group(prompt, ids))
    with no_grad():
        ref_logp = log_softmax_np(ref.forward_group(prompt, ids).data)
    tok_logp = ops.gather_last(logp, ids)
    w_pg = -(adv / lengths)[:, None] * mask / g
    pg = ops.sum(tok_logp * w_pg)
    kl_tok = ops.sum(ops.exp(logp) * (logp - ref_logp), axis=-1)
    kl_term = ops.sum(kl_tok * (mask / lengths[:, None] / g))
    mean_kl = float((kl_tok.data * mask).sum() / mask.sum())
    return pg + beta * kl_term, mean_kl


class GrpoTrainer:
    def __init__(self, dataset: Dataset, policy: Policy, config: GrpoConfig, encoder=None,
                 log_path: str | Path | None = None, dump_dir: str | Path | None = None):
        self.ds = dataset
        self.policy = policy
        self.ref = policy.copy()
        self.cfg = config
        w = config.weights
        if w.w_sem > 0 and encoder is None:
            raise ValueError("w_sem > 0 needs an encoder")
        self.scorer = SemanticScorer(encoder) if w.w_sem > 0 else None
        self.opt = AdamW(policy.parameters(), lr=config.lr, weight_decay=config.weight_decay)
        self.rng = np.random.default_rng(config.seed)
        self.log = TrainLog(log_path)
        self.dump_dir = Path(dump_dir) if dump_dir else None
        self.step_no = 0
        self._ctx: dict[int, PromptContext] = {}
        self._order: list[int] = []
        self._exec_window: list[float] = []

    def context(self, i: int) -> PromptContext:
        if i not in self._ctx:
            ex = self.ds.examples[i]
            schema = self.ds.schemas[ex.db_id]
            self._ctx[i] = PromptContext(
                ex, serialize_prompt(ex.question, schema, ex.lang, self.policy.tokenizer),
                execute(ex.gold_sql, schema, self.ds.states[ex.db_id]), self.ds.english_reference(ex))
        return self._ctx[i]

    def next_batch(self) -> list[int]:
        out = []
        while len(out) < self.cfg.batch_prompts:
            if not self._order:
                self._order = list(self.rng.permutation(len(self.ds)))
            out.append(int(self._order.pop(0)))
        return out

    def rewards_for(self, ctx: PromptContext, texts: list[str]) -> list:
        ex = ctx.example
        return [score(t, ex.gold_sql, self.ds.schemas[ex.db_id], self.ds.states[ex.db_id], self.cfg.weights,
                      self.scorer, ex.question, ctx.reference, self.cfg.sem_mode, ctx.gold_result) for t in texts]

    def sample(self, batch: list[int]):
        sampler = Sampler(self.policy)
        groups = []
        for i in batch:
            ctx = self.context(i)
            seed = int(self.rng.integers(2**63))
            sg = sampler.sample(ctx.prompt, self.cfg.group_size, self.cfg.temperature, seed)
            texts = sg.texts()
            bundles = self.rewards_for(ctx, texts)
            groups.append((ctx, sg.completions, texts, bundles))
        return groups

    def step(self) -> dict:
        cfg = self.cfg
        batch = self.next_batch()
        groups = self.sample(batch)
        self.opt.zero_grad()
        kls, loss_total, all_adv = [], 0.0, []
        for ctx, comps, texts, bundles in groups:
            adv = group_advantages([b.r_total for b in bundles], cfg.adv_eps)
            all_adv.append(adv)
            loss, kl = group_loss(self.policy, self.ref, ctx.prompt, comps, adv, cfg.beta)
            loss = loss * (1.0 / len(groups))
            if not math.isfinite(float(loss.data)):
                self._dump(groups)
                raise GrpoDivergenceError(f"non-finite GRPO loss at step {self.step_no}")
            loss.backward()
            loss_total += float(loss.data)
            kls.append(kl)
        gnorm = grad_norm(self.policy.parameters())
        clip_grad_norm(self.policy.parameters(), cfg.grad_clip)
        lr = lr_schedule(self.step_no, cfg.lr, cfg.warmup_steps)
        self.opt.step(lr)
        flat = [b for g in groups for b in g[3]]
        exec_rate = float(np.mean([b.r_syntax for b in flat]))
        self._exec_window = (self._exec_window + [exec_rate])[-cfg.rolling_window:]
        rec = {
            "step": self.step_no,
            "loss": loss_total,
            "r_total": float(np.mean([b.r_total for b in flat])),
            "r_exec": float(np.mean([b.r_exec for b in flat])),
            "r_syntax": float(np.mean([b.r_syntax for b in flat])),
            "r_schema": float(np.mean([b.r_schema for b in flat])),
            "r_sem": float(np.mean([b.r_sem for b in flat])),
            "kl": float(np.mean(kls)),
            "exec_acc_rolling": 100.0 * float(np.mean(self._exec_window)),
            "grad_norm": gnorm,
            "lr": lr,
            "zero_adv_groups": int(sum(not a.any() for a in all_adv)),
            "prompts": [self.ds.examples[i].id + ":" + self.ds.examples[i].lang for i in batch],
        }
        self.log.append(rec)
        self.step_no += 1
        return rec

    def _dump(self, groups) -> None:
        if not self.dump_dir:
            return
        self.dump_dir.mkdir(parents=True, exist_ok=True)
        data = [{"id": ctx.example.id, "lang": ctx.example.lang, "completions": comps, "texts": texts,
                 "rewards": [b.to_json() for b in bundles]} for ctx, comps, texts, bundles in groups]
        (self.dump_dir / f"bad_batch_step{self.step_no}.json").write_text(json.dumps(data, ensure_ascii=False))


def train(dataset: Dataset, policy: Policy, config: GrpoConfig, encoder=None, log_path=None,
          on_step: Callable[[dict, GrpoTrainer], None] | None = None, dump_dir=None) -> tuple[Policy, list[dict]]:
    """Run ``config.steps`` GRPO steps; returns the trained policy (updated in place) and the log."""
    trainer = GrpoTrainer(dataset, policy, config, encoder, log_path, dump_dir)
    for _ in range(config.steps):
        rec = trainer.step()
        if on_step:
            on_step(rec, trainer)
    return policy, trainer.log.records


def config_dict(cfg: GrpoConfig) -> dict:
    return asdict(cfg)


__all__ = ["GrpoConfig", "GrpoDivergenceError", "GrpoTrainer", "TrainLog", "config_dict", "group_advantages",
           "group_loss", "kl_divergence", "train"]
