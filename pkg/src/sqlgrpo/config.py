"""Run configuration: TOML sections mapped onto the module config dataclasses.

Layout::

    [data]            mkdata seed and size
    [encoder.model]   EncoderConfig
    [encoder.train]   EncoderTrainConfig
    [policy.model]    PolicyConfig
    [policy.tokenizer] TokenizerConfig
    [policy.sft]      SftConfig
    [grpo]            GrpoConfig (without the reward weights)
    [rewards]         RewardWeights
    [eval]            EvalConfig

Unknown sections or keys raise ConfigError. ``RunConfig.to_dict`` materialises
every default, which is what run manifests store.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .encoder import EncoderConfig, EncoderTrainConfig
from .evaluation import EvalConfig
from .grpo import GrpoConfig
from .policy import PolicyConfig, SftConfig, TokenizerConfig
from .rewards import RewardWeights


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataConfig:
    seed: int = 1
    schemas: tuple[str, ...] = ("movies", "school", "shop")
    questions_per_schema: int = 40


# Values of the original large-scale setup, kept for reference. The defaults
# above are sized for one CPU core and a byte-level model trained from scratch.
REFERENCE_ALTERNATES = {
    "encoder.train": {"batch_size": 96, "lr": 2e-5, "weight_decay": 0.01, "warmup_steps": 500, "epochs": 2,
                      "margin": 0.5},
    "encoder.model": {"dropout": 0.1},
    "grpo": {"batch_prompts": 16, "steps": 3000, "lr": 5e-6, "warmup_steps": 500, "grad_clip": 1.0, "beta": 0.02},
    "rewards": {"w_exec": 1.0, "w_syntax": 0.5, "w_schema": 0.5, "w_sem": 0.2},
}


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    encoder_model: EncoderConfig = field(default_factory=EncoderConfig)
    encoder_train: EncoderTrainConfig = field(default_factory=EncoderTrainConfig)
    policy_model: PolicyConfig = field(default_factory=PolicyConfig)
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    sft: SftConfig = field(default_factory=SftConfig)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    @property
    def rewards(self) -> RewardWeights:
        return self.grpo.weights

    def to_dict(self) -> dict:
        g = dataclasses.asdict(self.grpo)
        weights = g.pop("weights")
        return {
            "data": dataclasses.asdict(self.data),
            "encoder": {"model": dataclasses.asdict(self.encoder_model), "train": dataclasses.asdict(self.encoder_train)},
            "policy": {"model": dataclasses.asdict(self.policy_model), "tokenizer": dataclasses.asdict(self.tokenizer),
                       "sft": dataclasses.asdict(self.sft)},
            "grpo": g,
            "rewards": weights,
            "eval": dataclasses.asdict(self.eval),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> RunConfig:
        raw = dict(raw)
        extra = set(raw) - {"data", "encoder", "policy", "grpo", "rewards", "eval"}
        if extra:
            raise ConfigError(f"unknown section(s): {sorted(extra)}")
        enc = _sub(raw.get("encoder", {}), "encoder", ("model", "train"))
        pol = _sub(raw.get("policy", {}), "policy", ("model", "tokenizer", "sft"))
        weights = _build(RewardWeights, raw.get("rewards", {}), "rewards")
        grpo_raw = dict(raw.get("grpo", {}))
        if "weights" in grpo_raw:
            raise ConfigError("[grpo]: reward weights belong in the [rewards] section")
        return cls(
            data=_build(DataConfig, raw.get("data", {}), "data"),
            encoder_model=_build(EncoderConfig, enc.get("model", {}), "encoder.model"),
            encoder_train=_build(EncoderTrainConfig, enc.get("train", {}), "encoder.train"),
            policy_model=_build(PolicyConfig, pol.get("model", {}), "policy.model"),
            tokenizer=_build(TokenizerConfig, pol.get("tokenizer", {}), "policy.tokenizer"),
            sft=_build(SftConfig, pol.get("sft", {}), "policy.sft"),
            grpo=_build(GrpoConfig, {**grpo_raw, "weights": weights}, "grpo"),
            eval=_build(EvalConfig, raw.get("eval", {}), "eval"),
        )

    @classmethod
    def load(cls, path: str | Path | None) -> RunConfig:
        if path is None:
            return cls()
        try:
            with open(path, "rb") as f:
                raw = tomli.load(f)
        except tomli.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None
        return cls.from_dict(raw)


def _sub(section: dict, name: str, allowed: tuple[str, ...]) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"[{name}] must be a table")
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"[{name}]: unknown key(s) {sorted(extra)}; use sub-tables {list(allowed)}")
    return section


def _build(cls, values: dict, where: str):
    if not isinstance(values, dict):
        raise ConfigError(f"[{where}] must be a table")
    names = {f.name: f for f in dataclasses.fields(cls)}
    extra = set(values) - set(names)
    if extra:
        raise ConfigError(f"[{where}]: unknown key(s) {sorted(extra)}")
    kw = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    try:
        return cls(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[{where}]: {e}") from None


def override(cfg: RunConfig, **changes) -> RunConfig:
    """Copy of ``cfg`` with ``section__key=value`` overrides, e.g. ``grpo__seed=2``."""
    d = cfg.to_dict()
    for key, value in changes.items():
        if value is None:
            continue
        node = d
        *path, leaf = key.split("__")
        for p in path:
            node = node[p]
        if leaf not in node:
            raise ConfigError(f"unknown override {key}")
        node[leaf] = value
    return RunConfig.from_dict(d)


__all__ = ["ConfigError", "DataConfig", "REFERENCE_ALTERNATES", "RunConfig", "override"]
