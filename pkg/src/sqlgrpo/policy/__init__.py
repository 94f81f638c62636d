"""Byte-level autoregressive policy: tokenizer, transformer, sampling and SFT."""
from __future__ import annotations

import numpy as np

from ..autodiff.tensor import no_grad
from .model import Policy, PolicyConfig, SampleGroup, Sampler, log_softmax_np
from .sft import DivergenceError, SftConfig, eval_loss, example_tokens, sft_train
from .tokenizer import (
    BOS,
    EOS,
    PAD,
    SEP,
    VOCAB_SIZE,
    PromptTooLongError,
    TokenizerConfig,
    completion_text,
    detokenize,
    encode_completion,
    serialize_prompt,
    serialize_schema,
    tokenize,
)


def log_probs(policy: Policy, prompt, completion) -> tuple[np.ndarray, np.ndarray]:
    """Per-token log-probabilities of ``completion`` and the full next-token distributions.

    Returns ``(token_logp (Tc,), dists (Tc, V))``; ``token_logp.sum()`` is the
    sequence log-probability.
    """
    completion = np.asarray(completion, dtype=np.int64)
    if completion.ndim != 1 or len(completion) == 0:
        raise ValueError("completion must be a non-empty 1-d token sequence")
    with no_grad():
        logits = policy.forward_group(prompt, completion[None, :]).data[0]
    lp = log_softmax_np(logits)
    return lp[np.arange(len(completion)), completion], np.exp(lp)


def sample_group(policy: Policy, prompt, G: int, temperature: float = 1.0, seed=None,
                 max_new: int | None = None) -> SampleGroup:
    return Sampler(policy).sample(prompt, G, temperature, seed, max_new)


def greedy_decode(policy: Policy, prompt, max_new: int | None = None, sampler: Sampler | None = None) -> str:
    return completion_text((sampler or Sampler(policy)).greedy(prompt, max_new))


__all__ = [
    "BOS", "EOS", "PAD", "SEP", "VOCAB_SIZE", "DivergenceError", "Policy", "PolicyConfig", "PromptTooLongError",
    "SampleGroup", "Sampler", "SftConfig", "TokenizerConfig", "completion_text", "detokenize", "encode_completion",
    "eval_loss", "example_tokens", "greedy_decode", "log_probs", "log_softmax_np", "sample_group", "serialize_prompt",
    "serialize_schema", "sft_train", "tokenize",
]
