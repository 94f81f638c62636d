"""Byte-level tokenizer and prompt layout."""
from __future__ import annotations

from dataclasses import dataclass

from ..schema import Schema

PAD, BOS, EOS, SEP = 256, 257, 258, 259
VOCAB_SIZE = 260
SPECIAL_NAMES = {PAD: "<pad>", BOS: "<bos>", EOS: "<eos>", SEP: "<sep>"}


class PromptTooLongError(ValueError):
    pass


@dataclass(frozen=True)
class TokenizerConfig:
    max_prompt_len: int = 320
    max_gen_len: int = 192
    vocab_size: int = VOCAB_SIZE


def tokenize(text: str) -> list[int]:
    return list(text.encode("utf-8"))


def detokenize(ids) -> str:
    """Inverse of ``tokenize``; special tokens are dropped and invalid UTF-8 is replaced."""
    return bytes(int(i) for i in ids if 0 <= int(i) < 256).decode("utf-8", errors="replace")


def serialize_schema(schema: Schema) -> str:
    return " ; ".join(f"{t.name}({','.join(t.column_names)})" for t in schema.tables)


def serialize_prompt(question: str, schema: Schema, lang: str, config: TokenizerConfig = TokenizerConfig()) -> list[int]:
    """``lang SEP question SEP schema SEP BOS``; generation continues after BOS."""
    ids = tokenize(lang) + [SEP] + tokenize(question) + [SEP] + tokenize(serialize_schema(schema)) + [SEP, BOS]
    if len(ids) > config.max_prompt_len:
        raise PromptTooLongError(f"prompt has {len(ids)} tokens, limit is {config.max_prompt_len}")
    return ids


def encode_completion(sql: str, config: TokenizerConfig = TokenizerConfig()) -> list[int]:
    ids = tokenize(sql) + [EOS]
    if len(ids) > config.max_gen_len:
        raise PromptTooLongError(f"completion has {len(ids)} tokens, limit is {config.max_gen_len}")
    return ids


def completion_text(ids) -> str:
    """SQL text of a generated completion: bytes up to (not including) the first EOS."""
    out = []
    for i in ids:
        if int(i) == EOS:
            break
        out.append(int(i))
    return detokenize(out)
