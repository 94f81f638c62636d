"""Small pre-LN decoder-only transformer over bytes.

Two forward paths share the parameters:

* ``forward`` / ``forward_group`` build an autodiff graph (training, log-probs);
  ``forward_group`` runs one prompt once and lets G completions attend to it.
* ``Sampler`` is a plain-numpy incremental decoder with a key/value cache.

Both compute the same function; tests hold them to 1e-9.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..autodiff import ops
from ..autodiff.checkpoint import load_checkpoint, save_checkpoint
from ..autodiff.tensor import Tensor
from .tokenizer import EOS, VOCAB_SIZE, TokenizerConfig

NEG_INF = -1e9
LN_EPS = 1e-5


@dataclass(frozen=True)
class PolicyConfig:
    n_layers: int = 2
    d_model: int = 128
    n_heads: int = 4
    d_ff: int = 512
    context: int = 512
    vocab_size: int = VOCAB_SIZE
    init_std: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")


def _param_shapes(c: PolicyConfig) -> dict[str, tuple[int, ...]]:
    d, f = c.d_model, c.d_ff
    shapes = {"tok_emb": (c.vocab_size, d), "pos_emb": (c.context, d)}
    for i in range(c.n_layers):
        p = f"l{i}."
        shapes.update({
            p + "ln1_g": (d,), p + "ln1_b": (d,),
            p + "wq": (d, d), p + "wk": (d, d), p + "wv": (d, d), p + "wo": (d, d), p + "bo": (d,),
            p + "ln2_g": (d,), p + "ln2_b": (d,),
            p + "w1": (d, f), p + "b1": (f,), p + "w2": (f, d), p + "b2": (d,),
        })
    shapes.update({"lnf_g": (d,), "lnf_b": (d,), "w_out": (d, c.vocab_size), "b_out": (c.vocab_size,)})
    return shapes


class Policy:
    def __init__(self, config: PolicyConfig | None = None, tokenizer: TokenizerConfig | None = None,
                 params: dict[str, np.ndarray] | None = None):
        self.config = config or PolicyConfig()
        self.tokenizer = tokenizer or TokenizerConfig()
        shapes = _param_shapes(self.config)
        if params is None:
            rng = np.random.default_rng(self.config.seed)
            params = {}
            for k, shape in shapes.items():
                if k.endswith(("_g",)):
                    params[k] = np.ones(shape)
                elif len(shape) == 1:
                    params[k] = np.zeros(shape)
                else:
                    params[k] = rng.normal(0.0, self.config.init_std, shape)
        for k, shape in shapes.items():
            if k not in params or tuple(params[k].shape) != shape:
                raise ValueError(f"policy parameter {k!r} missing or not of shape {shape}")
        self.params = {k: Tensor(np.array(params[k], dtype=np.float64), requires_grad=True) for k in shapes}

    # ------------------------------------------------------------ bookkeeping

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def copy(self) -> Policy:
        return Policy(self.config, self.tokenizer, {k: v.data.copy() for k, v in self.params.items()})

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        meta = {"kind": "policy", "config": asdict(self.config), "tokenizer": asdict(self.tokenizer)}
        meta.update(extra or {})
        save_checkpoint(path, self.state_arrays(), meta)

    @classmethod
    def load(cls, path: str | Path) -> tuple[Policy, dict]:
        tensors, meta = load_checkpoint(path)
        if meta.get("kind") != "policy":
            raise ValueError(f"{path} is not a policy checkpoint")
        return cls(PolicyConfig(**meta["config"]), TokenizerConfig(**meta["tokenizer"]), tensors), meta

    # ------------------------------------------------------------ tape forward

    def _heads(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        c = self.config
        return ops.transpose(ops.reshape(x, (b, t, c.n_heads, c.d_model // c.n_heads)), (0, 2, 1, 3))

    def _merge(self, x: Tensor) -> Tensor:
        b, _, t, _ = x.shape
        return ops.reshape(ops.transpose(x, (0, 2, 1, 3)), (b, t, self.config.d_model))

    def _ffn(self, x: Tensor, p: str) -> Tensor:
        P = self.params
        h = ops.layer_norm(x, P[p + "ln2_g"], P[p + "ln2_b"], LN_EPS)
        return x + (ops.relu(h @ P[p + "w1"] + P[p + "b1"]) @ P[p + "w2"] + P[p + "b2"])

    def _embed(self, ids: np.ndarray, offset: int) -> Tensor:
        t = ids.shape[1]
        if offset + t > self.config.context:
            raise ValueError(f"sequence of length {offset + t} exceeds context {self.config.context}")
        P = self.params
        return ops.embedding_lookup(P["tok_emb"], ids) + ops.embedding_lookup(P["pos_emb"], np.arange(offset, offset + t))

    def _logits(self, h: Tensor) -> Tensor:
        P = self.params
        return ops.layer_norm(h, P["lnf_g"], P["lnf_b"], LN_EPS) @ P["w_out"] + P["b_out"]

    def forward(self, ids) -> Tensor:
        """Next-token logits ``(B, T, V)`` for right-padded token rows ``ids``."""
        ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
        t = ids.shape[1]
        scale = 1.0 / np.sqrt(self.config.d_model // self.config.n_heads)
        mask = np.triu(np.full((t, t), NEG_INF), k=1)
        x = self._embed(ids, 0)
        P = self.params
        for i in range(self.config.n_layers):
            p = f"l{i}."
            h = ops.layer_norm(x, P[p + "ln1_g"], P[p + "ln1_b"], LN_EPS)
            q, k, v = (self._heads(h @ P[p + w]) for w in ("wq", "wk", "wv"))
            att = ops.softmax(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))) * scale + mask)
            x = x + (self._merge(ops.matmul(att, v)) @ P[p + "wo"] + P[p + "bo"])
            x = self._ffn(x, p)
        return self._logits(x)

    def forward_group(self, prompt, completions) -> Tensor:
        """Logits predicting every completion token: ``(G, Tc, V)``.

        Row ``g``, position ``j`` is the distribution of ``completions[g, j]``
        given the prompt and ``completions[g, :j]``. The prompt is encoded once.
        """
        prompt = np.asarray(prompt, dtype=np.int64)[None, :]
        comp = np.atleast_2d(np.asarray(completions, dtype=np.int64))
        g, tc = comp.shape
        tp = prompt.shape[1]
        scale = 1.0 / np.sqrt(self.config.d_model // self.config.n_heads)
        mask_c = np.triu(np.full((tc, tc), NEG_INF), k=1)
        P = self.params
        xp = self._embed(prompt, 0)
        xc = self._embed(comp, tp)
        mask_p = np.triu(np.full((tp, tp), NEG_INF), k=1)
        for i in range(self.config.n_layers):
            p = f"l{i}."
            hp = ops.layer_norm(xp, P[p + "ln1_g"], P[p + "ln1_b"], LN_EPS)
            hc = ops.layer_norm(xc, P[p + "ln1_g"], P[p + "ln1_b"], LN_EPS)
            qp, kp, vp = (self._heads(hp @ P[p + w]) for w in ("wq", "wk", "wv"))
            qc, kc, vc = (self._heads(hc @ P[p + w]) for w in ("wq", "wk", "wv"))
            att_p = ops.softmax(ops.matmul(qp, ops.transpose(kp, (0, 1, 3, 2))) * scale + mask_p)
            xp = xp + (self._merge(ops.matmul(att_p, vp)) @ P[p + "wo"] + P[p + "bo"])
            # completions see the whole prompt plus their own causal prefix
            s_p = ops.matmul(qc, ops.transpose(kp, (0, 1, 3, 2))) * scale
            s_c = ops.matmul(qc, ops.transpose(kc, (0, 1, 3, 2))) * scale + mask_c
            att = ops.softmax(ops.concat([s_p, s_c], axis=-1))
            ctx = (ops.matmul(ops.slice_axis(att, -1, 0, tp), vp)
                   + ops.matmul(ops.slice_axis(att, -1, tp, tp + tc), vc))
            xc = xc + (self._merge(ctx) @ P[p + "wo"] + P[p + "bo"])
            xp = self._ffn(xp, p)
            xc = self._ffn(xc, p)
        last = ops.slice_axis(xp, 1, tp - 1, tp) * np.ones((g, 1, 1))
        h = ops.concat([last, ops.slice_axis(xc, 1, 0, tc - 1)], axis=1) if tc > 1 else last
        return self._logits(h)

    # ------------------------------------------------------------ numpy path

    def sampler(self) -> Sampler:
        return Sampler(self)


def _ln(x: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    return xc / np.sqrt(var + LN_EPS) * g + b


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax_np(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


@dataclass
class SampleGroup:
    completions: list[list[int]]  # token ids, ending in EOS unless truncated
    logprobs: list[np.ndarray]  # log pi(token) at temperature 1 for each completion token

    def texts(self) -> list[str]:
        from .tokenizer import completion_text
        return [completion_text(c) for c in self.completions]


class Sampler:
    """Incremental decoding with a per-layer key/value cache (no autodiff)."""

    def __init__(self, policy: Policy):
        self.policy = policy
        self.c = policy.config
        self.P = policy.state_arrays()

    def _split(self, x: np.ndarray) -> np.ndarray:
        b, t, _ = x.shape
        return x.reshape(b, t, self.c.n_heads, self.c.d_model // self.c.n_heads).transpose(0, 2, 1, 3)

    def _step(self, ids: np.ndarray, offset: int, cache_k: list, cache_v: list, length: int) -> np.ndarray:
        """Run ``ids`` (B, t) at positions offset..offset+t-1; caches hold ``length`` valid entries."""
        P, c = self.P, self.c
        b, t = ids.shape
        scale = 1.0 / np.sqrt(c.d_model // c.n_heads)
        x = P["tok_emb"][ids] + P["pos_emb"][offset:offset + t]
        mask = np.triu(np.full((t, length + t), NEG_INF), k=length + 1)
        for i in range(c.n_layers):
            p = f"l{i}."
            h = _ln(x, P[p + "ln1_g"], P[p + "ln1_b"])
            q, k, v = (self._split(h @ P[p + w]) for w in ("wq", "wk", "wv"))
            cache_k[i][:, :, length:length + t] = k
            cache_v[i][:, :, length:length + t] = v
            kk = cache_k[i][:, :, :length + t]
            vv = cache_v[i][:, :, :length + t]
            att = _softmax(q @ kk.transpose(0, 1, 3, 2) * scale + mask)
            ctx = (att @ vv).transpose(0, 2, 1, 3).reshape(b, t, c.d_model)
            x = x + (ctx @ P[p + "wo"] + P[p + "bo"])
            h = _ln(x, P[p + "ln2_g"], P[p + "ln2_b"])
            x = x + (np.maximum(h @ P[p + "w1"] + P[p + "b1"], 0.0) @ P[p + "w2"] + P[p + "b2"])
        return _ln(x[:, -1], P["lnf_g"], P["lnf_b"]) @ P["w_out"] + P["b_out"]

    def sample(self, prompt, n: int, temperature: float = 1.0, rng: np.random.Generator | int | None = None,
               max_new: int | None = None) -> SampleGroup:
        """``n`` completions by ancestral sampling; ``temperature == 0`` is greedy."""
        if temperature < 0:
            raise ValueError("temperature must be >= 0")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        prompt = np.asarray(prompt, dtype=np.int64)
        tp = len(prompt)
        max_new = self.policy.tokenizer.max_gen_len if max_new is None else max_new
        max_new = min(max_new, self.c.context - tp)
        if max_new <= 0:
            raise ValueError("prompt leaves no room for generation in the context window")
        dh = self.c.d_model // self.c.n_heads
        total = tp + max_new
        ck = [np.zeros((1, self.c.n_heads, total, dh)) for _ in range(self.c.n_layers)]
        cv = [np.zeros((1, self.c.n_heads, total, dh)) for _ in range(self.c.n_layers)]
        logits = self._step(prompt[None, :], 0, ck, cv, 0)
        ck = [np.repeat(a, n, axis=0) for a in ck]
        cv = [np.repeat(a, n, axis=0) for a in cv]
        logits = np.repeat(logits, n, axis=0)
        toks: list[list[int]] = [[] for _ in range(n)]
        lps: list[list[float]] = [[] for _ in range(n)]
        alive = np.ones(n, dtype=bool)
        for j in range(max_new):
            logp = log_softmax_np(logits)
            if temperature == 0.0:
                nxt = logp.argmax(axis=-1)
            else:
                probs = _softmax(logits / temperature)
                u = rng.random(n)
                nxt = np.minimum((probs.cumsum(axis=-1) < u[:, None]).sum(axis=-1), self.c.vocab_size - 1)
            for r in np.flatnonzero(alive):
                toks[r].append(int(nxt[r]))
                lps[r].append(float(logp[r, nxt[r]]))
            alive &= nxt != EOS
            if not alive.any() or j == max_new - 1:
                break
            logits = self._step(nxt[:, None], tp + j, ck, cv, tp + j)
        return SampleGroup(toks, [np.asarray(x) for x in lps])

    def greedy(self, prompt, max_new: int | None = None) -> list[int]:
        return self.sample(prompt, 1, 0.0, None, max_new).completions[0]


__all__ = ["PolicyConfig", "Policy", "SampleGroup", "Sampler", "log_softmax_np"]
