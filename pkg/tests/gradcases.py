"""Finite-difference cases for every autodiff op and the composed models.

Each case builds fresh inputs and returns ``(fn, inputs)`` where ``fn()`` is a
scalar tensor; projecting outputs onto fixed random weights keeps the check
sensitive to every output entry.
"""
from __future__ import annotations

import numpy as np

from sqlgrpo.autodiff import Tensor, ops


def _t(rng, *shape, scale=1.0, away_from_zero=False):
    x = rng.normal(0.0, scale, shape)
    if away_from_zero:
        x = np.where(np.abs(x) < 0.1, x + np.sign(x + 1e-12) * 0.2, x)
    return Tensor(x, requires_grad=True)


def _proj(y: Tensor, rng) -> Tensor:
    return ops.sum(y * Tensor(rng.normal(size=y.shape)))


def op_cases():
    def case(name, build):
        return name, build

    def matmul(rng):
        a, b = _t(rng, 2, 3, 4), _t(rng, 4, 5)
        return (lambda: _proj(ops.matmul(a, b), np.random.default_rng(1))), [a, b]

    def matmul_batched(rng):
        a, b = _t(rng, 2, 3, 4), _t(rng, 2, 4, 2)
        return (lambda: _proj(a @ b, np.random.default_rng(1))), [a, b]

    def add(rng):
        a, b = _t(rng, 3, 4), _t(rng, 4)
        return (lambda: _proj(a + b, np.random.default_rng(1))), [a, b]

    def sub(rng):
        a, b = _t(rng, 2, 3, 4), _t(rng, 3, 1)
        return (lambda: _proj(a - b, np.random.default_rng(1))), [a, b]

    def mul(rng):
        a, b = _t(rng, 2, 3), _t(rng, 2, 3)
        return (lambda: _proj(a * b, np.random.default_rng(1))), [a, b]

    def div(rng):
        a, b = _t(rng, 2, 3), _t(rng, 2, 3, away_from_zero=True)
        b.data += np.sign(b.data) * 1.0
        return (lambda: _proj(ops.div(a, b), np.random.default_rng(1))), [a, b]

    def relu(rng):
        a = _t(rng, 3, 5, away_from_zero=True)
        return (lambda: _proj(ops.relu(a), np.random.default_rng(1))), [a]

    def exp(rng):
        a = _t(rng, 3, 4)
        return (lambda: _proj(ops.exp(a), np.random.default_rng(1))), [a]

    def log(rng):
        a = Tensor(rng.uniform(0.5, 2.0, (3, 4)), requires_grad=True)
        return (lambda: _proj(ops.log(a), np.random.default_rng(1))), [a]

    def softmax(rng):
        a = _t(rng, 3, 6)
        return (lambda: _proj(ops.softmax(a), np.random.default_rng(1))), [a]

    def log_softmax(rng):
        a = _t(rng, 2, 3, 6)
        return (lambda: _proj(ops.log_softmax(a), np.random.default_rng(1))), [a]

    def layer_norm(rng):
        x, g, b = _t(rng, 3, 8), _t(rng, 8), _t(rng, 8)
        return (lambda: _proj(ops.layer_norm(x, g, b), np.random.default_rng(1))), [x, g, b]

    def embedding_lookup(rng):
        table = _t(rng, 7, 4)
        idx = np.array([[0, 3, 3], [6, 1, 0]])
        return (lambda: _proj(ops.embedding_lookup(table, idx), np.random.default_rng(1))), [table]

    def concat(rng):
        a, b = _t(rng, 2, 3), _t(rng, 2, 5)
        return (lambda: _proj(ops.concat([a, b], axis=-1), np.random.default_rng(1))), [a, b]

    def slice_axis(rng):
        a = _t(rng, 2, 6, 3)
        return (lambda: _proj(ops.slice_axis(a, 1, 2, 5), np.random.default_rng(1))), [a]

    def reshape_transpose(rng):
        a = _t(rng, 2, 3, 4)
        return (lambda: _proj(ops.transpose(ops.reshape(a, (6, 4)), (1, 0)), np.random.default_rng(1))), [a]

    def reductions(rng):
        a = _t(rng, 3, 4)
        w0, w1 = Tensor(rng.normal(size=4)), Tensor(rng.normal(size=(3, 1)))
        return (lambda: ops.sum(ops.sum(a, axis=0) * w0) + ops.sum(ops.mean(a, axis=1, keepdims=True) * w1)
                + ops.mean(a)), [a]

    def dropout(rng):
        a = _t(rng, 4, 6)
        return (lambda: _proj(ops.dropout(a, 0.3, True, 123), np.random.default_rng(1))), [a]

    def l2_normalize(rng):
        a = _t(rng, 3, 5)
        return (lambda: _proj(ops.l2_normalize(a), np.random.default_rng(1))), [a]

    def cosine_similarity(rng):
        a, b = _t(rng, 3, 5), _t(rng, 3, 5)
        return (lambda: _proj(ops.cosine_similarity(a, b), np.random.default_rng(1))), [a, b]

    def gather_last(rng):
        a = _t(rng, 2, 3, 5)
        idx = np.array([[0, 4, 2], [1, 1, 3]])
        return (lambda: _proj(ops.gather_last(a, idx), np.random.default_rng(1))), [a]

    def cross_entropy(rng):
        logits = _t(rng, 2, 3, 6)
        tgt = np.array([[0, 5, 2], [3, 3, 1]])
        w = np.array([[1.0, 0.0, 1.0], [1.0, 1.0, 0.5]])
        return (lambda: ops.cross_entropy(logits, tgt, w)), [logits]

    return [case(f.__name__, f) for f in (
        matmul, matmul_batched, add, sub, mul, div, relu, exp, log, softmax, log_softmax, layer_norm,
        embedding_lookup, concat, slice_axis, reshape_transpose, reductions, dropout, l2_normalize,
        cosine_similarity, gather_last, cross_entropy)]


def encoder_case():
    from sqlgrpo.encoder import Encoder, EncoderConfig, triplet_loss_tensor
    enc = Encoder(EncoderConfig(buckets=257, d_enc=8, hidden=12, d_out=6, init_scale=0.5, seed=3))
    texts = ["show every actor", "zeige alle Schauspieler", "count casting rows"]

    def fn():
        out = enc.forward(texts, train=True, rng=np.random.default_rng(5))
        a, p, n = (ops.embedding_lookup(out, np.array([i])) for i in range(3))
        return triplet_loss_tensor(a, p, n, margin=1.5)

    return fn, enc.parameters()


def policy_case():
    from sqlgrpo.policy import Policy, PolicyConfig
    pol = Policy(PolicyConfig(n_layers=2, d_model=16, n_heads=2, d_ff=24, context=32, init_std=0.3, seed=2))
    prompt = [5, 9, 259, 40, 257]
    comps = np.array([[70, 71, 258], [72, 258, 256]])
    w = np.random.default_rng(4).normal(size=(2, 3, 260))

    def fn():
        return ops.sum(ops.log_softmax(pol.forward_group(prompt, comps)) * w)

    return fn, pol.parameters()
