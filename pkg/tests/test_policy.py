import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import artifacts
from sqlgrpo.autodiff import ops
from sqlgrpo.policy import (
    BOS,
    EOS,
    SEP,
    VOCAB_SIZE,
    Policy,
    PolicyConfig,
    PromptTooLongError,
    Sampler,
    SftConfig,
    TokenizerConfig,
    detokenize,
    greedy_decode,
    log_probs,
    sample_group,
    serialize_prompt,
    serialize_schema,
    sft_train,
    tokenize,
)

TINY = PolicyConfig(n_layers=1, d_model=16, n_heads=2, d_ff=32, context=64, seed=3)


@pytest.fixture(scope="module")
def tiny():
    return Policy(TINY, TokenizerConfig(max_prompt_len=40, max_gen_len=20))


@given(st.text(max_size=60))
@settings(max_examples=1000)
def test_tokenizer_round_trip(s):
    ids = tokenize(s)
    assert all(0 <= i < 256 for i in ids)
    assert detokenize(ids) == s


def test_four_byte_characters_round_trip():
    s = "𝔘𝔫𝔦 😀 𠜎"
    assert len(tokenize(s)) == 4 * 5 + 2
    assert detokenize(tokenize(s)) == s


def test_special_tokens_are_outside_bytes():
    assert sorted([BOS, EOS, SEP]) == [257, 258, 259]
    assert VOCAB_SIZE == 260


def test_movies_schema_serialization(movies):
    assert serialize_schema(movies) == "actor(id,name) ; casting(actorid,movieid)"


def test_prompt_layout(movies):
    ids = serialize_prompt("wer?", movies, "de")
    assert ids == tokenize("de") + [SEP] + tokenize("wer?") + [SEP] + tokenize(serialize_schema(movies)) + [SEP, BOS]
    assert ids == serialize_prompt("wer?", movies, "de")


def test_prompt_over_budget(movies):
    with pytest.raises(PromptTooLongError):
        serialize_prompt("x" * 400, movies, "en")


def test_log_probs_normalised(tiny):
    prompt = [1, 2, 3]
    comp = [65, 66, 67, EOS]
    tok, dists = log_probs(tiny, prompt, comp)
    assert dists.shape == (4, VOCAB_SIZE)
    np.testing.assert_allclose(dists.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(np.exp(tok), dists[np.arange(4), comp], rtol=1e-12)


def test_single_token_completion_log_prob(tiny):
    tok, dists = log_probs(tiny, [5, 6], [70])
    assert tok.sum() == pytest.approx(np.log(dists[0, 70]), abs=1e-12)


def test_log_probs_rejects_empty(tiny):
    with pytest.raises(ValueError):
        log_probs(tiny, [1], [])


def test_sampler_stored_logprobs_match_forward(tiny):
    g = sample_group(tiny, [1, 2, 3], 4, 1.0, seed=11)
    for comp, lp in zip(g.completions, g.logprobs):
        tok, _ = log_probs(tiny, [1, 2, 3], comp)
        np.testing.assert_allclose(lp, tok, atol=1e-9)


def test_sampling_deterministic_under_seed(tiny):
    a = sample_group(tiny, [1, 2, 3], 8, 1.0, seed=5)
    b = sample_group(tiny, [1, 2, 3], 8, 1.0, seed=5)
    assert a.completions == b.completions
    assert a.completions != sample_group(tiny, [1, 2, 3], 8, 1.0, seed=6).completions


def test_low_temperature_limit_is_greedy(tiny):
    greedy = Sampler(tiny).greedy([9, 8, 7])
    cold = sample_group(tiny, [9, 8, 7], 3, 1e-6, seed=0).completions
    assert all(c == greedy for c in cold)


def test_completions_bounded(tiny):
    g = sample_group(tiny, [1, 2, 3], 8, 1.0, seed=0)
    for c in g.completions:
        assert len(c) <= 20
        assert EOS not in c[:-1]


def test_sampling_matches_softmax_frequencies():
    pol = Policy(PolicyConfig(n_layers=1, d_model=16, n_heads=2, d_ff=32, context=8, init_std=0.3, seed=4))
    prompt = [10, 20, 30]
    n = 100_000
    draws = Sampler(pol).sample(prompt, n, 1.0, 2024, max_new=1).completions
    counts = np.bincount([c[0] for c in draws], minlength=VOCAB_SIZE)
    p = log_probs(pol, prompt, [0])[1][0]
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 3 * sigma + 1e-9)


def test_forward_shapes_match_config(tiny):
    logits = tiny.forward(np.array([[1, 2, 3, 4]]))
    assert logits.shape == (1, 4, VOCAB_SIZE)
    for name, arr in tiny.state_arrays().items():
        assert np.all(np.isfinite(arr)), name


def test_checkpoint_round_trip(tiny, tmp_path):
    tiny.save(tmp_path / "p.ckpt", {"note": "x"})
    back, meta = Policy.load(tmp_path / "p.ckpt")
    assert meta["note"] == "x"
    assert back.config == tiny.config
    for k, v in tiny.state_arrays().items():
        np.testing.assert_array_equal(back.state_arrays()[k], v)


def test_copy_is_independent(tiny):
    c = tiny.copy()
    c.params["b_out"].data += 1.0
    assert not np.array_equal(c.params["b_out"].data, tiny.params["b_out"].data)


def test_sft_memorises_ten_examples(train_ds):
    sub = train_ds.subset(list(train_ds.examples[:10]))
    cfg = SftConfig(epochs=150, batch_size=10, lr=3e-3, warmup_steps=5, weight_decay=0.0)
    pol, log = sft_train(sub, sub, cfg, policy_config=PolicyConfig(n_layers=1, d_model=64, n_heads=4, d_ff=128))
    assert log[-1]["eval_loss"] < log[0]["eval_loss"]
    for ex in sub:
        assert greedy_decode(pol, serialize_prompt(ex.question, sub.schemas[ex.db_id], ex.lang)) == ex.gold_sql


def test_sft_beats_random_init(train_ds, dev_ds):
    from sqlgrpo.evaluation import exec_acc
    pol, log = artifacts.sft_policy(train_ds, dev_ds)[0]
    assert log[-1]["eval_loss"] < log[0]["eval_loss"]
    assert exec_acc(pol, dev_ds) > exec_acc(Policy(pol.config), dev_ds)


def test_forward_group_matches_forward(tiny):
    prompt = [1, 2, 3]
    comps = np.array([[65, 66, EOS], [67, EOS, 256]])
    grp = tiny.forward_group(prompt, comps).data
    for r in range(2):
        full = tiny.forward(np.array([prompt + list(comps[r][:-1])])).data[0]
        np.testing.assert_allclose(grp[r], full[len(prompt) - 1:], atol=1e-10)
    assert ops.log_softmax(tiny.forward_group(prompt, comps)).shape == grp.shape
