import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradcases import encoder_case, op_cases, policy_case
from sqlgrpo.autodiff import (
    AdamW,
    CheckpointError,
    NonFiniteGradientError,
    ShapeError,
    Tensor,
    clip_grad_norm,
    grad_norm,
    load_checkpoint,
    lr_schedule,
    no_grad,
    ops,
    save_checkpoint,
)
from sqlgrpo.autodiff.gradcheck import check_gradients

OP_TOL = 1e-4
COMPOSED_TOL = 1e-3


@pytest.mark.parametrize("name,build", op_cases(), ids=[n for n, _ in op_cases()])
def test_op_gradient(name, build):
    fn, inputs = build(np.random.default_rng(0))
    assert check_gradients(fn, inputs) < OP_TOL


def test_encoder_gradient():
    fn, params = encoder_case()
    assert check_gradients(fn, params, max_entries=40) < COMPOSED_TOL


def test_policy_gradient():
    fn, params = policy_case()
    assert check_gradients(fn, params, max_entries=25) < COMPOSED_TOL


def test_square_derivative():
    x = Tensor(np.array(3.0), requires_grad=True)
    (x * x).backward()
    assert x.grad == pytest.approx(6.0)


def test_softmax_grad_rows_sum_to_zero():
    x = Tensor(np.random.default_rng(1).normal(size=(4, 5)), requires_grad=True)
    y = ops.softmax(x)
    ops.sum(y * Tensor(np.random.default_rng(2).normal(size=(4, 5)))).backward()
    np.testing.assert_allclose(x.grad.sum(axis=1), 0.0, atol=1e-12)


def test_grads_accumulate_over_backward_calls():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    ops.sum(x * 2.0).backward()
    ops.sum(x * 3.0).backward()
    np.testing.assert_allclose(x.grad, [5.0, 5.0])


def test_shape_mismatch():
    with pytest.raises((ShapeError, ValueError)):
        ops.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))


def test_no_grad_builds_no_graph():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = ops.sum(x * 2.0)
    assert not y.requires_grad


def test_dropout_eval_identity_and_seeded():
    x = Tensor(np.random.default_rng(0).normal(size=(5, 7)))
    assert np.array_equal(ops.dropout(x, 0.5, False, 1).data, x.data)
    a = ops.dropout(x, 0.5, True, 9).data
    b = ops.dropout(x, 0.5, True, 9).data
    assert np.array_equal(a, b)
    assert not np.array_equal(a, x.data)


def test_adamw_zero_grad_no_decay_leaves_params():
    w = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    w.grad = np.zeros(2)
    AdamW([w], lr=0.1).step()
    np.testing.assert_array_equal(w.data, [1.0, -2.0])


def test_adamw_descends_on_square():
    w = Tensor(np.array(1.0), requires_grad=True)
    opt = AdamW([w], lr=0.1)
    (w * w).backward()
    opt.step()
    assert float(w.data) ** 2 < 1.0


def test_adamw_decoupled_decay():
    w = Tensor(np.array([2.0, -4.0]), requires_grad=True)
    w.grad = np.zeros(2)
    AdamW([w], lr=0.1, weight_decay=0.01).step()
    np.testing.assert_allclose(w.data, np.array([2.0, -4.0]) * (1 - 0.001), rtol=0, atol=1e-15)


def test_adamw_rejects_non_finite():
    w = Tensor(np.array([1.0]), requires_grad=True)
    w.grad = np.array([np.nan])
    with pytest.raises(NonFiniteGradientError):
        AdamW([w]).step()


def test_lr_schedule_points():
    assert lr_schedule(0, 1e-3, 500) == 0.0
    assert lr_schedule(250, 1e-3, 500) == pytest.approx(5e-4)
    assert lr_schedule(500, 1e-3, 500) == 1e-3
    assert lr_schedule(10_000, 1e-3, 500) == 1e-3


def _with_grad(g):
    t = Tensor(np.zeros_like(g), requires_grad=True)
    t.grad = np.array(g, dtype=float)
    return t


def test_clip_grad_norm_cases():
    p = _with_grad([0.3, 0.4])
    assert clip_grad_norm([p], 1.0) == 1.0 and grad_norm([p]) == pytest.approx(0.5)
    q = _with_grad([1.2, 1.6])
    assert clip_grad_norm([q], 1.0) == pytest.approx(0.5)
    np.testing.assert_allclose(q.grad, [0.6, 0.8])
    z = _with_grad([0.0, 0.0])
    assert clip_grad_norm([z], 1.0) == 1.0 and not z.grad.any()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=6), st.floats(0.01, 10))
def test_clip_bounds_norm(g, max_norm):
    p = _with_grad(g)
    clip_grad_norm([p], max_norm)
    assert grad_norm([p]) <= max_norm * (1 + 1e-12)


def test_checkpoint_round_trip(tmp_path):
    tensors = {"a": np.arange(6.0).reshape(2, 3), "b": np.array([np.pi])}
    save_checkpoint(tmp_path / "c.ckpt", tensors, {"step": 4, "arch": {"d": 2}})
    got, meta = load_checkpoint(tmp_path / "c.ckpt")
    assert meta["step"] == 4 and meta["arch"] == {"d": 2}
    for k in tensors:
        assert np.array_equal(got[k], tensors[k])


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "x.ckpt"
    p.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(p)


def test_identical_seeds_identical_trajectories():
    def run():
        rng = np.random.default_rng(0)
        w = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        x = rng.normal(size=(8, 4))
        opt = AdamW([w], lr=0.05, weight_decay=0.01)
        for step in range(20):
            opt.zero_grad()
            loss = ops.mean(ops.dropout(ops.relu(Tensor(x) @ w), 0.2, True, step))
            loss.backward()
            opt.step()
        return w.data.copy()

    assert np.array_equal(run(), run())
