"""Central finite-difference gradient checking."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, no_grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """Norm-wise relative error ``|a-b| / max(|a|+|b|, 1e-300)``."""
    num = float(np.linalg.norm((a - b).ravel()))
    den = float(np.linalg.norm(a.ravel()) + np.linalg.norm(b.ravel()))
    return 0.0 if num == 0.0 else num / max(den, 1e-300)


def numeric_grad(fn: Callable[[], Tensor], x: Tensor, h: float = 1e-5, max_entries: int | None = None,
                 rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference gradient of scalar ``fn()`` w.r.t. ``x`` on (a sample of) its entries.

    Returns (flat indices checked, gradient values at those indices).
    """
    flat = x.data.reshape(-1)
    idx = np.arange(flat.size)
    if max_entries is not None and flat.size > max_entries:
        rng = rng or np.random.default_rng(0)
        idx = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
    out = np.empty(len(idx))
    with no_grad():
        for k, i in enumerate(idx):
            old = flat[i]
            flat[i] = old + h
            fp = float(fn().data)
            flat[i] = old - h
            fm = float(fn().data)
            flat[i] = old
            out[k] = (fp - fm) / (2 * h)
    return idx, out


def check_gradients(fn: Callable[[], Tensor], inputs: Sequence[Tensor], h: float = 1e-5,
                    max_entries: int | None = None, seed: int = 0) -> float:
    """Worst norm-wise relative error between analytic and numeric gradients over ``inputs``."""
    for x in inputs:
        x.grad = None
    out = fn()
    out.backward()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in inputs:
        analytic = np.zeros_like(x.data) if x.grad is None else x.grad
        idx, num = numeric_grad(fn, x, h, max_entries, rng)
        worst = max(worst, relative_error(analytic.reshape(-1)[idx], num))
    return worst
