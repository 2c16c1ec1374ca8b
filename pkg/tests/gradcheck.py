"""Finite-difference gradient checking against the reverse-mode engine.

All checks run in float64 with a random-projection loss, sum(r * f(x)):
projecting onto a fixed random direction exercises every output
coordinate while avoiding losses (like sums of squares of normalized
outputs) whose directional derivatives vanish and turn central
differences into pure cancellation noise.
"""

from __future__ import annotations

import numpy as np

from speakernas.autodiff import Tape, Tensor, backward, ops


def projection_loss(build, tensors, rng):
    """loss(x...) = sum(r * build(x...)); returns (loss_fn, r)."""
    with Tape() as tape:
        out = build(*tensors)
    r = rng.standard_normal(out.data.shape)
    return r


def analytic_grads(build, tensors, r):
    with Tape() as tape:
        out = build(*tensors)
        loss = ops.sum_all(ops.mul(out, Tensor(r.astype(out.data.dtype))))
        grads = backward(tape, loss)
    return [grads.get(t) for t in tensors]


def numeric_grad(build, tensors, which, r, eps=1e-5):
    """Central finite differences of the projection loss wrt one input."""
    target = tensors[which]
    base = target.data.copy()
    grad = np.zeros_like(base, dtype=np.float64)
    flat = grad.reshape(-1)
    data = target.data.reshape(-1)
    for i in range(flat.size):
        orig = data[i]
        data[i] = orig + eps
        hi = float(np.sum(r * build(*tensors).data))
        data[i] = orig - eps
        lo = float(np.sum(r * build(*tensors).data))
        data[i] = orig
        flat[i] = (hi - lo) / (2 * eps)
    target.data[...] = base
    return grad


def relative_error(a, b):
    denom = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-8)
    return float(np.abs(a - b).max(initial=0.0) / denom)


def check_gradients(build, tensors, rng, eps=1e-5, sample=None):
    """Max relative error between analytic and FD grads over all inputs.

    ``sample``: optionally check only that many randomly chosen
    coordinates per input (FD is O(n) forwards per input).
    """
    r = projection_loss(build, tensors, rng)
    worst = 0.0
    grads = analytic_grads(build, tensors, r)
    for which, t in enumerate(tensors):
        if not t.requires_grad:
            continue
        ana = grads[which]
        assert ana is not None, f"missing gradient for input {which}"
        if sample is not None and t.data.size > sample:
            idx = rng.choice(t.data.size, size=sample, replace=False)
            num = np.zeros(t.data.size)
            flat = t.data.reshape(-1)
            for i in idx:
                orig = flat[i]
                flat[i] = orig + eps
                hi = float(np.sum(r * build(*tensors).data))
                flat[i] = orig - eps
                lo = float(np.sum(r * build(*tensors).data))
                flat[i] = orig
                num[i] = (hi - lo) / (2 * eps)
            ana_flat = ana.reshape(-1)
            denom = max(np.abs(ana_flat[idx]).max(initial=0.0),
                        np.abs(num[idx]).max(initial=0.0), 1e-8)
            err = float(np.abs(ana_flat[idx] - num[idx]).max(initial=0.0) / denom)
        else:
            num = numeric_grad(build, tensors, which, r, eps=eps)
            err = relative_error(ana, num)
        worst = max(worst, err)
    return worst


def rand_tensor(rng, shape, requires_grad=True, scale=1.0):
    return Tensor(scale * rng.standard_normal(shape), dtype=np.float64,
                  requires_grad=requires_grad)
