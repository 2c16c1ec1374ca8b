"""Adam and the cosine learning-rate schedule."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speakernas.autodiff import Adam, Tensor, cosine_lr
from speakernas.errors import ConfigurationError, NumericsError


def _param(values, name="p"):
    return Tensor(np.asarray(values, dtype=np.float64), requires_grad=True,
                  name=name)


def test_adam_single_step_closed_form():
    """First step with bias correction: delta = lr * g / (|g| + eps)."""
    lr, eps = 0.1, 1e-8
    p = _param([1.0, -2.0, 3.0])
    initial = p.data.copy()
    g = np.array([0.5, -1.0, 2.0])
    opt = Adam([p], lr=lr, weight_decay=0.0, eps=eps)
    opt.step([g])
    # m_hat = g, v_hat = g^2 exactly after one bias-corrected step
    expect = initial - lr * g / (np.abs(g) + eps)
    assert np.allclose(p.data, expect, atol=1e-12)


def test_adam_two_steps_match_reference_recurrence():
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    p = _param([0.3, -0.7])
    grads = [np.array([1.0, -2.0]), np.array([0.5, 0.5])]
    opt = Adam([p], lr=lr, betas=(b1, b2), weight_decay=0.0, eps=eps)

    ref = p.data.copy()
    m = np.zeros(2)
    v = np.zeros(2)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1 ** t)
        vh = v / (1 - b2 ** t)
        ref = ref - lr * mh / (np.sqrt(vh) + eps)
        opt.step([g])
    assert np.allclose(p.data, ref, atol=1e-12)


def test_weight_decay_is_coupled_into_gradient():
    """L2 joins the gradient before the moments, so decay participates
    in the adaptive scaling rather than acting as a separate shrink."""
    lr, wd = 0.1, 0.5
    p = _param([2.0])
    opt = Adam([p], lr=lr, weight_decay=wd)
    opt.step([np.array([0.0])])
    g = wd * 2.0
    expect = 2.0 - lr * g / (abs(g) + opt.eps)
    assert np.allclose(p.data, expect, atol=1e-12)


def test_zero_grad_nonzero_decay_shrinks_norm():
    rng = np.random.default_rng(0)
    p = _param(rng.standard_normal(16))
    opt = Adam([p], lr=1e-2, weight_decay=3e-4)
    for _ in range(5):
        before = np.linalg.norm(p.data)
        opt.step([np.zeros(16)])
        assert np.linalg.norm(p.data) < before


def test_nonfinite_gradient_aborts_with_param_name():
    p = _param([1.0], name="stem.weight")
    opt = Adam([p], lr=0.1)
    with pytest.raises(NumericsError) as info:
        opt.step([np.array([np.nan])])
    assert "stem.weight" in str(info.value)


def test_skipped_gradients_leave_params_untouched():
    p = _param([1.0, 2.0])
    q = _param([3.0])
    opt = Adam([p, q], lr=0.1)
    opt.step([np.array([1.0, 1.0]), None])
    assert np.allclose(q.data, [3.0])
    assert not np.allclose(p.data, [1.0, 2.0])


def test_cosine_lr_endpoints():
    assert cosine_lr(0.1, 0, 50) == pytest.approx(0.1)
    assert cosine_lr(0.1, 50, 50) == pytest.approx(0.0, abs=1e-12)
    assert cosine_lr(0.1, 25, 50) == pytest.approx(0.05)


def test_cosine_lr_validates_inputs():
    with pytest.raises(ConfigurationError):
        cosine_lr(0.1, 5, 0)
    with pytest.raises(ConfigurationError):
        cosine_lr(0.1, -1, 10)
    with pytest.raises(ConfigurationError):
        cosine_lr(0.1, 11, 10)


@settings(max_examples=60, deadline=None)
@given(lr=st.floats(1e-6, 10.0), total=st.integers(1, 500),
       data=st.data())
def test_cosine_lr_monotone_and_bounded(lr, total, data):
    epoch = data.draw(st.integers(0, total - 1))
    a = cosine_lr(lr, epoch, total)
    b = cosine_lr(lr, epoch + 1, total)
    assert 0.0 <= b <= a <= lr
    assert a == pytest.approx(lr * 0.5 * (1 + math.cos(math.pi * epoch / total)))
