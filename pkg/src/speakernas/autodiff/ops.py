"""Differentiable primitives over 4-D feature maps and flat vectors.

Every function takes and returns :class:`Tensor`, computes the forward
value with numpy and registers a backward rule on the active tape.
Convolutions follow the standard arithmetic

    out = floor((in + 2*padding - dilation*(kernel-1) - 1) / stride) + 1

and "same" padding for stride-1 ops is ``dilation * (kernel - 1) // 2``.
Loss and entropy reductions accumulate in float64 regardless of the
tensor dtype.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ContractError, DimensionError, UnsupportedPrimitiveError
from .tensor import Tensor, record_op


def conv_out_size(n, kernel, stride, dilation, padding):
    eff = dilation * (kernel - 1) + 1
    return (n + 2 * padding - eff) // stride + 1


def same_padding(kernel, dilation=1):
    return dilation * (kernel - 1) // 2


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _require_rank(x, rank, op):
    if x.data.ndim != rank:
        raise DimensionError(f"{op}: expected rank-{rank} input, got shape {x.shape}")


def _pad2d(a, pad, value=0.0):
    if pad == 0:
        return a
    b, c, h, w = a.shape
    if value == 0.0:
        out = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=a.dtype)
    else:
        out = np.full((b, c, h + 2 * pad, w + 2 * pad), value, dtype=a.dtype)
    out[:, :, pad:-pad, pad:-pad] = a
    return out


def _windows(xp, kernel, stride, dilation):
    """Strided view (B, C, Ho, Wo, k, k) over a padded map. No copy."""
    eff = dilation * (kernel - 1) + 1
    win = sliding_window_view(xp, (eff, eff), axis=(2, 3))
    return win[:, :, ::stride, ::stride, ::dilation, ::dilation]


# ---------------------------------------------------------------------------
# elementwise / structural
# ---------------------------------------------------------------------------

def add(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"add: shapes {a.shape} vs {b.shape}")
    return record_op("add", (a, b), a.data + b.data, lambda g: (g, g))


def mul(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"mul: shapes {a.shape} vs {b.shape}")
    ad, bd = a.data, b.data
    return record_op("mul", (a, b), ad * bd, lambda g: (g * bd, g * ad))


def scale(x, c):
    c = float(c)
    return record_op("scale", (x,), x.data * np.asarray(c, dtype=x.dtype),
                     lambda g: (g * c,))


def identity(x):
    # Shares the underlying array; the op only exists as a tape record.
    return record_op("identity", (x,), x.data, lambda g: (g,))


def zero_like(x, stride=1):
    """The no-connection op: zeros at the (possibly strided) output shape."""
    b, c, h, w = x.shape
    out = np.zeros((b, c, -(-h // stride), -(-w // stride)), dtype=x.dtype)
    return record_op("zero", (x,), out, lambda g: (None,))


def relu(x):
    out = np.maximum(x.data, x.dtype.type(0))
    # out > 0 iff x > 0, so the mask can be rebuilt from the output lazily
    return record_op("relu", (x,), out, lambda g: (g * (out > 0),))


def shift_topleft(x):
    """Shift the image one pixel up-left, zero-filling the far edges.

    out[h, w] = x[h+1, w+1]; the last row/column become zero. Feeding a
    stride-2 conv with this view samples the odd-offset pixel grid, the
    second path of a factorized spatial reduction.
    """
    _require_rank(x, 4, "shift_topleft")
    out = np.zeros_like(x.data)
    out[:, :, :-1, :-1] = x.data[:, :, 1:, 1:]

    def bwd(g):
        gx = np.zeros_like(g)
        gx[:, :, 1:, 1:] = g[:, :, :-1, :-1]
        return (gx,)

    return record_op("shift_topleft", (x,), out, bwd)


def sum_all(x):
    total = np.sum(x.data, dtype=np.float64)
    out = np.asarray(total, dtype=x.dtype)
    return record_op("sum", (x,), out, lambda g: (np.full_like(x.data, g),))


def concat_channels(parts):
    for p in parts:
        _require_rank(p, 4, "concat")
    ref = parts[0].shape
    for i, p in enumerate(parts[1:], 1):
        if p.shape[0] != ref[0] or p.shape[2:] != ref[2:]:
            raise DimensionError(
                f"concat: part {i} has shape {p.shape}, expected batch/spatial {ref}"
            )
    out = np.concatenate([p.data for p in parts], axis=1)
    sizes = [p.shape[1] for p in parts]
    bounds = np.cumsum([0] + sizes)

    def bwd(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(sizes)))

    return record_op("concat", tuple(parts), out, bwd)


def slice_row(x, index):
    """Extract row ``index`` from a 2-D tensor (used for alpha rows)."""
    _require_rank(x, 2, "slice_row")
    idx = int(index)
    shape = x.shape

    def bwd(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[idx] = g
        return (gx,)

    return record_op("slice_row", (x,), x.data[idx].copy(), bwd)


def weighted_sum(parts, weights):
    """Mixture ``sum_k w[k] * parts[k]`` with gradients to both sides.

    ``weights`` is a rank-1 tensor of length len(parts); all parts share
    one shape.
    """
    _require_rank(weights, 1, "weighted_sum")
    if weights.shape[0] != len(parts):
        raise DimensionError(
            f"weighted_sum: {len(parts)} parts vs {weights.shape[0]} weights"
        )
    ref = parts[0].shape
    for i, p in enumerate(parts[1:], 1):
        if p.shape != ref:
            raise ContractError(
                f"weighted_sum: part {i} shape {p.shape} != {ref}; mixture "
                "operands must be shape-aligned by construction"
            )
    w = weights.data
    out = w[0] * parts[0].data
    for k in range(1, len(parts)):
        out += w[k] * parts[k].data

    datas = [p.data for p in parts]

    def bwd(g):
        gw = np.array([np.vdot(g, d) for d in datas], dtype=weights.dtype)
        return tuple(w[k] * g for k in range(len(datas))) + (gw,)

    return record_op("weighted_sum", tuple(parts) + (weights,), out, bwd)


def softmax(x, axis=-1):
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        dot = (g * p).sum(axis=axis, keepdims=True)
        return (p * (g - dot),)

    return record_op("softmax", (x,), p, bwd)


# ---------------------------------------------------------------------------
# convolution family
# ---------------------------------------------------------------------------

def conv2d(x, w, b=None, stride=1, dilation=1, padding=0):
    """Dense 2-D convolution (cross-correlation), NCHW layout.

    ``w`` has shape (Cout, Cin, kh, kw) with kh == kw. The 1x1 case takes
    a matmul fast path. Bias is optional.
    """
    _require_rank(x, 4, "conv2d")
    if w.data.ndim != 4:
        raise DimensionError(f"conv2d: weight must be rank 4, got {w.shape}")
    B, Cin, H, W = x.shape
    Cout, WCin, kh, kw = w.shape
    if kh != kw:
        raise DimensionError(f"conv2d: non-square kernel {kh}x{kw}")
    if WCin != Cin:
        raise DimensionError(
            f"conv2d: channel axis mismatch, input C={Cin} but weight expects {WCin}"
        )
    k = kh
    Ho = conv_out_size(H, k, stride, dilation, padding)
    Wo = conv_out_size(W, k, stride, dilation, padding)
    if Ho < 1 or Wo < 1:
        raise DimensionError(
            f"conv2d: output would be {Ho}x{Wo} for input {H}x{W}, kernel {k}"
        )
    wmat = w.data.reshape(Cout, -1)
    pointwise = k == 1 and padding == 0

    if pointwise:
        xs = x.data[:, :, ::stride, ::stride] if stride > 1 else x.data
        out = np.matmul(wmat, xs.reshape(B, Cin, Ho * Wo)).reshape(B, Cout, Ho, Wo)
    else:
        xp = _pad2d(x.data, padding)
        win = _windows(xp, k, stride, dilation)  # (B,Cin,Ho,Wo,k,k)
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * Ho * Wo, Cin * k * k)
        out = (cols @ wmat.T).reshape(B, Ho, Wo, Cout).transpose(0, 3, 1, 2)
    if b is not None:
        if b.shape != (Cout,):
            raise DimensionError(f"conv2d: bias shape {b.shape}, expected ({Cout},)")
        out = out + b.data[None, :, None, None]

    inputs = (x, w) if b is None else (x, w, b)

    def bwd(g):
        gmat = g.transpose(0, 2, 3, 1).reshape(B * Ho * Wo, Cout)
        if pointwise:
            xs_ = x.data[:, :, ::stride, ::stride] if stride > 1 else x.data
            xcols = xs_.transpose(0, 2, 3, 1).reshape(B * Ho * Wo, Cin)
            gw = (gmat.T @ xcols).reshape(w.shape)
            gxs = (gmat @ wmat).reshape(B, Ho, Wo, Cin).transpose(0, 3, 1, 2)
            if stride > 1:
                gx = np.zeros_like(x.data)
                gx[:, :, ::stride, ::stride] = gxs
            else:
                gx = np.ascontiguousarray(gxs)
        else:
            xp_ = _pad2d(x.data, padding)
            win_ = _windows(xp_, k, stride, dilation)
            cols_ = win_.transpose(0, 2, 3, 1, 4, 5).reshape(B * Ho * Wo, Cin * k * k)
            gw = (gmat.T @ cols_).reshape(w.shape)
            gcols = (gmat @ wmat).reshape(B, Ho, Wo, Cin, k, k).transpose(0, 3, 1, 2, 4, 5)
            gxp = np.zeros_like(xp_)
            for i in range(k):
                hi = i * dilation
                for j in range(k):
                    wj = j * dilation
                    gxp[:, :, hi:hi + stride * (Ho - 1) + 1:stride,
                        wj:wj + stride * (Wo - 1) + 1:stride] += gcols[:, :, :, :, i, j]
            gx = gxp[:, :, padding:padding + H, padding:padding + W]
            gx = np.ascontiguousarray(gx)
        if b is None:
            return (gx, gw)
        return (gx, gw, g.sum(axis=(0, 2, 3)))

    return record_op("conv2d", inputs, out, bwd)


def _tap_slices(i, j, stride, dilation, Ho, Wo):
    """Strided view of the padded input hit by kernel tap (i, j)."""
    hs = slice(i * dilation, i * dilation + stride * (Ho - 1) + 1, stride)
    ws = slice(j * dilation, j * dilation + stride * (Wo - 1) + 1, stride)
    return hs, ws


def depthwise_conv2d(x, w, stride=1, dilation=1, padding=0):
    """Per-channel convolution; ``w`` has shape (C, k, k).

    Computed as k^2 shifted multiply-accumulates rather than a windowed
    einsum: each kernel tap touches one strided slice of the padded
    input, which keeps everything in large contiguous-ish BLAS-free
    vector ops.
    """
    _require_rank(x, 4, "depthwise_conv2d")
    if w.data.ndim != 3:
        raise DimensionError(f"depthwise_conv2d: weight must be rank 3, got {w.shape}")
    B, C, H, W = x.shape
    WC, kh, kw = w.shape
    if kh != kw:
        raise DimensionError(f"depthwise_conv2d: non-square kernel {kh}x{kw}")
    if WC != C:
        raise DimensionError(
            f"depthwise_conv2d: channel axis mismatch, input C={C} but weight has {WC}"
        )
    k = kh
    Ho = conv_out_size(H, k, stride, dilation, padding)
    Wo = conv_out_size(W, k, stride, dilation, padding)
    xp = _pad2d(x.data, padding)
    out = np.zeros((B, C, Ho, Wo), dtype=x.dtype)
    wd = w.data
    for i in range(k):
        for j in range(k):
            hs, ws = _tap_slices(i, j, stride, dilation, Ho, Wo)
            out += wd[:, i, j][None, :, None, None] * xp[:, :, hs, ws]

    def bwd(g):
        xp_ = _pad2d(x.data, padding)
        gw = np.empty_like(w.data)
        gxp = np.zeros_like(xp_)
        for i in range(k):
            for j in range(k):
                hs, ws = _tap_slices(i, j, stride, dilation, Ho, Wo)
                patch = xp_[:, :, hs, ws]
                gw[:, i, j] = np.einsum("bchw,bchw->c", g, patch)
                gxp[:, :, hs, ws] += g * wd[:, i, j][None, :, None, None]
        gx = gxp[:, :, padding:padding + H, padding:padding + W]
        return (np.ascontiguousarray(gx), gw)

    return record_op("depthwise_conv2d", (x, w), out, bwd)


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def avg_pool2d(x, kernel=3, stride=1, padding=1):
    """Average pool; zero-padded cells count toward the kernel-area divisor."""
    _require_rank(x, 4, "avg_pool2d")
    B, C, H, W = x.shape
    Ho = conv_out_size(H, kernel, stride, 1, padding)
    Wo = conv_out_size(W, kernel, stride, 1, padding)
    xp = _pad2d(x.data, padding)
    inv = x.dtype.type(1.0 / (kernel * kernel))
    out = np.zeros((B, C, Ho, Wo), dtype=x.dtype)
    for i in range(kernel):
        for j in range(kernel):
            hs, ws = _tap_slices(i, j, stride, 1, Ho, Wo)
            out += xp[:, :, hs, ws]
    out *= inv

    def bwd(g):
        gxp = np.zeros((B, C, H + 2 * padding, W + 2 * padding), dtype=g.dtype)
        gs = g * g.dtype.type(1.0 / (kernel * kernel))
        for i in range(kernel):
            for j in range(kernel):
                hs, ws = _tap_slices(i, j, stride, 1, Ho, Wo)
                gxp[:, :, hs, ws] += gs
        gx = gxp[:, :, padding:padding + H, padding:padding + W]
        return (np.ascontiguousarray(gx),)

    return record_op("avg_pool2d", (x,), out, bwd)


def max_pool2d(x, kernel=3, stride=1, padding=1):
    """Max pool; padding cells are -inf so they never win the window.

    Backward routes each output gradient to the first kernel tap (in
    row-major tap order) whose input equals the window maximum, matching
    argmax tie-breaking without materializing a windowed argmax.
    """
    _require_rank(x, 4, "max_pool2d")
    B, C, H, W = x.shape
    Ho = conv_out_size(H, kernel, stride, 1, padding)
    Wo = conv_out_size(W, kernel, stride, 1, padding)
    xp = _pad2d(x.data, padding, value=-np.inf)
    out = np.full((B, C, Ho, Wo), -np.inf, dtype=x.dtype)
    for i in range(kernel):
        for j in range(kernel):
            hs, ws = _tap_slices(i, j, stride, 1, Ho, Wo)
            np.maximum(out, xp[:, :, hs, ws], out=out)

    def bwd(g):
        xp_ = _pad2d(x.data, padding, value=-np.inf)
        gxp = np.zeros((B, C, H + 2 * padding, W + 2 * padding), dtype=g.dtype)
        avail = np.ones((B, C, Ho, Wo), dtype=bool)
        hit = np.empty_like(avail)
        for i in range(kernel):
            for j in range(kernel):
                hs, ws = _tap_slices(i, j, stride, 1, Ho, Wo)
                np.equal(xp_[:, :, hs, ws], out, out=hit)
                hit &= avail
                gxp[:, :, hs, ws] += np.where(hit, g, g.dtype.type(0))
                avail &= np.logical_not(hit, out=hit)
        gx = gxp[:, :, padding:padding + H, padding:padding + W]
        return (np.ascontiguousarray(gx),)

    return record_op("max_pool2d", (x,), out, bwd)


def global_avg_pool(x):
    _require_rank(x, 4, "global_avg_pool")
    B, C, H, W = x.shape
    out = x.data.mean(axis=(2, 3))

    def bwd(g):
        return (np.broadcast_to(g[:, :, None, None] / (H * W), x.shape).copy(),)

    return record_op("global_avg_pool", (x,), out, bwd)


# ---------------------------------------------------------------------------
# normalization / dense / loss
# ---------------------------------------------------------------------------

def batch_norm2d(x, gamma, beta, running_mean, running_var, training,
                 momentum=0.1, eps=1e-5):
    """Channelwise batch normalization with affine parameters.

    Training mode normalizes with batch statistics and updates the
    running-average buffers in place (unbiased variance, torch
    convention). Eval mode is a fixed affine map from the buffers.
    ``running_mean`` / ``running_var`` are plain numpy arrays, not
    tensors; they carry no gradient.
    """
    _require_rank(x, 4, "batch_norm")
    B, C, H, W = x.shape
    if gamma.shape != (C,) or beta.shape != (C,):
        raise DimensionError(
            f"batch_norm: affine params shaped {gamma.shape}/{beta.shape}, "
            f"expected ({C},) on the channel axis"
        )
    n = B * H * W
    if training:
        mu = x.data.mean(axis=(0, 2, 3), dtype=np.float64)
        sq = np.einsum("bchw,bchw->c", x.data, x.data, dtype=np.float64) / n
        var = np.maximum(sq - mu * mu, 0.0)
        if n > 1:
            unbiased = var * (n / (n - 1))
        else:
            unbiased = var
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.astype(running_mean.dtype)
        running_var *= 1.0 - momentum
        running_var += momentum * unbiased.astype(running_var.dtype)
        mu = mu.astype(x.dtype)
        var = var.astype(x.dtype)
    else:
        mu = running_mean.astype(x.dtype)
        var = running_var.astype(x.dtype)
    std = np.sqrt(var + x.dtype.type(eps))
    # fused affine: out = x * sc + sh, with xhat never materialized
    sc = gamma.data / std
    sh = beta.data - mu * sc
    out = x.data * sc[None, :, None, None] + sh[None, :, None, None]

    def bwd(g):
        xh = (x.data - mu[None, :, None, None]) / std[None, :, None, None]
        ggamma = (g * xh).sum(axis=(0, 2, 3))
        gbeta = g.sum(axis=(0, 2, 3))
        scale_ = (gamma.data / std)[None, :, None, None]
        if training:
            gx = scale_ * (
                g
                - gbeta[None, :, None, None] / n
                - xh * ggamma[None, :, None, None] / n
            )
        else:
            gx = scale_ * g
        return (gx, ggamma, gbeta)

    return record_op("batch_norm", (x, gamma, beta), out, bwd)


def linear(x, w, b=None):
    """Fully-connected layer: x (B, din) @ w.T (din, dout) + b."""
    if x.data.ndim != 2:
        raise DimensionError(f"linear: expected rank-2 input, got {x.shape}")
    if w.data.ndim != 2:
        raise DimensionError(f"linear: weight must be rank 2, got {w.shape}")
    dout, din = w.shape
    if x.shape[1] != din:
        raise DimensionError(
            f"linear: feature axis mismatch, input {x.shape[1]} vs weight {din}"
        )
    out = x.data @ w.data.T
    if b is not None:
        out = out + b.data[None, :]
    inputs = (x, w) if b is None else (x, w, b)

    def bwd(g):
        gx = g @ w.data
        gw = g.T @ x.data
        if b is None:
            return (gx, gw)
        return (gx, gw, g.sum(axis=0))

    return record_op("linear", inputs, out, bwd)


def cross_entropy(logits, labels):
    """Mean batch cross-entropy of softmax(logits) against integer labels.

    Stabilized by max subtraction; the log-sum-exp and the batch mean
    accumulate in float64.
    """
    if logits.data.ndim != 2:
        raise DimensionError(f"cross_entropy: logits must be (batch, K), got {logits.shape}")
    B, K = logits.shape
    if K < 2:
        raise ContractError(f"cross_entropy: needs K >= 2 classes, got K={K}")
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (B,):
        raise DimensionError(f"cross_entropy: {B} rows but {y.shape} labels")
    if y.min() < 0 or y.max() >= K:
        bad = y[(y < 0) | (y >= K)][0]
        raise IndexError(f"cross_entropy: label {bad} outside [0, {K})")
    z = logits.data.astype(np.float64)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    denom = e.sum(axis=1, keepdims=True)
    logp = z - np.log(denom)
    loss = -logp[np.arange(B), y].mean()
    out = np.asarray(loss, dtype=logits.dtype)
    p = (e / denom).astype(logits.dtype)

    def bwd(g):
        gx = p.copy()
        gx[np.arange(B), y] -= 1.0
        gx *= g / B
        return (gx,)

    return record_op("cross_entropy", (logits,), out, bwd)


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

_POOL_KINDS = {"avg_pool_3x3": avg_pool2d, "max_pool_3x3": max_pool2d}


def apply_primitive(kind, x, weights=(), stride=1, dilation=1, padding=None,
                    training=True):
    """Apply a primitive by name. Exists as a uniform contract surface;
    internal code calls the typed functions directly.

    Spatial kinds expect rank-4 input; ``padding=None`` selects "same"
    padding for the kernel/dilation in play.
    """
    if kind == "conv2d":
        w = weights[0]
        b = weights[1] if len(weights) > 1 else None
        if w.data.ndim == 3:
            k = w.shape[-1]
            pad = same_padding(k, dilation) if padding is None else padding
            return depthwise_conv2d(x, w, stride=stride, dilation=dilation, padding=pad)
        k = w.shape[-1]
        pad = same_padding(k, dilation) if padding is None else padding
        return conv2d(x, w, b, stride=stride, dilation=dilation, padding=pad)
    if kind in _POOL_KINDS:
        pad = 1 if padding is None else padding
        return _POOL_KINDS[kind](x, kernel=3, stride=stride, padding=pad)
    if kind == "identity":
        return identity(x)
    if kind == "zero":
        return zero_like(x, stride=stride)
    if kind == "relu":
        return relu(x)
    if kind == "batch_norm":
        gamma, beta, rm, rv = weights
        return batch_norm2d(x, gamma, beta, rm, rv, training)
    if kind == "linear":
        w = weights[0]
        b = weights[1] if len(weights) > 1 else None
        return linear(x, w, b)
    if kind == "concat":
        return concat_channels(x)
    if kind == "global_avg_pool":
        return global_avg_pool(x)
    raise UnsupportedPrimitiveError(f"unknown primitive kind {kind!r}")
