"""The eight candidate operations mixed on every cell edge.

All candidates map C channels to C channels and preserve "same" spatial
size at stride 1; at stride 2 they halve spatial dims (ceil division on
odd sizes). Convolutions carry no bias (a batch norm always follows).
"""

from __future__ import annotations

from ..autodiff import (
    BatchNorm2d,
    Conv2d,
    DepthwiseConv2d,
    Module,
    ReLU,
    Sequential,
    ops,
)
from ..errors import UnsupportedPrimitiveError
from .alpha import OP_NAMES, OpKind


class ReLUConvBN(Module):
    """ReLU -> dense conv -> batch norm (cell preprocessing, 1x1 by default)."""

    def __init__(self, in_ch, out_ch, rng, kernel=1, stride=1):
        super().__init__()
        self.body = Sequential(
            ReLU(),
            Conv2d(in_ch, out_ch, kernel, rng, stride=stride),
            BatchNorm2d(out_ch),
        )

    def forward(self, x):
        return self.body(x)


class SepConv(Module):
    """Two stacked depthwise-separable units; the stride sits in the first.

    unit = ReLU -> depthwise kxk -> pointwise 1x1 -> BN, applied twice.
    """

    def __init__(self, channels, kernel, rng, stride=1):
        super().__init__()
        self.body = Sequential(
            ReLU(),
            DepthwiseConv2d(channels, kernel, rng, stride=stride),
            Conv2d(channels, channels, 1, rng),
            BatchNorm2d(channels),
            ReLU(),
            DepthwiseConv2d(channels, kernel, rng, stride=1),
            Conv2d(channels, channels, 1, rng),
            BatchNorm2d(channels),
        )

    def forward(self, x):
        return self.body(x)


class DilConv(Module):
    """Single separable unit with dilation 2 (doubled receptive field)."""

    def __init__(self, channels, kernel, rng, stride=1):
        super().__init__()
        self.body = Sequential(
            ReLU(),
            DepthwiseConv2d(channels, kernel, rng, stride=stride, dilation=2),
            Conv2d(channels, channels, 1, rng),
            BatchNorm2d(channels),
        )

    def forward(self, x):
        return self.body(x)


class AvgPool(Module):
    def __init__(self, stride=1):
        super().__init__()
        self.stride = stride

    def forward(self, x):
        return ops.avg_pool2d(x, 3, stride=self.stride, padding=1)


class MaxPool(Module):
    def __init__(self, stride=1):
        super().__init__()
        self.stride = stride

    def forward(self, x):
        return ops.max_pool2d(x, 3, stride=self.stride, padding=1)


class FactorizedReduce(Module):
    """Stride-2 identity surrogate: two offset 1x1 conv paths, concatenated.

    Path one samples the even pixel grid, path two the odd-offset grid
    (shift up-left by one, zero-filled), each producing half the output
    channels. Works on odd spatial sizes via the zero fill; on even
    sizes the zeros are never sampled.
    """

    def __init__(self, in_ch, out_ch, rng):
        super().__init__()
        half = out_ch // 2
        self.conv_even = Conv2d(in_ch, half, 1, rng, stride=2, padding=0)
        self.conv_odd = Conv2d(in_ch, out_ch - half, 1, rng, stride=2, padding=0)
        self.bn = BatchNorm2d(out_ch)

    def forward(self, x):
        x = ops.relu(x)
        a = self.conv_even(x)
        b = self.conv_odd(ops.shift_topleft(x))
        return self.bn(ops.concat_channels([a, b]))


class SkipConnect(Module):
    """Identity at stride 1; factorized reduction when the edge strides."""

    def __init__(self, channels, rng, stride=1):
        super().__init__()
        if stride == 1:
            self.body = None
        else:
            self.body = FactorizedReduce(channels, channels, rng)

    def forward(self, x):
        if self.body is None:
            return ops.identity(x)
        return self.body(x)


class Zero(Module):
    def __init__(self, stride=1):
        super().__init__()
        self.stride = stride

    def forward(self, x):
        return ops.zero_like(x, stride=self.stride)


def build_candidate(kind, channels, rng, stride=1) -> Module:
    """Instantiate one candidate op by its frozen index or name."""
    if isinstance(kind, str):
        try:
            kind = OpKind(OP_NAMES.index(kind))
        except ValueError:
            raise UnsupportedPrimitiveError(f"unknown candidate op {kind!r}") from None
    kind = OpKind(kind)
    if kind == OpKind.SEP_CONV_3X3:
        return SepConv(channels, 3, rng, stride=stride)
    if kind == OpKind.SEP_CONV_5X5:
        return SepConv(channels, 5, rng, stride=stride)
    if kind == OpKind.DIL_CONV_3X3:
        return DilConv(channels, 3, rng, stride=stride)
    if kind == OpKind.DIL_CONV_5X5:
        return DilConv(channels, 5, rng, stride=stride)
    if kind == OpKind.AVG_POOL_3X3:
        return AvgPool(stride=stride)
    if kind == OpKind.MAX_POOL_3X3:
        return MaxPool(stride=stride)
    if kind == OpKind.SKIP_CONNECT:
        return SkipConnect(channels, rng, stride=stride)
    if kind == OpKind.ZERO:
        return Zero(stride=stride)
    raise UnsupportedPrimitiveError(f"unknown candidate op {kind!r}")
