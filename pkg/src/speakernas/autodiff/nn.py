"""Small layer/module system over the functional primitives.

Modules register parameters (grad-requiring Tensors) and buffers (plain
numpy arrays, e.g. batch-norm running statistics) by attribute
assignment. All weight initialization draws from an explicitly passed
``numpy.random.Generator``; there is no hidden global RNG state.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DimensionError
from . import ops
from .tensor import DEFAULT_DTYPE, Tensor


class Parameter(Tensor):
    """A leaf tensor that optimizers update."""

    def __init__(self, data, name=None, dtype=DEFAULT_DTYPE):
        super().__init__(data, requires_grad=True, dtype=dtype, name=name)


def fan_in_uniform(rng, shape, fan_in, dtype=DEFAULT_DTYPE):
    """Symmetric uniform init with variance 1/fan_in."""
    bound = math.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    """Base class; tracks submodules, parameters and buffers by name."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name, array):
        self._buffers[name] = array
        object.__setattr__(self, name, array)

    # -- traversal -----------------------------------------------------

    def named_parameters(self, prefix=""):
        for name, p in self._params.items():
            yield prefix + name, p
        for name, m in self._modules.items():
            yield from m.named_parameters(prefix + name + ".")

    def parameters(self):
        for _, p in self.named_parameters():
            yield p

    def named_buffers(self, prefix=""):
        for name, b in self._buffers.items():
            yield prefix + name, b
        for name, m in self._modules.items():
            yield from m.named_buffers(prefix + name + ".")

    def modules(self):
        yield self
        for m in self._modules.values():
            yield from m.modules()

    def train(self, mode=True):
        for m in self.modules():
            object.__setattr__(m, "training", mode)
        return self

    def eval(self):
        return self.train(False)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    # -- state ----------------------------------------------------------

    def state_arrays(self):
        """Flat name -> numpy array map of parameters and buffers."""
        state = {name: p.data for name, p in self.named_parameters()}
        state.update({name: b for name, b in self.named_buffers()})
        return state

    def load_state_arrays(self, state, strict=True):
        own = {name: p for name, p in self.named_parameters()}
        bufs = dict(self.named_buffers())
        for name, arr in state.items():
            if name in own:
                tgt = own.pop(name)
                if tuple(arr.shape) != tuple(tgt.shape):
                    raise DimensionError(
                        f"parameter {name}: checkpoint shape {arr.shape} vs "
                        f"model shape {tuple(tgt.shape)}"
                    )
                tgt.data = arr.astype(tgt.dtype)
            elif name in bufs:
                tgt = bufs.pop(name)
                if tuple(arr.shape) != tuple(tgt.shape):
                    raise DimensionError(
                        f"buffer {name}: checkpoint shape {arr.shape} vs "
                        f"model shape {tuple(tgt.shape)}"
                    )
                tgt[...] = arr.astype(tgt.dtype)
            elif strict:
                raise DimensionError(f"checkpoint names unknown tensor {name!r}")
        if strict and (own or bufs):
            missing = sorted(list(own) + list(bufs))
            raise DimensionError(f"checkpoint missing tensors: {missing}")


class ModuleList(Module):
    def __init__(self, mods=()):
        super().__init__()
        self._items = []
        for m in mods:
            self.append(m)

    def append(self, m):
        self._modules[str(len(self._items))] = m
        self._items.append(m)
        return self

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


class Sequential(Module):
    def __init__(self, *mods):
        super().__init__()
        self._items = list(mods)
        for i, m in enumerate(self._items):
            self._modules[str(i)] = m

    def forward(self, x):
        for m in self._items:
            x = m(x)
        return x


class ReLU(Module):
    def forward(self, x):
        return ops.relu(x)


class Identity(Module):
    def forward(self, x):
        return ops.identity(x)


class Conv2d(Module):
    """Dense convolution; bias off by default (batch norm follows it here)."""

    def __init__(self, in_ch, out_ch, kernel, rng, stride=1, dilation=1,
                 padding=None, bias=False, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.stride = stride
        self.dilation = dilation
        self.padding = ops.same_padding(kernel, dilation) if padding is None else padding
        fan_in = in_ch * kernel * kernel
        self.weight = Parameter(
            fan_in_uniform(rng, (out_ch, in_ch, kernel, kernel), fan_in, dtype)
        )
        self.bias = Parameter(np.zeros(out_ch, dtype=dtype)) if bias else None

    def forward(self, x):
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride,
                          dilation=self.dilation, padding=self.padding)


class DepthwiseConv2d(Module):
    def __init__(self, channels, kernel, rng, stride=1, dilation=1,
                 padding=None, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.stride = stride
        self.dilation = dilation
        self.padding = ops.same_padding(kernel, dilation) if padding is None else padding
        fan_in = kernel * kernel
        self.weight = Parameter(
            fan_in_uniform(rng, (channels, kernel, kernel), fan_in, dtype)
        )

    def forward(self, x):
        return ops.depthwise_conv2d(x, self.weight, stride=self.stride,
                                    dilation=self.dilation, padding=self.padding)


class BatchNorm2d(Module):
    def __init__(self, channels, momentum=0.1, eps=1e-5, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(np.ones(channels, dtype=dtype))
        self.beta = Parameter(np.zeros(channels, dtype=dtype))
        self.register_buffer("running_mean", np.zeros(channels, dtype=dtype))
        self.register_buffer("running_var", np.ones(channels, dtype=dtype))

    def forward(self, x):
        return ops.batch_norm2d(x, self.gamma, self.beta, self.running_mean,
                                self.running_var, self.training,
                                momentum=self.momentum, eps=self.eps)


class Linear(Module):
    def __init__(self, in_features, out_features, rng, bias=True,
                 dtype=DEFAULT_DTYPE):
        super().__init__()
        self.weight = Parameter(
            fan_in_uniform(rng, (out_features, in_features), in_features, dtype)
        )
        self.bias = Parameter(np.zeros(out_features, dtype=dtype)) if bias else None

    def forward(self, x):
        return ops.linear(x, self.weight, self.bias)


def count_params(module: Module) -> int:
    """Number of trainable scalars (buffers excluded)."""
    return sum(int(np.prod(p.shape)) for p in module.parameters())
