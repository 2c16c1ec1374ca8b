"""Dense tensors on a gradient tape.

A ``Tensor`` wraps a numpy array (float32 by default) and, while a
``Tape`` is active, every primitive applied to it is recorded so that
``backward`` can replay the records in reverse and accumulate gradients.
The tape is an explicit object rather than implicit graph pointers: the
forward pass appends records in execution order, which is already a
topological order, and the backward pass consumes the tape exactly once.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import ContractError, DimensionError

DEFAULT_DTYPE = np.float32


class Tensor:
    """N-dimensional float array, optionally tracked on a tape.

    ``requires_grad`` marks a leaf whose gradient should be produced by
    ``backward``. Non-leaf tensors (primitive outputs) carry a reference
    to the tape that created them; using them under a different tape is
    an error because their history lives on the original tape only.
    """

    __slots__ = ("data", "grad", "requires_grad", "node_id", "tape", "is_leaf", "name")

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.node_id = None
        self.tape = None
        self.is_leaf = True
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.data.dtype}{tag})"


class TapeRecord:
    """One recorded primitive application: inputs, output, backward rule.

    ``backward_fn(grad_out)`` returns one gradient array per input, with
    None for inputs that receive no gradient.
    """

    __slots__ = ("inputs", "output", "backward_fn", "name")

    def __init__(self, inputs, output, backward_fn, name):
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn
        self.name = name


class Tape:
    """Ordered record of primitive applications for one forward pass."""

    _active_stack: list["Tape"] = []

    def __init__(self):
        self.records: list[TapeRecord] = []
        self.consumed = False
        self._next_id = 0
        self._leaf_inputs: dict[int, Tensor] = {}

    def __enter__(self):
        Tape._active_stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        Tape._active_stack.pop()
        return False

    @staticmethod
    def current():
        return Tape._active_stack[-1] if Tape._active_stack else None

    def _assign_id(self, t: Tensor):
        if t.node_id is None or t.tape is not self:
            t.node_id = self._next_id
            t.tape = self
            self._next_id += 1
        return t.node_id

    def record(self, inputs, output, backward_fn, name):
        if self.consumed:
            raise ContractError("tape already consumed by backward()")
        for t in inputs:
            if t.tape is not None and t.tape is not self and not t.is_leaf:
                raise ContractError(
                    f"tensor from another tape used in {name}; a tensor "
                    "participates in at most one active tape"
                )
            self._assign_id(t)
            if t.is_leaf and t.requires_grad:
                self._leaf_inputs[id(t)] = t
        self._assign_id(output)
        output.is_leaf = False
        self.records.append(TapeRecord(inputs, output, backward_fn, name))
        return output


def active_tape():
    return Tape.current()


def record_op(name, inputs, out_data, backward_fn):
    """Wrap ``out_data`` in a Tensor and record it on the active tape.

    With no active tape, or when no input is connected to a grad-requiring
    leaf, the output is a plain untracked tensor; evaluation-mode forward
    passes therefore carry no graph bookkeeping.
    """
    out = Tensor(out_data, dtype=out_data.dtype)
    tape = Tape.current()
    if tape is not None and any(
        t.requires_grad or (not t.is_leaf and t.tape is tape) for t in inputs
    ):
        tape.record(inputs, out, backward_fn, name)
    return out


def backward(tape: Tape, loss: Tensor):
    """Reverse the tape from ``loss``, returning a leaf gradient map.

    Every grad-requiring leaf recorded as an input receives an entry
    (zeros when unreachable from the loss); each such tensor's ``grad``
    field is also updated. The tape is consumed and cannot be reused.
    Gradient accumulation at fan-out points is out-of-place, so backward
    rules may return shared or aliased arrays.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if tape.consumed:
        raise ContractError("tape already consumed by backward()")
    tape.consumed = True
    if not tape.records:
        warnings.warn("backward() on an empty tape is a no-op", stacklevel=2)
        return {}
    if loss.tape is not tape or loss.node_id is None:
        raise ContractError("loss tensor was not recorded on this tape")

    start = None
    for idx in range(len(tape.records) - 1, -1, -1):
        if tape.records[idx].output is loss:
            start = idx
            break
    if start is None:
        raise ContractError("loss tensor is not a primitive output on this tape")

    grads: dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
    leaf_ids = {t.node_id: t for t in tape._leaf_inputs.values()}

    for idx in range(start, -1, -1):
        rec = tape.records[idx]
        # consumed-once contract: drop the record (and the activations its
        # closure captured) as soon as it has propagated, bounding peak
        # memory by the live gradient frontier rather than the whole tape
        tape.records[idx] = None
        gout = grads.pop(rec.output.node_id, None)
        if gout is None:
            continue
        gins = rec.backward_fn(gout)
        for t, g in zip(rec.inputs, gins):
            if g is None:
                continue
            if g.shape != t.data.shape:
                raise DimensionError(
                    f"backward rule for {rec.name} produced grad shape "
                    f"{g.shape} for input shape {t.data.shape}"
                )
            nid = t.node_id
            if nid in grads:
                grads[nid] = grads[nid] + g
            else:
                grads[nid] = g.astype(t.data.dtype, copy=False)

    out_map: dict[Tensor, np.ndarray] = {}
    for nid, t in leaf_ids.items():
        g = grads.get(nid)
        if g is None:
            g = np.zeros_like(t.data)
        t.grad = g if t.grad is None else t.grad + g
        out_map[t] = g
    return out_map


class no_grad:
    """Context that suspends recording even if a tape is active."""

    def __enter__(self):
        self._stack = Tape._active_stack
        Tape._active_stack = []
        return self

    def __exit__(self, exc_type, exc, tb):
        Tape._active_stack = self._stack
        return False
