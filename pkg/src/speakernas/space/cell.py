"""Continuously-relaxed search cell: every edge mixes all candidates."""

from __future__ import annotations

from functools import reduce

from ..autodiff import Module, ModuleList, ops
from .alpha import NUM_INTERMEDIATE, NUM_OPS, OpKind
from .candidates import FactorizedReduce, ReLUConvBN, build_candidate


class MixedOp(Module):
    """Softmax-weighted sum of all eight candidates on one edge."""

    def __init__(self, channels, rng, stride=1):
        super().__init__()
        self.ops = ModuleList(
            build_candidate(OpKind(k), channels, rng, stride=stride)
            for k in range(NUM_OPS)
        )

    def forward(self, x, weights_row):
        parts = [op(x) for op in self.ops]
        return ops.weighted_sum(parts, weights_row)


class SearchCell(Module):
    """One relaxed cell.

    Inputs are the outputs of the two previous cells. Both are projected
    to ``channels`` first; if the previous cell reduced, the older input
    is still at double resolution and goes through a factorized
    reduction instead of a 1x1 projection. Intermediate node j sums one
    mixed edge from every earlier state; the cell output concatenates
    the four intermediates (4 * channels).

    In a reduction cell, edges reading the two input nodes stride by 2;
    edges between intermediates stay at stride 1 because their sources
    are already reduced.
    """

    def __init__(self, channels, prev_prev_ch, prev_ch, rng,
                 reduction=False, reduction_prev=False):
        super().__init__()
        self.reduction = reduction
        if reduction_prev:
            self.preprocess0 = FactorizedReduce(prev_prev_ch, channels, rng)
        else:
            self.preprocess0 = ReLUConvBN(prev_prev_ch, channels, rng)
        self.preprocess1 = ReLUConvBN(prev_ch, channels, rng)
        self.mixed = ModuleList()
        for j in range(2, 2 + NUM_INTERMEDIATE):
            for i in range(j):
                stride = 2 if reduction and i < 2 else 1
                self.mixed.append(MixedOp(channels, rng, stride=stride))

    def forward(self, s0, s1, probs):
        """``probs`` is the softmaxed 14x8 alpha tensor for this cell type."""
        states = [self.preprocess0(s0), self.preprocess1(s1)]
        offset = 0
        for _ in range(NUM_INTERMEDIATE):
            terms = [
                self.mixed[offset + i](h, ops.slice_row(probs, offset + i))
                for i, h in enumerate(states)
            ]
            offset += len(states)
            states.append(reduce(ops.add, terms))
        return ops.concat_channels(states[2:])
