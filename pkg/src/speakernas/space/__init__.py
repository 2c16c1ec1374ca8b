"""Cell-based CNN search space: alphas, candidate ops, relaxed cells."""

from .alpha import (
    MAX_TOTAL_ENTROPY,
    NUM_EDGES,
    NUM_INTERMEDIATE,
    NUM_OPS,
    OP_INDEX,
    OP_NAMES,
    ArchParams,
    OpKind,
    arch_entropy,
    edge_index,
    edge_list,
    matrix_entropy,
    softmax_probs,
)
from .candidates import (
    AvgPool,
    DilConv,
    FactorizedReduce,
    MaxPool,
    ReLUConvBN,
    SepConv,
    SkipConnect,
    Zero,
    build_candidate,
)
from .cell import MixedOp, SearchCell

__all__ = [
    "ArchParams",
    "AvgPool",
    "DilConv",
    "FactorizedReduce",
    "MAX_TOTAL_ENTROPY",
    "MaxPool",
    "MixedOp",
    "NUM_EDGES",
    "NUM_INTERMEDIATE",
    "NUM_OPS",
    "OP_INDEX",
    "OP_NAMES",
    "OpKind",
    "ReLUConvBN",
    "SearchCell",
    "SepConv",
    "SkipConnect",
    "Zero",
    "arch_entropy",
    "build_candidate",
    "edge_index",
    "edge_list",
    "matrix_entropy",
    "softmax_probs",
]
