"""Architecture parameters for the cell search space.

A cell is a DAG over 7 nodes: two inputs (0, 1), four intermediate
nodes (2..5), and an output that concatenates the intermediates. Every
intermediate node j receives one candidate edge from each earlier node
i < j, giving 2+3+4+5 = 14 edges. Each edge mixes 8 candidate
operations, so one cell type carries a 14x8 parameter matrix and the
discrete space has 8^14 cells per type.

The operation order below is frozen: column k of every alpha matrix
refers to OP_NAMES[k] everywhere (mixing, genotypes, checkpoints).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..autodiff import Tensor
from ..errors import ContractError, GenotypeError


class OpKind(IntEnum):
    SEP_CONV_3X3 = 0
    SEP_CONV_5X5 = 1
    DIL_CONV_3X3 = 2
    DIL_CONV_5X5 = 3
    AVG_POOL_3X3 = 4
    MAX_POOL_3X3 = 5
    SKIP_CONNECT = 6
    ZERO = 7


OP_NAMES = (
    "sep_conv_3x3",
    "sep_conv_5x5",
    "dil_conv_3x3",
    "dil_conv_5x5",
    "avg_pool_3x3",
    "max_pool_3x3",
    "skip_connect",
    "zero",
)

OP_INDEX = {name: i for i, name in enumerate(OP_NAMES)}

NUM_OPS = len(OP_NAMES)
NUM_INTERMEDIATE = 4
NUM_EDGES = sum(2 + j for j in range(NUM_INTERMEDIATE))  # 14

# cumulative row offsets per target node: j=2 -> 0, 3 -> 2, 4 -> 5, 5 -> 9
_EDGE_OFFSETS = {2: 0, 3: 2, 4: 5, 5: 9}

# both alpha matrices saturate at full row entropy: 28 rows * ln 8
MAX_TOTAL_ENTROPY = 2 * NUM_EDGES * math.log(NUM_OPS)


def edge_index(target: int, source: int) -> int:
    """Row of the alpha matrix for the edge source -> target."""
    if target not in _EDGE_OFFSETS:
        raise GenotypeError(f"target node must be 2..5, got {target}")
    if not 0 <= source < target:
        raise GenotypeError(
            f"edge source must satisfy 0 <= source < target, got "
            f"{source} -> {target}"
        )
    return _EDGE_OFFSETS[target] + source


def edge_list():
    """All 14 (target, source) pairs in alpha row order."""
    return [(j, i) for j in range(2, 2 + NUM_INTERMEDIATE) for i in range(j)]


@dataclass
class ArchParams:
    """One 14x8 matrix per cell type, shared across cells of that type."""

    normal: Tensor
    reduction: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, scale: float = 1e-3) -> "ArchParams":
        def make(name):
            return Tensor(
                scale * rng.standard_normal((NUM_EDGES, NUM_OPS)),
                requires_grad=True,
                name=name,
            )

        return cls(normal=make("alpha_normal"), reduction=make("alpha_reduction"))

    @classmethod
    def from_arrays(cls, normal: np.ndarray, reduction: np.ndarray) -> "ArchParams":
        for label, arr in (("normal", normal), ("reduction", reduction)):
            if arr.shape != (NUM_EDGES, NUM_OPS):
                raise ContractError(
                    f"alpha_{label} must be {NUM_EDGES}x{NUM_OPS}, got {arr.shape}"
                )
        return cls(
            normal=Tensor(normal, requires_grad=True, name="alpha_normal"),
            reduction=Tensor(reduction, requires_grad=True, name="alpha_reduction"),
        )

    def tensors(self):
        return [self.normal, self.reduction]

    def as_arrays(self):
        return {
            "alpha_normal": self.normal.data.copy(),
            "alpha_reduction": self.reduction.data.copy(),
        }


def softmax_probs(alpha: np.ndarray) -> np.ndarray:
    """Row-wise softmax in float64 (reference path, no autodiff)."""
    a = np.asarray(alpha, dtype=np.float64)
    a = a - a.max(axis=-1, keepdims=True)
    e = np.exp(a)
    return e / e.sum(axis=-1, keepdims=True)


def matrix_entropy(alpha: np.ndarray) -> float:
    """Shannon entropy (nats) summed over the softmaxed rows of one matrix."""
    p = softmax_probs(alpha)
    # p log p -> 0 as p -> 0; clip keeps the log finite on exact zeros
    return float(-(p * np.log(np.clip(p, 1e-300, None))).sum())


def arch_entropy(params: ArchParams):
    """(normal, reduction, total) mixing entropies of the current alphas."""
    h_n = matrix_entropy(params.normal.data)
    h_r = matrix_entropy(params.reduction.data)
    return h_n, h_r, h_n + h_r
