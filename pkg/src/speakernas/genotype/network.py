"""Discrete network assembled from a genotype."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import BatchNorm2d, Conv2d, Linear, Module, ModuleList, ops
from ..errors import ConfigurationError, DimensionError
from ..search.config import reduction_indices
from ..space import FactorizedReduce, ReLUConvBN, build_candidate
from .derive import Genotype


@dataclass
class NetworkConfig:
    """Depth/width and from-scratch training hyperparameters."""

    num_classes: int
    num_cells: int = 8
    init_channels: int = 16
    epochs: int = 300
    batch_size: int = 128
    lr: float = 1e-2
    weight_decay: float = 3e-4
    seed: int = 0

    def __post_init__(self):
        if self.num_cells < 3:
            raise ConfigurationError(
                f"num_cells must be >= 3, got {self.num_cells}"
            )
        if self.init_channels < 1:
            raise ConfigurationError(
                f"init_channels must be >= 1, got {self.init_channels}"
            )
        if self.num_classes < 2:
            raise ConfigurationError(
                f"num_classes must be >= 2, got {self.num_classes}"
            )
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigurationError("batch_size and epochs must be >= 1")
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigurationError("lr and weight_decay must be >= 0")


class DerivedCell(Module):
    """One discrete cell: each node sums its two retained ops."""

    def __init__(self, node_specs, channels, prev_prev_ch, prev_ch, rng,
                 reduction=False, reduction_prev=False):
        super().__init__()
        self.reduction = reduction
        self.node_specs = node_specs
        if reduction_prev:
            self.preprocess0 = FactorizedReduce(prev_prev_ch, channels, rng)
        else:
            self.preprocess0 = ReLUConvBN(prev_prev_ch, channels, rng)
        self.preprocess1 = ReLUConvBN(prev_ch, channels, rng)
        self.node_ops = ModuleList()
        for node in node_specs:
            for choice in node:
                stride = 2 if reduction and choice.pred < 2 else 1
                self.node_ops.append(
                    build_candidate(choice.op, channels, rng, stride=stride)
                )

    def forward(self, s0, s1):
        states = [self.preprocess0(s0), self.preprocess1(s1)]
        k = 0
        for node in self.node_specs:
            terms = []
            for choice in node:
                terms.append(self.node_ops[k](states[choice.pred]))
                k += 1
            states.append(ops.add(terms[0], terms[1]))
        return ops.concat_channels(states[2:])


class DerivedNetwork(Module):
    """Stem -> N derived cells -> global average pool -> classifier.

    The pooled vector is the speaker embedding; its width is 16 * C
    regardless of depth (concat factor 4 times two channel doublings).
    """

    def __init__(self, genotype: Genotype, cfg: NetworkConfig,
                 rng: np.random.Generator):
        super().__init__()
        self.genotype = genotype
        self.cfg = cfg
        C = cfg.init_channels
        self.stem_conv = Conv2d(1, C, 3, rng)
        self.stem_bn = BatchNorm2d(C)
        red_at = set(reduction_indices(cfg.num_cells))
        self.cells = ModuleList()
        ch_pp, ch_p, c_cur = C, C, C
        reduction_prev = False
        for k in range(cfg.num_cells):
            reduction = k in red_at
            if reduction:
                c_cur *= 2
            specs = genotype.reduction if reduction else genotype.normal
            cell = DerivedCell(specs, c_cur, ch_pp, ch_p, rng,
                               reduction=reduction, reduction_prev=reduction_prev)
            self.cells.append(cell)
            reduction_prev = reduction
            ch_pp, ch_p = ch_p, 4 * c_cur
        self.embedding_dim = ch_p
        self.classifier = Linear(ch_p, cfg.num_classes, rng)

    def embed(self, x):
        if x.data.ndim != 4 or x.shape[1] != 1:
            raise DimensionError(
                f"network expects (B, 1, H, W) input, got {x.shape}"
            )
        if x.shape[2] < 4 or x.shape[3] < 4:
            raise ConfigurationError(
                f"input {x.shape[2]}x{x.shape[3]} too small to survive two "
                f"spatial halvings"
            )
        s0 = s1 = self.stem_bn(self.stem_conv(x))
        for cell in self.cells:
            s0, s1 = s1, cell(s0, s1)
        return ops.global_avg_pool(s1)

    def forward(self, x):
        return self.classifier(self.embed(x))


def build_network(genotype: Genotype, cfg: NetworkConfig,
                  rng=None) -> DerivedNetwork:
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    return DerivedNetwork(genotype, cfg, rng)
