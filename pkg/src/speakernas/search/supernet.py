"""The over-parameterized searchable network."""

from __future__ import annotations

import numpy as np

from ..autodiff import BatchNorm2d, Conv2d, Linear, Module, ModuleList, ops
from ..errors import ConfigurationError, DimensionError
from ..space import ArchParams, SearchCell
from .config import SupernetConfig, reduction_indices


class Supernet(Module):
    """Stem -> stacked relaxed cells -> global average pool -> classifier.

    The stem lifts the 1-channel spectrogram to ``init_channels``. Cells
    at one- and two-thirds depth reduce spatially and double the cell
    width, so after both reductions a cell outputs 4 * (4 * C) = 16 * C
    channels; that pooled vector is the embedding the classifier sees.

    Architecture parameters are deliberately *not* registered as module
    parameters: ``parameters()`` yields only the weights (the inner
    variables of the bilevel problem), keeping the two optimizers
    disjoint by construction.
    """

    def __init__(self, cfg: SupernetConfig, arch: ArchParams,
                 rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        self.arch = arch
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
            cell = SearchCell(c_cur, ch_pp, ch_p, rng,
                              reduction=reduction, reduction_prev=reduction_prev)
            self.cells.append(cell)
            reduction_prev = reduction
            ch_pp, ch_p = ch_p, 4 * c_cur
        self.embedding_dim = ch_p
        self.classifier = Linear(ch_p, cfg.num_classes, rng)

    def embed(self, x):
        """Pooled features before the classifier; x is (B, 1, H, W)."""
        if x.data.ndim != 4 or x.shape[1] != 1:
            raise DimensionError(
                f"supernet expects (B, 1, H, W) input, got {x.shape}"
            )
        if x.shape[2] < 4 or x.shape[3] < 4:
            raise ConfigurationError(
                f"input {x.shape[2]}x{x.shape[3]} too small to survive two "
                f"spatial halvings"
            )
        probs_normal = ops.softmax(self.arch.normal, axis=1)
        probs_reduction = ops.softmax(self.arch.reduction, axis=1)
        s0 = s1 = self.stem_bn(self.stem_conv(x))
        for cell in self.cells:
            probs = probs_reduction if cell.reduction else probs_normal
            s0, s1 = s1, cell(s0, s1, probs)
        return ops.global_avg_pool(s1)

    def forward(self, x):
        return self.classifier(self.embed(x))


def build_supernet(cfg: SupernetConfig, rng=None, arch=None):
    """Construct supernet + fresh architecture parameters from one seed."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if arch is None:
        arch = ArchParams.init(rng)
    return Supernet(cfg, arch, rng), arch
