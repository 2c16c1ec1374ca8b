"""Supernet search configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigurationError


@dataclass
class SupernetConfig:
    """Hyperparameters of the relaxed supernet and its bilevel search.

    Defaults are the full-scale settings (8 cells, 16 initial channels,
    50 epochs, batch 16, Adam at 1e-2 for the weights and 1e-3 for the
    architecture logits, weight decay 3e-4 on both). Desk-scale runs
    override cells/channels/epochs via config files.
    """

    num_classes: int
    num_cells: int = 8
    init_channels: int = 16
    epochs: int = 50
    batch_size: int = 16
    lr_omega: float = 1e-2
    lr_alpha: float = 1e-3
    weight_decay: float = 3e-4
    seed: int = 0
    entropy_patience: int = 5

    def __post_init__(self):
        if self.num_cells < 3:
            raise ConfigurationError(
                f"num_cells must be >= 3 (two reduction cells plus at least "
                f"one normal), got {self.num_cells}"
            )
        if self.num_classes < 2:
            raise ConfigurationError(
                f"num_classes must be >= 2, got {self.num_classes}"
            )
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        for name in ("lr_omega", "lr_alpha", "weight_decay"):
            v = getattr(self, name)
            if v < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {v}")
        if self.init_channels < 1:
            raise ConfigurationError(
                f"init_channels must be >= 1, got {self.init_channels}"
            )
        if self.entropy_patience < 1:
            raise ConfigurationError(
                f"entropy_patience must be >= 1, got {self.entropy_patience}"
            )


def reduction_indices(num_cells: int):
    """Cells that halve resolution: one- and two-thirds of the depth."""
    return (num_cells // 3, (2 * num_cells) // 3)
