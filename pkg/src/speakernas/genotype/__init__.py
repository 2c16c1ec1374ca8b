"""Genotype derivation, serialization, and from-scratch training."""

from .derive import (
    GENOTYPE_VERSION,
    EdgeChoice,
    Genotype,
    derive_genotype,
    genotype_from_json,
    genotype_to_json,
    load_genotype,
    save_genotype,
)
from .network import DerivedCell, DerivedNetwork, NetworkConfig, build_network
from .train import TRAIN_HISTORY_HEADER, train_from_scratch, write_train_history_csv

__all__ = [
    "DerivedCell",
    "DerivedNetwork",
    "EdgeChoice",
    "GENOTYPE_VERSION",
    "Genotype",
    "NetworkConfig",
    "TRAIN_HISTORY_HEADER",
    "build_network",
    "derive_genotype",
    "genotype_from_json",
    "genotype_to_json",
    "load_genotype",
    "save_genotype",
    "train_from_scratch",
    "write_train_history_csv",
]
