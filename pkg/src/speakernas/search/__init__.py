"""Supernet assembly and alternating bilevel architecture search."""

from .config import SupernetConfig, reduction_indices
from .loop import (
    HISTORY_HEADER,
    SearchState,
    digest_arrays,
    init_search,
    run_search,
    search_step,
    write_history_csv,
)
from .supernet import Supernet, build_supernet

__all__ = [
    "HISTORY_HEADER",
    "SearchState",
    "Supernet",
    "SupernetConfig",
    "build_supernet",
    "digest_arrays",
    "init_search",
    "reduction_indices",
    "run_search",
    "search_step",
    "write_history_csv",
]
