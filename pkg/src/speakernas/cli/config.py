"""Run configuration: flat INI sections with hard errors on unknown keys.

The file carries three sections. ``[run]`` holds the seed, ``[data]``
selects either the synthetic corpus or manifest CSVs plus the feature
geometry, and ``[search]`` / ``[train]`` override the two stage configs.
Values here stay plain (strings/ints/floats) so parsing never needs the
numeric stack; stage dataclasses are built later from these dicts.
Every command writes back a fully resolved snapshot so a run can be
replayed from its output directory alone.
"""

from __future__ import annotations

import configparser
import os

from ..errors import ConfigurationError


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (target kwarg, parser)
SCHEMA = {
    "run": {
        "seed": ("seed", int),
    },
    "data": {
        "synth": ("synth", _bool),
        "num_speakers": ("num_speakers", int),
        "utterances_per_speaker": ("utterances_per_speaker", int),
        "verification_speakers": ("verification_speakers", int),
        "verification_utterances": ("verification_utterances", int),
        "feature_bins": ("feature_bins", int),
        "crop_frames": ("crop_frames", int),
        "segment_hop": ("segment_hop", int),
        "crops_per_utterance": ("crops_per_utterance", int),
        "manifest_search_train": ("manifest_search_train", str),
        "manifest_search_val": ("manifest_search_val", str),
        "manifest_train": ("manifest_train", str),
        "manifest_test": ("manifest_test", str),
        "manifest_verification": ("manifest_verification", str),
        "trials": ("trials", str),
    },
    "search": {
        "cells": ("num_cells", int),
        "channels": ("init_channels", int),
        "epochs": ("epochs", int),
        "batch_size": ("batch_size", int),
        "lr_omega": ("lr_omega", float),
        "lr_alpha": ("lr_alpha", float),
        "weight_decay": ("weight_decay", float),
        "entropy_patience": ("entropy_patience", int),
    },
    "train": {
        "cells": ("num_cells", int),
        "channels": ("init_channels", int),
        "epochs": ("epochs", int),
        "batch_size": ("batch_size", int),
        "lr": ("lr", float),
        "weight_decay": ("weight_decay", float),
    },
}

DATA_DEFAULTS = {
    "synth": True,
    "num_speakers": 4,
    "utterances_per_speaker": 25,
    "verification_speakers": None,
    "verification_utterances": 8,
    "feature_bins": None,
    "crop_frames": 300,
    "segment_hop": 150,
    "crops_per_utterance": 1,
    "manifest_search_train": "",
    "manifest_search_val": "",
    "manifest_train": "",
    "manifest_test": "",
    "manifest_verification": "",
    "trials": "",
}


def load_run_config(path: str = None) -> dict:
    """Parse the INI into {"run": {...}, "data": {...}, ...} dicts.

    Only keys present in the file appear in the section dicts (except
    [data], which is completed with defaults); callers overlay them on
    the stage dataclass defaults. Unknown sections or keys abort.
    """
    sections = {name: {} for name in SCHEMA}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigurationError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keep keys case-sensitive
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigurationError(
                    f"{path}: unknown section [{section}]; expected one of "
                    f"{sorted(SCHEMA)}"
                )
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigurationError(
                        f"{path}: unknown key {key!r} in [{section}]; expected "
                        f"one of {sorted(SCHEMA[section])}"
                    )
                target, parse = SCHEMA[section][key]
                try:
                    sections[section][target] = parse(raw)
                except ValueError as exc:
                    raise ConfigurationError(
                        f"{path}: bad value for {key} in [{section}]: {exc}"
                    ) from exc
        base = os.path.dirname(os.path.abspath(path))
        for key in ("manifest_search_train", "manifest_search_val",
                    "manifest_train", "manifest_test",
                    "manifest_verification", "trials"):
            value = sections["data"].get(key, "")
            if value and not os.path.isabs(value):
                sections["data"][key] = os.path.join(base, value)
    data = dict(DATA_DEFAULTS)
    data.update(sections["data"])
    sections["data"] = data
    return sections


def write_config_snapshot(path: str, resolved: dict) -> None:
    """Freeze a resolved {section: {key: value}} mapping as sorted INI."""
    lines = []
    for section in sorted(resolved):
        lines.append(f"[{section}]")
        for key in sorted(resolved[section]):
            value = resolved[section][key]
            if value is None:
                continue
            lines.append(f"{key} = {value}")
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
