"""Dataset domain types for the audio frontend."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ..errors import DataError

TARGET_SAMPLE_RATE = 16000


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int = TARGET_SAMPLE_RATE
    utterance_id: str = ""
    speaker_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise DataError(
                f"waveform {self.utterance_id or '<anon>'}: need a nonempty "
                f"1-D sample array, got shape {self.samples.shape}"
            )
        if self.sample_rate <= 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class Spectrogram:
    """Magnitude short-time spectrum, frequency rows by time columns."""

    values: np.ndarray
    window_ms: float = 25.0
    shift_ms: float = 10.0
    sample_rate: int = TARGET_SAMPLE_RATE
    utterance_id: str = ""
    speaker_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise DataError(
                f"spectrogram must be 2-D (bins, frames), got {self.values.shape}"
            )

    @property
    def bins(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> int:
        return self.values.shape[1]


class TrialPair(NamedTuple):
    label: int  # 1 = same speaker, 0 = different
    utterance_a: str
    utterance_b: str


@dataclass
class DatasetSplit:
    """One role's utterance list, with trial pairs on verification roles."""

    role: str
    items: list = field(default_factory=list)  # (utterance_id, speaker_id)
    trial_pairs: Optional[list] = None

    ROLES = ("search-train", "search-val", "train", "test")

    def __post_init__(self):
        if self.role not in self.ROLES:
            raise DataError(
                f"unknown split role {self.role!r}; expected one of {self.ROLES}"
            )

    def speaker_ids(self):
        return sorted({spk for _, spk in self.items})
