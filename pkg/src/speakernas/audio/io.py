"""Disk formats: WAV files, manifest/trial CSVs, feature containers.

Manifests are plain CSVs with header ``utterance_id,speaker_id,path``;
trial lists use ``label,utterance_a,utterance_b`` with label 1 for
same-speaker pairs. Precomputed features ride in the same binary tensor
container used for checkpoints, one named tensor per utterance.
"""

from __future__ import annotations

import csv
import os

import numpy as np
from scipy.io import wavfile

from ..autodiff.checkpoint import load_checkpoint, save_checkpoint
from ..errors import DataError
from .types import TARGET_SAMPLE_RATE, TrialPair, Waveform


def read_wav(path: str, utterance_id: str = "", speaker_id: str = "") -> Waveform:
    """Load a mono WAV; 16-bit PCM is scaled to [-1, 1), floats pass through."""
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read WAV {path!r}: {exc}") from exc
    if data.ndim == 2:
        data = data.mean(axis=1)
    elif data.ndim != 1:
        raise DataError(f"{path!r}: expected mono or stereo, got shape {data.shape}")
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float32)
    elif data.dtype == np.int32:
        samples = data.astype(np.float32) / 2147483648.0
    else:
        raise DataError(f"{path!r}: unsupported sample format {data.dtype}")
    if not utterance_id:
        utterance_id = os.path.splitext(os.path.basename(path))[0]
    return Waveform(samples=samples, sample_rate=int(rate),
                    utterance_id=utterance_id, speaker_id=speaker_id)


def write_wav(path: str, wave: Waveform) -> None:
    wavfile.write(path, wave.sample_rate, wave.samples.astype(np.float32))


MANIFEST_HEADER = ["utterance_id", "speaker_id", "path"]
TRIALS_HEADER = ["label", "utterance_a", "utterance_b"]


def _read_rows(path: str, expected_header):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from exc
    if not rows or rows[0] != expected_header:
        raise DataError(
            f"{path!r}: expected header {','.join(expected_header)!r}, "
            f"got {rows[0] if rows else 'empty file'}"
        )
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(expected_header):
            raise DataError(f"{path!r} line {i}: expected "
                            f"{len(expected_header)} fields, got {len(row)}")
    return rows[1:]


def read_manifest(path: str):
    """Return [(utterance_id, speaker_id, path)] with relative paths
    resolved against the manifest's own directory."""
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    seen = set()
    for utt, spk, p in _read_rows(path, MANIFEST_HEADER):
        if utt in seen:
            raise DataError(f"{path!r}: duplicate utterance_id {utt!r}")
        seen.add(utt)
        if not os.path.isabs(p):
            p = os.path.join(base, p)
        entries.append((utt, spk, p))
    return entries


def write_manifest(path: str, entries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MANIFEST_HEADER)
        for utt, spk, p in entries:
            w.writerow([utt, spk, p])


def read_trials(path: str):
    pairs = []
    for label, a, b in _read_rows(path, TRIALS_HEADER):
        if label not in ("0", "1"):
            raise DataError(f"{path!r}: trial label must be 0 or 1, got {label!r}")
        pairs.append(TrialPair(int(label), a, b))
    return pairs


def write_trials(path: str, pairs) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRIALS_HEADER)
        for p in pairs:
            w.writerow([p.label, p.utterance_a, p.utterance_b])


def save_features(path: str, features: dict) -> None:
    """Store {utterance_id: 2-D float array} in the tensor container."""
    save_checkpoint(path, {k: np.asarray(v, dtype=np.float32)
                           for k, v in features.items()})


def load_features(path: str) -> dict:
    return load_checkpoint(path)
