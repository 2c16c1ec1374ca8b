"""Waveform -> normalized spectrogram -> fixed-size model inputs.

Identification training consumes random fixed-length crops stacked into
(N, 1, bins, frames) batches; evaluation consumes the deterministic
sliding segmentation of each full utterance. A ``feature_bins`` knob
keeps only the lowest rows of the 257-bin spectrogram so desk-scale
runs can work on square-ish inputs where the harmonic structure lives.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .features import (CROP_FRAMES, SEGMENT_HOP, compute_spectrogram,
                       normalize, random_crop, resample, segment_utterance)
from .types import TARGET_SAMPLE_RATE, Spectrogram, Waveform


def utterance_features(wave: Waveform, feature_bins: int = None) -> np.ndarray:
    """Normalized magnitude spectrogram, optionally cropped to the
    lowest ``feature_bins`` frequency rows."""
    if wave.sample_rate != TARGET_SAMPLE_RATE:
        wave = Waveform(
            samples=resample(wave.samples, wave.sample_rate, TARGET_SAMPLE_RATE),
            utterance_id=wave.utterance_id, speaker_id=wave.speaker_id,
        )
    spec = compute_spectrogram(wave)
    values = normalize(spec.values)
    if feature_bins is not None:
        if not 1 <= feature_bins <= values.shape[0]:
            raise DataError(
                f"feature_bins must be in [1, {values.shape[0]}], got {feature_bins}"
            )
        values = values[:feature_bins]
    return values


def features_for(waveforms: dict, feature_bins: int = None) -> dict:
    return {utt: utterance_features(w, feature_bins=feature_bins)
            for utt, w in waveforms.items()}


def build_label_map(items) -> dict:
    """Stable speaker -> class index map from (utterance, speaker) pairs."""
    return {spk: i for i, spk in enumerate(sorted({s for _, s in items}))}


def classification_arrays(features: dict, items, label_map: dict,
                          rng: np.random.Generator,
                          frames: int = CROP_FRAMES,
                          crops_per_utterance: int = 1):
    """Random-crop every utterance into (N, 1, bins, frames) inputs plus
    integer labels; short utterances tile before cropping."""
    xs, ys = [], []
    for utt, spk in items:
        if utt not in features:
            raise DataError(f"no features for utterance {utt!r}")
        if spk not in label_map:
            raise DataError(f"speaker {spk!r} missing from label map")
        for _ in range(crops_per_utterance):
            xs.append(random_crop(features[utt], rng, frames=frames))
            ys.append(label_map[spk])
    if not xs:
        raise DataError("no utterances to assemble")
    x = np.stack(xs).astype(np.float32)[:, None, :, :]
    return x, np.asarray(ys, dtype=np.int64)


def evaluation_segments(features: dict, utt: str,
                        frames: int = CROP_FRAMES,
                        hop: int = SEGMENT_HOP) -> np.ndarray:
    """Deterministic (S, 1, bins, frames) segmentation of one utterance."""
    if utt not in features:
        raise DataError(f"no features for utterance {utt!r}")
    segs = segment_utterance(features[utt], frames=frames, hop=hop)
    return segs.astype(np.float32)[:, None, :, :]
