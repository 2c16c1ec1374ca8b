"""Spectrogram extraction, normalization, cropping, segmentation.

Frame geometry at 16 kHz: 25 ms Hamming window (400 samples), 10 ms
shift (160 samples), FFT size 512, keeping 257 one-sided magnitude
bins. Frame count T = 1 + floor((len - 400) / 160).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DataError
from .types import TARGET_SAMPLE_RATE, Spectrogram, Waveform

WINDOW_SAMPLES = 400
HOP_SAMPLES = 160
FFT_SIZE = 512
NUM_BINS = FFT_SIZE // 2 + 1

CROP_FRAMES = 300
SEGMENT_HOP = 150


def resample(samples: np.ndarray, sample_rate: int,
             target: int = TARGET_SAMPLE_RATE) -> np.ndarray:
    """Linear-interpolation resampling to the target rate."""
    if sample_rate == target:
        return np.asarray(samples, dtype=np.float32)
    n_out = int(round(len(samples) * target / sample_rate))
    if n_out < 1:
        raise DataError(
            f"waveform too short to resample from {sample_rate} Hz to {target} Hz"
        )
    t_out = np.arange(n_out, dtype=np.float64) * (sample_rate / target)
    t_in = np.arange(len(samples), dtype=np.float64)
    return np.interp(t_out, t_in, np.asarray(samples, dtype=np.float64)).astype(
        np.float32
    )


def frame_count(num_samples: int) -> int:
    return 1 + (num_samples - WINDOW_SAMPLES) // HOP_SAMPLES


def stft_magnitudes(samples: np.ndarray) -> np.ndarray:
    """(257, T) magnitude spectrogram of a 16 kHz sample array."""
    samples = np.asarray(samples, dtype=np.float32)
    if samples.size < WINDOW_SAMPLES:
        raise DataError(
            f"waveform has {samples.size} samples, shorter than one "
            f"{WINDOW_SAMPLES}-sample analysis window"
        )
    frames = sliding_window_view(samples, WINDOW_SAMPLES)[::HOP_SAMPLES]
    windowed = frames * np.hamming(WINDOW_SAMPLES).astype(np.float32)
    spec = np.fft.rfft(windowed, n=FFT_SIZE, axis=1)
    return np.abs(spec).T.astype(np.float32)


def compute_spectrogram(w: Waveform) -> Spectrogram:
    samples = resample(w.samples, w.sample_rate)
    return Spectrogram(
        values=stft_magnitudes(samples),
        utterance_id=w.utterance_id,
        speaker_id=w.speaker_id,
    )


def normalize(values: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Zero-mean unit-variance per frequency bin, over the utterance.

    Bins whose standard deviation is negligible relative to their mean
    magnitude map to zeros instead of being blown up by the division.
    The threshold is relative because a constant float32 row of large
    magnitude reports a tiny nonzero std from accumulation rounding.
    """
    v = np.asarray(values, dtype=np.float32)
    mean = v.mean(axis=1, keepdims=True)
    std = v.std(axis=1, keepdims=True)
    degenerate = std < eps * np.maximum(1.0, np.abs(mean))
    safe = np.where(degenerate, 1.0, std)
    out = (v - mean) / safe
    out[degenerate[:, 0]] = 0.0
    return out.astype(np.float32)


def tile_to_length(values: np.ndarray, frames: int) -> np.ndarray:
    """Repeat the spectrogram along time until it spans >= frames."""
    t = values.shape[1]
    if t >= frames:
        return values
    reps = -(-frames // t)
    return np.tile(values, (1, reps))


def random_crop(values: np.ndarray, rng: np.random.Generator,
                frames: int = CROP_FRAMES) -> np.ndarray:
    """Contiguous ``frames``-column slice at a seeded-uniform offset."""
    v = tile_to_length(np.asarray(values), frames)
    start = int(rng.integers(0, v.shape[1] - frames + 1))
    return np.ascontiguousarray(v[:, start:start + frames])


def segment_starts(total_frames: int, frames: int = CROP_FRAMES,
                   hop: int = SEGMENT_HOP):
    count = max(1, 1 + -(-(total_frames - frames) // hop))
    return [i * hop for i in range(count)]


def segment_utterance(values: np.ndarray, frames: int = CROP_FRAMES,
                      hop: int = SEGMENT_HOP):
    """Overlapping fixed-width windows; the tail wraps around to frame 0.

    Windows start at 0, hop, 2*hop, ...; the count is
    max(1, 1 + ceil((T - frames) / hop)), so every input frame lands in
    at least one window and a short input yields exactly one tiled
    window.
    """
    v = np.asarray(values)
    starts = segment_starts(v.shape[1], frames, hop)
    tiled = tile_to_length(v, starts[-1] + frames)
    return np.stack([tiled[:, s:s + frames] for s in starts])
