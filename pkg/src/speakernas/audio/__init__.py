"""Audio frontend: waveform IO, spectrogram features, synthetic speakers."""

from .features import (CROP_FRAMES, FFT_SIZE, HOP_SAMPLES, NUM_BINS,
                       SEGMENT_HOP, WINDOW_SAMPLES, compute_spectrogram,
                       frame_count, normalize, random_crop, resample,
                       segment_starts, segment_utterance, stft_magnitudes,
                       tile_to_length)
from .io import (MANIFEST_HEADER, TRIALS_HEADER, load_features, read_manifest,
                 read_trials, read_wav, save_features, write_manifest,
                 write_trials, write_wav)
from .pipeline import (build_label_map, classification_arrays,
                       evaluation_segments, features_for, utterance_features)
from .synth import SpeakerModel, SynthDataset, speaker_model, synth_dataset, synth_utterance
from .types import (TARGET_SAMPLE_RATE, DatasetSplit, Spectrogram,
                    TrialPair, Waveform)

__all__ = [
    "CROP_FRAMES", "FFT_SIZE", "HOP_SAMPLES", "NUM_BINS", "SEGMENT_HOP",
    "WINDOW_SAMPLES", "compute_spectrogram", "frame_count", "normalize",
    "random_crop", "resample", "segment_starts", "segment_utterance",
    "stft_magnitudes", "tile_to_length",
    "MANIFEST_HEADER", "TRIALS_HEADER", "load_features", "read_manifest",
    "read_trials", "read_wav", "save_features", "write_manifest",
    "write_trials", "write_wav",
    "build_label_map", "classification_arrays", "evaluation_segments",
    "features_for", "utterance_features",
    "SpeakerModel", "SynthDataset", "speaker_model", "synth_dataset",
    "synth_utterance",
    "TARGET_SAMPLE_RATE", "DatasetSplit", "Spectrogram",
    "TrialPair", "Waveform",
]
