"""Synthetic speaker corpus for desk-scale runs.

Each synthetic speaker is a harmonic source: a fundamental on a
geometric ladder (so combs never collide), two formant-like resonances
shaping harmonic amplitudes, and additive noise. Utterances vary by
phase, fundamental jitter, vibrato, duration, and a slow amplitude
modulation. The modulation matters: per-bin mean/variance normalization
levels stationary amplitude differences, so speaker identity must
survive as the *pattern* of coherently co-modulating harmonic bins
against incoherent noise bins.

All draws flow through generators seeded from (seed, speaker, utterance)
tuples, so datasets are reproducible element-for-element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from .types import TARGET_SAMPLE_RATE, DatasetSplit, TrialPair, Waveform

BASE_F0 = 95.0
F0_LADDER_RATIO = 1.16
MAX_HARMONIC_HZ = 3800.0
# verification cohort spans this many ladder rungs regardless of size
VER_RUNG_SPAN = 6.0


@dataclass
class SpeakerModel:
    f0: float
    formant1: float
    formant2: float
    rolloff: float
    noise_level: float


def speaker_model(seed: int, rung: float, stream: int = None) -> SpeakerModel:
    """Speaker at ladder position ``rung``; ``stream`` keys the RNG so
    two speakers can share a rung region without sharing draws."""
    if stream is None:
        stream = int(round(2 * rung))
    rng = np.random.default_rng([seed, 1249, stream])
    f0 = BASE_F0 * F0_LADDER_RATIO ** rung * (1.0 + rng.uniform(-0.03, 0.03))
    return SpeakerModel(
        f0=f0,
        formant1=rng.uniform(350.0, 900.0),
        formant2=rng.uniform(1300.0, 2600.0),
        rolloff=rng.uniform(0.4, 0.8),
        noise_level=rng.uniform(0.05, 0.15),
    )


def _formant_envelope(freqs: np.ndarray, m: SpeakerModel) -> np.ndarray:
    e = (0.3
         + np.exp(-0.5 * ((freqs - m.formant1) / 140.0) ** 2)
         + 0.8 * np.exp(-0.5 * ((freqs - m.formant2) / 280.0) ** 2))
    return e


def synth_utterance(m: SpeakerModel, rng: np.random.Generator,
                    duration_s: float = 1.2,
                    sample_rate: int = TARGET_SAMPLE_RATE) -> np.ndarray:
    dur = duration_s * (1.0 + rng.uniform(-0.15, 0.15))
    n = max(int(dur * sample_rate), 4 * 400)
    t = np.arange(n, dtype=np.float64) / sample_rate

    f0 = m.f0 * (1.0 + rng.uniform(-0.02, 0.02))
    vib_rate = rng.uniform(4.0, 7.0)
    vib_depth = rng.uniform(0.004, 0.012)
    inst_f0 = f0 * (1.0 + vib_depth * np.sin(2 * np.pi * vib_rate * t
                                             + rng.uniform(0, 2 * np.pi)))
    base_phase = 2 * np.pi * np.cumsum(inst_f0) / sample_rate

    n_harm = max(3, int(MAX_HARMONIC_HZ / f0))
    h = np.arange(1, n_harm + 1, dtype=np.float64)
    amps = _formant_envelope(h * f0, m) / h ** m.rolloff
    phases = rng.uniform(0, 2 * np.pi, size=n_harm)
    voiced = (amps[:, None] * np.sin(h[:, None] * base_phase[None, :]
                                     + phases[:, None])).sum(axis=0)

    am_rate = rng.uniform(2.0, 6.0)
    am_depth = rng.uniform(0.3, 0.6)
    am = 1.0 + am_depth * np.sin(2 * np.pi * am_rate * t
                                 + rng.uniform(0, 2 * np.pi))
    x = am * voiced + m.noise_level * rng.standard_normal(n)
    peak = np.abs(x).max()
    if peak > 0:
        x = 0.7 * x / peak
    return x.astype(np.float32)


@dataclass
class SynthDataset:
    """Waveforms plus role-tagged splits and verification trials."""

    waveforms: dict
    search_train: DatasetSplit
    search_val: DatasetSplit
    train: DatasetSplit
    test: DatasetSplit
    verification: DatasetSplit
    speaker_labels: dict

    def splits(self):
        return {
            "search-train": self.search_train,
            "search-val": self.search_val,
            "train": self.train,
            "test": self.test,
            "verification": self.verification,
        }


def synth_dataset(num_speakers: int, utterances_per_speaker: int, seed: int = 0,
                  duration_s: float = 1.2, verification_speakers: int = None,
                  verification_utterances: int = 8,
                  search_utterances_per_speaker: int = 4) -> SynthDataset:
    """Generate identification splits plus a disjoint verification set.

    Identification splits each speaker's utterances train/dev/test; the
    search roles reuse the first few train/dev utterances so a
    desk-scale search sees a small fixed subset. Verification speakers
    are entirely separate sources spread evenly over a fixed span of the
    fundamental-frequency ladder, paired into balanced same/different
    trials.
    """
    if num_speakers < 2:
        raise ConfigurationError(f"need >= 2 speakers, got {num_speakers}")
    if utterances_per_speaker < 5:
        raise ConfigurationError(
            f"need >= 5 utterances per speaker to populate train/dev/test, "
            f"got {utterances_per_speaker}"
        )
    if verification_speakers is None:
        verification_speakers = min(num_speakers, 3)
    if verification_speakers < 2:
        raise ConfigurationError("need >= 2 verification speakers for trials")

    waveforms = {}

    def make_utt(spk_name, model, spk_seed_index, utt_index):
        rng = np.random.default_rng([seed, 58111, spk_seed_index, utt_index])
        utt_id = f"{spk_name}_utt{utt_index:03d}"
        waveforms[utt_id] = Waveform(
            samples=synth_utterance(model, rng, duration_s=duration_s),
            utterance_id=utt_id,
            speaker_id=spk_name,
        )
        return utt_id

    u = utterances_per_speaker
    test_n = max(2, u // 5)
    dev_n = max(2, u // 5)
    train_n = u - test_n - dev_n
    search_n = min(search_utterances_per_speaker, train_n, dev_n)

    search_train, search_val = [], []
    train_items, test_items = [], []
    speaker_labels = {}
    for s in range(num_speakers):
        spk = f"spk{s:03d}"
        speaker_labels[spk] = s
        model = speaker_model(seed, s)
        utts = [make_utt(spk, model, s, i) for i in range(u)]
        train_u = utts[:train_n]
        dev_u = utts[train_n:train_n + dev_n]
        test_u = utts[train_n + dev_n:]
        train_items += [(x, spk) for x in train_u]
        test_items += [(x, spk) for x in test_u]
        search_train += [(x, spk) for x in train_u[:search_n]]
        search_val += [(x, spk) for x in dev_u[:search_n]]

    ver_items, trials = [], []
    nv, vu = verification_speakers, verification_utterances
    for j in range(nv):
        spk = f"ver{j:03d}"
        # spread the cohort across VER_RUNG_SPAN ladder rungs, starting
        # half a rung off the identification speakers so no source is
        # reused; even spreading keeps fundamentals bounded for any nv
        rung = 0.5 + VER_RUNG_SPAN * j / max(1, nv - 1)
        model = speaker_model(seed, rung, stream=10000 + j)
        utts = [make_utt(spk, model, 10000 + j, i) for i in range(vu)]
        ver_items += [(x, spk) for x in utts]
    for j in range(nv):
        a = [x for x, spk in ver_items if spk == f"ver{j:03d}"]
        b = [x for x, spk in ver_items if spk == f"ver{(j + 1) % nv:03d}"]
        for i in range(vu - 1):
            trials.append(TrialPair(1, a[i], a[i + 1]))
            trials.append(TrialPair(0, a[i], b[i]))

    return SynthDataset(
        waveforms=waveforms,
        search_train=DatasetSplit("search-train", search_train),
        search_val=DatasetSplit("search-val", search_val),
        train=DatasetSplit("train", train_items),
        test=DatasetSplit("test", test_items),
        verification=DatasetSplit("test", ver_items, trial_pairs=trials),
        speaker_labels=speaker_labels,
    )
