"""Utterance-level evaluation: identification accuracy and verification EER.

Both tasks segment each utterance with the deterministic sliding
window, run every segment through the network in eval mode, and
aggregate: identification averages the classifier logits before
picking speakers, verification averages the pre-classifier embeddings
and scores pairs by cosine similarity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..audio.features import CROP_FRAMES, SEGMENT_HOP
from ..audio.pipeline import evaluation_segments
from ..autodiff.nn import count_params
from ..autodiff.tensor import Tensor
from ..errors import ContractError, DataError
from .scoring import compute_eer, cosine_similarity, topk_accuracy

EVAL_BATCH = 16
SCORES_HEADER = ["label", "utt_a", "utt_b", "score"]


@dataclass
class Embedding:
    vector: np.ndarray
    utterance_id: str = ""


def _forward_chunks(fn, segments: np.ndarray, batch: int = EVAL_BATCH):
    outs = []
    for lo in range(0, segments.shape[0], batch):
        x = Tensor(segments[lo:lo + batch])
        outs.append(fn(x).data)
    return np.concatenate(outs, axis=0)


def _require_eval(network):
    if network.training:
        raise ContractError(
            "network must be in eval mode so pooling sees running statistics"
        )


def utterance_embedding(network, segments, utterance_id: str = "") -> Embedding:
    """Mean of per-segment average-pool outputs."""
    _require_eval(network)
    if isinstance(segments, (list, tuple)):
        if not segments:
            raise ContractError("need at least one segment")
        segments = np.stack([np.asarray(s, dtype=np.float32) for s in segments])
    segments = np.asarray(segments, dtype=np.float32)
    if segments.ndim == 3:
        segments = segments[:, None, :, :]
    if segments.ndim != 4 or segments.shape[0] == 0:
        raise ContractError(
            f"expected non-empty (segments, 1, bins, frames) input, "
            f"got shape {segments.shape}"
        )
    embs = _forward_chunks(network.embed, segments)
    return Embedding(vector=embs.mean(axis=0), utterance_id=utterance_id)


@dataclass
class IdentificationResult:
    top1: float
    top5: float
    k_used: int
    utterances: list = field(default_factory=list)
    logits: np.ndarray = None
    labels: np.ndarray = None


def evaluate_identification(network, features: dict, items, label_map: dict,
                            frames: int = CROP_FRAMES,
                            hop: int = SEGMENT_HOP) -> IdentificationResult:
    """Top-1/top-5 over mean-of-segment-logits utterance predictions.

    Every test speaker must already have a training class index; top-5
    degrades to top-(num classes) when fewer than five classes exist.
    """
    _require_eval(network)
    if not items:
        raise ContractError("empty test split")
    utts, labels, rows = [], [], []
    for utt, spk in items:
        if spk not in label_map:
            raise ContractError(
                f"test speaker {spk!r} was not in the training label map"
            )
        segs = evaluation_segments(features, utt, frames=frames, hop=hop)
        logits = _forward_chunks(network.forward, segs)
        rows.append(logits.mean(axis=0))
        utts.append(utt)
        labels.append(label_map[spk])
    logits = np.stack(rows)
    labels = np.asarray(labels, dtype=np.int64)
    k = min(5, logits.shape[1])
    return IdentificationResult(
        top1=topk_accuracy(logits, labels, 1),
        top5=topk_accuracy(logits, labels, k),
        k_used=k, utterances=utts, logits=logits, labels=labels,
    )


@dataclass
class VerificationResult:
    eer: float
    threshold: float
    scores: list = field(default_factory=list)  # (label, utt_a, utt_b, score)


def evaluate_verification(network, features: dict, trial_pairs,
                          frames: int = CROP_FRAMES, hop: int = SEGMENT_HOP,
                          scores_csv: str = None) -> VerificationResult:
    """Cosine-score every trial on utterance embeddings, then EER."""
    _require_eval(network)
    if not trial_pairs:
        raise ContractError("empty trial list")
    needed = sorted({u for p in trial_pairs for u in (p.utterance_a, p.utterance_b)})
    embeddings = {}
    for utt in needed:
        if utt not in features:
            raise DataError(f"trial references unknown utterance {utt!r}")
        segs = evaluation_segments(features, utt, frames=frames, hop=hop)
        embeddings[utt] = utterance_embedding(network, segs, utt).vector
    rows = [(p.label, p.utterance_a, p.utterance_b,
             cosine_similarity(embeddings[p.utterance_a],
                               embeddings[p.utterance_b]))
            for p in trial_pairs]
    eer, threshold = compute_eer([r[3] for r in rows], [r[0] for r in rows])
    if scores_csv is not None:
        write_scores_csv(scores_csv, rows)
    return VerificationResult(eer=eer, threshold=threshold, scores=rows)


def write_scores_csv(path: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCORES_HEADER)
        for label, a, b, score in rows:
            w.writerow([label, a, b, repr(float(score))])


def metrics_report(network, identification: IdentificationResult = None,
                   verification: VerificationResult = None) -> dict:
    report = {
        "num_params": count_params(network),
        "embedding_dim": network.embedding_dim,
    }
    if identification is not None:
        report["top1"] = identification.top1
        report["top5"] = identification.top5
    if verification is not None:
        report["eer"] = verification.eer
        report["threshold"] = verification.threshold
    return report
