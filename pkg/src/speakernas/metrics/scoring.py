"""Scoring primitives: top-k accuracy, cosine similarity, equal error rate."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, DataError, NumericsError


def topk_accuracy(logits: np.ndarray, labels, k: int) -> float:
    """Percentage of rows whose label is among the k largest logits.

    Ties rank the lower class index first, so results are reproducible
    against a stable full-sort oracle.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ContractError(
            f"expected (rows, classes) logits with one label per row, "
            f"got {logits.shape} and {labels.shape}"
        )
    n, c = logits.shape
    if not 1 <= k <= c:
        raise ContractError(f"k must be in [1, {c}], got {k}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise DataError(f"labels must be in [0, {c}), got range "
                        f"[{labels.min()}, {labels.max()}]")
    # stable argsort of -logits puts equal logits in ascending class order
    order = np.argsort(-logits, axis=1, kind="stable")[:, :k]
    hits = (order == labels[:, None]).any(axis=1)
    # 100 * count first: the integer product is exact, so the single
    # rounding happens in the division and any same-formula reader
    # reproduces the value bit-for-bit
    return 100.0 * int(hits.sum()) / n


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise NumericsError("cosine similarity undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def compute_eer(scores, labels):
    """Equal error rate (percent) and the crossing threshold.

    Sweeps the sorted unique scores as thresholds with
    FAR(t) = frac(negative >= t) and FRR(t) = frac(positive < t), then
    linearly interpolates between the adjacent sweep points that bracket
    the FAR/FRR crossing. Because the interpolation weight depends only
    on FAR - FRR, inverting every label yields exactly 100 - EER.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise ContractError(
            f"scores and labels must be equal-length vectors, "
            f"got {scores.shape} and {labels.shape}"
        )
    if not np.isfinite(scores).all():
        raise DataError("scores must be finite")
    pos = np.sort(scores[labels])
    neg = np.sort(scores[~labels])
    if pos.size == 0 or neg.size == 0:
        raise ContractError("need both same-speaker and different-speaker trials")

    thresholds = np.unique(scores)
    # one point past the max so FAR=0/FRR=1 is always reachable and the
    # FAR-FRR sign change is guaranteed to fall inside the sweep
    thresholds = np.append(thresholds, np.nextafter(thresholds[-1], np.inf))
    far = 1.0 - np.searchsorted(neg, thresholds, side="left") / neg.size
    frr = np.searchsorted(pos, thresholds, side="left") / pos.size

    diff = far - frr
    idx = int(np.nonzero(diff <= 0.0)[0][0])  # diff[0] = 1 - 0 > 0 always
    i = idx - 1
    lam = diff[i] / (diff[i] - diff[idx])
    eer = far[i] + lam * (far[idx] - far[i])
    threshold = thresholds[i] + lam * (thresholds[idx] - thresholds[i])
    return 100.0 * float(eer), float(threshold)
