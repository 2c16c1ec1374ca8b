"""Identification and verification metrics."""

from .evaluate import (EVAL_BATCH, SCORES_HEADER, Embedding,
                       IdentificationResult, VerificationResult,
                       evaluate_identification, evaluate_verification,
                       metrics_report, utterance_embedding, write_scores_csv)
from .scoring import compute_eer, cosine_similarity, topk_accuracy

__all__ = [
    "EVAL_BATCH", "SCORES_HEADER", "Embedding", "IdentificationResult",
    "VerificationResult", "evaluate_identification", "evaluate_verification",
    "metrics_report", "utterance_embedding", "write_scores_csv",
    "compute_eer", "cosine_similarity", "topk_accuracy",
]
