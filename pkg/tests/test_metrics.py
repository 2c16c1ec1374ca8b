"""Scoring and evaluation tests, pinned against exhaustive oracles.

The equal-error-rate oracle below sweeps every candidate threshold by
brute force and interpolates the crossing independently of the library
implementation; top-k is checked against a stable full sort.
"""

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speakernas.audio import TrialPair
from speakernas.autodiff import Tensor, count_params
from speakernas.errors import ContractError, DataError, NumericsError
from speakernas.genotype import NetworkConfig, build_network
from speakernas.metrics import (
    Embedding,
    compute_eer,
    cosine_similarity,
    evaluate_identification,
    evaluate_verification,
    metrics_report,
    topk_accuracy,
    utterance_embedding,
)
from tests.test_network import _mixed_genotype


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def _eer_oracle(scores, labels):
    """Brute-force sweep over unique scores plus a virtual top point."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    pos, neg = scores[labels], scores[~labels]
    sweep = list(np.unique(scores))
    sweep.append(np.nextafter(sweep[-1], np.inf))
    pts = []
    for t in sweep:
        far = float((neg >= t).sum()) / len(neg)
        frr = float((pos < t).sum()) / len(pos)
        pts.append((t, far, frr))
    for (t0, far0, frr0), (t1, far1, frr1) in zip(pts, pts[1:]):
        d0, d1 = far0 - frr0, far1 - frr1
        if d0 > 0 >= d1:
            lam = d0 / (d0 - d1)
            return (100.0 * (far0 + lam * (far1 - far0)),
                    t0 + lam * (t1 - t0))
    raise AssertionError("no crossing found")


def _topk_oracle(logits, labels, k):
    hits = 0
    for row, y in zip(np.asarray(logits, dtype=np.float64), labels):
        ranked = sorted(range(len(row)), key=lambda c: (-row[c], c))
        hits += y in ranked[:k]
    return 100.0 * hits / len(labels)


class TestEEROracle:
    def test_matches_brute_force_on_random_score_sets(self):
        for trial in range(100):
            rng = np.random.default_rng([trial, 911])
            n_pos = int(rng.integers(3, 40))
            n_neg = int(rng.integers(3, 40))
            sep = rng.uniform(-0.5, 2.0)
            scores = np.concatenate([
                rng.normal(sep, 1.0, n_pos), rng.normal(0.0, 1.0, n_neg)])
            labels = np.concatenate([
                np.ones(n_pos, dtype=int), np.zeros(n_neg, dtype=int)])
            got_eer, got_thr = compute_eer(scores, labels)
            want_eer, want_thr = _eer_oracle(scores, labels)
            assert abs(got_eer - want_eer) < 1e-9, trial
            assert abs(got_thr - want_thr) < 1e-9, trial

    def test_perfect_and_inverted_separation(self):
        scores = np.array([0.9, 0.8, 0.7, 0.2, 0.1, 0.0])
        labels = np.array([1, 1, 1, 0, 0, 0])
        eer, thr = compute_eer(scores, labels)
        assert eer == 0.0
        assert 0.2 < thr <= 0.7
        eer_inv, _ = compute_eer(scores, 1 - labels)
        assert eer_inv == 100.0

    def test_all_equal_scores_give_50(self):
        eer, _ = compute_eer(np.ones(10), np.array([1, 0] * 5))
        assert abs(eer - 50.0) < 1e-9

    def test_duplicate_heavy_scores_match_oracle(self):
        for trial in range(30):
            rng = np.random.default_rng([trial, 1693])
            scores = rng.integers(0, 4, size=30) / 4.0  # many exact ties
            labels = rng.integers(0, 2, size=30)
            if labels.sum() in (0, len(labels)):
                labels[0] = 1 - labels[0]
            got = compute_eer(scores, labels)
            want = _eer_oracle(scores, labels)
            assert abs(got[0] - want[0]) < 1e-9

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_label_inversion_complements_the_rate(self, case):
        rng = np.random.default_rng([case, 3023])
        n = int(rng.integers(4, 60))
        scores = rng.normal(size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.sum() in (0, n):
            labels[0] = 1 - labels[0]
        eer, _ = compute_eer(scores, labels)
        inv, _ = compute_eer(scores, 1 - labels)
        assert abs((eer + inv) - 100.0) < 1e-9

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_increasing_transforms_preserve_the_rate(self, case):
        rng = np.random.default_rng([case, 5099])
        n = int(rng.integers(4, 50))
        scores = rng.normal(size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.sum() in (0, n):
            labels[0] = 1 - labels[0]
        base, _ = compute_eer(scores, labels)
        warped, _ = compute_eer(3.0 * scores + 11.0, labels)
        assert abs(base - warped) < 1e-9

    def test_eer_is_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            scores = rng.normal(size=20)
            labels = rng.integers(0, 2, size=20)
            if labels.sum() in (0, 20):
                labels[0] = 1 - labels[0]
            eer, _ = compute_eer(scores, labels)
            assert 0.0 <= eer <= 100.0

    def test_validation(self):
        with pytest.raises(ContractError):
            compute_eer(np.ones(4), np.ones(3))
        with pytest.raises(ContractError):
            compute_eer(np.ones(4), np.ones(4))  # single class
        with pytest.raises(DataError):
            compute_eer(np.array([1.0, np.nan]), np.array([1, 0]))


class TestTopK:
    def test_matches_full_sort_oracle(self):
        for trial in range(100):
            rng = np.random.default_rng([trial, 761])
            n = int(rng.integers(1, 30))
            c = int(rng.integers(2, 12))
            logits = np.round(rng.normal(size=(n, c)), 2)  # force ties
            labels = rng.integers(0, c, size=n)
            for k in (1, min(5, c), c):
                got = topk_accuracy(logits, labels, k)
                want = _topk_oracle(logits, labels, k)
                assert abs(got - want) < 1e-9

    def test_monotone_in_k_and_exhaustive_at_full_width(self):
        rng = np.random.default_rng(5)
        logits = rng.normal(size=(40, 6))
        labels = rng.integers(0, 6, size=40)
        accs = [topk_accuracy(logits, labels, k) for k in range(1, 7)]
        assert all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))
        assert accs[-1] == 100.0

    def test_tie_breaks_prefer_lower_class(self):
        logits = np.array([[1.0, 1.0, 0.0]])
        assert topk_accuracy(logits, np.array([0]), 1) == 100.0
        assert topk_accuracy(logits, np.array([1]), 1) == 0.0
        assert topk_accuracy(logits, np.array([1]), 2) == 100.0

    def test_validation(self):
        logits = np.zeros((3, 4))
        with pytest.raises(ContractError):
            topk_accuracy(logits, np.zeros(2, dtype=int), 1)
        with pytest.raises(ContractError):
            topk_accuracy(logits, np.zeros(3, dtype=int), 0)
        with pytest.raises(ContractError):
            topk_accuracy(logits, np.zeros(3, dtype=int), 5)
        with pytest.raises(DataError):
            topk_accuracy(logits, np.array([0, 1, 4]), 1)


class TestCosine:
    def test_closed_forms(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0
        assert abs(cosine_similarity([1, 2, 3], [2, 4, 6]) - 1.0) < 1e-12
        assert abs(cosine_similarity([1, 1], [-1, -1]) + 1.0) < 1e-12
        got = cosine_similarity([1, 0], [1, 1])
        assert abs(got - 1 / np.sqrt(2)) < 1e-12

    def test_scale_invariance_and_bounds(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a, b = rng.normal(size=16), rng.normal(size=16)
            s = cosine_similarity(a, b)
            assert -1.0 - 1e-12 <= s <= 1.0 + 1e-12
            assert abs(cosine_similarity(7.0 * a, 0.1 * b) - s) < 1e-12

    def test_validation(self):
        with pytest.raises(ContractError):
            cosine_similarity(np.ones(3), np.ones(4))
        with pytest.raises(NumericsError):
            cosine_similarity(np.zeros(3), np.ones(3))


# ---------------------------------------------------------------------------
# network-level evaluation
# ---------------------------------------------------------------------------

def _eval_net(num_classes=3):
    cfg = NetworkConfig(num_classes=num_classes, num_cells=3, init_channels=4,
                        epochs=1, batch_size=4, seed=0)
    net = build_network(_mixed_genotype(), cfg)
    net.eval()
    return net


def _rand_features(utts, bins=24, t=96, seed=0):
    rng = np.random.default_rng(seed)
    return {u: rng.normal(size=(bins, t)).astype(np.float32) for u in utts}


class TestUtteranceEmbedding:
    def test_mean_of_segment_embeddings(self):
        net = _eval_net()
        rng = np.random.default_rng(1)
        segs = rng.normal(size=(5, 1, 24, 48)).astype(np.float32)
        got = utterance_embedding(net, segs, "u")
        assert isinstance(got, Embedding)
        assert got.utterance_id == "u"
        singles = np.stack([
            net.embed(Tensor(segs[i:i + 1])).data[0] for i in range(5)])
        np.testing.assert_allclose(got.vector, singles.mean(axis=0),
                                   rtol=1e-5, atol=1e-6)

    def test_accepts_lists_and_unbatched_segments(self):
        net = _eval_net()
        rng = np.random.default_rng(2)
        segs = [rng.normal(size=(24, 48)).astype(np.float32) for _ in range(3)]
        a = utterance_embedding(net, segs)
        b = utterance_embedding(net, np.stack(segs)[:, None, :, :])
        np.testing.assert_array_equal(a.vector, b.vector)

    def test_batch_chunking_matches_single_pass(self):
        net = _eval_net()
        rng = np.random.default_rng(3)
        segs = rng.normal(size=(19, 1, 24, 48)).astype(np.float32)  # > EVAL_BATCH
        got = utterance_embedding(net, segs).vector
        want = net.embed(Tensor(segs)).data.mean(axis=0)
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-6)

    def test_requires_eval_mode_and_segments(self):
        net = _eval_net()
        net.train()
        with pytest.raises(ContractError):
            utterance_embedding(net, np.zeros((1, 1, 24, 48), dtype=np.float32))
        net.eval()
        with pytest.raises(ContractError):
            utterance_embedding(net, [])
        with pytest.raises(ContractError):
            utterance_embedding(net, np.zeros((0, 1, 24, 48), dtype=np.float32))


class TestEvaluateIdentification:
    def test_report_fields_and_trivial_bounds(self):
        net = _eval_net(num_classes=3)
        items = [(f"u{i}", f"s{i % 3}") for i in range(6)]
        feats = _rand_features([u for u, _ in items])
        lm = {"s0": 0, "s1": 1, "s2": 2}
        res = evaluate_identification(net, feats, items, lm,
                                      frames=48, hop=24)
        assert res.k_used == 3  # top-5 degrades to class count
        assert 0.0 <= res.top1 <= res.top5 <= 100.0
        assert res.logits.shape == (6, 3)
        assert res.utterances == [u for u, _ in items]
        # one utterance of each class must produce 100 at k = classes
        assert res.top5 == 100.0

    def test_top1_matches_scoring_primitive(self):
        net = _eval_net()
        items = [(f"u{i}", f"s{i % 3}") for i in range(5)]
        feats = _rand_features([u for u, _ in items], seed=4)
        lm = {"s0": 0, "s1": 1, "s2": 2}
        res = evaluate_identification(net, feats, items, lm, frames=48, hop=24)
        assert res.top1 == topk_accuracy(res.logits, res.labels, 1)

    def test_unknown_speaker_and_empty_split(self):
        net = _eval_net()
        feats = _rand_features(["u0"])
        with pytest.raises(ContractError):
            evaluate_identification(net, feats, [], {"s0": 0})
        with pytest.raises(ContractError):
            evaluate_identification(net, feats, [("u0", "mystery")], {"s0": 0},
                                    frames=48, hop=24)


class TestEvaluateVerification:
    def _setup(self, seed=0):
        net = _eval_net()
        utts = [f"a{i}" for i in range(3)] + [f"b{i}" for i in range(3)]
        feats = _rand_features(utts, seed=seed)
        trials = [TrialPair(1, "a0", "a1"), TrialPair(1, "b0", "b1"),
                  TrialPair(0, "a0", "b0"), TrialPair(0, "a2", "b2")]
        return net, feats, trials

    def test_scores_are_pairwise_cosines_and_eer_matches(self, tmp_path):
        net, feats, trials = self._setup()
        out = tmp_path / "scores.csv"
        res = evaluate_verification(net, feats, trials, frames=48, hop=24,
                                    scores_csv=str(out))
        assert len(res.scores) == 4
        emb = {u: utterance_embedding(net, _segs(feats, u)).vector
               for u in feats}
        for label, a, b, score in res.scores:
            assert abs(score - cosine_similarity(emb[a], emb[b])) < 1e-12
        eer, thr = compute_eer([r[3] for r in res.scores],
                               [r[0] for r in res.scores])
        assert res.eer == eer and res.threshold == thr
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["label", "utt_a", "utt_b", "score"]
        assert len(rows) == 5
        for row, (label, a, b, score) in zip(rows[1:], res.scores):
            assert row[:3] == [str(label), a, b]
            assert float(row[3]) == score  # repr round-trip

    def test_unknown_utterance_is_named(self):
        net, feats, trials = self._setup()
        trials.append(TrialPair(0, "a0", "ghost"))
        with pytest.raises(DataError, match="ghost"):
            evaluate_verification(net, feats, trials, frames=48, hop=24)

    def test_empty_trials_rejected(self):
        net, feats, _ = self._setup()
        with pytest.raises(ContractError):
            evaluate_verification(net, feats, [])

    def test_random_embeddings_sit_near_chance(self):
        # cosine scores of i.i.d. embeddings carry no speaker signal, so
        # the error rate should hover around 50 across many trials
        rng = np.random.default_rng(17)
        emb = {f"u{i}": rng.normal(size=32) for i in range(40)}
        scores, labels = [], []
        for i in range(0, 40, 2):
            scores.append(cosine_similarity(emb[f"u{i}"], emb[f"u{i + 1}"]))
            labels.append(i % 4 == 0)
        eer, _ = compute_eer(np.array(scores), np.array(labels))
        assert 25.0 <= eer <= 75.0


def _segs(feats, utt):
    from speakernas.audio import evaluation_segments
    return evaluation_segments(feats, utt, frames=48, hop=24)


class TestReport:
    def test_metrics_report_contents(self):
        net, feats, trials = TestEvaluateVerification()._setup()
        items = [("a0", "s0"), ("b0", "s1"), ("a1", "s2")]
        lm = {"s0": 0, "s1": 1, "s2": 2}
        ident = evaluate_identification(net, feats, items, lm, frames=48, hop=24)
        ver = evaluate_verification(net, feats, trials, frames=48, hop=24)
        report = metrics_report(net, identification=ident, verification=ver)
        assert report["num_params"] == count_params(net)
        assert report["embedding_dim"] == net.embedding_dim
        assert report["top1"] == ident.top1
        assert report["top5"] == ident.top5
        assert report["eer"] == ver.eer
        assert report["threshold"] == ver.threshold
        bare = metrics_report(net)
        assert set(bare) == {"num_params", "embedding_dim"}
