"""Expected-rank scoring, log-likelihood and quality baselines, reports."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airtran.data import dataset_from_pairs
from airtran.errors import (
    ConfigError,
    EmptyDatasetError,
    NumericError,
    ShapeError,
    SingularGramError,
)
from airtran.prng import bulk_gaussian
from airtran.scoring import (
    ScoreConfig,
    airtran_score,
    expected_rank_score,
    group_log_likelihood,
    group_ranks,
    log_likelihood_score,
    make_report,
    quality_score,
    rank_of_relevant,
    read_report,
)


def _rank_by_enumeration(scores, relevant_index) -> int:
    """Independent pessimistic-rank oracle: count score-or-better candidates."""
    rel = scores[relevant_index]
    return sum(1 for s in scores if s >= rel)


class TestRankOfRelevant:
    def test_clear_winner(self):
        assert rank_of_relevant(np.array([0.9, 0.5, 0.5]), 0) == 1

    def test_tie_counts_against(self):
        assert rank_of_relevant(np.array([0.5, 0.5]), 0) == 2

    def test_constant_scores_rank_last(self):
        assert rank_of_relevant(np.full(7, 0.3), 4) == 7

    def test_relevant_last_place(self):
        assert rank_of_relevant(np.array([3.0, 2.0, 1.0]), 2) == 3

    @given(
        st.lists(st.integers(-5, 5), min_size=1, max_size=12),
        st.data(),
    )
    @settings(max_examples=200)
    def test_matches_enumeration_oracle(self, scores, data):
        # small-integer scores force frequent exact ties
        idx = data.draw(st.integers(0, len(scores) - 1))
        got = rank_of_relevant(np.array(scores, dtype=float), idx)
        assert got == _rank_by_enumeration(scores, idx)
        assert 1 <= got <= len(scores)

    @given(
        st.lists(st.integers(-5, 5), min_size=1, max_size=10),
        st.data(),
    )
    @settings(max_examples=100)
    def test_invariant_under_strictly_increasing_transform(self, scores, data):
        idx = data.draw(st.integers(0, len(scores) - 1))
        s = np.array(scores, dtype=float)
        base = rank_of_relevant(s, idx)
        # exact integer arithmetic: no rounding can create or break ties
        assert rank_of_relevant(2.0 * s + 7.0, idx) == base
        assert rank_of_relevant(s**3, idx) == base

    def test_bad_index_rejected(self):
        with pytest.raises(ShapeError, match="outside"):
            rank_of_relevant(np.array([1.0, 2.0]), 2)

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            rank_of_relevant(np.array([1.0, np.nan]), 0)


class TestGroupRanks:
    def test_matches_per_group_loop(self, tiny_dataset, tiny_embeddings):
        q, d = tiny_embeddings
        ranks = group_ranks(tiny_dataset, q, d)
        for g, group in enumerate(tiny_dataset.groups):
            block = [
                float(np.asarray(q, np.float64)[group.query_row] @ np.asarray(d, np.float64)[doc])
                for doc in tiny_dataset.doc_rows[g * 3 : (g + 1) * 3]
            ]
            rel_pos = int(tiny_dataset.relevant_offsets[g])
            assert ranks[g] == _rank_by_enumeration(block, rel_pos)

    def test_injected_ties_match_oracle(self):
        pairs = [(0, 0, 1), (0, 1, 0), (0, 2, 0), (1, 1, 1), (1, 0, 0), (1, 3, 0)]
        ds = dataset_from_pairs(pairs)
        q = np.ones((2, 4))
        d = np.ones((4, 4))  # all dot products tie at 4.0
        np.testing.assert_array_equal(group_ranks(ds, q, d), [3, 3])

    def test_weights_change_ranks(self, tiny_dataset, tiny_embeddings):
        q, d = tiny_embeddings
        w = np.zeros(8)
        w[0] = 1.0  # rank purely by first coordinate product
        ranks = group_ranks(tiny_dataset, q, d, weights=w)
        q64, d64 = np.asarray(q, np.float64), np.asarray(d, np.float64)
        for g in range(3):
            block = [
                q64[tiny_dataset.query_rows[g * 3 + j], 0]
                * d64[tiny_dataset.doc_rows[g * 3 + j], 0]
                for j in range(3)
            ]
            assert ranks[g] == _rank_by_enumeration(
                block, int(tiny_dataset.relevant_offsets[g])
            )

    @given(st.integers(0, 2**32))
    @settings(max_examples=40)
    def test_invariant_under_monotone_transform(self, seed):
        pairs = []
        for qi in range(5):
            pairs.append((qi, qi, 1))
            pairs.extend((qi, 5 + 2 * qi + j, 0) for j in range(2))
        ds = dataset_from_pairs(pairs)
        q = bulk_gaussian(seed, 5 * 6).reshape(5, 6)
        d = bulk_gaussian(seed + 1, 15 * 6).reshape(15, 6)
        base = group_ranks(ds, q, d)
        # exp() is strictly increasing: per-group order of scores unchanged...
        # but ranks depend only on within-group comparisons of q.d, and a
        # monotone map of embeddings does not commute with dot products, so
        # instead rescale scores via positive per-query scaling of q rows
        scale = 1.0 + np.arange(5)[:, None]
        np.testing.assert_array_equal(group_ranks(ds, q * scale, d), base)


class TestExpectedRank:
    def test_perfect_model_scores_one(self):
        pairs = [(0, 0, 1), (0, 1, 0), (1, 1, 1), (1, 0, 0)]
        ds = dataset_from_pairs(pairs)
        q = np.eye(2)
        d = np.eye(2)  # relevant doc = query itself, dot 1 vs 0
        assert expected_rank_score(ds, q, d) == 1.0

    def test_collapsed_model_scores_reciprocal_k(self, tiny_dataset):
        q = np.ones((3, 4))
        d = np.ones((15, 4))
        assert expected_rank_score(tiny_dataset, q, d) == pytest.approx(1 / 3)

    def test_range(self, tiny_dataset, tiny_embeddings):
        s = expected_rank_score(tiny_dataset, *tiny_embeddings)
        assert 1 / 3 <= s <= 1.0

    def test_one_iff_strict_untied_argmax(self):
        pairs = [(0, 0, 1), (0, 1, 0), (1, 1, 1), (1, 0, 0)]
        ds = dataset_from_pairs(pairs)
        q = np.eye(2)
        # relevant doc ties with an irrelevant one in group 0: no longer 1.0
        d = np.array([[1.0, 1.0], [1.0, 1.0]])
        s = expected_rank_score(ds, q, d)
        assert s < 1.0
        assert s == pytest.approx((1 / 2 + 1 / 2) / 2)

    def test_invariant_under_positive_weight_scaling(
        self, tiny_dataset, tiny_embeddings
    ):
        q, d = tiny_embeddings
        w = np.abs(bulk_gaussian(77, 8)) + 0.1
        base = expected_rank_score(tiny_dataset, q, d, weights=w)
        assert expected_rank_score(tiny_dataset, q, d, weights=4.0 * w) == base
        assert expected_rank_score(tiny_dataset, q, d, weights=0.25 * w) == base

    def test_empty_dataset_rejected(self, tiny_embeddings):
        ds = dataset_from_pairs([(0, 0, 1), (0, 1, 0)])
        object.__setattr__(ds, "groups", ())
        with pytest.raises(EmptyDatasetError):
            expected_rank_score(ds, *tiny_embeddings)


class TestGroupLogLikelihood:
    def test_relevant_mode_natural_log(self):
        p = np.array([0.5, 0.3, 0.2])
        assert group_log_likelihood(p, 0, "relevant") == pytest.approx(np.log(0.5))

    def test_document_mode_known_values(self):
        # independently derived by summing base-10 logs of per-document
        # true-label probabilities
        got = group_log_likelihood(np.array([0.5, 0.45, 0.45]), 0, "document")
        assert got == pytest.approx(-0.820304616675, abs=1e-9)
        got = group_log_likelihood(np.array([0.6, 0.65, 0.1]), 0, "document")
        assert got == pytest.approx(-0.723538195827, abs=1e-9)

    def test_document_mode_formula(self):
        p = np.array([0.7, 0.2, 0.4])
        expected = np.log10(0.2) + np.log10(0.3) + np.log10(0.6)
        assert group_log_likelihood(p, 1, "document") == pytest.approx(expected)

    def test_probability_one_competitor_floors(self):
        out = group_log_likelihood(np.array([0.5, 1.0]), 0, "document")
        assert np.isfinite(out)
        assert out < -100  # floored, heavily penalized, not -inf

    @pytest.mark.parametrize("bad", [0.0, -0.2, 1.5, np.nan])
    def test_probability_domain_enforced(self, bad):
        with pytest.raises(NumericError, match=r"\(0, 1\]"):
            group_log_likelihood(np.array([0.5, bad]), 0, "relevant")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ConfigError, match="mode"):
            group_log_likelihood(np.array([0.5, 0.5]), 0, "both")


class TestLogLikelihoodScore:
    def test_always_non_positive(self, tiny_dataset, tiny_embeddings):
        for mode in ("relevant", "document"):
            assert log_likelihood_score(tiny_dataset, *tiny_embeddings, mode=mode) <= 0

    def test_matches_manual_softmax(self):
        pairs = [(0, 0, 1), (0, 1, 0)]
        ds = dataset_from_pairs(pairs)
        q = np.array([[1.0, 0.0]])
        d = np.array([[2.0, 0.0], [1.0, 0.0]])
        # scores (2, 1): p_rel = e^2 / (e^2 + e^1)
        p_rel = np.exp(2) / (np.exp(2) + np.exp(1))
        got = log_likelihood_score(ds, q, d, mode="relevant")
        assert got == pytest.approx(np.log(p_rel))
        got_doc = log_likelihood_score(ds, q, d, mode="document")
        assert got_doc == pytest.approx(np.log10(p_rel) + np.log10(p_rel))

    def test_identical_scores_give_log_reciprocal_k(self, tiny_dataset):
        q = np.zeros((3, 4))
        d = np.zeros((15, 4))
        got = log_likelihood_score(tiny_dataset, q, d, mode="relevant")
        assert got == pytest.approx(np.log(1 / 3))

    def test_bad_mode_rejected(self, tiny_dataset, tiny_embeddings):
        with pytest.raises(ConfigError):
            log_likelihood_score(tiny_dataset, *tiny_embeddings, mode="raw")

    @pytest.mark.parametrize("mode", ["relevant", "document"])
    def test_invariant_under_per_group_score_shift(
        self, mode, tiny_dataset, tiny_embeddings
    ):
        # translating every document by t adds q_g . t to each score, a
        # per-group constant; the softmax must not move
        q, d = tiny_embeddings
        base = log_likelihood_score(tiny_dataset, q, d, mode=mode)
        t = bulk_gaussian(303, 8) * 10.0
        shifted = log_likelihood_score(tiny_dataset, q, d + t, mode=mode)
        assert shifted == pytest.approx(base, rel=1e-9)


class TestQualityScore:
    def test_seed_determinism(self, tiny_dataset, tiny_embeddings):
        a = quality_score(tiny_dataset, *tiny_embeddings, seed=5)
        b = quality_score(tiny_dataset, *tiny_embeddings, seed=5)
        c = quality_score(tiny_dataset, *tiny_embeddings, seed=6)
        assert a == b
        assert a != c

    def test_zero_embeddings_score_zero(self, tiny_dataset):
        q = np.zeros((3, 4))
        d = np.zeros((15, 4))
        assert quality_score(tiny_dataset, q, d) == 0.0

    def test_constant_embedding_terms_cancel(self, tiny_dataset):
        # every instance is the same vector v: alignment ||v||^2 cancels
        # uniformity -||v||^2 exactly, whatever pairs get sampled
        v = np.array([1.5, -2.0, 0.5, 3.0])
        q = np.tile(v, (3, 1))
        d = np.tile(v, (15, 1))
        assert quality_score(tiny_dataset, q, d, seed=9) == pytest.approx(0.0)

    def test_orthonormal_fixture_by_direct_summation(self, tiny_dataset):
        # positives aligned (dot 1), everything else orthogonal; the oracle
        # recomputes both terms by direct summation over the same seeded
        # sample of instance pairs
        from airtran.prng import bulk_below, derive_seed

        dim = 32
        q = np.zeros((3, dim))
        d = np.zeros((15, dim))
        for i in range(3):
            q[i, i] = 1.0
            d[i, i] = 1.0
        for j in range(3, 15):
            d[j, 3 + j] = 1.0  # spans columns 6..17, disjoint from the rest
        seed, per_pos = 0, 2
        got = quality_score(
            tiny_dataset, q, d, seed=seed, pairs_per_positive=per_pos
        )

        instances = np.vstack([q, d])
        n = instances.shape[0]
        count = per_pos * tiny_dataset.pair_count
        a = bulk_below(derive_seed(seed, 1), count, n)
        b = bulk_below(derive_seed(seed, 2), count, n - 1)
        b = b + (b >= a)
        alignment = np.mean(
            [
                instances[g.query_row] @ instances[3 + g.relevant_row]
                for g in tiny_dataset.groups
            ]
        )
        uniformity = -np.mean(
            [instances[x] @ instances[y] for x, y in zip(a, b)]
        )
        assert got == pytest.approx(alignment + uniformity, abs=1e-12)
        assert alignment == 1.0
        # with this seed the sampled pairs all land orthogonal
        assert got == pytest.approx(1.0)

    def test_alignment_term(self, tiny_dataset):
        # orthonormal-ish construction: relevant pairs aligned, random pairs
        # mostly orthogonal, so the score approximates the alignment term
        q = np.zeros((3, 64))
        d = np.zeros((15, 64))
        for i in range(3):
            q[i, i] = 1.0
            d[i, i] = 1.0  # relevant doc i aligned with query i
        for j in range(3, 15):
            d[j, j] = 1.0
        got = quality_score(tiny_dataset, q, d, seed=0, pairs_per_positive=200)
        # alignment = 1.0 exactly; uniformity penalty ~ P(collision) small
        assert 0.8 <= got <= 1.0


class TestPipeline:
    def test_all_off_equals_plain_expected_rank(self, tiny_dataset, tiny_embeddings):
        cfg = ScoreConfig(use_whitening=False, use_adaptive_scaling=False)
        score, _ = airtran_score(tiny_dataset, *tiny_embeddings, config=cfg)
        assert score == expected_rank_score(tiny_dataset, *tiny_embeddings)

    def test_full_pipeline_in_range(self, tiny_dataset, tiny_embeddings):
        score, seconds = airtran_score(tiny_dataset, *tiny_embeddings)
        assert 1 / 3 <= score <= 1.0
        assert seconds >= 0.0

    def test_deterministic(self, tiny_dataset, tiny_embeddings):
        a, _ = airtran_score(tiny_dataset, *tiny_embeddings)
        b, _ = airtran_score(tiny_dataset, *tiny_embeddings)
        assert a == b

    def test_stage_annotation_on_failure(self, tiny_dataset):
        # collapsed embeddings whiten to all-zero features; with lambda_rel=0
        # the scaling stage must fail and say which stage it was
        q = np.ones((3, 4))
        d = np.ones((15, 4))
        cfg = ScoreConfig(lambda_rel=0.0)
        with pytest.raises(SingularGramError, match="adaptive scaling:"):
            airtran_score(tiny_dataset, q, d, config=cfg)

    def test_collapsed_model_with_default_ridge_scores_floor(self, tiny_dataset):
        q = np.ones((3, 4))
        d = np.ones((15, 4))
        score, _ = airtran_score(tiny_dataset, q, d)
        assert score == pytest.approx(1 / 3)

    def test_cosine_similarity_config(self, tiny_dataset, tiny_embeddings):
        cfg = ScoreConfig(similarity="cosine", use_adaptive_scaling=False)
        score, _ = airtran_score(tiny_dataset, *tiny_embeddings, config=cfg)
        assert 1 / 3 <= score <= 1.0

    def test_bad_similarity_rejected(self):
        with pytest.raises(ConfigError, match="similarity"):
            ScoreConfig(similarity="euclidean")

    def test_bad_epsilon_rejected(self):
        with pytest.raises(ConfigError, match="epsilon_rel"):
            ScoreConfig(epsilon_rel=0.0)


class TestReports:
    def test_sorted_by_score_then_id(self):
        rep = make_report(
            "ds", 3, 0, "airtran", {},
            [("m-b", 0.5, None), ("m-a", 0.9, None), ("m-c", 0.5, None)],
        )
        assert [s.model_id for s in rep.scores] == ["m-a", "m-b", "m-c"]
        assert rep.best_model == "m-a"

    def test_json_roundtrip(self):
        rep = make_report(
            "pool/x", 5, 17, "qtran",
            {"use_whitening": True},
            [("m-a", 0.75, 0.125), ("m-b", 0.25, None)],
        )
        back = read_report(io.StringIO(rep.to_json()))
        assert back.dataset == "pool/x"
        assert back.k == 5
        assert back.seed == 17
        assert back.method == "qtran"
        assert back.config == {"use_whitening": True}
        assert back.scores == rep.scores

    def test_json_shape(self):
        import json as _json

        rep = make_report("d", 2, 0, "airtran", {"lambda_rel": 1e-6},
                          [("m", 1.0, None)])
        obj = _json.loads(rep.to_json())
        assert set(obj) == {"dataset", "k", "seed", "config", "scores"}
        assert obj["config"]["method"] == "airtran"
        assert obj["scores"][0] == {"model": "m", "score": 1.0, "seconds": None}
