"""Transferability scoring: the full pipeline and its baselines.

The main statistic is the expected rank score.  For each candidate group the
relevant document's pessimistic rank among the k candidates is

    rank = 1 + |{ j != relevant : s_j >= s_rel }|

(ties count against the model), and the dataset score is the mean reciprocal
rank over queries:

    S = (1/Q) sum_q 1 / rank_q.

S is invariant under any strictly increasing transform of the scores, which
is what makes it comparable across models with wildly different score scales.

The full pipeline whitens the embeddings, fits adaptive scaling weights on
the Hadamard products, and evaluates S under the weighted dot product.  Both
transform stages can be disabled independently for ablations.  Two baseline
scorers live here as well: a softmax log-likelihood diagnostic and an
alignment/uniformity quality score.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

import numpy as np

from .adascale import hadamard_pairs, solve_scaling
from .data import RankingDataset
from .errors import (
    AirtranError,
    ConfigError,
    EmptyDatasetError,
    NumericError,
    ShapeError,
)
from .prng import bulk_below, derive_seed
from .whitening import apply_whitening, fit_whitening

_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class ScoreConfig:
    """Pipeline switches and regularization strengths."""

    use_whitening: bool = True
    use_adaptive_scaling: bool = True
    epsilon_rel: float = 1e-6
    lambda_rel: float = 1e-6
    similarity: str = "dot"

    def __post_init__(self):
        if self.similarity not in ("dot", "cosine"):
            raise ConfigError(
                f'similarity must be "dot" or "cosine", got {self.similarity!r}'
            )
        if self.epsilon_rel <= 0:
            raise ConfigError(f"epsilon_rel must be positive, got {self.epsilon_rel}")
        if self.lambda_rel < 0:
            raise ConfigError(f"lambda_rel must be non-negative, got {self.lambda_rel}")

    def as_dict(self) -> dict:
        return {
            "use_whitening": self.use_whitening,
            "use_adaptive_scaling": self.use_adaptive_scaling,
            "epsilon_rel": self.epsilon_rel,
            "lambda_rel": self.lambda_rel,
            "similarity": self.similarity,
        }


def rank_of_relevant(scores: np.ndarray, relevant_index: int) -> int:
    """Pessimistic rank of the relevant candidate under descending scores.

    Equal scores rank the relevant document below the tied competitor, so a
    constant score vector yields rank k: a model that cannot separate the
    candidates gets no benefit of the doubt.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] < 1:
        raise ShapeError(f"scores must be a non-empty vector, got shape {s.shape}")
    if not 0 <= relevant_index < s.shape[0]:
        raise ShapeError(
            f"relevant index {relevant_index} outside [0, {s.shape[0]})"
        )
    if not np.isfinite(s).all():
        raise NumericError("non-finite candidate scores")
    return int(np.sum(s >= s[relevant_index]))


def _pair_scores(
    dataset: RankingDataset,
    query_emb: np.ndarray,
    doc_emb: np.ndarray,
    weights: np.ndarray | None,
) -> np.ndarray:
    q = np.asarray(query_emb, dtype=np.float64)
    d = np.asarray(doc_emb, dtype=np.float64)
    if q.ndim != 2 or d.ndim != 2 or q.shape[1] != d.shape[1]:
        raise ShapeError(
            f"embedding matrices must be 2-D with equal dims, got "
            f"{q.shape} and {d.shape}"
        )
    dataset.check_bounds(q.shape[0], d.shape[0])
    if weights is None:
        w = np.ones(q.shape[1], dtype=np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (q.shape[1],):
            raise ShapeError(
                f"weights shape {w.shape} does not match dimension {q.shape[1]}"
            )
    scores = (q[dataset.query_rows] * d[dataset.doc_rows]) @ w
    if not np.isfinite(scores).all():
        raise NumericError("pair scoring produced non-finite values")
    return scores


def group_ranks(
    dataset: RankingDataset,
    query_emb: np.ndarray,
    doc_emb: np.ndarray,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Pessimistic rank of the relevant document in every group, shape (Q,)."""
    if dataset.query_count == 0:
        raise EmptyDatasetError("dataset has no candidate groups")
    blocks = _pair_scores(dataset, query_emb, doc_emb, weights).reshape(
        dataset.query_count, dataset.k
    )
    rel = blocks[np.arange(dataset.query_count), dataset.relevant_offsets]
    return np.sum(blocks >= rel[:, None], axis=1)


def expected_rank_score(
    dataset: RankingDataset,
    query_emb: np.ndarray,
    doc_emb: np.ndarray,
    weights: np.ndarray | None = None,
) -> float:
    """Mean reciprocal pessimistic rank over all candidate groups."""
    ranks = group_ranks(dataset, query_emb, doc_emb, weights)
    return float(np.mean(1.0 / ranks))


def group_log_likelihood(
    probabilities: np.ndarray, relevant_index: int, mode: str = "relevant"
) -> float:
    """Log-likelihood of one group's relevance outcome.

    mode "relevant": natural log of the relevant document's probability.
    mode "document": every document contributes the base-10 log of the
    probability assigned to its true label, log10(p_rel) plus
    log10(1 - p_j) over the irrelevant candidates.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 1:
        raise ShapeError(f"probabilities must be a non-empty vector, got {p.shape}")
    if not 0 <= relevant_index < p.shape[0]:
        raise ShapeError(f"relevant index {relevant_index} outside [0, {p.shape[0]})")
    if not np.isfinite(p).all() or (p <= 0).any() or (p > 1).any():
        raise NumericError("probabilities must lie in (0, 1]")
    if mode == "relevant":
        return float(np.log(p[relevant_index]))
    if mode == "document":
        rest = np.delete(p, relevant_index)
        # A candidate at exactly probability 1 floors instead of -inf.
        terms = np.log10(np.maximum(1.0 - rest, _TINY))
        return float(np.log10(p[relevant_index]) + terms.sum())
    raise ConfigError(f'mode must be "relevant" or "document", got {mode!r}')


def log_likelihood_score(
    dataset: RankingDataset,
    query_emb: np.ndarray,
    doc_emb: np.ndarray,
    mode: str = "relevant",
) -> float:
    """Softmax log-likelihood baseline on raw dot-product scores.

    Per group, candidate scores go through a max-shifted softmax and the
    group log-likelihood (see `group_log_likelihood`) is averaged over
    queries.  Always non-positive.
    """
    if mode not in ("relevant", "document"):
        raise ConfigError(f'mode must be "relevant" or "document", got {mode!r}')
    if dataset.query_count == 0:
        raise EmptyDatasetError("dataset has no candidate groups")
    blocks = _pair_scores(dataset, query_emb, doc_emb, None).reshape(
        dataset.query_count, dataset.k
    )
    shifted = blocks - blocks.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)
    rows = np.arange(dataset.query_count)
    rel = np.maximum(p[rows, dataset.relevant_offsets], _TINY)
    if mode == "relevant":
        return float(np.mean(np.log(rel)))
    mask = np.ones_like(p, dtype=bool)
    mask[rows, dataset.relevant_offsets] = False
    irrelevant_terms = np.where(
        mask, np.log10(np.maximum(1.0 - p, _TINY)), 0.0
    ).sum(axis=1)
    return float(np.mean(np.log10(rel) + irrelevant_terms))


def quality_score(
    dataset: RankingDataset,
    query_emb: np.ndarray,
    doc_emb: np.ndarray,
    weights: np.ndarray | None = None,
    seed: int = 0,
    pairs_per_positive: int = 10,
) -> float:
    """Alignment-plus-uniformity quality of the embedding space.

    Alignment is the mean similarity over the labeled relevant pairs;
    uniformity is the mean negated similarity over `pairs_per_positive *
    pair_count` random instance pairs (distinct indices, seeded) drawn from
    the union of query and document rows.  Higher is better on both terms.
    """
    if dataset.query_count == 0:
        raise EmptyDatasetError("dataset has no candidate groups")
    q = np.asarray(query_emb, dtype=np.float64)
    d = np.asarray(doc_emb, dtype=np.float64)
    pair_scores = _pair_scores(dataset, q, d, weights)
    positive = pair_scores[dataset.labels == 1]
    alignment = float(positive.mean())

    instances = np.vstack([q, d])
    n = instances.shape[0]
    count = pairs_per_positive * dataset.pair_count
    a = bulk_below(derive_seed(seed, 1), count, n)
    b = bulk_below(derive_seed(seed, 2), count, n - 1)
    b = b + (b >= a)  # skip the diagonal: never pair an instance with itself
    w = np.ones(q.shape[1]) if weights is None else np.asarray(weights, np.float64)
    random_sims = (instances[a] * instances[b]) @ w
    if not np.isfinite(random_sims).all():
        raise NumericError("quality scoring produced non-finite values")
    return alignment + float(np.mean(-random_sims))


@contextmanager
def _stage(name: str):
    """Annotate library errors with the pipeline stage that raised them."""
    try:
        yield
    except AirtranError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def prepare_features(
    dataset: RankingDataset,
    query_emb: np.ndarray,
    doc_emb: np.ndarray,
    config: ScoreConfig = ScoreConfig(),
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Run the transform stages; returns (query_emb', doc_emb', weights).

    Whitening fits on the pair-expanded stack (one query row and one document
    row per pair, so queries weigh in proportionally to their candidates) and
    maps both matrices.  Adaptive scaling then fits on the Hadamard products.
    Either stage can be switched off; weights is None when scaling is off.
    """
    if dataset.query_count == 0:
        raise EmptyDatasetError("dataset has no candidate groups")
    q = np.asarray(query_emb, dtype=np.float64)
    d = np.asarray(doc_emb, dtype=np.float64)
    if q.ndim != 2 or d.ndim != 2 or q.shape[1] != d.shape[1]:
        raise ShapeError(
            f"embedding matrices must be 2-D with equal dims, got "
            f"{q.shape} and {d.shape}"
        )
    dataset.check_bounds(q.shape[0], d.shape[0])

    if config.use_whitening:
        with _stage("whitening"):
            stacked = np.vstack([q[dataset.query_rows], d[dataset.doc_rows]])
            model = fit_whitening(stacked, epsilon_rel=config.epsilon_rel)
            q = apply_whitening(model, q)
            d = apply_whitening(model, d)

    if config.similarity == "cosine":
        q = _normalize_rows(q)
        d = _normalize_rows(d)

    weights = None
    if config.use_adaptive_scaling:
        with _stage("adaptive scaling"):
            features, labels = hadamard_pairs(q, d, dataset)
            weights = solve_scaling(features, labels, lambda_rel=config.lambda_rel).weights
    return q, d, weights


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.where(norms > 0, norms, 1.0)


def airtran_score(
    dataset: RankingDataset,
    query_emb: np.ndarray,
    doc_emb: np.ndarray,
    config: ScoreConfig = ScoreConfig(),
) -> tuple[float, float]:
    """Full pipeline: transforms plus expected rank.  Returns (score, seconds).

    Seconds covers the transform fits and the scoring pass (wall clock); the
    score itself is deterministic for fixed inputs and config.
    """
    start = time.perf_counter()
    q, d, weights = prepare_features(dataset, query_emb, doc_emb, config)
    with _stage("expected rank"):
        score = expected_rank_score(dataset, q, d, weights)
    return score, time.perf_counter() - start


def quality_transferability(
    dataset: RankingDataset,
    query_emb: np.ndarray,
    doc_emb: np.ndarray,
    config: ScoreConfig = ScoreConfig(),
    seed: int = 0,
) -> tuple[float, float]:
    """Quality-score analogue of `airtran_score` (same transforms, Q statistic)."""
    start = time.perf_counter()
    q, d, weights = prepare_features(dataset, query_emb, doc_emb, config)
    with _stage("quality score"):
        score = quality_score(dataset, q, d, weights, seed=seed)
    return score, time.perf_counter() - start


@dataclass(frozen=True)
class ModelScore:
    model_id: str
    score: float
    seconds: float | None = None


@dataclass(frozen=True)
class TransferabilityReport:
    """Scores for every model in a pool against one dataset."""

    dataset: str
    k: int
    seed: int
    method: str
    config: dict = field(default_factory=dict)
    scores: tuple[ModelScore, ...] = ()

    @property
    def best_model(self) -> str:
        return self.scores[0].model_id

    def ranked(self) -> tuple[ModelScore, ...]:
        return self.scores

    def to_json(self) -> str:
        payload = {
            "dataset": self.dataset,
            "k": self.k,
            "seed": self.seed,
            "config": {"method": self.method, **self.config},
            "scores": [
                {"model": s.model_id, "score": s.score, "seconds": s.seconds}
                for s in self.scores
            ],
        }
        return json.dumps(payload, indent=2) + "\n"


def make_report(
    dataset_name: str,
    k: int,
    seed: int,
    method: str,
    config: dict,
    entries: list[tuple[str, float, float | None]],
) -> TransferabilityReport:
    """Assemble a report; entries are sorted by descending score, ties by id."""
    ordered = sorted(entries, key=lambda e: (-e[1], e[0]))
    return TransferabilityReport(
        dataset=dataset_name,
        k=k,
        seed=seed,
        method=method,
        config=config,
        scores=tuple(ModelScore(m, s, t) for m, s, t in ordered),
    )


def read_report(source: str | Path | IO[str]) -> TransferabilityReport:
    if hasattr(source, "read"):
        obj = json.load(source)
    else:
        obj = json.loads(Path(source).read_text(encoding="utf-8"))
    config = dict(obj.get("config", {}))
    method = config.pop("method", "airtran")
    return TransferabilityReport(
        dataset=obj["dataset"],
        k=int(obj["k"]),
        seed=int(obj["seed"]),
        method=method,
        config=config,
        scores=tuple(
            ModelScore(str(s["model"]), float(s["score"]), s.get("seconds"))
            for s in obj["scores"]
        ),
    )
