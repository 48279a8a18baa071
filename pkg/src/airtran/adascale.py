"""Adaptive dimension scaling fit in closed form.

After whitening, every feature direction has unit variance but not equal
task relevance.  Scaling dimension r by gamma_r turns the similarity into

    s(q, d) = sum_r gamma_r^2 q_r d_r = w . (q * d),   w_r = gamma_r^2,

which is linear in the per-pair Hadamard products m_i = q_i * d_i.  Fitting
w by ridge regression of the binary relevance labels on those products has
the closed-form normal-equation solution

    (M^T M + lambda I) w = M^T y,

with lambda = lambda_rel * trace(M^T M) / D so the ridge tracks the feature
scale.  The solve works in w directly; an optimum with negative components
simply means anti-correlated dimensions get a negative vote, which the dot
product handles and a real-valued gamma could not.

Labels enter raw (0/1, no centering or normalization); the downstream
expected-rank statistic only compares scores within a candidate group, so
any affine change of y merely shifts and scales all scores in a group
together and the fitted solution is used as-is.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .data import RankingDataset
from .errors import ConfigError, NumericError, ShapeError, SingularGramError
from .matrixio import read_matrix, write_matrix_atomic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScalingWeights:
    """Fitted per-dimension weights w = gamma^2 plus solve diagnostics."""

    weights: np.ndarray
    lambda_used: float
    residual_norm: float
    solver: str  # "cholesky", "eigh", or "null" (all-zero features)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


def hadamard_pairs(
    query_emb: np.ndarray, doc_emb: np.ndarray, dataset: RankingDataset
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair elementwise products and labels, aligned to the dataset.

    Returns (features, labels): features[i] = query_emb[q_i] * doc_emb[d_i]
    for pair i in manifest order, labels float64 in {0.0, 1.0}.
    """
    q = np.asarray(query_emb, dtype=np.float64)
    d = np.asarray(doc_emb, dtype=np.float64)
    if q.ndim != 2 or d.ndim != 2:
        raise ShapeError("embedding matrices must be 2-D")
    if q.shape[1] != d.shape[1]:
        raise ShapeError(
            f"query and document dimensions differ: {q.shape[1]} vs {d.shape[1]}"
        )
    dataset.check_bounds(q.shape[0], d.shape[0])
    features = q[dataset.query_rows] * d[dataset.doc_rows]
    labels = dataset.labels.astype(np.float64)
    return features, labels


def solve_scaling(
    features: np.ndarray, labels: np.ndarray, lambda_rel: float = 1e-6
) -> ScalingWeights:
    """Solve the ridge normal equations for the scaling weights.

    Tries Cholesky first (the Gram matrix is symmetric positive definite once
    the ridge is in); falls back to an eigendecomposition solve if
    factorization fails, and raises SingularGramError when lambda is zero and
    the spectrum is numerically singular.
    """
    if lambda_rel < 0:
        raise ConfigError(f"lambda_rel must be non-negative, got {lambda_rel}")
    m = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"features must be 2-D, got shape {m.shape}")
    if y.shape != (m.shape[0],):
        raise ShapeError(
            f"labels shape {y.shape} does not match {m.shape[0]} feature rows"
        )
    if m.shape[0] < 1:
        raise ShapeError("need at least one feature row")
    if not (np.isfinite(m).all() and np.isfinite(y).all()):
        raise NumericError("non-finite values in scaling inputs")

    dim = m.shape[1]
    gram = m.T @ m
    rhs = m.T @ y
    trace = float(np.trace(gram))
    if trace == 0.0:
        # Features identically zero (e.g. a collapsed embedding model after
        # whitening).  The minimum-norm solution of 0 w = 0 is w = 0; with no
        # ridge requested we cannot distinguish that from a genuine rank bug.
        if lambda_rel == 0.0:
            raise SingularGramError(
                "Gram matrix is zero; pass lambda_rel > 0 to accept the "
                "degenerate zero solution"
            )
        return ScalingWeights(
            weights=np.zeros(dim),
            lambda_used=0.0,
            residual_norm=float(np.linalg.norm(y)),
            solver="null",
        )
    lam = lambda_rel * trace / dim
    a = gram + lam * np.eye(dim)

    solver = "cholesky"
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
        w = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    except scipy.linalg.LinAlgError:
        solver = "eigh"
        values, vectors = np.linalg.eigh(a)
        floor = max(values.max(), 0.0) * dim * np.finfo(np.float64).eps
        if values.min() <= floor:
            raise SingularGramError(
                "Gram matrix is numerically singular; pass lambda_rel > 0 "
                "to regularize"
            ) from None
        w = vectors @ ((vectors.T @ rhs) / values)
    logger.debug("scaling solve used %s path (lambda=%.3e)", solver, lam)

    if not np.isfinite(w).all():
        raise NumericError("scaling solve produced non-finite weights")
    residual = float(np.linalg.norm(m @ w - y))
    return ScalingWeights(
        weights=w, lambda_used=lam, residual_norm=residual, solver=solver
    )


def scaling_loss(
    features: np.ndarray, labels: np.ndarray, weights: np.ndarray, lam: float
) -> float:
    """Ridge objective ||M w - y||^2 + lam ||w||^2 at the given weights."""
    m = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    r = m @ w - y
    return float(r @ r + lam * (w @ w))


def scaling_gradient(
    features: np.ndarray, labels: np.ndarray, weights: np.ndarray, lam: float
) -> np.ndarray:
    """Gradient of the ridge objective: 2 M^T (M w - y) + 2 lam w."""
    m = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    return 2.0 * (m.T @ (m @ w - y)) + 2.0 * lam * w


def weighted_score(query_vec: np.ndarray, doc_vec: np.ndarray, weights: np.ndarray) -> float:
    """Similarity under the fitted scaling: sum_r w_r q_r d_r."""
    q = np.asarray(query_vec, dtype=np.float64)
    d = np.asarray(doc_vec, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if q.shape != d.shape or q.shape != w.shape or q.ndim != 1:
        raise ShapeError(
            f"expected matching 1-D shapes, got {q.shape}, {d.shape}, {w.shape}"
        )
    return float(np.dot(w, q * d))


def save_scaling(scaling: ScalingWeights, prefix: str | Path) -> None:
    """Persist as <prefix>.weights.mat (1 x D, float32) and <prefix>.json."""
    prefix = Path(prefix)
    write_matrix_atomic(scaling.weights.reshape(1, -1), _part(prefix, "weights.mat"))
    meta = {
        "lambda_used": scaling.lambda_used,
        "residual_norm": scaling.residual_norm,
        "solver": scaling.solver,
    }
    _part(prefix, "json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )


def _part(prefix: Path, ext: str) -> Path:
    return prefix.with_name(f"{prefix.name}.{ext}")


def load_scaling(prefix: str | Path) -> ScalingWeights:
    prefix = Path(prefix)
    weights = read_matrix(_part(prefix, "weights.mat")).astype(np.float64)[0]
    meta = json.loads(_part(prefix, "json").read_text(encoding="utf-8"))
    return ScalingWeights(
        weights=weights,
        lambda_used=float(meta["lambda_used"]),
        residual_norm=float(meta["residual_norm"]),
        solver=str(meta["solver"]),
    )
