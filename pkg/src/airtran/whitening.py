"""Isotropization of embedding spaces by whitening.

Sentence embeddings from pre-trained encoders occupy anisotropic cones where
raw dot products are dominated by a few high-variance directions.  Fitting a
whitening transform on the pair-expanded embedding rows

    mean     mu    = column mean
    cov      Sigma = (1/(n-1)) (E - mu)^T (E - mu) + eps I
    factor   W     = U diag(lambda)^(-1/2),  Sigma = U diag(lambda) U^T

and mapping x -> (x - mu) W gives features with identity covariance, so every
direction contributes equally to similarity.  The ridge eps is relative to
the mean eigenvalue, eps = epsilon_rel * trace(Sigma_0) / D, which keeps the
conditioning floor scale-invariant.

Eigenvectors are ordered by descending eigenvalue and sign-fixed so that each
column's largest-magnitude entry is positive; eigendecompositions are only
unique up to column sign, and pinning it keeps refits bit-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateInputError, NumericError, ShapeError
from .matrixio import read_matrix, write_matrix_atomic

#: Rows per accumulation block; bounds peak memory for very tall inputs.
_CHUNK_ROWS = 8192


@dataclass(frozen=True)
class WhiteningModel:
    """Fitted whitening: x -> (x - mean) @ transform.

    `eigenvalues` are the ridged covariance eigenvalues in descending order;
    `epsilon_used` is the absolute ridge actually added.
    """

    mean: np.ndarray
    transform: np.ndarray
    eigenvalues: np.ndarray
    epsilon_used: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _kahan_accumulate(blocks) -> np.ndarray:
    """Sum an iterable of equal-shaped float64 arrays with Kahan compensation.

    Plain left-to-right accumulation loses digits once the running total
    dwarfs the increments (hundreds of thousands of rows); compensated
    summation keeps the error independent of the block count.
    """
    total = None
    comp = None
    for block in blocks:
        if total is None:
            total = block.copy()
            comp = np.zeros_like(block)
            continue
        y = block - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def fit_whitening(stacked: np.ndarray, epsilon_rel: float = 1e-6) -> WhiteningModel:
    """Fit mean and whitening factor on stacked embedding rows.

    `stacked` is the pair-expanded matrix (one query row and one document row
    per pair, queries duplicated across their pairs), shape (n, D) with
    n >= 2.  `epsilon_rel` must be positive.
    """
    if epsilon_rel <= 0:
        raise ConfigError(f"epsilon_rel must be positive, got {epsilon_rel}")
    x = np.asarray(stacked, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"expected 2-D input, got shape {x.shape}")
    n, dim = x.shape
    if n < 2:
        raise DegenerateInputError(
            f"whitening needs at least 2 rows to estimate covariance, got {n}"
        )
    if not np.isfinite(x).all():
        raise NumericError("non-finite values in whitening input")

    chunks = [x[i : i + _CHUNK_ROWS] for i in range(0, n, _CHUNK_ROWS)]
    mean = _kahan_accumulate(c.sum(axis=0) for c in chunks) / n
    gram = _kahan_accumulate((c - mean).T @ (c - mean) for c in chunks)
    cov = gram / (n - 1)

    trace = float(np.trace(cov))
    # A constant input has zero trace; fall back to an absolute floor so the
    # ridge (and the invariant eps > 0) survives the degenerate case.
    eps = epsilon_rel * (trace / dim if trace > 0 else 1.0)
    cov[np.diag_indices(dim)] += eps

    values, vectors = np.linalg.eigh(cov)
    if not np.isfinite(values).all() or not np.isfinite(vectors).all():
        raise NumericError("eigendecomposition produced non-finite output")
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = vectors[:, order]
    anchor = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[anchor, np.arange(dim)])
    vectors = vectors * signs
    values = np.maximum(values, eps)  # ridge is the spectral floor by construction

    transform = vectors / np.sqrt(values)
    return WhiteningModel(
        mean=mean, transform=transform, eigenvalues=values, epsilon_used=eps
    )


def apply_whitening(model: WhiteningModel, matrix: np.ndarray) -> np.ndarray:
    """Map rows into the whitened space: (X - mean) @ transform."""
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise ShapeError(
            f"expected shape (*, {model.dim}), got {x.shape}"
        )
    out = (x - model.mean) @ model.transform
    if not np.isfinite(out).all():
        raise NumericError("whitening produced non-finite output")
    return out


def save_whitening(model: WhiteningModel, prefix: str | Path) -> None:
    """Persist as <prefix>.mean.mat, <prefix>.transform.mat, <prefix>.json.

    Matrix files are float32, so a reloaded model reproduces transforms only
    to float32 precision; refit instead of reloading when full precision
    matters.
    """
    prefix = Path(prefix)
    write_matrix_atomic(model.mean.reshape(1, -1), _part(prefix, "mean.mat"))
    write_matrix_atomic(model.transform, _part(prefix, "transform.mat"))
    meta = {
        "epsilon_used": model.epsilon_used,
        "eigenvalues": [float(v) for v in model.eigenvalues],
    }
    _part(prefix, "json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )


def _part(prefix: Path, ext: str) -> Path:
    return prefix.with_name(f"{prefix.name}.{ext}")


def load_whitening(prefix: str | Path) -> WhiteningModel:
    prefix = Path(prefix)
    mean = read_matrix(_part(prefix, "mean.mat")).astype(np.float64)[0]
    transform = read_matrix(_part(prefix, "transform.mat")).astype(np.float64)
    meta = json.loads(_part(prefix, "json").read_text(encoding="utf-8"))
    return WhiteningModel(
        mean=mean,
        transform=transform,
        eigenvalues=np.asarray(meta["eigenvalues"], dtype=np.float64),
        epsilon_used=float(meta["epsilon_used"]),
    )
