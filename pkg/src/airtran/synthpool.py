"""Synthetic model pools with known transferability ordering.

Real validation of a transferability estimator needs dozens of fine-tuned
models; this generator fakes the pool in seconds while keeping the ground
truth exact.  The recipe:

* Every query q gets a latent topic vector z_q ~ N(0, I_D).  Its relevant
  document shares that latent exactly; irrelevant documents get independent
  latents.
* Model i observes the latents through noise of strength sigma_i: its
  embedding of item x is z_x + sigma_i * n, n ~ N(0, I_D) drawn fresh per
  item and model.  Ground-truth quality is T_i = 1 / (1 + sigma_i), so the
  noise ordering is the quality ordering.
* With anisotropy a > 0, model i's embeddings are additionally mapped
  through e -> e @ (I + a G_i) + a m_i, the same distortion for queries and
  documents of one model, fixed per model, leaving the truth untouched.
  G_i is a low-rank gaussian spike (see `_distortion`) rather
  than a dense iid draw: real anisotropy concentrates variance in a few
  entangled nuisance directions, and that concentration is what breaks raw
  dot-product rankings.  A dense iid G_i has a flat Marchenko-Pastur
  spectrum that leaves rankings essentially intact (the trace term
  dominates the Frobenius term at any strength), so it cannot reproduce
  the isotropization effect this generator exists to exercise.  The shift
  a m_i biases the cloud away from the origin; centering removes it.
* Optionally the last `uninformative_dims` latent dimensions of each
  relevant document are redrawn independently, making those dimensions
  noise even at sigma = 0; adaptive scaling can discover and downweight
  them, plain whitening cannot.

Everything is derived from `seed` through fixed sub-stream derivations, so a
pool is bit-reproducible across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (
    ModelPoolTruth,
    RankingDataset,
    sample_candidates,
    write_manifest,
    write_truth,
)
from .errors import ConfigError
from .matrixio import write_matrix_atomic
from .prng import bulk_gaussian, derive_seed


def default_noise_levels(
    model_count: int, low: float = 1.0, high: float = 3.0
) -> tuple[float, ...]:
    """Geometrically spaced noise strengths spanning easy to hard recovery.

    The range is tuned for latent dimension around 32: well below ~1 every
    model ranks its relevant documents first and the pool saturates; above
    ~3-4 the signal starts to drown for all models alike.
    """
    if model_count < 2:
        raise ConfigError(f"need at least 2 models, got {model_count}")
    return tuple(float(s) for s in np.geomspace(low, high, model_count))


@dataclass(frozen=True)
class SynthConfig:
    """Full description of one synthetic pool; two equal configs with equal
    seeds generate bit-identical pools."""

    model_count: int = 20
    query_count: int = 500
    candidate_size: int = 10
    dim: int = 32
    noise_levels: tuple[float, ...] = ()
    anisotropy_strength: float = 0.0
    uninformative_dims: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.model_count < 2:
            raise ConfigError(f"model_count must be >= 2, got {self.model_count}")
        if self.query_count < 1:
            raise ConfigError(f"query_count must be >= 1, got {self.query_count}")
        if self.candidate_size < 2:
            raise ConfigError(
                f"candidate_size must be >= 2, got {self.candidate_size}"
            )
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if not self.noise_levels:
            object.__setattr__(
                self, "noise_levels", default_noise_levels(self.model_count)
            )
        levels = tuple(float(s) for s in self.noise_levels)
        object.__setattr__(self, "noise_levels", levels)
        if len(levels) != self.model_count:
            raise ConfigError(
                f"{len(levels)} noise levels for {self.model_count} models"
            )
        if any(s < 0 for s in levels):
            raise ConfigError("noise levels must be non-negative")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigError("noise levels must be strictly increasing")
        if self.anisotropy_strength < 0:
            raise ConfigError(
                f"anisotropy_strength must be non-negative, "
                f"got {self.anisotropy_strength}"
            )
        if not 0 <= self.uninformative_dims < self.dim:
            raise ConfigError(
                f"uninformative_dims must be in [0, dim), got "
                f"{self.uninformative_dims} with dim {self.dim}"
            )

    def as_dict(self) -> dict:
        return {
            "model_count": self.model_count,
            "query_count": self.query_count,
            "candidate_size": self.candidate_size,
            "dim": self.dim,
            "noise_levels": list(self.noise_levels),
            "anisotropy_strength": self.anisotropy_strength,
            "uninformative_dims": self.uninformative_dims,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(obj: dict) -> "SynthConfig":
        known = {
            "model_count",
            "query_count",
            "candidate_size",
            "dim",
            "noise_levels",
            "anisotropy_strength",
            "uninformative_dims",
            "seed",
        }
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        kwargs = dict(obj)
        if "noise_levels" in kwargs:
            kwargs["noise_levels"] = tuple(kwargs["noise_levels"])
        return SynthConfig(**kwargs)


@dataclass(frozen=True)
class SynthPool:
    """A generated pool: per-model embeddings, shared dataset, exact truth."""

    config: SynthConfig
    models: tuple[tuple[str, np.ndarray, np.ndarray], ...] = field(repr=False)
    dataset: RankingDataset
    truth: ModelPoolTruth


def _gaussians(seed: int, rows: int, cols: int) -> np.ndarray:
    return bulk_gaussian(seed, rows * cols).reshape(rows, cols)


def _distortion(seed: int, dim: int, strength: float) -> np.ndarray:
    """I + a G with G a rank-p gaussian spike, p = max(1, dim // 16).

    G = U V^T / sqrt(p) with U, V gaussian (dim, p): its spectrum carries a
    handful of dominant directions of magnitude ~ a * dim / sqrt(p) over a
    unit identity floor, i.e. severe, invertible-in-principle anisotropy.
    """
    p = max(1, dim // 16)
    u = _gaussians(derive_seed(seed, 0), dim, p)
    v = _gaussians(derive_seed(seed, 1), p, dim)
    return np.eye(dim) + strength * (u @ v) / np.sqrt(p)


def generate_pool(config: SynthConfig) -> SynthPool:
    """Generate embeddings, candidate dataset, and truth for one pool.

    Document rows 0..Q-1 are the relevant documents of queries 0..Q-1; rows
    Q onward are the irrelevant pool (Q * (candidate_size - 1) of them).
    Candidate groups are drawn by the standard sampling protocol over the
    full document pool, excluding each query's own relevant row.
    """
    q_count = config.query_count
    dim = config.dim
    k = config.candidate_size
    irrelevant_count = q_count * (k - 1)
    seed = config.seed

    latent_queries = _gaussians(derive_seed(seed, 0), q_count, dim)
    latent_relevant = latent_queries.copy()
    if config.uninformative_dims:
        u = config.uninformative_dims
        latent_relevant[:, dim - u :] = _gaussians(derive_seed(seed, 2), q_count, u)
    latent_irrelevant = _gaussians(derive_seed(seed, 1), irrelevant_count, dim)
    latent_docs = np.vstack([latent_relevant, latent_irrelevant])
    doc_count = latent_docs.shape[0]

    dataset = sample_candidates(
        [(i, i) for i in range(q_count)],
        doc_pool_size=doc_count,
        k=k,
        seed=derive_seed(seed, 3),
        max_queries=q_count,
    )

    models = []
    truth_entries = []
    for i, sigma in enumerate(config.noise_levels):
        model_id = f"model-{i:02d}"
        q_emb = latent_queries + sigma * _gaussians(
            derive_seed(seed, 4, i, 0), q_count, dim
        )
        d_emb = latent_docs + sigma * _gaussians(
            derive_seed(seed, 4, i, 1), doc_count, dim
        )
        if config.anisotropy_strength > 0:
            a = config.anisotropy_strength
            distortion = _distortion(derive_seed(seed, 5, i), dim, a)
            shift = a * bulk_gaussian(derive_seed(seed, 6, i), dim)
            q_emb = q_emb @ distortion + shift
            d_emb = d_emb @ distortion + shift
        models.append(
            (model_id, q_emb.astype(np.float32), d_emb.astype(np.float32))
        )
        truth_entries.append((model_id, 1.0 / (1.0 + sigma)))

    return SynthPool(
        config=config,
        models=tuple(models),
        dataset=dataset,
        truth=ModelPoolTruth(tuple(truth_entries)),
    )


def save_pool(pool: SynthPool, out_dir: str | Path) -> None:
    """Write the standard pool layout.

    out_dir/
        config.json            generating configuration
        manifest.jsonl         candidate dataset
        truth.json             ground-truth quality per model
        <model_id>/queries.mat
        <model_id>/docs.mat
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for model_id, q_emb, d_emb in pool.models:
        model_dir = out / model_id
        model_dir.mkdir(exist_ok=True)
        write_matrix_atomic(q_emb, model_dir / "queries.mat")
        write_matrix_atomic(d_emb, model_dir / "docs.mat")
    write_manifest(pool.dataset, out / "manifest.jsonl")
    write_truth(pool.truth, out / "truth.json")
    (out / "config.json").write_text(
        json.dumps(pool.config.as_dict(), indent=2) + "\n", encoding="utf-8"
    )
