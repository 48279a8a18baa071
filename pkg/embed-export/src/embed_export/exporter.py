"""Encode texts with a pre-trained transformer into embedding matrices.

One text becomes one row: tokenize (truncating at `max_length`), run the
model in eval mode under no_grad, and mean-pool the last layer's hidden
states over non-padding positions.  Rows keep input order.  Compute stays
in the model's own precision; float32 is the storage dtype, applied at the
numpy boundary.

Masked mean is used for every architecture, including decoder-only models,
where the padding convention is less standardized: positions the attention
mask marks as padding never enter the mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .errors import BatchMemoryError, InvalidJobError, ModelLoadError
from .matfile import write_matrix_file

ROLES = ("query", "document")


@dataclass(frozen=True)
class ExportJob:
    """One export request: encode `texts` with `model_id`, write `output_path`.

    `role` records which side of the dual encoder the rows feed (it does not
    change the encoding; both sides use the same pooling).
    """

    model_id: str
    texts: tuple[str, ...]
    role: str
    output_path: Path
    batch_size: int = 32
    max_length: int = 256

    def __post_init__(self):
        object.__setattr__(self, "texts", tuple(self.texts))
        object.__setattr__(self, "output_path", Path(self.output_path))
        if not self.texts:
            raise InvalidJobError("texts must be non-empty")
        if any(not isinstance(t, str) for t in self.texts):
            raise InvalidJobError("every text must be a string")
        if self.role not in ROLES:
            raise InvalidJobError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.batch_size < 1:
            raise InvalidJobError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_length < 1:
            raise InvalidJobError(f"max_length must be >= 1, got {self.max_length}")


def load_encoder(model_id: str):
    """Load tokenizer and model; any failure surfaces as ModelLoadError.

    `model_id` is a local directory or a hub name.  The model comes back in
    eval mode (dropout off) so encoding the same text twice gives the same row.
    """
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
    except Exception as exc:
        raise ModelLoadError(f"cannot load {model_id!r}: {exc}") from exc
    model.eval()
    return tokenizer, model


def mean_pool(last_hidden: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
    """Mean of token states over non-padding positions, per sequence.

    `last_hidden` is (batch, tokens, hidden); `attention_mask` is
    (batch, tokens) with 1 on real tokens and 0 on padding.  A sequence
    with no real tokens (standard tokenizers never emit one) divides by 1
    instead of 0 and comes out as zeros.
    """
    mask = attention_mask.to(last_hidden.dtype).unsqueeze(-1)
    summed = (last_hidden * mask).sum(dim=1)
    counts = mask.sum(dim=1).clamp(min=1.0)
    return summed / counts


def encode_texts(
    tokenizer,
    model,
    texts,
    *,
    batch_size: int = 32,
    max_length: int = 256,
) -> np.ndarray:
    """Encode texts into a (len(texts), hidden) float32 array, batch by batch."""
    chunks = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            batch = list(texts[start : start + batch_size])
            enc = tokenizer(
                batch,
                padding=True,
                truncation=True,
                max_length=max_length,
                return_tensors="pt",
            )
            try:
                out = model(**enc)
            except RuntimeError as exc:
                if "memory" in str(exc).lower():
                    raise BatchMemoryError(
                        f"batch of {len(batch)} texts ran out of memory; "
                        f"retry with a smaller batch size"
                    ) from exc
                raise
            mask = enc.get("attention_mask")
            if mask is None:
                mask = torch.ones(enc["input_ids"].shape[:2], dtype=torch.long)
            pooled = mean_pool(out.last_hidden_state, mask)
            chunks.append(pooled.to(torch.float32).cpu().numpy())
    return np.vstack(chunks)


def export_embeddings(job: ExportJob) -> np.ndarray:
    """Run one job end to end; returns the rows written to `job.output_path`."""
    tokenizer, model = load_encoder(job.model_id)
    rows = encode_texts(
        tokenizer,
        model,
        job.texts,
        batch_size=job.batch_size,
        max_length=job.max_length,
    )
    write_matrix_file(rows, job.output_path)
    return rows
