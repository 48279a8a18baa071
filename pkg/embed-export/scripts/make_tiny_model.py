"""Create a small randomly initialized BERT encoder for offline smoke tests.

The exporter needs some loadable model; this builds one in about a second,
with a letter-level wordpiece vocabulary so any lowercase ASCII text
tokenizes into real pieces instead of [UNK].  Weights are random — the
embeddings mean nothing, but every exporter contract (shapes, pooling,
batching, file format) is exercised for real.
"""

from __future__ import annotations

import argparse
import string
from pathlib import Path

import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
WORDS = ["the", "a", "query", "document", "rank", "model"]


def build_tiny_model(
    dest: Path,
    *,
    hidden_size: int = 32,
    layers: int = 2,
    heads: int = 2,
    seed: int = 0,
) -> Path:
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    pieces = list(string.ascii_lowercase) + list(string.digits)
    vocab = SPECIALS + pieces + ["##" + p for p in pieces] + WORDS
    (dest / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(dest / "vocab.txt"))
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=layers,
        num_attention_heads=heads,
        intermediate_size=4 * hidden_size,
        max_position_embeddings=512,
    )
    torch.manual_seed(seed)
    model = BertModel(config)
    model.save_pretrained(dest)
    tokenizer.save_pretrained(dest)
    return dest


def main() -> int:
    parser = argparse.ArgumentParser(
        description="create a tiny random BERT encoder for offline testing"
    )
    parser.add_argument("dest", help="directory to write the model into")
    parser.add_argument("--hidden-size", type=int, default=32)
    parser.add_argument("--layers", type=int, default=2)
    parser.add_argument("--heads", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = build_tiny_model(
        Path(args.dest),
        hidden_size=args.hidden_size,
        layers=args.layers,
        heads=args.heads,
        seed=args.seed,
    )
    print(f"wrote tiny encoder (hidden {args.hidden_size}, "
          f"{args.layers} layers) to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
