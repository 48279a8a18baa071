"""Command-line interface.

Encode a text file (one text per line) with a pre-trained model and write
an airtran embedding matrix:

    embed-export --model MODEL --input texts.txt --role query --out queries.mat

Exit codes: 0 success, 1 unexpected failure (including out-of-memory, with
advice on stderr), 2 missing input file or unloadable model, 3 invalid
input contents, 6 invalid flag value.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import BatchMemoryError, InvalidJobError, ModelLoadError
from .exporter import ROLES, ExportJob, export_embeddings

EXIT_UNEXPECTED = 1
EXIT_MISSING_FILE = 2
EXIT_BAD_INPUT = 3
EXIT_BAD_FLAG = 6


def read_texts(path: Path) -> list[str]:
    """One text per line; the trailing newline is not part of the text.

    Blank lines are kept as empty texts so matrix row i always corresponds
    to line i of the input.
    """
    texts = path.read_text(encoding="utf-8").splitlines()
    if not texts:
        raise InvalidJobError(f"{path}: input file contains no texts")
    return texts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="encode texts with a pre-trained model into an "
        "airtran embedding matrix",
    )
    parser.add_argument("--model", required=True, help="model directory or hub name")
    parser.add_argument("--input", required=True, help="text file, one text per line")
    parser.add_argument("--role", required=True, choices=ROLES,
                        help="which side of the dual encoder the rows feed")
    parser.add_argument("--out", required=True, help="output matrix file")
    parser.add_argument("--batch-size", type=int, default=32,
                        help="texts per forward pass (default 32)")
    parser.add_argument("--max-length", type=int, default=256,
                        help="truncate texts at this many tokens (default 256)")
    return parser


def run(args) -> int:
    if args.batch_size < 1:
        print(f"error: --batch-size must be >= 1, got {args.batch_size}",
              file=sys.stderr)
        return EXIT_BAD_FLAG
    if args.max_length < 1:
        print(f"error: --max-length must be >= 1, got {args.max_length}",
              file=sys.stderr)
        return EXIT_BAD_FLAG
    texts = read_texts(Path(args.input))
    job = ExportJob(
        model_id=args.model,
        texts=tuple(texts),
        role=args.role,
        output_path=Path(args.out),
        batch_size=args.batch_size,
        max_length=args.max_length,
    )
    rows = export_embeddings(job)
    print(
        f"wrote {rows.shape[0]} {args.role} embeddings "
        f"({rows.shape[0]}x{rows.shape[1]}) to {args.out}",
        file=sys.stderr,
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        from transformers.utils import logging as hf_logging

        hf_logging.disable_progress_bar()
    except Exception:
        pass  # cosmetic only; progress bars do not affect the output files
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except InvalidJobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except BatchMemoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
