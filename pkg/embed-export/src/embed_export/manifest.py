"""Manifest plumbing: JSON-lines files the core's read_manifest accepts.

One `{"q": int, "d": int, "y": 0|1}` object per line, compact, LF-separated,
key order q,d,y — byte-identical to what the core itself writes.  Schema is
checked per pair here; grouping rules (contiguous queries, exactly one
relevant per group, uniform k) are the reader's contract and are validated
there.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import IO, Iterable

from .errors import PairSchemaError


def export_manifest(
    pairs: Iterable[tuple[int, int, int]], dest: str | Path | IO[str]
) -> None:
    """Write (query_row, doc_row, label) triples as candidate-manifest lines.

    `dest` is a path (written atomically) or a text stream.  All pairs are
    validated before a single byte is written, so a schema error never
    leaves a partial file behind.
    """
    lines = []
    for n, pair in enumerate(pairs):
        try:
            q, d, y = pair
        except (TypeError, ValueError):
            raise PairSchemaError(
                f"pair {n}: expected (query_row, doc_row, label), got {pair!r}"
            )
        for name, v in (("query_row", q), ("doc_row", d), ("label", y)):
            if not isinstance(v, int) or isinstance(v, bool):
                raise PairSchemaError(f"pair {n}: {name} must be an integer, got {v!r}")
        if y not in (0, 1):
            raise PairSchemaError(f"pair {n}: label must be 0 or 1, got {y}")
        if q < 0 or d < 0:
            raise PairSchemaError(f"pair {n}: negative row index ({q}, {d})")
        lines.append('{"q":%d,"d":%d,"y":%d}\n' % (q, d, y))
    if not lines:
        raise PairSchemaError("no pairs: a manifest must contain at least one line")

    text = "".join(lines)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        _atomic_write_text(Path(dest), text)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8", newline="\n")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
