"""Ranking datasets: candidate groups, manifests, sampling, truth files.

A dataset is a list of query-document pairs with binary relevance labels,
organized into per-query candidate groups of uniform size k: exactly one
relevant document plus k-1 sampled irrelevant ones.  The on-disk form is a
JSON-lines manifest, one `{"q": int, "d": int, "y": 0|1}` object per line,
contiguous per query.  Row indices refer to rows of the companion query and
document embedding matrices.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import CapacityError, ManifestError, ShapeError
from .prng import Xoshiro256StarStar

#: Default ceiling on candidate group size; explicit k arguments override it.
DEFAULT_K_LIMIT = 10


@dataclass(frozen=True)
class CandidateGroup:
    """One query's candidate set: the relevant row and the sampled negatives."""

    query_row: int
    relevant_row: int
    irrelevant_rows: tuple[int, ...]

    def __post_init__(self):
        if self.relevant_row in self.irrelevant_rows:
            raise ManifestError(
                f"query {self.query_row}: relevant document "
                f"{self.relevant_row} also listed as irrelevant"
            )
        if len(set(self.irrelevant_rows)) != len(self.irrelevant_rows):
            raise ManifestError(
                f"query {self.query_row}: duplicate irrelevant documents"
            )

    @property
    def size(self) -> int:
        return 1 + len(self.irrelevant_rows)


@dataclass(frozen=True)
class RankingDataset:
    """Uniform-k candidate groups plus flat pair arrays for vectorized scoring.

    `query_rows`, `doc_rows`, `labels` are aligned int64/int8 arrays over all
    pairs in group-major order; `relevant_offsets[g]` is the position of group
    g's relevant pair within its block of k pairs.
    """

    groups: tuple[CandidateGroup, ...]
    k: int
    query_rows: np.ndarray = field(repr=False)
    doc_rows: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    relevant_offsets: np.ndarray = field(repr=False)

    @property
    def query_count(self) -> int:
        return len(self.groups)

    @property
    def pair_count(self) -> int:
        return len(self.query_rows)

    def pairs(self) -> Iterator[tuple[int, int, int]]:
        """Yield (query_row, doc_row, label) in manifest order."""
        for q, d, y in zip(self.query_rows, self.doc_rows, self.labels):
            yield int(q), int(d), int(y)

    def check_bounds(self, query_matrix_rows: int, doc_matrix_rows: int) -> None:
        """Raise ShapeError if any pair indexes past the embedding matrices."""
        if self.pair_count and int(self.query_rows.max()) >= query_matrix_rows:
            raise ShapeError(
                f"manifest references query row {int(self.query_rows.max())} "
                f"but the query matrix has {query_matrix_rows} rows"
            )
        if self.pair_count and int(self.doc_rows.max()) >= doc_matrix_rows:
            raise ShapeError(
                f"manifest references document row {int(self.doc_rows.max())} "
                f"but the document matrix has {doc_matrix_rows} rows"
            )


def dataset_from_pairs(
    pairs: Iterable[tuple[int, int, int]], k_limit: int | None = DEFAULT_K_LIMIT
) -> RankingDataset:
    """Group and validate flat (query_row, doc_row, label) triples.

    Enforces the manifest contract: pairs contiguous per query, exactly one
    label-1 pair per group, uniform group size with 2 <= k (and k <= k_limit
    unless k_limit is None), labels in {0, 1}, non-negative row indices.
    """
    groups: list[CandidateGroup] = []
    qr: list[int] = []
    dr: list[int] = []
    ys: list[int] = []
    offsets: list[int] = []

    current_q: int | None = None
    seen_queries: set[int] = set()
    block: list[tuple[int, int]] = []  # (doc_row, label) for current query

    def close_block() -> None:
        relevant = [d for d, y in block if y == 1]
        if len(relevant) != 1:
            raise ManifestError(
                f"query {current_q}: expected exactly one relevant document, "
                f"found {len(relevant)}"
            )
        irrelevant = tuple(d for d, y in block if y == 0)
        groups.append(CandidateGroup(current_q, relevant[0], irrelevant))
        offsets.append(next(i for i, (_, y) in enumerate(block) if y == 1))

    for n, (q, d, y) in enumerate(pairs):
        if y not in (0, 1):
            raise ManifestError(f"pair {n}: label must be 0 or 1, got {y!r}")
        if q < 0 or d < 0:
            raise ManifestError(f"pair {n}: negative row index ({q}, {d})")
        if q != current_q:
            if q in seen_queries:
                raise ManifestError(
                    f"pair {n}: query {q} reappears after other queries; "
                    f"groups must be contiguous"
                )
            if current_q is not None:
                close_block()
            seen_queries.add(q)
            current_q = q
            block = []
        block.append((d, y))
        qr.append(q)
        dr.append(d)
        ys.append(y)
    if current_q is not None:
        close_block()

    if not groups:
        raise ManifestError("no pairs: dataset must contain at least one group")
    sizes = {g.size for g in groups}
    if len(sizes) != 1:
        raise ManifestError(f"candidate group sizes must be uniform, found {sorted(sizes)}")
    k = sizes.pop()
    if k < 2:
        raise ManifestError(f"candidate size must be at least 2, got {k}")
    if k_limit is not None and k > k_limit:
        raise ManifestError(f"candidate size {k} exceeds limit {k_limit}")

    return RankingDataset(
        groups=tuple(groups),
        k=k,
        query_rows=np.asarray(qr, dtype=np.int64),
        doc_rows=np.asarray(dr, dtype=np.int64),
        labels=np.asarray(ys, dtype=np.int8),
        relevant_offsets=np.asarray(offsets, dtype=np.int64),
    )


_MANIFEST_KEYS = {"q", "d", "y"}


def read_manifest(
    source: str | Path | IO[str], k_limit: int | None = DEFAULT_K_LIMIT
) -> RankingDataset:
    """Parse a JSON-lines manifest into a validated RankingDataset."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = Path(source).read_text(encoding="utf-8").splitlines()

    triples: list[tuple[int, int, int]] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or set(obj) != _MANIFEST_KEYS:
            raise ManifestError(
                f'line {lineno}: expected exactly the keys "q", "d", "y", '
                f"got {sorted(obj) if isinstance(obj, dict) else type(obj).__name__}"
            )
        q, d, y = obj["q"], obj["d"], obj["y"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (q, d, y)):
            raise ManifestError(f"line {lineno}: q, d, y must be integers")
        triples.append((q, d, y))
    try:
        return dataset_from_pairs(triples, k_limit=k_limit)
    except ManifestError as exc:
        raise ManifestError(f"{source if not hasattr(source, 'read') else 'manifest'}: {exc}") from exc


def write_manifest(dataset: RankingDataset, dest: str | Path | IO[str]) -> None:
    """Write JSON lines (LF, UTF-8, key order q,d,y); byte-stable per dataset."""
    out = "".join(
        '{"q":%d,"d":%d,"y":%d}\n' % (q, d, y) for q, d, y in dataset.pairs()
    )
    if hasattr(dest, "write"):
        dest.write(out)
    else:
        _atomic_write_text(Path(dest), out)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8", newline="\n")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def sample_candidates(
    relevant_pairs: Iterable[tuple[int, int]],
    doc_pool_size: int,
    k: int,
    seed: int,
    max_queries: int = 1000,
) -> RankingDataset:
    """Build uniform-k candidate groups from known-relevant (query, doc) pairs.

    Protocol, fully determined by `seed`:

    1. Queries (in first-appearance order) are shuffled; the first
       `max_queries` survive.
    2. Per surviving query, one relevant document is chosen (shuffle of its
       relevant list when there are several).
    3. k-1 irrelevant documents are drawn without replacement from
       [0, doc_pool_size), excluding every row known-relevant to that query.

    The relevant pair is emitted first in each group.  Raises CapacityError
    when the pool cannot supply k-1 negatives for some query.
    """
    if k < 2:
        raise CapacityError(f"candidate size must be at least 2, got {k}")
    by_query: dict[int, list[int]] = {}
    order: list[int] = []
    for q, d in relevant_pairs:
        if q not in by_query:
            by_query[q] = []
            order.append(q)
        by_query[q].append(d)
    if not order:
        raise ManifestError("no relevant pairs supplied")

    rng = Xoshiro256StarStar(seed)
    shuffled = list(order)
    rng.shuffle(shuffled)
    selected = shuffled[:max_queries]

    triples: list[tuple[int, int, int]] = []
    for q in selected:
        rels = by_query[q]
        if len(rels) > 1:
            rels = list(rels)
            rng.shuffle(rels)
        relevant = rels[0]
        exclusions = tuple(set(by_query[q]))
        available = doc_pool_size - len(set(by_query[q]))
        if available < k - 1:
            raise CapacityError(
                f"query {q}: pool of {doc_pool_size} documents minus "
                f"{len(set(by_query[q]))} known-relevant leaves {available}, "
                f"need {k - 1} negatives"
            )
        negatives = rng.sample_without_replacement(doc_pool_size, k - 1, exclusions)
        triples.append((q, relevant, 1))
        triples.extend((q, neg, 0) for neg in negatives)
    return dataset_from_pairs(triples, k_limit=None)


@dataclass(frozen=True)
class ModelPoolTruth:
    """Ground-truth fine-tune quality per model, each score in [0, 1]."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        ids = [m for m, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ManifestError("duplicate model ids in truth table")
        if len(ids) < 2:
            raise ManifestError("truth table needs at least two models")
        for m, s in self.entries:
            if not (0.0 <= s <= 1.0):
                raise ManifestError(f"model {m}: score {s} outside [0, 1]")

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)


def read_truth(source: str | Path | IO[str]) -> ModelPoolTruth:
    """Load `{"models": [{"id": ..., "score": ...}, ...]}` JSON."""
    if hasattr(source, "read"):
        obj = json.load(source)
    else:
        obj = json.loads(Path(source).read_text(encoding="utf-8"))
    try:
        entries = tuple((str(m["id"]), float(m["score"])) for m in obj["models"])
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed truth file: {exc}") from exc
    return ModelPoolTruth(entries)


def write_truth(truth: ModelPoolTruth, dest: str | Path) -> None:
    payload = {"models": [{"id": m, "score": s} for m, s in truth.entries]}
    _atomic_write_text(Path(dest), json.dumps(payload, indent=2) + "\n")
