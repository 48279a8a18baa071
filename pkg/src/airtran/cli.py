"""Command-line interface.

Subcommands:

    synth   generate a synthetic model pool from a config JSON
    score   score every model in a pool against a candidate manifest
    eval    correlate a score report with a ground-truth table
    sample  build a candidate manifest from known-relevant pairs
    sweep   score across candidate sizes and seeds, emit a CSV
    plot    render tau-vs-k and seconds-vs-k figures from a sweep CSV

Exit codes: 0 success, 1 unexpected failure, 2 missing input file, 3 file
format violation, 4 numeric failure, 5 model id mismatch, 6 invalid synth
config.  Seeds resolve as --seed flag, then AIRTRAN_SEED env var, then 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import scoring
from .data import (
    dataset_from_pairs,
    read_manifest,
    read_truth,
    sample_candidates,
    write_manifest,
    RankingDataset,
)
from .errors import (
    AirtranError,
    CapacityError,
    ConfigError,
    DegenerateInputError,
    EmptyDatasetError,
    ManifestError,
    MatrixDataError,
    MatrixFormatError,
    MatrixLengthError,
    MatrixVersionError,
    MatrixWriteError,
    NumericError,
    ShapeError,
    SingularGramError,
)
from .evaluation import evaluate
from .matrixio import read_matrix
from .prng import derive_seed
from .scoring import ScoreConfig
from .synthpool import SynthConfig, generate_pool, save_pool

EXIT_UNEXPECTED = 1
EXIT_MISSING_FILE = 2
EXIT_FORMAT = 3
EXIT_NUMERIC = 4
EXIT_ID_MISMATCH = 5
EXIT_BAD_CONFIG = 6

_FORMAT_ERRORS = (
    MatrixFormatError,
    MatrixVersionError,
    MatrixLengthError,
    ManifestError,
    ShapeError,
    CapacityError,
)
_NUMERIC_ERRORS = (
    MatrixDataError,
    NumericError,
    SingularGramError,
    DegenerateInputError,
    EmptyDatasetError,
)

METHODS = ("airtran", "rank", "qtran", "loglik")


def resolve_seed(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("AIRTRAN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"AIRTRAN_SEED must be an integer, got {env!r}")
    return 0


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8", newline="\n")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _emit(text: str, output: str | None) -> None:
    if output:
        _atomic_write(Path(output), text)
    else:
        sys.stdout.write(text)


def _config_from_args(args) -> ScoreConfig:
    return ScoreConfig(
        use_whitening=not args.no_whiten,
        use_adaptive_scaling=not args.no_adascale,
        epsilon_rel=args.epsilon_rel,
        lambda_rel=args.lambda_rel,
        similarity=args.similarity,
    )


def _warn_ignored_flags(args) -> None:
    if args.method in ("rank", "loglik") and (args.no_whiten or args.no_adascale):
        print(
            f"warning: --no-whiten/--no-adascale have no effect with "
            f"--method {args.method} (it never applies transforms)",
            file=sys.stderr,
        )


def _model_dirs(pool_dir: Path) -> list[Path]:
    if not pool_dir.is_dir():
        raise FileNotFoundError(f"pool directory not found: {pool_dir}")
    dirs = sorted(p for p in pool_dir.iterdir() if p.is_dir())
    if not dirs:
        raise FileNotFoundError(f"no model directories under {pool_dir}")
    return dirs


def _load_model(model_dir: Path) -> tuple[np.ndarray, np.ndarray]:
    for name in ("queries.mat", "docs.mat"):
        if not (model_dir / name).is_file():
            raise FileNotFoundError(
                f"model {model_dir.name}: missing {model_dir / name}"
            )
    try:
        q = read_matrix(model_dir / "queries.mat")
        d = read_matrix(model_dir / "docs.mat")
    except AirtranError as exc:
        raise type(exc)(f"model {model_dir.name}: {exc}") from exc
    return q, d


def _score_one(
    dataset: RankingDataset,
    q: np.ndarray,
    d: np.ndarray,
    method: str,
    config: ScoreConfig,
    seed: int,
    loglik_mode: str,
) -> tuple[float, float]:
    """Returns (score, wall seconds) for one model under the chosen method."""
    if method == "airtran":
        return scoring.airtran_score(dataset, q, d, config)
    if method == "qtran":
        return scoring.quality_transferability(dataset, q, d, config, seed=seed)
    start = time.perf_counter()
    if method == "rank":
        score = scoring.expected_rank_score(dataset, q, d)
    elif method == "loglik":
        score = scoring.log_likelihood_score(dataset, q, d, mode=loglik_mode)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return score, time.perf_counter() - start


def truncate_to_k(dataset: RankingDataset, k: int) -> RankingDataset:
    """Shrink every candidate group to its relevant pair plus the first k-1
    negatives in manifest order (a uniform subsample of a uniform sample)."""
    if k == dataset.k:
        return dataset
    if k > dataset.k:
        raise CapacityError(
            f"cannot grow candidate size from {dataset.k} to {k}; resample instead"
        )
    triples = []
    for g in dataset.groups:
        triples.append((g.query_row, g.relevant_row, 1))
        triples.extend((g.query_row, d, 0) for d in g.irrelevant_rows[: k - 1])
    return dataset_from_pairs(triples, k_limit=None)


def _score_pool(
    pool_dir: Path,
    dataset: RankingDataset,
    method: str,
    config: ScoreConfig,
    seed: int,
    jobs: int,
    loglik_mode: str,
) -> list[tuple[str, float, float]]:
    dirs = _model_dirs(pool_dir)

    def work(model_dir: Path) -> tuple[str, float, float]:
        q, d = _load_model(model_dir)
        try:
            score, secs = _score_one(
                dataset, q, d, method, config, seed, loglik_mode
            )
        except AirtranError as exc:
            raise type(exc)(f"model {model_dir.name}: {exc}") from exc
        return model_dir.name, score, secs

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, dirs))
    return [work(d) for d in dirs]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_score(args) -> int:
    _warn_ignored_flags(args)
    seed = resolve_seed(args.seed)
    pool_dir = Path(args.pool)
    manifest = Path(args.manifest) if args.manifest else pool_dir / "manifest.jsonl"
    if not manifest.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest}")
    dataset = read_manifest(manifest)
    if args.k is not None:
        dataset = truncate_to_k(dataset, args.k)
    config = _config_from_args(args)
    results = _score_pool(
        pool_dir, dataset, args.method, config, seed, args.jobs, args.loglik_mode
    )
    report = scoring.make_report(
        dataset_name=str(manifest),
        k=dataset.k,
        seed=seed,
        method=args.method,
        config=config.as_dict(),
        entries=[
            (m, s, (t if args.timing else None)) for m, s, t in results
        ],
    )
    best = report.scores[0]
    print(
        f"best model: {best.model_id} (score {best.score:.6f}, "
        f"{len(report.scores)} models, k={dataset.k})",
        file=sys.stderr,
    )
    _emit(report.to_json(), args.output)
    return 0


def cmd_eval(args) -> int:
    report = scoring.read_report(Path(args.report))
    truth = read_truth(Path(args.truth))
    scores = {s.model_id: s.score for s in report.scores}
    try:
        result = evaluate(scores, truth)
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ID_MISMATCH
    _emit(result.to_json(), args.output)
    return 0


def cmd_synth(args) -> int:
    cfg_path = Path(args.config)
    if not cfg_path.is_file():
        raise FileNotFoundError(f"synth config not found: {cfg_path}")
    try:
        obj = json.loads(cfg_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{cfg_path}: invalid JSON: {exc}") from exc
    if args.seed is not None:
        obj["seed"] = args.seed
    config = SynthConfig.from_dict(obj)
    pool = generate_pool(config)
    save_pool(pool, args.out_dir)
    print(
        f"wrote pool of {config.model_count} models "
        f"({config.query_count} queries, k={config.candidate_size}) to {args.out_dir}",
        file=sys.stderr,
    )
    return 0


def cmd_sample(args) -> int:
    seed = resolve_seed(args.seed)
    pairs_path = Path(args.pairs)
    if not pairs_path.is_file():
        raise FileNotFoundError(f"pairs file not found: {pairs_path}")
    rel_pairs = _read_relevant_pairs(pairs_path)
    dataset = sample_candidates(
        rel_pairs,
        doc_pool_size=args.pool_size,
        k=args.k,
        seed=seed,
        max_queries=args.max_queries,
    )
    buf = io.StringIO()
    write_manifest(dataset, buf)
    _emit(buf.getvalue(), args.output)
    print(
        f"sampled {dataset.query_count} groups of size {dataset.k}",
        file=sys.stderr,
    )
    return 0


def _read_relevant_pairs(path: Path) -> list[tuple[int, int]]:
    """JSON-lines of {"q": int, "d": int} (a y field, if present, must be 1)."""
    pairs = []
    for lineno, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or not {"q", "d"} <= set(obj) <= {"q", "d", "y"}:
            raise ManifestError(f'{path}:{lineno}: expected keys "q", "d"[, "y"]')
        if obj.get("y", 1) != 1:
            raise ManifestError(
                f"{path}:{lineno}: relevant-pairs file may only contain y=1 rows"
            )
        pairs.append((int(obj["q"]), int(obj["d"])))
    return pairs


def cmd_sweep(args) -> int:
    _warn_ignored_flags(args)
    pool_dir = Path(args.pool)
    manifest = Path(args.manifest) if args.manifest else pool_dir / "manifest.jsonl"
    if not manifest.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest}")
    truth = read_truth(Path(args.truth))
    base = read_manifest(manifest)
    config = _config_from_args(args)
    seeds = [int(s) for s in args.seeds.split(",")]
    ks = list(range(args.k_min, args.k_max + 1))
    if args.k_max > base.k:
        raise CapacityError(
            f"sweep k up to {args.k_max} but manifest groups have size {base.k}"
        )

    models = {d.name: _load_model(d) for d in _model_dirs(pool_dir)}
    rows = []
    for seed in seeds:
        for k in ks:
            if args.resample:
                rel_pairs = [(g.query_row, g.relevant_row) for g in base.groups]
                pool_rows = max(d.shape[0] for _, (_, d) in models.items())
                dataset = sample_candidates(
                    rel_pairs, pool_rows, k, seed=derive_seed(seed, k),
                    max_queries=len(rel_pairs),
                )
            else:
                dataset = truncate_to_k(base, k)
            entries = []
            for model_id, (q, d) in sorted(models.items()):
                score, secs = _score_one(
                    dataset, q, d, args.method, config, seed, args.loglik_mode
                )
                entries.append((model_id, score, secs))
            try:
                result = evaluate({m: s for m, s, _ in entries}, truth)
            except ShapeError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_ID_MISMATCH
            rows.append(
                {
                    "k": k,
                    "seed": seed,
                    "method": args.method,
                    "tau": f"{result.tau:.6f}",
                    "tau_b": f"{result.tau_b:.6f}",
                    "best_rank": result.best_model_estimated_rank,
                    "mean_seconds": f"{np.mean([t for _, _, t in entries]):.6f}",
                }
            )
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf,
        fieldnames=["k", "seed", "method", "tau", "tau_b", "best_rank", "mean_seconds"],
        lineterminator="\n",
    )
    writer.writeheader()
    writer.writerows(rows)
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "airtran"
    import matplotlib.pyplot as plt

    sweep_path = Path(args.sweep)
    if not sweep_path.is_file():
        raise FileNotFoundError(f"sweep CSV not found: {sweep_path}")
    with open(sweep_path, newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    if not rows:
        raise ManifestError(f"{sweep_path}: empty sweep CSV")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    ks = sorted({int(r["k"]) for r in rows})
    methods = sorted({r["method"] for r in rows})
    specs = [("tau", "Kendall tau", "tau_vs_k.svg"),
             ("mean_seconds", "mean seconds per model", "seconds_vs_k.svg")]
    for column, ylabel, filename in specs:
        fig, ax = plt.subplots(figsize=(6, 4))
        for method in methods:
            means, stds = [], []
            for k in ks:
                vals = [
                    float(r[column])
                    for r in rows
                    if int(r["k"]) == k and r["method"] == method
                ]
                means.append(np.mean(vals))
                stds.append(np.std(vals))
            ax.errorbar(ks, means, yerr=stds, marker="o", capsize=3, label=method)
        ax.set_xlabel("candidate group size k")
        ax.set_ylabel(ylabel)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / filename, format="svg", metadata={"Date": None})
        plt.close(fig)
    print(f"wrote {len(specs)} figures to {out_dir}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--method", choices=METHODS, default="airtran",
        help="scoring method (default: airtran)",
    )
    p.add_argument("--no-whiten", action="store_true", help="disable whitening")
    p.add_argument(
        "--no-adascale", action="store_true", help="disable adaptive scaling"
    )
    p.add_argument(
        "--epsilon-rel", type=float, default=1e-6,
        help="relative covariance ridge (default: 1e-6)",
    )
    p.add_argument(
        "--lambda-rel", type=float, default=1e-6,
        help="relative regression ridge (default: 1e-6)",
    )
    p.add_argument(
        "--similarity", choices=("dot", "cosine"), default="dot",
        help="similarity function (default: dot)",
    )
    p.add_argument(
        "--loglik-mode", choices=("relevant", "document"), default="relevant",
        help="log-likelihood aggregation mode (default: relevant)",
    )
    p.add_argument("--seed", type=int, default=None,
                   help="seed (default: AIRTRAN_SEED env var, else 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airtran",
        description="Rank candidate pre-trained models for a text-ranking dataset.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score every model in a pool")
    p.add_argument("pool", help="pool directory of <model_id>/{queries,docs}.mat")
    p.add_argument("--manifest", help="candidate manifest (default: <pool>/manifest.jsonl)")
    p.add_argument("--k", type=int, default=None,
                   help="truncate candidate groups to size k")
    _add_method_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel model workers")
    p.add_argument("--timing", action="store_true",
                   help="include per-model wall seconds in the report")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="correlate a report with ground truth")
    p.add_argument("report", help="score report JSON")
    p.add_argument("truth", help="truth table JSON")
    p.add_argument("--output", help="write the eval JSON here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic pool")
    p.add_argument("config", help="synth config JSON")
    p.add_argument("out_dir", help="output pool directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="sample a candidate manifest")
    p.add_argument("--pairs", required=True,
                   help='JSON-lines of known-relevant {"q", "d"} pairs')
    p.add_argument("--pool-size", type=int, required=True,
                   help="document pool row count")
    p.add_argument("--k", type=int, required=True, help="candidate group size")
    p.add_argument("--max-queries", type=int, default=1000,
                   help="cap on sampled queries (default: 1000)")
    p.add_argument("--seed", type=int, default=None,
                   help="seed (default: AIRTRAN_SEED env var, else 0)")
    p.add_argument("--output", help="write the manifest here instead of stdout")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sweep", help="score across candidate sizes and seeds")
    p.add_argument("pool", help="pool directory")
    p.add_argument("--manifest", help="candidate manifest (default: <pool>/manifest.jsonl)")
    p.add_argument("--truth", required=True, help="truth table JSON")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--seeds", default="0", help="comma-separated seeds (default: 0)")
    p.add_argument("--resample", action="store_true",
                   help="resample candidate groups per (seed, k) instead of truncating")
    _add_method_flags(p)
    p.add_argument("--output", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render figures from a sweep CSV")
    p.add_argument("sweep", help="sweep CSV")
    p.add_argument("--out-dir", default=".", help="figure output directory")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except _FORMAT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MatrixWriteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
