"""Evaluating transferability estimates against fine-tuned ground truth.

Given estimated scores S and true fine-tune scores T over a pool of M models,
the headline metric is the sign-form Kendall coefficient

    tau = (2 / (M (M - 1))) * sum_{i<j} I(T_i - T_j) I(S_i - S_j),

where I(x) is +1 for x > 0 and -1 otherwise, so tied pairs count fully
against agreement.  The tie-corrected tau-b is reported alongside for
comparability with standard toolkits, and `estimated_rank_of_best` answers
the practical question: if you pick models by estimated score, how far down
the list is the truly best one?
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.stats

from .data import ModelPoolTruth
from .errors import ShapeError

def _check_pair(estimated, truth) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(estimated, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if s.ndim != 1 or t.ndim != 1 or s.shape != t.shape:
        raise ShapeError(
            f"score vectors must be 1-D and equal length, got {s.shape} and {t.shape}"
        )
    if s.shape[0] < 2:
        raise ShapeError(f"need at least 2 models to correlate, got {s.shape[0]}")
    return s, t


def kendall_tau_sign(estimated, truth) -> float:
    """Sign-form Kendall coefficient.

    Each side of a pair maps through I(x) = +1 if x > 0 else -1 (a tie
    counts as "not greater"), and the pair contributes the product.  +1 for
    identical orderings, -1 for exact reversal; every pair contributes
    exactly +1 or -1, so the value always lies in [-1, 1] and there is no
    separate tie correction (see `kendall_tau_b` for that).
    """
    s, t = _check_pair(estimated, truth)
    iu = np.triu_indices(s.shape[0], k=1)
    ds = np.subtract.outer(t, t)[iu]
    de = np.subtract.outer(s, s)[iu]
    prod = np.where(ds > 0, 1.0, -1.0) * np.where(de > 0, 1.0, -1.0)
    m = s.shape[0]
    return float(2.0 * prod.sum() / (m * (m - 1)))


def kendall_tau_b(estimated, truth) -> float:
    """Tie-corrected Kendall tau-b; 0.0 by convention when either side is constant."""
    s, t = _check_pair(estimated, truth)
    if np.all(s == s[0]) or np.all(t == t[0]):
        return 0.0
    stat = scipy.stats.kendalltau(s, t, variant="b").statistic
    return 0.0 if np.isnan(stat) else float(stat)


def estimated_rank_of_best(estimated, truth) -> int:
    """Rank of the truly best model in the estimated ordering (1 = found it).

    Best is the argmax of truth (first index on ties); its estimated rank is
    optimistic, counting only strictly better estimated scores ahead of it.
    """
    s, t = _check_pair(estimated, truth)
    best = int(np.argmax(t))
    return 1 + int(np.sum(s > s[best]))


@dataclass(frozen=True)
class EvalReport:
    """Agreement between one score report and the truth table."""

    tau: float
    tau_b: float
    best_model_estimated_rank: int
    model_count: int

    def to_json(self) -> str:
        payload = {
            "tau": self.tau,
            "tau_b": self.tau_b,
            "best_model_estimated_rank": self.best_model_estimated_rank,
            "model_count": self.model_count,
        }
        return json.dumps(payload, indent=2) + "\n"


def read_eval_report(source: str | Path) -> EvalReport:
    obj = json.loads(Path(source).read_text(encoding="utf-8"))
    return EvalReport(
        tau=float(obj["tau"]),
        tau_b=float(obj["tau_b"]),
        best_model_estimated_rank=int(obj["best_model_estimated_rank"]),
        model_count=int(obj["model_count"]),
    )


def evaluate(scores: dict[str, float], truth: ModelPoolTruth) -> EvalReport:
    """Align estimated scores with the truth table by model id and correlate.

    Raises ShapeError listing the symmetric difference when the id sets do
    not match exactly.
    """
    truth_map = truth.as_dict()
    missing = sorted(set(truth_map) - set(scores))
    extra = sorted(set(scores) - set(truth_map))
    if missing or extra:
        raise ShapeError(
            f"model ids do not match truth table: missing from scores "
            f"{missing}, not in truth {extra}"
        )
    ids = [m for m, _ in truth.entries]
    s = np.array([scores[m] for m in ids])
    t = np.array([truth_map[m] for m in ids])
    return EvalReport(
        tau=kendall_tau_sign(s, t),
        tau_b=kendall_tau_b(s, t),
        best_model_estimated_rank=estimated_rank_of_best(s, t),
        model_count=len(ids),
    )
