"""Measure generated regexes against independently collected ground truth.

A ground-truth string is matched if any generated regex finds it; a match is
a false positive when the truth's annotated capture groups differ from those
of the indicator the regex was generated from.  Additional diagnostics cover
pattern/indicator edit-distance similarity, score distributions, and a
structural feature-vector comparison between patterns.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from . import dialect
from .knowledge import KnowledgeStore
from .normalize import IocKind, preprocess


class UndefinedMetricError(ValueError):
    """A metric was requested over an empty population."""


class GroundTruthError(ValueError):
    """A ground-truth file entry violates the schema or its invariants."""


@dataclass
class GroundTruthString:
    text: str
    kind: IocKind
    capture_groups: frozenset[str]  # case-folded component names
    dataset_id: str
    normalized: str = ""

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "kind": self.kind.value,
            "capture_groups": sorted(self.capture_groups),
            "dataset_id": self.dataset_id,
        }


def load_truths(
    path: str | Path, store: KnowledgeStore | None = None
) -> list[GroundTruthString]:
    """Read a ground-truth JSON file and normalize each entry for matching."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise GroundTruthError(f"{path}: expected a JSON list of truth records")
    truths = []
    for i, entry in enumerate(data):
        truths.append(make_truth(entry, store, where=f"{path}[{i}]"))
    return truths


def make_truth(
    entry: dict, store: KnowledgeStore | None = None, where: str = "<record>"
) -> GroundTruthString:
    if not isinstance(entry, dict):
        raise GroundTruthError(f"{where}: not an object")
    try:
        text = entry["text"]
        kind = IocKind(entry["kind"])
        groups = entry["capture_groups"]
        dataset_id = entry.get("dataset_id", "default")
    except (KeyError, ValueError) as exc:
        raise GroundTruthError(f"{where}: {exc}") from exc
    if not isinstance(text, str) or not text.strip():
        raise GroundTruthError(f"{where}: 'text' must be a non-empty string")
    if not isinstance(groups, list) or not all(isinstance(g, str) for g in groups):
        raise GroundTruthError(f"{where}: 'capture_groups' must be a list of strings")

    normalized = text.strip()
    if kind is not IocKind.OTHER:
        normalized = preprocess(text, kind, store=store)
    folded = frozenset(g.casefold() for g in groups)
    for g in folded:
        if g not in normalized.casefold():
            raise GroundTruthError(
                f"{where}: capture group {g!r} does not appear in the normalized text"
            )
    return GroundTruthString(
        text=text,
        kind=kind,
        capture_groups=folded,
        dataset_id=dataset_id,
        normalized=normalized,
    )


# -- matching metrics ----------------------------------------------------


@dataclass
class HitRateResult:
    total: int
    matched_indices: set[int]
    rate: float
    unmatched_by_kind: dict[str, int]


def hit_rate(
    patterns: list[tuple[str, str]], truths: list[GroundTruthString]
) -> HitRateResult:
    """Fraction of truths matched by at least one pattern (unanchored search)."""
    if not truths:
        raise UndefinedMetricError("hit rate is undefined for an empty truth set")
    compiled = [(rid, re.compile(p)) for rid, p in patterns]
    matched: set[int] = set()
    for i, truth in enumerate(truths):
        if any(rx.search(truth.normalized) for _rid, rx in compiled):
            matched.add(i)
    unmatched: dict[str, int] = {k.value: 0 for k in IocKind if k is not IocKind.OTHER}
    for i, truth in enumerate(truths):
        if i not in matched:
            unmatched[truth.kind.value] = unmatched.get(truth.kind.value, 0) + 1
    return HitRateResult(
        total=len(truths),
        matched_indices=matched,
        rate=len(matched) / len(truths),
        unmatched_by_kind=unmatched,
    )


@dataclass
class FprResult:
    value: float | None
    matched_indices: list[int]
    false_positive_indices: list[int]


def fpr(
    pattern: str,
    source_groups: list[str] | frozenset[str],
    truths: list[GroundTruthString],
) -> FprResult:
    """Among the truths this regex matches, the fraction whose annotated
    capture groups differ from the source indicator's; None if it matches
    nothing."""
    rx = re.compile(pattern)
    g_k = frozenset(g.casefold() for g in source_groups)
    matched = [i for i, t in enumerate(truths) if rx.search(t.normalized)]
    if not matched:
        return FprResult(value=None, matched_indices=[], false_positive_indices=[])
    false_pos = [i for i in matched if truths[i].capture_groups != g_k]
    return FprResult(
        value=len(false_pos) / len(matched),
        matched_indices=matched,
        false_positive_indices=false_pos,
    )


def mean_fpr(values: list[float]) -> float:
    """Arithmetic mean over regexes that matched at least one truth."""
    if not values:
        raise UndefinedMetricError("mean FPR is undefined with no matching regexes")
    return sum(values) / len(values)


# -- similarity ------------------------------------------------------------


def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance (insert/delete/substitute)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def similarity(pattern: str, source_ioc: str) -> float:
    """Normalized edit-distance similarity in [0, 1]."""
    if not pattern or not source_ioc:
        raise ValueError("similarity requires two non-empty strings")
    return 1.0 - levenshtein(pattern, source_ioc) / max(len(pattern), len(source_ioc))


def structural_similarity(pattern_a: str, pattern_b: str) -> float:
    """Cosine similarity of the two patterns' structural feature vectors."""
    va = dialect.feature_vector(pattern_a)
    vb = dialect.feature_vector(pattern_b)
    sq_a = sum(x * x for x in va)
    sq_b = sum(x * x for x in vb)
    if sq_a == 0 or sq_b == 0:
        return 0.0
    dot = sum(x * y for x, y in zip(va, vb))
    return dot / math.sqrt(sq_a * sq_b)


# -- distributions -----------------------------------------------------------


@dataclass
class Stats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float

    def to_dict(self) -> dict:
        return {
            "min": self.minimum,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.maximum,
            "mean": self.mean,
        }


def _quantile(sorted_values: list[float], p: float) -> float:
    """Linear interpolation between closest ranks (the R-7 rule)."""
    n = len(sorted_values)
    if n == 1:
        return float(sorted_values[0])
    h = (n - 1) * p
    lo = math.floor(h)
    hi = math.ceil(h)
    return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])


def score_distribution(scores: list[float]) -> Stats:
    """Five-number summary plus mean."""
    if not scores:
        raise UndefinedMetricError("score distribution requires at least one value")
    ordered = sorted(float(s) for s in scores)
    return Stats(
        minimum=ordered[0],
        q1=_quantile(ordered, 0.25),
        median=_quantile(ordered, 0.5),
        q3=_quantile(ordered, 0.75),
        maximum=ordered[-1],
        mean=sum(ordered) / len(ordered),
    )


# -- report assembly ---------------------------------------------------------


@dataclass
class EvaluationReport:
    dataset_id: str
    total: int
    matched: int
    hit_rate: float
    unmatched_by_kind: dict[str, int]
    per_regex_fpr: list[tuple[str, float | None]]
    mean_fpr: float | None
    score_stats: Stats | None
    similarity_stats: Stats | None

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "total": self.total,
            "matched": self.matched,
            "hit_rate": self.hit_rate,
            "unmatched_by_kind": dict(sorted(self.unmatched_by_kind.items())),
            "per_regex_fpr": [[rid, value] for rid, value in self.per_regex_fpr],
            "mean_fpr": self.mean_fpr,
            "score_stats": self.score_stats.to_dict() if self.score_stats else None,
            "similarity_stats": (
                self.similarity_stats.to_dict() if self.similarity_stats else None
            ),
        }


def evaluate_products(
    products: list[dict],
    truths: list[GroundTruthString],
    dataset_id: str = "default",
    match_log: list | None = None,
) -> EvaluationReport:
    """Full per-dataset report for a list of product records.

    Each product record needs ``ioc_id``, ``pattern``, ``capture_groups``,
    ``normalized`` and ``score``.  Score and similarity distributions cover
    only regexes that matched at least one truth.
    """
    hits = hit_rate([(p["ioc_id"], p["pattern"]) for p in products], truths)

    per_regex: list[tuple[str, float | None]] = []
    fpr_values: list[float] = []
    matching_products: list[dict] = []
    for product in products:
        result = fpr(product["pattern"], product["capture_groups"], truths)
        per_regex.append((product["ioc_id"], result.value))
        if result.value is not None:
            fpr_values.append(result.value)
            matching_products.append(product)
        if match_log is not None:
            match_log.append(
                {
                    "ioc_id": product["ioc_id"],
                    "matched": [truths[i].text for i in result.matched_indices],
                    "false_positives": [
                        truths[i].text for i in result.false_positive_indices
                    ],
                }
            )

    mean_value = mean_fpr(fpr_values) if fpr_values else None
    score_stats = (
        score_distribution([p["score"] for p in matching_products])
        if matching_products
        else None
    )
    similarity_stats = (
        score_distribution(
            [similarity(p["pattern"], p["normalized"]) for p in matching_products]
        )
        if matching_products
        else None
    )
    return EvaluationReport(
        dataset_id=dataset_id,
        total=hits.total,
        matched=len(hits.matched_indices),
        hit_rate=hits.rate,
        unmatched_by_kind=hits.unmatched_by_kind,
        per_regex_fpr=per_regex,
        mean_fpr=mean_value,
        score_stats=score_stats,
        similarity_stats=similarity_stats,
    )


def evaluate_by_dataset(
    products: list[dict],
    truths: list[GroundTruthString],
    match_log: list | None = None,
) -> list[EvaluationReport]:
    """One report per dataset_id found in the truth set, sorted by id."""
    datasets = sorted({t.dataset_id for t in truths})
    return [
        evaluate_products(
            products,
            [t for t in truths if t.dataset_id == ds],
            dataset_id=ds,
            match_log=match_log,
        )
        for ds in datasets
    ]
