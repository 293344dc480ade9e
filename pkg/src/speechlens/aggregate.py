"""Dataset-level summaries of many attribution reports.

Word scores are grouped by (normalized word, head, predicted class) and
averaged; paralinguistic relevances are averaged per (head, direction).
Grouping keys use the predicted class the report was computed against,
not any gold label.
"""

import csv
import io
import unicodedata
from dataclasses import dataclass

from .errors import ValidationError

__all__ = [
    "normalize_word",
    "WordGroup",
    "GlobalWordSummary",
    "GlobalParalinguisticSummary",
    "summarize_words",
    "summarize_paralinguistic",
    "word_summary_to_jsonable",
    "word_summary_from_jsonable",
    "word_summary_to_csv",
    "paralinguistic_summary_to_jsonable",
    "paralinguistic_summary_from_jsonable",
    "paralinguistic_summary_to_csv",
]

DEFAULT_TOP_M = 15


def normalize_word(text: str) -> str:
    """Lowercase, strip all Unicode punctuation, trim surrounding whitespace.

    Punctuation is anything in the P* general categories, which keeps the
    rule language-neutral. The result may be empty; empty keys group
    together.
    """
    lowered = str(text).lower()
    kept = "".join(ch for ch in lowered if not unicodedata.category(ch).startswith("P"))
    return kept.strip()


@dataclass(frozen=True)
class WordGroup:
    word: str
    head: str
    class_name: str
    mean: float
    count: int


@dataclass(frozen=True)
class GlobalWordSummary:
    top_m: int
    top_words: tuple  # words ranked by their best per-class mean
    groups: tuple  # (WordGroup, ...) sorted by (word, head, class)
    total_pairs: int  # every (segment, target) score that was folded in


@dataclass(frozen=True)
class GlobalParalinguisticSummary:
    # ((head, ((direction, mean, count), ...)), ...)
    heads: tuple


def summarize_words(reports, top_m: int = DEFAULT_TOP_M) -> GlobalWordSummary:
    """Group word scores across reports and pick the top_m words.

    A word's rank key is the maximum of its per-(head, class) means, so a
    word dominated by one class sorts by that class; ties break
    alphabetically.
    """
    reports = list(reports)
    if not reports:
        raise ValidationError("cannot summarize an empty report list")
    if top_m < 1:
        raise ValidationError(f"top_m must be >= 1, got {top_m}")
    sums = {}
    counts = {}
    total = 0
    for report in reports:
        for te in report.targets:
            for seg, r in te.words.scores:
                key = (normalize_word(seg.text), te.target.head, te.target.class_name)
                sums[key] = sums.get(key, 0.0) + r
                counts[key] = counts.get(key, 0) + 1
                total += 1
    groups = tuple(
        WordGroup(word, head, cls, sums[key] / counts[key], counts[key])
        for key in sorted(sums)
        for word, head, cls in [key]
    )
    best = {}
    for g in groups:
        if g.word not in best or g.mean > best[g.word]:
            best[g.word] = g.mean
    ranked = sorted(best, key=lambda w: (-best[w], w))
    return GlobalWordSummary(
        top_m=top_m,
        top_words=tuple(ranked[:top_m]),
        groups=groups,
        total_pairs=total,
    )


def summarize_paralinguistic(reports) -> GlobalParalinguisticSummary:
    """Mean relevance per (head, feature direction) across all reports."""
    reports = list(reports)
    if not reports:
        raise ValidationError("cannot summarize an empty report list")
    sums = {}
    counts = {}
    head_order = []
    direction_order = {}
    for report in reports:
        for te in report.targets:
            head = te.target.head
            if head not in direction_order:
                head_order.append(head)
                direction_order[head] = []
            for d in te.paralinguistic.directions:
                key = (head, d.label)
                if d.label not in direction_order[head]:
                    direction_order[head].append(d.label)
                sums[key] = sums.get(key, 0.0) + d.relevance
                counts[key] = counts.get(key, 0) + 1
    heads = tuple(
        (
            head,
            tuple(
                (label, sums[(head, label)] / counts[(head, label)], counts[(head, label)])
                for label in direction_order[head]
            ),
        )
        for head in head_order
    )
    return GlobalParalinguisticSummary(heads=heads)


def word_summary_to_jsonable(summary: GlobalWordSummary) -> dict:
    return {
        "top_m": summary.top_m,
        "top_words": list(summary.top_words),
        "groups": [
            {"word": g.word, "head": g.head, "class": g.class_name,
             "mean": g.mean, "count": g.count}
            for g in summary.groups
        ],
        "total_pairs": summary.total_pairs,
    }


def word_summary_from_jsonable(obj: dict) -> GlobalWordSummary:
    try:
        return GlobalWordSummary(
            top_m=int(obj["top_m"]),
            top_words=tuple(str(w) for w in obj["top_words"]),
            groups=tuple(
                WordGroup(g["word"], g["head"], g["class"], float(g["mean"]), int(g["count"]))
                for g in obj["groups"]
            ),
            total_pairs=int(obj["total_pairs"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed word summary: {exc}") from exc


def word_summary_to_csv(summary: GlobalWordSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["word", "head", "class", "mean", "count"])
    for g in summary.groups:
        writer.writerow([g.word, g.head, g.class_name, repr(g.mean), g.count])
    return buf.getvalue()


def paralinguistic_summary_to_jsonable(summary: GlobalParalinguisticSummary) -> dict:
    return {
        "heads": {
            head: {label: {"mean": mean, "count": count} for label, mean, count in rows}
            for head, rows in summary.heads
        }
    }


def paralinguistic_summary_from_jsonable(obj: dict) -> GlobalParalinguisticSummary:
    try:
        return GlobalParalinguisticSummary(
            heads=tuple(
                (
                    head,
                    tuple(
                        (label, float(v["mean"]), int(v["count"]))
                        for label, v in rows.items()
                    ),
                )
                for head, rows in obj["heads"].items()
            )
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed paralinguistic summary: {exc}") from exc


def paralinguistic_summary_to_csv(summary: GlobalParalinguisticSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["head", "direction", "mean", "count"])
    for head, rows in summary.heads:
        for label, mean, count in rows:
            writer.writerow([head, label, repr(mean), count])
    return buf.getvalue()
