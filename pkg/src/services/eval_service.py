# src/services/eval_service.py
"""
Span-overlap metrics, classification reports and the end-to-end protocol.

Overlap is counted in whole tokens and is polarity-strict for span metrics.
Empty denominators yield 0.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from src.services.corpus_service import (
    CATEGORIES,
    Category,
    Phrase,
    Polarity,
    decode_phrases,
    labeled_phrases,
    parse_dataset,
)
from src.utils.errors import EmptyInput, LengthMismatch, Misaligned

LOGGER = logging.getLogger(__name__)

SINK = "sink"
BINARY = "binary"
PROPORTIONAL = "proportional"
MODES = (BINARY, PROPORTIONAL)
PARTITIONS = ("total", "inclusion", "exclusion")


# ------------------------------------------------------
# REPORT TYPES
# ------------------------------------------------------
@dataclass(frozen=True)
class SpanPRF:
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0

    @classmethod
    def of(cls, precision, recall) -> "SpanPRF":
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
        return cls(float(precision), float(recall), float(f1))


@dataclass(frozen=True)
class EvalReport:
    scores: Dict[Polarity, Dict[str, SpanPRF]]
    gold_counts: Dict[Polarity, int]
    pred_counts: Dict[Polarity, int]

    def get(self, polarity: Polarity, mode: str) -> SpanPRF:
        return self.scores[polarity][mode]


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassReport:
    labels: Tuple[str, ...]
    per_class: Dict[str, ClassMetrics]
    weighted: Dict[str, SpanPRF]
    macro: Dict[str, SpanPRF]
    confusion: np.ndarray
    accuracy: float
    counts: Dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class EndToEndReport:
    overall: SpanPRF
    inclusion: SpanPRF
    exclusion: SpanPRF
    correct: int
    gold_count: int
    pred_count: int
    class_report: ClassReport

    def partition(self, name) -> SpanPRF:
        return {"total": self.overall, "inclusion": self.inclusion, "exclusion": self.exclusion}[name]


# ------------------------------------------------------
# HELPERS
# ------------------------------------------------------
def _ratio(num, den):
    return num / den if den else 0.0


def _by_sentence(phrases: Sequence[Phrase], polarity: Optional[Polarity] = None) -> Dict[str, List[Phrase]]:
    grouped = defaultdict(list)
    for p in phrases:
        if polarity is None or p.polarity == polarity:
            grouped[p.sentence_id].append(p)
    return grouped


def _intersection(a: Phrase, b: Phrase) -> int:
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def _covered(phrases: Sequence[Phrase]) -> set:
    tokens = set()
    for p in phrases:
        tokens.update(range(p.start, p.end))
    return tokens


# ===================================================================
# SPAN OVERLAP METRICS
# ===================================================================
def binary_overlap(gold: Sequence[Phrase], pred: Sequence[Phrase], polarity: Polarity) -> SpanPRF:
    """Any token overlap with a same-sentence phrase of the same polarity counts as a full match."""
    gold_by = _by_sentence(gold, polarity)
    pred_by = _by_sentence(pred, polarity)

    n_pred = sum(len(v) for v in pred_by.values())
    n_gold = sum(len(v) for v in gold_by.values())
    pred_hits = sum(
        1 for sid, ps in pred_by.items() for p in ps if any(_intersection(p, g) for g in gold_by.get(sid, ()))
    )
    gold_hits = sum(
        1 for sid, gs in gold_by.items() for g in gs if any(_intersection(g, p) for p in pred_by.get(sid, ()))
    )
    return SpanPRF.of(_ratio(pred_hits, n_pred), _ratio(gold_hits, n_gold))


def proportional_overlap(gold: Sequence[Phrase], pred: Sequence[Phrase], polarity: Polarity) -> SpanPRF:
    """Each phrase earns the fraction of its tokens covered by the other side."""
    gold_by = _by_sentence(gold, polarity)
    pred_by = _by_sentence(pred, polarity)

    def credit(side, other_by):
        total, count = 0.0, 0
        for sid, phrases in side.items():
            covered = _covered(other_by.get(sid, ()))
            for p in phrases:
                total += len(covered.intersection(range(p.start, p.end))) / len(p)
                count += 1
        return _ratio(total, count)

    return SpanPRF.of(credit(pred_by, gold_by), credit(gold_by, pred_by))


def span_report(gold: Sequence[Phrase], pred: Sequence[Phrase]) -> EvalReport:
    scores = {
        pol: {
            BINARY: binary_overlap(gold, pred, pol),
            PROPORTIONAL: proportional_overlap(gold, pred, pol),
        }
        for pol in Polarity
    }
    return EvalReport(
        scores=scores,
        gold_counts={pol: sum(1 for p in gold if p.polarity == pol) for pol in Polarity},
        pred_counts={pol: sum(1 for p in pred if p.polarity == pol) for pol in Polarity},
    )


def evaluate_tag_file(gold_text: str, pred_text: str) -> EvalReport:
    """Score a predicted tag file (same CoNLL format) against a gold dataset."""
    gold = parse_dataset(gold_text)
    pred = parse_dataset(pred_text)
    if len(gold) != len(pred):
        raise Misaligned(f"sentence count mismatch: gold={len(gold)} pred={len(pred)}")

    gold_phrases, pred_phrases = [], []
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g.tags) != len(p.tags):
            raise Misaligned(f"sentence {k} ({g.sentence.id!r}): gold has {len(g.tags)} tokens, pred {len(p.tags)}")
        gold_phrases += decode_phrases(g.tags, g.sentence)
        pred_phrases += decode_phrases(p.tags, g.sentence)
    report = span_report(gold_phrases, pred_phrases)
    LOGGER.info("scored %d sentences (%d gold / %d predicted phrases)", len(gold), len(gold_phrases), len(pred_phrases))
    return report


def token_accuracy(gold_tags: Sequence[Sequence], pred_tags: Sequence[Sequence]) -> float:
    if len(gold_tags) != len(pred_tags):
        raise Misaligned("tag sequence count mismatch")
    correct = total = 0
    for g, p in zip(gold_tags, pred_tags):
        if len(g) != len(p):
            raise Misaligned("tag sequence length mismatch")
        correct += sum(1 for a, b in zip(g, p) if a == b)
        total += len(g)
    return _ratio(correct, total)


# ===================================================================
# CLASSIFICATION REPORT
# ===================================================================
def _label(value) -> str:
    return value.value if isinstance(value, Category) else str(value)


def _aggregate(gold, pred, labels, average) -> SpanPRF:
    if not gold:
        return SpanPRF()
    p, r, f, _ = precision_recall_fscore_support(gold, pred, labels=labels, average=average, zero_division=0)
    return SpanPRF(float(p), float(r), float(f))


def classification_report(
    gold: Sequence,
    pred: Sequence,
    polarities: Optional[Sequence[Optional[Polarity]]] = None,
    labels: Optional[Sequence[str]] = None,
) -> ClassReport:
    """
    Per-class P/R/F1 from the confusion matrix plus support-weighted and macro
    aggregates for the total, inclusion-only and exclusion-only partitions
    (partitions filter instances on the gold phrase's polarity).
    """
    if len(gold) != len(pred):
        raise LengthMismatch(f"{len(gold)} gold labels vs {len(pred)} predictions")
    if not gold:
        raise EmptyInput("classification report needs at least one instance")
    if polarities is not None and len(polarities) != len(gold):
        raise LengthMismatch("polarity list length mismatch")

    gold_l = [_label(g) for g in gold]
    pred_l = [_label(p) for p in pred]
    labels = list(labels) if labels is not None else [c.value for c in CATEGORIES]
    unknown = (set(gold_l) | set(pred_l)) - set(labels)
    if unknown:
        raise ValueError(f"labels outside the label set: {sorted(unknown)}")

    p, r, f, s = precision_recall_fscore_support(gold_l, pred_l, labels=labels, average=None, zero_division=0)
    per_class = {
        lab: ClassMetrics(float(p[k]), float(r[k]), float(f[k]), int(s[k])) for k, lab in enumerate(labels)
    }

    parts = {"total": list(range(len(gold_l)))}
    for name, pol in (("inclusion", Polarity.INCLUSION), ("exclusion", Polarity.EXCLUSION)):
        parts[name] = [k for k in range(len(gold_l)) if polarities is not None and polarities[k] == pol]

    weighted, macro, counts = {}, {}, {}
    for name, ids in parts.items():
        g = [gold_l[k] for k in ids]
        q = [pred_l[k] for k in ids]
        weighted[name] = _aggregate(g, q, labels, "weighted")
        macro[name] = _aggregate(g, q, labels, "macro")
        counts[name] = len(ids)

    matrix = confusion_matrix(gold_l, pred_l, labels=labels)
    accuracy = float(np.trace(matrix)) / len(gold_l)
    return ClassReport(tuple(labels), per_class, weighted, macro, matrix, accuracy, counts)


# ===================================================================
# END-TO-END PROTOCOL
# ===================================================================
def match_prediction(pred: Phrase, golds: Sequence[Phrase]) -> Optional[Phrase]:
    """Gold phrase with maximum token intersection (ties -> smaller start); None when nothing intersects."""
    best, best_inter = None, 0
    for g in sorted(golds, key=lambda ph: (ph.start, ph.end)):
        inter = _intersection(pred, g)
        if inter > best_inter:
            best, best_inter = g, inter
    return best


def end_to_end(gold: Sequence[Phrase], pred: Sequence[Phrase]) -> EndToEndReport:
    for p in list(gold) + list(pred):
        if p.category is None:
            raise Misaligned(f"phrase {p.text!r} in sentence {p.sentence_id!r} has no category")

    gold_by = _by_sentence(gold)
    pred_by = _by_sentence(pred)

    correct = {pol: 0 for pol in Polarity}
    hit_same = set()                       # gold phrases matched by a correct same-polarity prediction
    gold_labels, pred_labels, polarities = [], [], []

    for p in pred:
        g = match_prediction(p, gold_by.get(p.sentence_id, ()))
        assigned = g.category.value if g is not None else SINK
        gold_labels.append(assigned)
        pred_labels.append(p.category.value)
        polarities.append(g.polarity if g is not None else p.polarity)
        if g is not None and g.category == p.category:
            correct[p.polarity] += 1
            if g.polarity == p.polarity:
                hit_same.add(id(g))

    # gold phrases no prediction touches are lost recall: (gold, sink)
    for sid, golds in gold_by.items():
        for g in golds:
            if not any(_intersection(g, p) for p in pred_by.get(sid, ())):
                gold_labels.append(g.category.value)
                pred_labels.append(SINK)
                polarities.append(g.polarity)

    n_correct = sum(correct.values())
    overall = SpanPRF.of(_ratio(n_correct, len(pred)), _ratio(len(hit_same), len(gold)))

    def partition(pol):
        n_pred = sum(1 for p in pred if p.polarity == pol)
        golds = [g for g in gold if g.polarity == pol]
        hits = sum(1 for g in golds if id(g) in hit_same)
        return SpanPRF.of(_ratio(correct[pol], n_pred), _ratio(hits, len(golds)))

    labels = [c.value for c in CATEGORIES] + [SINK]
    if gold_labels:
        report = classification_report(gold_labels, pred_labels, polarities, labels)
    else:
        report = ClassReport(
            tuple(labels),
            {lab: ClassMetrics(0.0, 0.0, 0.0, 0) for lab in labels},
            {name: SpanPRF() for name in PARTITIONS},
            {name: SpanPRF() for name in PARTITIONS},
            np.zeros((len(labels), len(labels)), dtype=np.int64),
            0.0,
            {name: 0 for name in PARTITIONS},
        )

    return EndToEndReport(
        overall=overall,
        inclusion=partition(Polarity.INCLUSION),
        exclusion=partition(Polarity.EXCLUSION),
        correct=n_correct,
        gold_count=len(gold),
        pred_count=len(pred),
        class_report=report,
    )


def gold_phrases(sentences) -> List[Phrase]:
    """All gold phrases (with categories when the dataset carries them)."""
    phrases = []
    for ls in sentences:
        phrases += labeled_phrases(ls)
    return phrases
