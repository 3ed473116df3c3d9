# src/services/report_service/text_report.py
"""
Plain-text tables (pandas) and `key = value` lines for every report the CLI prints.

kv keys:
    <polarity>.<binary|proportional>.<precision|recall|f1>, <polarity>.gold_count, <polarity>.pred_count
    class.<label>.<precision|recall|f1|support>, <weighted|macro>.<total|inclusion|exclusion>.<metric>,
    count.<partition>, accuracy, confusion.<gold>.<pred> (non-zero cells only)
    e2e.<total|inclusion|exclusion>.<metric>, e2e.correct, e2e.gold_count, e2e.pred_count
"""
from typing import Dict, List, Mapping, Optional

import pandas as pd

from src.services.corpus_service import DatasetStats, Polarity
from src.services.eval_service import MODES, PARTITIONS, ClassReport, EndToEndReport, EvalReport

TEXT = "text"
KV = "kv"
FORMATS = (TEXT, KV)

POLARITY_NAMES = {Polarity.INCLUSION: "inclusion", Polarity.EXCLUSION: "exclusion"}
METRICS = ("precision", "recall", "f1")


def _num(value) -> str:
    return repr(float(value))


def _table(df: pd.DataFrame) -> str:
    return df.to_string(index=False, float_format=lambda v: f"{v:.4f}") + "\n"


def _header(header: Optional[Mapping], fmt: str) -> str:
    if not header:
        return ""
    if fmt == KV:
        return "".join(f"{k} = {v}\n" for k, v in header.items())
    return "".join(f"# {k}: {v}\n" for k, v in header.items())


def _kv(pairs: List) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs)


# ------------------------------------------------------
# SPAN OVERLAP
# ------------------------------------------------------
def span_rows(report: EvalReport) -> List[Dict]:
    rows = []
    for pol, name in POLARITY_NAMES.items():
        for mode in MODES:
            prf = report.get(pol, mode)
            rows.append({
                "polarity": name,
                "mode": mode,
                "precision": prf.precision,
                "recall": prf.recall,
                "f1": prf.f1,
                "gold": report.gold_counts[pol],
                "pred": report.pred_counts[pol],
            })
    return rows


def render_span_report(report: EvalReport, fmt: str = TEXT, header: Optional[Mapping] = None) -> str:
    out = _header(header, fmt)
    if fmt == KV:
        pairs = []
        for pol, name in POLARITY_NAMES.items():
            for mode in MODES:
                prf = report.get(pol, mode)
                pairs += [(f"{name}.{mode}.{m}", _num(getattr(prf, m))) for m in METRICS]
            pairs.append((f"{name}.gold_count", report.gold_counts[pol]))
            pairs.append((f"{name}.pred_count", report.pred_counts[pol]))
        return out + _kv(pairs)
    return out + _table(pd.DataFrame(span_rows(report)))


# ------------------------------------------------------
# CLASSIFICATION
# ------------------------------------------------------
def class_rows(report: ClassReport) -> List[Dict]:
    return [
        {"class": lab, "precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
        for lab, m in report.per_class.items()
    ]


def aggregate_rows(report: ClassReport) -> List[Dict]:
    rows = []
    for average, values in (("weighted", report.weighted), ("macro", report.macro)):
        for part in PARTITIONS:
            prf = values[part]
            rows.append({
                "average": average,
                "partition": part,
                "precision": prf.precision,
                "recall": prf.recall,
                "f1": prf.f1,
                "count": report.counts.get(part, 0),
            })
    return rows


def _class_kv(report: ClassReport) -> List:
    pairs = []
    for lab, m in report.per_class.items():
        pairs += [(f"class.{lab}.{k}", _num(getattr(m, k))) for k in METRICS]
        pairs.append((f"class.{lab}.support", m.support))
    for average, values in (("weighted", report.weighted), ("macro", report.macro)):
        for part in PARTITIONS:
            pairs += [(f"{average}.{part}.{k}", _num(getattr(values[part], k))) for k in METRICS]
    pairs += [(f"count.{part}", report.counts.get(part, 0)) for part in PARTITIONS]
    pairs.append(("accuracy", _num(report.accuracy)))
    for a, gold in enumerate(report.labels):
        for b, pred in enumerate(report.labels):
            if report.confusion[a, b]:
                pairs.append((f"confusion.{gold}.{pred}", int(report.confusion[a, b])))
    return pairs


def confusion_frame(report: ClassReport) -> pd.DataFrame:
    return pd.DataFrame(report.confusion, index=list(report.labels), columns=list(report.labels))


def render_class_report(report: ClassReport, fmt: str = TEXT, header: Optional[Mapping] = None) -> str:
    out = _header(header, fmt)
    if fmt == KV:
        return out + _kv(_class_kv(report))
    out += _table(pd.DataFrame(class_rows(report)))
    out += "\n" + _table(pd.DataFrame(aggregate_rows(report)))
    out += f"\naccuracy {report.accuracy:.4f}\n"
    out += "\nconfusion (rows gold, columns predicted)\n" + confusion_frame(report).to_string() + "\n"
    return out


# ------------------------------------------------------
# END TO END
# ------------------------------------------------------
def render_e2e_report(report: EndToEndReport, fmt: str = TEXT, header: Optional[Mapping] = None) -> str:
    out = _header(header, fmt)
    if fmt == KV:
        pairs = []
        for part in PARTITIONS:
            prf = report.partition(part)
            pairs += [(f"e2e.{part}.{m}", _num(getattr(prf, m))) for m in METRICS]
        pairs += [
            ("e2e.correct", report.correct),
            ("e2e.gold_count", report.gold_count),
            ("e2e.pred_count", report.pred_count),
        ]
        return out + _kv(pairs + _class_kv(report.class_report))

    rows = [
        {"partition": part, **{m: getattr(report.partition(part), m) for m in METRICS}}
        for part in PARTITIONS
    ]
    out += _table(pd.DataFrame(rows))
    out += f"\ncorrect {report.correct}  gold {report.gold_count}  predicted {report.pred_count}\n\n"
    return out + render_class_report(report.class_report, TEXT)


# ------------------------------------------------------
# DATASET STATISTICS
# ------------------------------------------------------
def render_stats(stats: DatasetStats, category_counts: Optional[Mapping] = None) -> str:
    tags = pd.DataFrame([{"tag": t.value, "count": n} for t, n in stats.tag_counts.items()])
    out = f"sentences {stats.sentences}  tokens {stats.tokens}  phrases {stats.total_phrases}\n\n"
    out += _table(tags)

    pols = pd.DataFrame([{"polarity": POLARITY_NAMES[p], "phrases": n} for p, n in stats.polarity_counts.items()])
    out += "\n" + _table(pols)

    if stats.total_phrases and stats.uncategorized < stats.total_phrases:
        cats = pd.DataFrame([{"category": c.value, "phrases": n} for c, n in stats.category_counts.items()])
        out += "\n" + _table(cats)
        out += f"uncategorized {stats.uncategorized}\n"

    if category_counts is not None:
        cats = pd.DataFrame([{"category": c.value, "rows": n} for c, n in category_counts.items()])
        out += "\ncategory dataset\n" + _table(cats)
    return out
