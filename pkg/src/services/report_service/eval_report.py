import logging
import tempfile

import pandas as pd
from reportlab.platypus import PageBreak

from src.services.eval_service import ClassReport, EndToEndReport, EvalReport
from src.services.report_service.base_report import BaseReport
from src.services.report_service.text_report import aggregate_rows, class_rows, confusion_frame, span_rows
from src.utils.chart_utils import generate_confusion_heatmap, generate_prf_bar_chart

LOGGER = logging.getLogger(__name__)


def _fmt(v):
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def _table_data(rows):
    if not rows:
        return [["(empty)"]]
    header = list(rows[0].keys())
    return [header] + [[_fmt(r[k]) for k in header] for r in rows]


class EvaluationReport(BaseReport):
    """PDF version of the `eval` output: metrics box, tables and charts."""

    def __init__(self, mode: str, header=None, logo_path=None, chart_dir=None):
        super().__init__(
            title="Phrase Mining Evaluation",
            subtitle=f"{mode} evaluation",
            logo_path=logo_path,
        )
        self.mode = mode
        self.header = dict(header or {})
        self.chart_dir = chart_dir

    def build(self, span_report: EvalReport = None, class_report: ClassReport = None, e2e_report: EndToEndReport = None):
        if span_report is None and class_report is None and e2e_report is None:
            raise ValueError("nothing to report")

        story = []
        self.add_title_page(story, self.header)

        with tempfile.TemporaryDirectory() as scratch:
            chart_dir = self.chart_dir or scratch

            if span_report is not None:
                self._span_section(story, span_report, chart_dir)
            if e2e_report is not None:
                self._e2e_section(story, e2e_report, chart_dir)
                class_report = e2e_report.class_report
            if class_report is not None:
                self._class_section(story, class_report, chart_dir)

            # images are read while the document is built
            pdf = self.export(story)
        LOGGER.info("built %s PDF report", self.mode)
        return pdf

    # =====================================================
    # SECTIONS
    # =====================================================
    def _span_section(self, story, report, chart_dir):
        rows = span_rows(report)
        self.add_metrics_box(story, {
            f"{r['polarity']} {r['mode']} F1": f"{r['f1']:.3f}" for r in rows
        })
        self.add_table(
            story, "Span Overlap", _table_data(rows),
            description="Binary overlap gives full credit to any token overlap; proportional overlap "
                        "gives the covered fraction of each phrase.",
        )
        df = pd.DataFrame(rows)
        df["label"] = df["polarity"] + " / " + df["mode"]
        path = generate_prf_bar_chart(df, filename="span_prf.png", title="Span overlap", out_dir=chart_dir)
        self.add_chart(story, "Span Overlap by Polarity", path)
        story.append(PageBreak())

    def _e2e_section(self, story, report, chart_dir):
        self.add_metrics_box(story, {
            "End-to-end F1": f"{report.overall.f1:.3f}",
            "Correct": str(report.correct),
            "Gold phrases": str(report.gold_count),
            "Predicted phrases": str(report.pred_count),
        })
        rows = [
            {"partition": p, "precision": prf.precision, "recall": prf.recall, "f1": prf.f1}
            for p, prf in (("total", report.overall), ("inclusion", report.inclusion), ("exclusion", report.exclusion))
        ]
        self.add_table(
            story, "End-to-End", _table_data(rows),
            description="Each predicted phrase takes the label of the gold phrase it overlaps most; "
                        "predictions overlapping nothing fall into the sink class.",
        )
        df = pd.DataFrame(rows).rename(columns={"partition": "label"})
        path = generate_prf_bar_chart(df, filename="e2e_prf.png", title="End-to-end", out_dir=chart_dir)
        self.add_chart(story, "End-to-End Scores", path)
        story.append(PageBreak())

    def _class_section(self, story, report, chart_dir):
        self.add_metrics_box(story, {
            "Weighted F1": f"{report.weighted['total'].f1:.3f}",
            "Macro F1": f"{report.macro['total'].f1:.3f}",
            "Accuracy": f"{report.accuracy:.3f}",
            "Instances": str(report.counts.get("total", 0)),
        })
        self.add_table(story, "Per-Category Scores", _table_data(class_rows(report)))
        self.add_table(story, "Averages", _table_data(aggregate_rows(report)))
        path = generate_confusion_heatmap(confusion_frame(report), filename="confusion.png", out_dir=chart_dir)
        self.add_chart(story, "Confusion Matrix", path, height=5.0)
