# src/commands/evaluate.py
import logging

import click

from src.commands.common import EXIT_BELOW_THRESHOLD, INPUT_FILE, handle_errors, read_text
from src.services.corpus_service import Polarity, parse_category_dataset, parse_dataset
from src.services.eval_service import (
    BINARY,
    classification_report,
    end_to_end,
    evaluate_tag_file,
    gold_phrases,
)
from src.services.pipeline_service import output_phrases, read_pipeline_output
from src.services.report_service.text_report import (
    FORMATS,
    TEXT,
    render_class_report,
    render_e2e_report,
    render_span_report,
)
from src.utils.errors import Misaligned

LOGGER = logging.getLogger(__name__)

MODES = ("spans", "classes", "e2e")


# ------------------------------------------------------
# MODE RUNNERS -> (rendered text, headline F1, report kwargs for the PDF)
# ------------------------------------------------------
def _spans(gold_text, pred_text, fmt):
    report = evaluate_tag_file(gold_text, pred_text)
    # headline: the weaker polarity under binary overlap
    headline = min(report.get(pol, BINARY).f1 for pol in Polarity)
    return render_span_report(report, fmt), headline, {"span_report": report}


def _classes(gold_text, pred_text, fmt):
    gold = parse_category_dataset(gold_text)
    pred = parse_category_dataset(pred_text)
    if len(gold) != len(pred):
        raise Misaligned(f"row count mismatch: gold={len(gold)} pred={len(pred)}")
    for k, (g, p) in enumerate(zip(gold, pred), start=1):
        if g.text != p.text:
            raise Misaligned(f"row {k}: gold phrase {g.text!r} vs predicted {p.text!r}")
    report = classification_report(
        [g.category for g in gold], [p.category for p in pred], [g.polarity for g in gold]
    )
    return render_class_report(report, fmt), report.weighted["total"].f1, {"class_report": report}


def _e2e(gold_text, pred_text, fmt):
    gold_sentences = parse_dataset(gold_text)
    outputs = read_pipeline_output(pred_text)
    known = {ls.sentence.id: len(ls.sentence) for ls in gold_sentences}
    for o in outputs:
        if o.sentence_id not in known:
            raise Misaligned(f"predicted sentence {o.sentence_id!r} not in gold file")
        for r in o.phrases:
            if r.end > known[o.sentence_id]:
                raise Misaligned(f"phrase [{r.start},{r.end}) outside gold sentence {o.sentence_id!r}")
    report = end_to_end(gold_phrases(gold_sentences), output_phrases(outputs))
    return render_e2e_report(report, fmt), report.overall.f1, {"e2e_report": report}


RUNNERS = {"spans": _spans, "classes": _classes, "e2e": _e2e}


@click.command("eval")
@click.argument("gold_path", metavar="GOLD", type=INPUT_FILE)
@click.argument("pred_path", metavar="PRED", type=INPUT_FILE)
@click.option("--mode", type=click.Choice(MODES), default="spans", show_default=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=TEXT, show_default=True)
@click.option("--pdf", "pdf_path", type=click.Path(dir_okay=False), default=None, help="Also write a PDF report.")
@click.option("--min-f1", type=click.FloatRange(0.0, 1.0), default=None, help="Exit 1 when the headline F1 is lower.")
@handle_errors
def eval_command(gold_path, pred_path, mode, fmt, pdf_path, min_f1):
    """
    Score predictions against gold data.

    \b
    spans    GOLD and PRED are span datasets (tags in column 2)
    classes  GOLD is a category dataset, PRED the 'category<TAB>phrase' output of classify
    e2e      GOLD is a span dataset with categories, PRED a pipeline output file
    """
    text, headline, parts = RUNNERS[mode](read_text(gold_path), read_text(pred_path), fmt)
    click.echo(text, nl=False)

    if pdf_path:
        from src.services.report_service.eval_report import EvaluationReport

        pdf = EvaluationReport(mode, header={"gold": gold_path, "predictions": pred_path}).build(**parts)
        with open(pdf_path, "wb") as f:
            f.write(pdf.getvalue())
        LOGGER.info("wrote PDF report %s", pdf_path)

    if min_f1 is not None and headline < min_f1:
        click.echo(f"headline F1 {headline:.4f} below --min-f1 {min_f1}", err=True)
        raise click.exceptions.Exit(EXIT_BELOW_THRESHOLD)
