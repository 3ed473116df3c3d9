# src/commands/classifier.py
import logging

import click

from src.commands.common import INPUT_FILE, handle_errors, read_text, split_header, split_options, write_output
from src.config import DEFAULT_EPOCHS, DEFAULT_L2, DEFAULT_LR, DEFAULT_SEED
from src.services.classifier_service import (
    examples_from_rows,
    load_classifier,
    predict_category,
    save_classifier,
    train_classifier,
)
from src.services.corpus_service import decode_phrases, parse_category_dataset, parse_dataset, split_dataset
from src.services.eval_service import classification_report
from src.services.features_service import text_phrase
from src.services.pipeline_service import classify_phrases, write_pipeline_output
from src.services.report_service.text_report import FORMATS, TEXT, render_class_report
from src.services.tagger_service import TrainConfig

LOGGER = logging.getLogger(__name__)


def read_phrase_lines(text: str):
    """
    One phrase per non-blank line. Category dataset rows are accepted too
    (the phrase is then the second column), so gold files can be re-classified.
    """
    phrases = []
    for raw in text.split("\n"):
        line = raw.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        phrase = cols[1] if len(cols) > 1 else cols[0]
        if phrase.split():
            phrases.append(" ".join(phrase.split()))
    return phrases


@click.command("train-classifier")
@click.argument("train_path", metavar="TRAIN", type=INPUT_FILE)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Model file to write.")
@click.option("--epochs", type=click.IntRange(min=1), default=DEFAULT_EPOCHS, show_default=True)
@click.option("--l2", type=click.FloatRange(min=0.0), default=DEFAULT_L2, show_default=True)
@click.option("--lr", type=float, default=DEFAULT_LR, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=DEFAULT_SEED, show_default=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=TEXT, show_default=True)
@split_options
@handle_errors
def train_classifier_command(train_path, out, epochs, l2, lr, seed, fmt, test_fraction, split_seed):
    """Train the 11-way phrase classifier on a category dataset."""
    rows = parse_category_dataset(read_text(train_path))
    train_rows, test_rows = split_dataset(rows, test_fraction, split_seed)

    tcfg = TrainConfig(l2=l2, epochs=epochs, learning_rate=lr, seed=seed)
    model = train_classifier(examples_from_rows(train_rows), tcfg)
    write_output(save_classifier(model), out)

    click.echo(f"features = {model.num_features}")
    if not test_rows:
        return

    predicted = [predict_category(model, *text_phrase(r.text))[0] for r in test_rows]
    report = classification_report(
        [r.category for r in test_rows], predicted, [r.polarity for r in test_rows]
    )
    header = split_header(split_seed, test_fraction, len(train_rows), len(test_rows))
    click.echo(render_class_report(report, fmt, header), nl=False)


@click.command("classify")
@click.argument("model_path", metavar="MODEL", type=INPUT_FILE)
@click.argument("input_path", metavar="INPUT", type=INPUT_FILE)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--spans", is_flag=True, help="INPUT is a tagged dataset; classify its decoded phrases.")
@handle_errors
def classify_command(model_path, input_path, out, spans):
    """
    Categorize phrases.

    Default output is 'category<TAB>phrase' per input phrase; with --spans the
    output uses the pipeline record format.
    """
    model = load_classifier(read_text(model_path))
    text = read_text(input_path)

    if spans:
        outputs = [
            classify_phrases(model, ls.sentence, decode_phrases(ls.tags, ls.sentence))
            for ls in parse_dataset(text)
        ]
        write_output(write_pipeline_output(outputs), out)
        return

    lines = []
    for phrase_text in read_phrase_lines(text):
        category, _ = predict_category(model, *text_phrase(phrase_text))
        lines.append(f"{category.value}\t{phrase_text}\n")
    LOGGER.info("classified %d phrases", len(lines))
    write_output("".join(lines), out)
