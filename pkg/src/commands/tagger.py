# src/commands/tagger.py
import logging

import click

from src.commands.common import (
    INPUT_FILE,
    handle_errors,
    jobs_option,
    load_embeddings_file,
    read_text,
    split_header,
    split_options,
    write_output,
)
from src.config import DEFAULT_EPOCHS, DEFAULT_L2, DEFAULT_LR, DEFAULT_SEED, DEFAULT_WINDOW
from src.services.corpus_service import LabeledSentence, decode_phrases, parse_dataset, serialize_dataset, split_dataset
from src.services.eval_service import span_report, token_accuracy
from src.services.features_service import FeatureConfig
from src.services.model_loader import format_weight
from src.services.pipeline_service import read_raw_sentences, read_tokenized_sentences
from src.services.report_service.text_report import FORMATS, TEXT, render_span_report
from src.services.tagger_service import TrainConfig, load_model, save_model, tag_sentences, train_with_summary

LOGGER = logging.getLogger(__name__)


@click.command("train-tagger")
@click.argument("train_path", metavar="TRAIN", type=INPUT_FILE)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Model file to write.")
@click.option("--epochs", type=click.IntRange(min=1), default=DEFAULT_EPOCHS, show_default=True)
@click.option("--l2", type=click.FloatRange(min=0.0), default=DEFAULT_L2, show_default=True)
@click.option("--lr", type=float, default=DEFAULT_LR, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=DEFAULT_SEED, show_default=True)
@click.option("--window", type=int, default=DEFAULT_WINDOW, show_default=True)
@click.option("--embeddings", type=INPUT_FILE, default=None, help="word vectors, 'word v1 ... vD' per line")
@click.option("--no-affixes", is_flag=True)
@click.option("--no-shape", is_flag=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=TEXT, show_default=True)
@split_options
@handle_errors
def train_tagger_command(
    train_path, out, epochs, l2, lr, seed, window, embeddings, no_affixes, no_shape, fmt, test_fraction, split_seed
):
    """Train the CRF phrase tagger and report on the held-out part."""
    data = parse_dataset(read_text(train_path))
    train, test = split_dataset(data, test_fraction, split_seed)

    cfg = FeatureConfig(
        window=window,
        use_affixes=not no_affixes,
        use_shape=not no_shape,
        embeddings=load_embeddings_file(embeddings),
    )
    tcfg = TrainConfig(l2=l2, epochs=epochs, learning_rate=lr, seed=seed)
    model, summary = train_with_summary(train, cfg, tcfg)
    write_output(save_model(model), out)

    click.echo(f"initial_nll = {format_weight(summary.initial_nll)}")
    click.echo(f"final_nll = {format_weight(summary.final_nll)}")
    click.echo(f"features = {summary.num_features}")
    if not test:
        return

    predicted = tag_sentences(model, [ls.sentence for ls in test], cfg)
    gold_phrases, pred_phrases = [], []
    for ls, tags in zip(test, predicted):
        gold_phrases += decode_phrases(ls.tags, ls.sentence)
        pred_phrases += decode_phrases(tags, ls.sentence)

    header = split_header(split_seed, test_fraction, len(train), len(test))
    header["token_accuracy"] = format_weight(token_accuracy([ls.tags for ls in test], predicted))
    click.echo(render_span_report(span_report(gold_phrases, pred_phrases), fmt, header), nl=False)


@click.command("tag")
@click.argument("model_path", metavar="MODEL", type=INPUT_FILE)
@click.argument("input_path", metavar="INPUT", type=INPUT_FILE)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--raw", is_flag=True, help="INPUT is raw text, one sentence per line.")
@click.option("--embeddings", type=INPUT_FILE, default=None)
@jobs_option
@handle_errors
def tag_command(model_path, input_path, out, raw, embeddings, jobs):
    """Tag sentences; output is a dataset file with predicted tags."""
    model = load_model(read_text(model_path))
    if model.embedding_dim and not embeddings:
        raise click.UsageError(f"model uses {model.embedding_dim}-dim embeddings; pass --embeddings")
    cfg = model.feature_config(load_embeddings_file(embeddings, model.embedding_dim or None))

    text = read_text(input_path)
    sentences = read_raw_sentences(text) if raw else read_tokenized_sentences(text)
    predicted = tag_sentences(model, sentences, cfg, jobs=jobs)
    LOGGER.info("tagged %d sentences", len(sentences))
    write_output(serialize_dataset([LabeledSentence(s, tuple(t)) for s, t in zip(sentences, predicted)]), out)
