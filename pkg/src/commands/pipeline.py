# src/commands/pipeline.py
import click

from src.commands.common import INPUT_FILE, handle_errors, jobs_option, read_text, write_output
from src.services.model_loader import ModelBundle
from src.services.pipeline_service import (
    read_raw_sentences,
    read_tokenized_sentences,
    run_pipeline,
    write_pipeline_output,
)


@click.command("pipeline")
@click.argument("tagger_path", metavar="TAGGER", type=INPUT_FILE)
@click.argument("classifier_path", metavar="CLASSIFIER", type=INPUT_FILE)
@click.argument("input_path", metavar="INPUT", type=INPUT_FILE)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--tokenized", is_flag=True, help="INPUT is in dataset format instead of raw text lines.")
@click.option("--embeddings", type=INPUT_FILE, default=None)
@jobs_option
@handle_errors
def pipeline_command(tagger_path, classifier_path, input_path, out, tokenized, embeddings, jobs):
    """Raw review sentences -> tagged phrases -> categories, one record per sentence."""
    bundle = ModelBundle(tagger_path, classifier_path, embeddings)
    if bundle.tagger.embedding_dim and bundle.embeddings is None:
        raise click.UsageError(f"tagger uses {bundle.tagger.embedding_dim}-dim embeddings; pass --embeddings")

    text = read_text(input_path)
    sentences = read_tokenized_sentences(text) if tokenized else read_raw_sentences(text)
    outputs = run_pipeline(bundle.tagger, bundle.classifier, sentences, bundle.feature_config(), jobs=jobs)
    write_output(write_pipeline_output(outputs), out)
