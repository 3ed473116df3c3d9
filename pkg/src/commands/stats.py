# src/commands/stats.py
import click

from src.commands.common import INPUT_FILE, handle_errors, read_text
from src.services.corpus_service import category_histogram, dataset_stats, parse_category_dataset, parse_dataset
from src.services.report_service.text_report import render_stats


@click.command("stats")
@click.argument("dataset", type=INPUT_FILE)
@click.option("--categories", type=INPUT_FILE, default=None, help="Category dataset to histogram as well.")
@handle_errors
def stats_command(dataset, categories):
    """Print tag, polarity and category histograms of a span dataset."""
    stats = dataset_stats(parse_dataset(read_text(dataset)))
    cat_counts = category_histogram(parse_category_dataset(read_text(categories))) if categories else None
    click.echo(render_stats(stats, cat_counts), nl=False)
