# src/commands/split.py
import logging

import click

from src.commands.common import INPUT_FILE, handle_errors, read_text, split_options, write_output
from src.services.corpus_service import (
    parse_category_dataset,
    parse_dataset,
    serialize_category_dataset,
    serialize_dataset,
    split_dataset,
)

LOGGER = logging.getLogger(__name__)


@click.command("split")
@click.argument("dataset", type=INPUT_FILE)
@click.option("--train-out", type=click.Path(dir_okay=False), required=True)
@click.option("--test-out", type=click.Path(dir_okay=False), required=True)
@click.option("--categories", "is_category_file", is_flag=True, help="DATASET is a category dataset.")
@split_options
@handle_errors
def split_command(dataset, train_out, test_out, is_category_file, test_fraction, split_seed):
    """Deterministic seeded train/test split of a span or category dataset."""
    text = read_text(dataset)
    if is_category_file:
        train, test = split_dataset(parse_category_dataset(text), test_fraction, split_seed)
        write_output(serialize_category_dataset(train), train_out)
        write_output(serialize_category_dataset(test), test_out)
    else:
        train, test = split_dataset(parse_dataset(text), test_fraction, split_seed)
        write_output(serialize_dataset(train), train_out)
        write_output(serialize_dataset(test), test_out)
    LOGGER.info("split %s: %d train / %d test (seed %d)", dataset, len(train), len(test), split_seed)
    click.echo(f"train_size = {len(train)}\ntest_size = {len(test)}\n", nl=False)
