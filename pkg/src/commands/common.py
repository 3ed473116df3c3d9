# src/commands/common.py
"""Shared plumbing for the command modules: file I/O, error mapping, common options."""
import functools
import logging

import click
from pydantic import ValidationError

from src.config import DEFAULT_JOBS, DEFAULT_SEED, DEFAULT_TEST_FRACTION
from src.services.features_service import load_embeddings
from src.utils.errors import IncexError

LOGGER = logging.getLogger(__name__)

EXIT_BELOW_THRESHOLD = 1
EXIT_INPUT_ERROR = 2

INPUT_FILE = click.Path(exists=True, dir_okay=False)


def read_text(path) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def write_output(text: str, out=None):
    """Write to --out when given, stdout otherwise."""
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        LOGGER.info("wrote %s", out)
    else:
        click.echo(text, nl=False)


def load_embeddings_file(path, expected_dim=None):
    if not path:
        return None
    return load_embeddings(read_text(path), expected_dim)


def handle_errors(func):
    """Map service/input failures to `error: ...` on stderr and exit status 2."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (IncexError, OSError) as e:
            LOGGER.error("%s failed: %s", func.__name__, e)
            click.echo(f"error: {e}", err=True)
            raise click.exceptions.Exit(EXIT_INPUT_ERROR)
        except ValidationError as e:
            LOGGER.error("%s: invalid configuration: %s", func.__name__, e)
            click.echo(f"error: invalid configuration: {e}", err=True)
            raise click.exceptions.Exit(EXIT_INPUT_ERROR)

    return wrapper


def split_options(func):
    func = click.option(
        "--split-seed", type=click.IntRange(min=0), default=DEFAULT_SEED, show_default=True,
        help="Seed of the train/test shuffle.",
    )(func)
    func = click.option(
        "--test-fraction", type=click.FloatRange(0.0, 1.0, max_open=True), default=DEFAULT_TEST_FRACTION,
        show_default=True, help="Share of the data held out for the report (0 disables it).",
    )(func)
    return func


def jobs_option(func):
    return click.option(
        "--jobs", type=click.IntRange(min=1), default=DEFAULT_JOBS, show_default=True,
        help="Worker processes for tagging.",
    )(func)


def split_header(split_seed, test_fraction, train_size, test_size) -> dict:
    return {
        "split_seed": split_seed,
        "test_fraction": test_fraction,
        "train_size": train_size,
        "test_size": test_size,
    }
