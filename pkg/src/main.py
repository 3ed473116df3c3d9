import click

from src.commands.classifier import classify_command, train_classifier_command
from src.commands.evaluate import eval_command
from src.commands.filter import filter_command
from src.commands.pipeline import pipeline_command
from src.commands.split import split_command
from src.commands.stats import stats_command
from src.commands.tagger import tag_command, train_tagger_command
from src.config import LOG_LEVEL
from src.utils.logging_utils import configure_logging


# ===================================================================
# CLI
# ===================================================================
@click.group("incex")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=LOG_LEVEL,
    show_default=True,
)
def cli(log_level):
    """Inclusion/exclusion phrase mining: tag, categorize and evaluate review phrases."""
    configure_logging(log_level)


# ===================================================================
# COMMANDS
# ===================================================================
cli.add_command(stats_command)
cli.add_command(filter_command)
cli.add_command(split_command)
cli.add_command(train_tagger_command)
cli.add_command(tag_command)
cli.add_command(train_classifier_command)
cli.add_command(classify_command)
cli.add_command(eval_command)
cli.add_command(pipeline_command)


if __name__ == "__main__":
    cli()
