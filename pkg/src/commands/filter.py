# src/commands/filter.py
import click

from src.commands.common import INPUT_FILE, handle_errors, read_text, write_output
from src.services.corpus_service import CATEGORIES, filter_sentences, load_lexicon
from src.services.pipeline_service import read_raw_sentences, read_tokenized_sentences


@click.command("filter")
@click.argument("sentences", type=INPUT_FILE)
@click.argument("lexicon", type=INPUT_FILE)
@click.option("--tokenized", is_flag=True, help="SENTENCES is in dataset format instead of one sentence per line.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@handle_errors
def filter_command(sentences, lexicon, tokenized, out):
    """
    Keep sentences mentioning a lexicon keyword.

    Output: <id><TAB><categories, comma separated><TAB><tokens>
    """
    lex = load_lexicon(read_text(lexicon))
    text = read_text(sentences)
    parsed = read_tokenized_sentences(text) if tokenized else read_raw_sentences(text)

    lines = []
    for sentence, matched in filter_sentences(parsed, lex):
        cats = ",".join(c.value for c in CATEGORIES if c in matched)
        lines.append(f"{sentence.id}\t{cats}\t{' '.join(sentence.words)}\n")
    write_output("".join(lines), out)
