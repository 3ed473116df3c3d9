# src/services/pipeline_service.py
"""
Review text -> phrases -> categories.

Output records (one per input sentence, blank line after each):

    sentence_id=<id><TAB>phrase_count=<k>
    <start><TAB><end><TAB><INC|EXC><TAB><category><TAB><probability><TAB><phrase text>   (k lines)
"""
import logging
import unicodedata
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.services.classifier_service import ClassifierModel, predict_category
from src.services.corpus_service import (
    Category,
    Phrase,
    Polarity,
    Sentence,
    decode_phrases,
    parse_category,
    parse_dataset,
    parse_polarity,
)
from src.services.features_service import FeatureConfig
from src.services.model_loader import format_weight
from src.services.tagger_service import CrfModel, tag_sentences
from src.utils.errors import MalformedLine

LOGGER = logging.getLogger(__name__)


# ------------------------------------------------------
# TOKENIZER
# ------------------------------------------------------
def _is_punct(ch):
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> List[str]:
    """Whitespace split; leading/trailing punctuation becomes one token per character."""
    tokens = []
    for chunk in text.split():
        lead = []
        while chunk and _is_punct(chunk[0]):
            lead.append(chunk[0])
            chunk = chunk[1:]
        trail = []
        while chunk and _is_punct(chunk[-1]):
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens += lead
        if chunk:
            tokens.append(chunk)
        tokens += reversed(trail)
    return tokens


def read_raw_sentences(text: str) -> List[Sentence]:
    """One sentence per non-blank line; ids are the 0-based positions among those lines."""
    sentences = []
    for raw in text.split("\n"):
        words = tokenize(raw)
        if words:
            sentences.append(Sentence.from_words(str(len(sentences)), words))
    return sentences


def read_tokenized_sentences(text: str) -> List[Sentence]:
    return [ls.sentence for ls in parse_dataset(text, allow_untagged=True)]


# ------------------------------------------------------
# OUTPUT RECORDS
# ------------------------------------------------------
class PhraseRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: int = Field(ge=0)
    end: int
    polarity: Polarity
    category: Category
    probability: float = Field(ge=0.0, le=1.0)
    text: str

    @model_validator(mode="after")
    def _check_span(self):
        if self.end <= self.start:
            raise ValueError(f"invalid span [{self.start},{self.end})")
        return self


class PipelineOutput(BaseModel):
    model_config = ConfigDict(frozen=True)

    sentence_id: str
    phrases: List[PhraseRecord] = Field(default_factory=list)


def classify_phrases(classifier: ClassifierModel, sentence: Sentence, phrases: Sequence[Phrase]) -> PipelineOutput:
    records = []
    for p in phrases:
        category, scores = predict_category(classifier, p, sentence)
        records.append(
            PhraseRecord(
                start=p.start,
                end=p.end,
                polarity=p.polarity,
                category=category,
                probability=scores[category],
                text=p.text,
            )
        )
    return PipelineOutput(sentence_id=sentence.id, phrases=records)


def run_pipeline(
    tagger: CrfModel,
    classifier: ClassifierModel,
    sentences: Sequence[Sentence],
    cfg: Optional[FeatureConfig] = None,
    jobs: int = 1,
) -> List[PipelineOutput]:
    cfg = cfg or tagger.feature_config()
    all_tags = tag_sentences(tagger, sentences, cfg, jobs=jobs)
    outputs = [
        classify_phrases(classifier, sentence, decode_phrases(tags, sentence))
        for sentence, tags in zip(sentences, all_tags)
    ]
    LOGGER.info(
        "pipeline: %d sentences, %d phrases", len(outputs), sum(len(o.phrases) for o in outputs)
    )
    return outputs


def output_phrases(outputs: Sequence[PipelineOutput]) -> List[Phrase]:
    """Flatten records into categorized phrases (for end-to-end scoring)."""
    return [
        Phrase(o.sentence_id, r.start, r.end, r.polarity, r.category, r.text)
        for o in outputs
        for r in o.phrases
    ]


# ------------------------------------------------------
# READ / WRITE
# ------------------------------------------------------
def write_pipeline_output(outputs: Sequence[PipelineOutput]) -> str:
    lines = []
    for o in outputs:
        lines.append(f"sentence_id={o.sentence_id}\tphrase_count={len(o.phrases)}")
        for r in o.phrases:
            lines.append(
                f"{r.start}\t{r.end}\t{r.polarity.value}\t{r.category.value}\t{format_weight(r.probability)}\t{r.text}"
            )
        lines.append("")
    return "".join(line + "\n" for line in lines)


def _header_value(field, key, line_no):
    prefix = key + "="
    if not field.startswith(prefix):
        raise MalformedLine(f"expected '{prefix}...', got {field!r}", line_no)
    return field[len(prefix):]


def read_pipeline_output(text: str) -> List[PipelineOutput]:
    lines = text.split("\n")
    outputs = []
    k = 0
    while k < len(lines):
        if lines[k] == "":
            k += 1
            continue
        line_no = k + 1
        cols = lines[k].split("\t")
        if len(cols) != 2:
            raise MalformedLine("expected 'sentence_id=<id><TAB>phrase_count=<k>'", line_no)
        sid = _header_value(cols[0], "sentence_id", line_no)
        try:
            count = int(_header_value(cols[1], "phrase_count", line_no))
        except ValueError:
            raise MalformedLine(f"bad phrase count {cols[1]!r}", line_no) from None

        records = []
        for j in range(count):
            k += 1
            if k >= len(lines) or lines[k] == "":
                raise MalformedLine(f"record for sentence {sid!r} ends after {j} of {count} phrases", k + 1)
            fields = lines[k].split("\t", 5)
            if len(fields) != 6:
                raise MalformedLine("expected 6 tab-separated phrase fields", k + 1)
            start, end, pol, cat, prob, phrase_text = fields
            try:
                records.append(
                    PhraseRecord(
                        start=int(start),
                        end=int(end),
                        polarity=parse_polarity(pol, k + 1),
                        category=parse_category(cat, k + 1),
                        probability=float(prob),
                        text=phrase_text,
                    )
                )
            except ValueError as exc:
                raise MalformedLine(f"bad phrase record: {exc}", k + 1) from None
        outputs.append(PipelineOutput(sentence_id=sid, phrases=records))
        k += 1
    return outputs
