import os

import pytest
from pydantic import ValidationError

from src.services.classifier_service import examples_from_rows, train_classifier
from src.services.corpus_service import Category, CategorizedPhrase, Polarity
from src.services.features_service import FeatureConfig
from src.services.pipeline_service import (
    PhraseRecord,
    PipelineOutput,
    output_phrases,
    read_pipeline_output,
    read_raw_sentences,
    read_tokenized_sentences,
    run_pipeline,
    tokenize,
    write_pipeline_output,
)
from src.services.tagger_service import TrainConfig, train
from src.utils.errors import MalformedLine
from tests.helpers import DATA_DIR, make_sentence


@pytest.fixture(scope="module")
def models(synthetic):
    cfg = FeatureConfig(window=1, use_affixes=False)
    tagger = train(synthetic[:160], cfg, TrainConfig(epochs=10, seed=1))
    rows = [
        CategorizedPhrase(Category.PRICE, "cheap tickets", Polarity.INCLUSION),
        CategorizedPhrase(Category.COUPLES_FAMILY, "for kids", Polarity.INCLUSION),
        CategorizedPhrase(Category.QUEUES, "long queues", Polarity.EXCLUSION),
    ] * 5
    classifier = train_classifier(examples_from_rows(rows), TrainConfig(epochs=5, seed=1))
    return tagger, classifier


# ------------------------------------------------------
# tokenizer + readers
# ------------------------------------------------------
@pytest.mark.parametrize(
    "text, tokens",
    [
        ("Long queues, bring water!", ["Long", "queues", ",", "bring", "water", "!"]),
        ('"Nice food"', ['"', "Nice", "food", '"']),
        ("nearby...", ["nearby", ".", ".", "."]),
        ("don't e-mail", ["don't", "e-mail"]),
        ("   ", []),
    ],
)
def test_tokenize(text, tokens):
    assert tokenize(text) == tokens


def test_read_raw_sentences_skips_blank_lines():
    sentences = read_raw_sentences("first one\n\n  \nsecond one!\n")
    assert [s.id for s in sentences] == ["0", "1"]
    assert sentences[1].words == ["second", "one", "!"]


def test_read_tokenized_sentences():
    [s] = read_tokenized_sentences("#id r7\nvery\ncrowded\n")
    assert s.id == "r7" and s.words == ["very", "crowded"]


# ------------------------------------------------------
# records
# ------------------------------------------------------
def record(start=0, end=2, prob=0.75):
    return PhraseRecord(
        start=start, end=end, polarity=Polarity.EXCLUSION, category=Category.QUEUES, probability=prob, text="long queue"
    )


def test_record_validation():
    with pytest.raises(ValidationError):
        record(start=2, end=2)
    with pytest.raises(ValidationError):
        record(prob=1.5)
    with pytest.raises(ValidationError):
        record(start=-1)


def test_write_format():
    outputs = [
        PipelineOutput(sentence_id="0", phrases=[record()]),
        PipelineOutput(sentence_id="1"),
    ]
    assert write_pipeline_output(outputs) == (
        "sentence_id=0\tphrase_count=1\n"
        "0\t2\tEXC\tqueues\t0.75\tlong queue\n"
        "\n"
        "sentence_id=1\tphrase_count=0\n"
        "\n"
    )


def test_read_write_round_trip():
    outputs = [
        PipelineOutput(sentence_id="a", phrases=[record(), record(3, 5, 0.125)]),
        PipelineOutput(sentence_id="b"),
    ]
    assert read_pipeline_output(write_pipeline_output(outputs)) == outputs


def test_read_rejects_truncated_records():
    with pytest.raises(MalformedLine):
        read_pipeline_output("sentence_id=0\tphrase_count=2\n0\t2\tEXC\tqueues\t0.5\tlong queue\n\n")
    with pytest.raises(MalformedLine):
        read_pipeline_output("id=0\tphrase_count=0\n")
    with pytest.raises(MalformedLine):
        read_pipeline_output("sentence_id=0\tphrase_count=1\n0\t2\tMAYBE\tqueues\t0.5\tx y\n")


def test_output_phrases():
    [phrase] = output_phrases([PipelineOutput(sentence_id="s", phrases=[record()])])
    assert (phrase.sentence_id, phrase.span, phrase.category) == ("s", (0, 2), Category.QUEUES)


# ------------------------------------------------------
# end-to-end runs
# ------------------------------------------------------
def check_outputs(outputs, sentences):
    assert [o.sentence_id for o in outputs] == [s.id for s in sentences]
    for o, s in zip(outputs, sentences):
        last_end = 0
        for r in o.phrases:
            assert last_end <= r.start < r.end <= len(s)
            assert 0.0 <= r.probability <= 1.0
            assert r.text == " ".join(s.words[r.start:r.end])
            last_end = r.end


def test_pipeline_finds_known_phrases(models):
    tagger, classifier = models
    sentences = [make_sentence("we saw cheap tickets for kids there", "0"), make_sentence("the place was nice", "1")]
    outputs = run_pipeline(tagger, classifier, sentences)
    check_outputs(outputs, sentences)
    assert [(r.start, r.end, r.polarity) for r in outputs[0].phrases] == [(2, 6, Polarity.INCLUSION)]
    assert outputs[1].phrases == []


def test_pipeline_parallel_matches_serial(models, synthetic):
    tagger, classifier = models
    sentences = [ls.sentence for ls in synthetic[160:190]]
    assert run_pipeline(tagger, classifier, sentences, jobs=2) == run_pipeline(tagger, classifier, sentences)


def test_pipeline_on_review_corpus(models):
    tagger, classifier = models
    with open(os.path.join(DATA_DIR, "reviews.txt"), encoding="utf-8") as f:
        sentences = read_raw_sentences(f.read())
    assert len(sentences) == 6
    outputs = run_pipeline(tagger, classifier, sentences)
    check_outputs(outputs, sentences)
    assert read_pipeline_output(write_pipeline_output(outputs)) == outputs


def test_pipeline_on_regression_sentences(models):
    # multi-label, conflicting and unrelated sentences: output must stay well formed
    tagger, classifier = models
    with open(os.path.join(DATA_DIR, "regression_sentences.txt"), encoding="utf-8") as f:
        sentences = read_raw_sentences(f.read())
    assert len(sentences) == 8
    outputs = run_pipeline(tagger, classifier, sentences, jobs=2)
    check_outputs(outputs, sentences)
    assert outputs[-1].sentence_id == "7"
