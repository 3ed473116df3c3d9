import os

import pytest
from click.testing import CliRunner

from src.main import cli
from tests.helpers import DATA_DIR

GOLD = os.path.join(DATA_DIR, "gold_spans.tsv")
CATEGORIES = os.path.join(DATA_DIR, "categories.tsv")
LEXICON = os.path.join(DATA_DIR, "lexicon.tsv")
REVIEWS = os.path.join(DATA_DIR, "reviews.txt")


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(cli, ["--log-level", "ERROR", *[str(a) for a in args]])

    return invoke


def kv_lines(text):
    return dict(line.split(" = ", 1) for line in text.splitlines() if " = " in line)


@pytest.fixture
def models(run, tmp_path):
    tagger = tmp_path / "tagger.model"
    classifier = tmp_path / "classifier.model"
    assert run("train-tagger", GOLD, "--out", tagger, "--epochs", 5, "--test-fraction", 0).exit_code == 0
    assert run("train-classifier", CATEGORIES, "--out", classifier, "--epochs", 5, "--test-fraction", 0).exit_code == 0
    return tagger, classifier


# ------------------------------------------------------
# dataset commands
# ------------------------------------------------------
def test_stats(run):
    result = run("stats", GOLD, "--categories", CATEGORIES)
    assert result.exit_code == 0
    assert result.stdout.startswith("sentences 8  tokens 35  phrases 9\n")
    assert "category dataset" in result.stdout


def test_empty_dataset_is_input_error(run, tmp_path):
    empty = tmp_path / "empty.tsv"
    empty.write_text("")
    result = run("stats", empty)
    assert result.exit_code == 2
    assert "error:" in result.stderr
    assert result.stdout == ""


def test_missing_file_is_usage_error(run, tmp_path):
    assert run("stats", tmp_path / "nope.tsv").exit_code == 2


def test_bad_log_level(run):
    result = CliRunner().invoke(cli, ["--log-level", "LOUD", "stats", GOLD])
    assert result.exit_code == 2


def test_filter(run):
    result = run("filter", REVIEWS, LEXICON)
    assert result.exit_code == 0
    assert result.stdout.splitlines() == [
        "0\tcrowd\tThe museum was very crowded today .",
        "1\tqueues\tLong queues at the entrance , bring water !",
        "2\tprice\tGreat for kids and very expensive .",
        "3\tprice\tCheap tickets online ; no ramps for wheelchairs .",
    ]


def test_split(run, tmp_path):
    train, test = tmp_path / "train.tsv", tmp_path / "test.tsv"
    result = run("split", GOLD, "--train-out", train, "--test-out", test, "--test-fraction", 0.25)
    assert result.exit_code == 0
    assert kv_lines(result.stdout) == {"train_size": "6", "test_size": "2"}
    again = tmp_path / "again.tsv"
    run("split", GOLD, "--train-out", again, "--test-out", tmp_path / "t2.tsv", "--test-fraction", 0.25)
    assert again.read_bytes() == train.read_bytes()


def test_split_categories(run, tmp_path):
    train, test = tmp_path / "train.tsv", tmp_path / "test.tsv"
    result = run("split", CATEGORIES, "--categories", "--train-out", train, "--test-out", test)
    assert result.exit_code == 0
    assert len(train.read_text().splitlines()) + len(test.read_text().splitlines()) == 24


# ------------------------------------------------------
# eval
# ------------------------------------------------------
def test_eval_identical_spans(run):
    result = run("eval", GOLD, GOLD, "--format", "kv")
    assert result.exit_code == 0
    values = kv_lines(result.stdout)
    for pol in ("inclusion", "exclusion"):
        for mode in ("binary", "proportional"):
            assert values[f"{pol}.{mode}.f1"] == "1.0"


def test_eval_misaligned(run, tmp_path):
    pred = tmp_path / "pred.tsv"
    pred.write_text("the\tO\n")
    result = run("eval", GOLD, pred)
    assert result.exit_code == 2
    assert "error:" in result.stderr


def test_eval_min_f1(run, tmp_path):
    pred = tmp_path / "pred.tsv"
    lines = []
    for line in open(GOLD, encoding="utf-8").read().splitlines():
        lines.append(line if not line or line.startswith("#") else line.split("\t")[0] + "\tO")
    pred.write_text("\n".join(lines) + "\n")
    assert run("eval", GOLD, pred, "--min-f1", 0.5).exit_code == 1
    assert run("eval", GOLD, GOLD, "--min-f1", 0.5).exit_code == 0


def test_eval_classes(run, tmp_path, models):
    _, classifier = models
    pred = tmp_path / "pred.tsv"
    assert run("classify", classifier, CATEGORIES, "--out", pred).exit_code == 0
    result = run("eval", CATEGORIES, pred, "--mode", "classes", "--format", "kv")
    assert result.exit_code == 0
    values = kv_lines(result.stdout)
    assert values["count.total"] == "24"
    assert 0.0 <= float(values["weighted.total.f1"]) <= 1.0


def test_eval_e2e_with_pdf(run, tmp_path, models):
    _, classifier = models
    pred = tmp_path / "pred.out"
    assert run("classify", classifier, GOLD, "--spans", "--out", pred).exit_code == 0
    pdf = tmp_path / "report.pdf"
    result = run("eval", GOLD, pred, "--mode", "e2e", "--format", "kv", "--pdf", pdf)
    assert result.exit_code == 0
    values = kv_lines(result.stdout)
    # gold spans re-classified: every prediction matches its own gold phrase
    assert float(values["e2e.total.recall"]) == pytest.approx(float(values["e2e.total.precision"]))
    assert values["e2e.gold_count"] == values["e2e.pred_count"] == "9"
    assert pdf.read_bytes().startswith(b"%PDF")


# ------------------------------------------------------
# training + pipeline
# ------------------------------------------------------
def test_train_tagger_is_deterministic(run, tmp_path):
    outputs = []
    for name in ("a.model", "b.model"):
        path = tmp_path / name
        result = run("train-tagger", GOLD, "--out", path, "--epochs", 3, "--test-fraction", 0.25, "--format", "kv")
        assert result.exit_code == 0
        outputs.append(path.read_bytes())
        values = kv_lines(result.stdout)
        assert float(values["final_nll"]) < float(values["initial_nll"])
        assert values["test_size"] == "2"
        assert "inclusion.binary.f1" in values
    assert outputs[0] == outputs[1]
    assert outputs[0].startswith(b"#version 1\n#type crf\n")


def test_train_tag_eval_is_deterministic(run, tmp_path):
    runs = []
    for name in ("first", "second"):
        root = tmp_path / name
        root.mkdir()
        model, tagged = root / "tagger.model", root / "tagged.tsv"
        trained = run("train-tagger", GOLD, "--out", model, "--epochs", 3, "--test-fraction", 0.25, "--format", "kv")
        tag = run("tag", model, GOLD, "--out", tagged)
        scored = run("eval", GOLD, tagged, "--format", "kv")
        assert trained.exit_code == tag.exit_code == scored.exit_code == 0
        runs.append((trained.stdout, tag.stdout, scored.stdout, model.read_bytes(), tagged.read_bytes()))
    assert runs[0] == runs[1]
    assert "inclusion.binary.f1" in runs[0][2]


def test_train_classifier_report(run, tmp_path):
    result = run("train-classifier", CATEGORIES, "--out", tmp_path / "c.model", "--epochs", 5, "--format", "kv")
    assert result.exit_code == 0
    values = kv_lines(result.stdout)
    assert int(values["features"]) > 0
    assert "weighted.total.f1" in values


def test_train_classifier_single_category(run, tmp_path):
    rows = tmp_path / "rows.tsv"
    rows.write_text("price\tcheap\nprice\texpensive\n")
    result = run("train-classifier", rows, "--out", tmp_path / "c.model", "--test-fraction", 0)
    assert result.exit_code == 2


def test_classify_phrase_lines(run, tmp_path, models):
    _, classifier = models
    phrases = tmp_path / "phrases.txt"
    phrases.write_text("very expensive\n\nhuge  queue\n")
    result = run("classify", classifier, phrases)
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert [line.split("\t")[1] for line in lines] == ["very expensive", "huge queue"]


def test_pipeline_equals_tag_then_classify(run, tmp_path, models):
    tagger, classifier = models
    tagged = tmp_path / "tagged.tsv"
    assert run("tag", tagger, REVIEWS, "--raw", "--out", tagged).exit_code == 0
    two_step = run("classify", classifier, tagged, "--spans")
    one_step = run("pipeline", tagger, classifier, REVIEWS)
    assert one_step.exit_code == two_step.exit_code == 0
    assert one_step.stdout == two_step.stdout
    assert one_step.stdout.count("sentence_id=") == 6


def test_pipeline_jobs(run, models):
    tagger, classifier = models
    serial = run("pipeline", tagger, classifier, GOLD, "--tokenized")
    parallel = run("pipeline", tagger, classifier, GOLD, "--tokenized", "--jobs", 2)
    assert serial.exit_code == parallel.exit_code == 0
    assert serial.stdout == parallel.stdout


def test_tag_rejects_bad_model(run, tmp_path):
    model = tmp_path / "bad.model"
    model.write_text("#version 9\n#type crf\n#end\n")
    result = run("tag", model, REVIEWS, "--raw")
    assert result.exit_code == 2
    assert "error:" in result.stderr


def test_self_tagged_training_data(run, tmp_path, models):
    tagger, _ = models
    tagged = tmp_path / "tagged.tsv"
    assert run("tag", tagger, GOLD, "--out", tagged).exit_code == 0
    result = run("eval", GOLD, tagged, "--format", "kv")
    assert result.exit_code == 0
    values = kv_lines(result.stdout)
    for pol in ("inclusion", "exclusion"):
        assert float(values[f"{pol}.binary.f1"]) >= float(values[f"{pol}.proportional.f1"])
