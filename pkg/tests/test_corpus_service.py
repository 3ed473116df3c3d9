import numpy as np
import pytest

from src.services.corpus_service import (
    CATEGORIES,
    TAGS,
    BioTag,
    Category,
    CategorizedPhrase,
    KeywordLexicon,
    LabeledSentence,
    Phrase,
    Polarity,
    Sentence,
    Token,
    category_histogram,
    dataset_stats,
    decode_phrases,
    encode_tags,
    filter_sentences,
    labeled_phrases,
    load_lexicon,
    parse_category_dataset,
    parse_dataset,
    serialize_category_dataset,
    serialize_dataset,
    split_dataset,
    with_phrases,
)
from src.utils.errors import (
    EmptyDataset,
    LengthMismatch,
    MalformedLine,
    OutOfBounds,
    OverlappingPhrases,
    UnknownCategory,
    UnknownTag,
)
from tests.helpers import make_sentence


def tags_of(text):
    return [BioTag(t) for t in text.split()]


def spans(phrases):
    return [(p.start, p.end, p.polarity) for p in phrases]


# ------------------------------------------------------
# enums
# ------------------------------------------------------
def test_canonical_orders():
    assert [t.value for t in TAGS] == ["B_INC", "INC", "B_EXC", "EXC", "O"]
    assert [c.value for c in CATEGORIES] == [
        "age_height", "claustrophobia", "couples_family", "crowd", "food", "handicap",
        "hygiene", "parking", "price", "queues", "time",
    ]
    assert BioTag.EXC.polarity == Polarity.EXCLUSION
    assert BioTag.O.polarity is None
    assert Category.PRICE.index == 8


def test_token_rejects_whitespace():
    with pytest.raises(ValueError):
        Token("two words", 0)
    with pytest.raises(ValueError):
        Token("", 0)


# ------------------------------------------------------
# span dataset format
# ------------------------------------------------------
def test_parse_single_sentence():
    [ls] = parse_dataset("Great\tO\nfood\tB_INC\nhere\tINC\n")
    assert ls.sentence.words == ["Great", "food", "here"]
    assert list(ls.tags) == [BioTag.O, BioTag.B_INC, BioTag.INC]
    assert ls.sentence.id == "0"


def test_parse_unknown_tag_reports_line():
    with pytest.raises(UnknownTag) as err:
        parse_dataset("ok\tO\n\ntok\tB_FOO\n")
    assert err.value.line_no == 3
    assert "line 3" in str(err.value)


def test_parse_wrong_column_count():
    with pytest.raises(MalformedLine):
        parse_dataset("a\tO\tcrowd\textra\n")
    with pytest.raises(MalformedLine):
        parse_dataset("lonely\n")


def test_parse_empty_is_error():
    with pytest.raises(EmptyDataset):
        parse_dataset("")
    with pytest.raises(EmptyDataset):
        parse_dataset("\n\n")


def test_sentence_rejects_bad_ids():
    for bad in ("", "a\tb", "a\nb", " r1", "r1 "):
        with pytest.raises(ValueError):
            Sentence.from_words(bad, ["ok"])
    assert Sentence.from_words("r 1", ["ok"]).id == "r 1"


def test_parse_rejects_tab_in_id_header():
    with pytest.raises(MalformedLine) as err:
        parse_dataset("ok\tO\n\n#id a\tb\nfine\tO\n")
    assert err.value.line_no == 3


def test_parse_rejects_duplicate_ids():
    with pytest.raises(MalformedLine) as err:
        parse_dataset("#id r1\nok\tO\n\n#id r1\nfine\tO\n")
    assert err.value.line_no == 4
    # the second block's positional id collides with an explicit one
    with pytest.raises(MalformedLine) as err:
        parse_dataset("#id 1\nok\tO\n\nfine\tO\n")
    assert err.value.line_no == 4
    assert "duplicate" in str(err.value)


def test_parse_headers_and_categories():
    text = "#id r1\n#spot Louvre\nvery\tB_EXC\tcrowd\ncrowded\tEXC\tcrowd\ntoday\tO\t-\n"
    [ls] = parse_dataset(text)
    assert ls.sentence.id == "r1"
    assert ls.sentence.source_spot == "Louvre"
    assert ls.categories == (Category.CROWD, Category.CROWD, None)
    [phrase] = labeled_phrases(ls)
    assert phrase.category == Category.CROWD
    assert phrase.text == "very crowded"


def test_parse_allow_untagged():
    [ls] = parse_dataset("just\nwords\n", allow_untagged=True)
    assert list(ls.tags) == [BioTag.O, BioTag.O]


def test_serialize_examples():
    assert serialize_dataset([]) == ""
    ls = LabeledSentence(make_sentence("w1 w2"), (BioTag.O, BioTag.B_INC))
    assert serialize_dataset([ls]) == "w1\tO\nw2\tB_INC\n"


def test_round_trip_random_corpus():
    rng = np.random.default_rng(3)
    corpus = []
    for k in range(50):
        n = int(rng.integers(1, 12))
        words = [f"w{int(x)}" for x in rng.integers(0, 30, size=n)]
        tags = tuple(TAGS[int(i)] for i in rng.integers(0, 5, size=n))
        sid = str(k) if k % 3 else f"s-{k}"
        corpus.append(LabeledSentence(Sentence.from_words(sid, words), tags))
    assert parse_dataset(serialize_dataset(corpus)) == corpus


def test_round_trip_with_categories_and_spot():
    text = "#id a\n#spot Eiffel\nlong\tB_EXC\tqueues\nline\tEXC\tqueues\n\nnice\tO\n"
    assert serialize_dataset(parse_dataset(text)) == text


# ------------------------------------------------------
# category dataset + lexicon
# ------------------------------------------------------
def test_category_dataset_round_trip():
    text = "price\tvery expensive\tEXC\nQueues\thuge  queue\n"
    rows = parse_category_dataset(text)
    assert rows == [
        CategorizedPhrase(Category.PRICE, "very expensive", Polarity.EXCLUSION),
        CategorizedPhrase(Category.QUEUES, "huge queue", None),
    ]
    assert parse_category_dataset(serialize_category_dataset(rows)) == rows
    assert category_histogram(rows)[Category.PRICE] == 1
    assert category_histogram(rows)[Category.FOOD] == 0


def test_category_dataset_errors():
    with pytest.raises(UnknownCategory):
        parse_category_dataset("weather\trainy day\n")
    with pytest.raises(MalformedLine):
        parse_category_dataset("price\n")
    with pytest.raises(MalformedLine):
        parse_category_dataset("price\tcheap\tMAYBE\n")


def test_load_lexicon():
    assert load_lexicon("crowd\tcrowded\ncrowd\tpacked\n") == KeywordLexicon(
        {Category.CROWD: frozenset({"crowded", "packed"})}
    )
    assert load_lexicon("# comment\nprice\tExpensive\n").keywords == {Category.PRICE: frozenset({"expensive"})}
    with pytest.raises(UnknownCategory):
        load_lexicon("weather\train\n")
    with pytest.raises(MalformedLine):
        load_lexicon("price\n")


# ------------------------------------------------------
# filtering
# ------------------------------------------------------
def test_filter_examples():
    lex = KeywordLexicon({Category.CROWD: frozenset({"crowded"})})
    kept = filter_sentences([make_sentence("it was so Crowded", "a"), make_sentence("lovely view", "b")], lex)
    assert kept == [(make_sentence("it was so Crowded", "a"), frozenset({Category.CROWD}))]


def test_filter_matches_naive_oracle():
    rng = np.random.default_rng(11)
    vocab = [f"w{i}" for i in range(40)]
    lex = KeywordLexicon({
        c: frozenset(str(w) for w in rng.choice(vocab, size=3, replace=False)) for c in CATEGORIES[:5]
    })
    sentences = [
        Sentence.from_words(str(k), [str(w) for w in rng.choice(vocab, size=int(rng.integers(1, 8)))])
        for k in range(100)
    ]

    expected = []
    for s in sentences:
        matched = set()
        for tok in s.words:
            for cat, kws in lex.keywords.items():
                for kw in kws:
                    if tok.lower() == kw:
                        matched.add(cat)
        if matched:
            expected.append((s, frozenset(matched)))

    assert filter_sentences(sentences, lex) == expected


# ------------------------------------------------------
# BIO <-> phrases
# ------------------------------------------------------
@pytest.mark.parametrize(
    "tags, expected",
    [
        ("B_EXC EXC EXC O", [(0, 3, Polarity.EXCLUSION)]),
        ("O INC INC O", [(1, 3, Polarity.INCLUSION)]),
        ("B_INC EXC O", [(0, 1, Polarity.INCLUSION), (1, 2, Polarity.EXCLUSION)]),
        ("B_INC B_INC INC", [(0, 1, Polarity.INCLUSION), (1, 3, Polarity.INCLUSION)]),
        ("O O O", []),
    ],
)
def test_decode_phrases(tags, expected):
    sentence = make_sentence(" ".join(f"t{i}" for i in range(len(tags.split()))))
    assert spans(decode_phrases(tags_of(tags), sentence)) == expected


def test_decode_length_mismatch():
    with pytest.raises(LengthMismatch):
        decode_phrases(tags_of("O O"), make_sentence("one"))


def test_decode_fuzz_disjoint_sorted():
    rng = np.random.default_rng(5)
    for _ in range(300):
        n = int(rng.integers(1, 15))
        sentence = Sentence.from_words("s", [f"t{i}" for i in range(n)])
        tags = [TAGS[int(i)] for i in rng.integers(0, 5, size=n)]
        phrases = decode_phrases(tags, sentence)
        for p in phrases:
            assert 0 <= p.start < p.end <= n
        for a, b in zip(phrases, phrases[1:]):
            assert a.end <= b.start
        # canonicalisation is idempotent
        canonical = encode_tags(phrases, n)
        assert encode_tags(decode_phrases(canonical, sentence), n) == canonical


def test_encode_examples():
    assert encode_tags([], 3) == [BioTag.O] * 3
    phrase = Phrase("0", 1, 3, Polarity.INCLUSION)
    assert encode_tags([phrase], 4) == tags_of("O B_INC INC O")


def test_encode_errors():
    with pytest.raises(OverlappingPhrases):
        encode_tags([Phrase("0", 0, 2, Polarity.INCLUSION), Phrase("0", 1, 3, Polarity.EXCLUSION)], 4)
    with pytest.raises(OutOfBounds):
        encode_tags([Phrase("0", 2, 5, Polarity.INCLUSION)], 4)


def test_encode_decode_round_trip():
    rng = np.random.default_rng(9)
    for _ in range(200):
        n = int(rng.integers(1, 20))
        sentence = Sentence.from_words("s", [f"t{i}" for i in range(n)])
        cuts = sorted(set(int(x) for x in rng.integers(0, n + 1, size=6)))
        phrases = []
        for a, b in zip(cuts, cuts[1:]):
            if rng.random() < 0.6:
                pol = Polarity.INCLUSION if rng.random() < 0.5 else Polarity.EXCLUSION
                phrases.append(Phrase.in_sentence(sentence, a, b, pol))
        assert decode_phrases(encode_tags(phrases, n), sentence) == phrases


def test_with_phrases_keeps_categories():
    sentence = make_sentence("no ramps at all")
    phrase = Phrase.in_sentence(sentence, 0, 2, Polarity.EXCLUSION, Category.HANDICAP)
    ls = with_phrases(sentence, [phrase])
    assert list(ls.tags) == tags_of("B_EXC EXC O O")
    assert labeled_phrases(ls) == [phrase]


# ------------------------------------------------------
# statistics + split
# ------------------------------------------------------
def test_dataset_stats_hand_count():
    text = (
        "very\tB_EXC\tcrowd\ncrowded\tEXC\tcrowd\n\n"
        "cheap\tB_INC\tprice\ntickets\tINC\tprice\nhere\tO\t-\n\n"
        "nothing\tO\n"
    )
    stats = dataset_stats(parse_dataset(text))
    assert stats.tag_counts == {BioTag.B_INC: 1, BioTag.INC: 1, BioTag.B_EXC: 1, BioTag.EXC: 1, BioTag.O: 2}
    assert sum(stats.tag_counts.values()) == stats.tokens == 6
    assert stats.sentences == 3
    assert stats.total_phrases == 2
    assert stats.category_counts[Category.CROWD] == 1
    assert stats.category_counts[Category.PRICE] == 1
    assert stats.uncategorized == 0


def test_dataset_stats_empty():
    stats = dataset_stats([])
    assert set(stats.tag_counts.values()) == {0}
    assert set(stats.category_counts.values()) == {0}
    assert stats.total_phrases == 0


def test_split_is_deterministic_and_partitions():
    items = list(range(20))
    train, test = split_dataset(items, 0.2, seed=42)
    assert len(test) == 4
    assert sorted(train + test) == items
    assert train == sorted(train) and test == sorted(test)
    assert split_dataset(items, 0.2, seed=42) == (train, test)
    assert split_dataset(items, 0.0, seed=1) == (items, [])
    with pytest.raises(ValueError):
        split_dataset(items, 1.0, seed=1)
