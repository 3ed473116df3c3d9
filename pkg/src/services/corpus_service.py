# src/services/corpus_service.py
"""
Data model and file formats for the inclusion/exclusion corpus.

Span dataset (CoNLL style, UTF-8, LF):
    #id <id>            optional, starts a sentence block
    #spot <name>        optional
    token<TAB>tag[<TAB>category]
    <blank line between sentences>

Category dataset:
    category<TAB>phrase text[<TAB>INC|EXC]

Lexicon:
    category<TAB>keyword     ('#' lines ignored)
"""
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from src.utils.errors import (
    EmptyDataset,
    LengthMismatch,
    MalformedLine,
    OutOfBounds,
    OverlappingPhrases,
    UnknownCategory,
    UnknownTag,
)

LOGGER = logging.getLogger(__name__)


# ------------------------------------------------------
# ENUMS
# ------------------------------------------------------
class Polarity(str, Enum):
    INCLUSION = "INC"
    EXCLUSION = "EXC"


class BioTag(str, Enum):
    B_INC = "B_INC"
    INC = "INC"
    B_EXC = "B_EXC"
    EXC = "EXC"
    O = "O"

    @property
    def index(self):
        return TAG_INDEX[self]

    @property
    def polarity(self) -> Optional[Polarity]:
        if self is BioTag.O:
            return None
        return Polarity.INCLUSION if self in (BioTag.B_INC, BioTag.INC) else Polarity.EXCLUSION

    @property
    def is_begin(self):
        return self in (BioTag.B_INC, BioTag.B_EXC)


class Category(str, Enum):
    AGE_HEIGHT = "age_height"
    CLAUSTROPHOBIA = "claustrophobia"
    COUPLES_FAMILY = "couples_family"
    CROWD = "crowd"
    FOOD = "food"
    HANDICAP = "handicap"
    HYGIENE = "hygiene"
    PARKING = "parking"
    PRICE = "price"
    QUEUES = "queues"
    TIME = "time"

    @property
    def index(self):
        return CATEGORY_INDEX[self]


TAGS: Tuple[BioTag, ...] = tuple(BioTag)
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}
CATEGORIES: Tuple[Category, ...] = tuple(Category)
CATEGORY_INDEX = {c: i for i, c in enumerate(CATEGORIES)}

BEGIN_TAG = {Polarity.INCLUSION: BioTag.B_INC, Polarity.EXCLUSION: BioTag.B_EXC}
INSIDE_TAG = {Polarity.INCLUSION: BioTag.INC, Polarity.EXCLUSION: BioTag.EXC}

NO_CATEGORY = "-"


def parse_tag(value, line_no=None) -> BioTag:
    try:
        return BioTag(value)
    except ValueError:
        raise UnknownTag(f"unknown tag {value!r}", line_no) from None


def parse_category(value, line_no=None) -> Category:
    try:
        return Category(value.strip().lower())
    except ValueError:
        raise UnknownCategory(f"unknown category {value!r}", line_no) from None


def parse_polarity(value, line_no=None) -> Polarity:
    try:
        return Polarity(value.strip().upper())
    except ValueError:
        raise MalformedLine(f"unknown polarity {value!r} (expected INC or EXC)", line_no) from None


# ------------------------------------------------------
# VALUE TYPES
# ------------------------------------------------------
@dataclass(frozen=True)
class Token:
    text: str
    index: int

    def __post_init__(self):
        if not self.text or any(ch.isspace() for ch in self.text):
            raise ValueError(f"invalid token text {self.text!r}")


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: Tuple[Token, ...]
    source_spot: Optional[str] = None

    def __post_init__(self):
        if not self.id or self.id != self.id.strip() or any(ch in self.id for ch in "\t\n\r"):
            raise ValueError(f"invalid sentence id {self.id!r}")
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")
        for i, tok in enumerate(self.tokens):
            if tok.index != i:
                raise ValueError(f"sentence {self.id!r}: token indices must be 0..n-1")

    @classmethod
    def from_words(cls, sentence_id, words: Sequence[str], source_spot=None) -> "Sentence":
        return cls(str(sentence_id), tuple(Token(w, i) for i, w in enumerate(words)), source_spot)

    @property
    def words(self) -> List[str]:
        return [t.text for t in self.tokens]

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class LabeledSentence:
    sentence: Sentence
    tags: Tuple[BioTag, ...]
    # per-token category column; a phrase's category is the one on its first token
    categories: Optional[Tuple[Optional[Category], ...]] = None

    def __post_init__(self):
        if len(self.tags) != len(self.sentence.tokens):
            raise LengthMismatch(
                f"sentence {self.sentence.id!r}: {len(self.tags)} tags for {len(self.sentence.tokens)} tokens"
            )
        if self.categories is not None and len(self.categories) != len(self.tags):
            raise LengthMismatch(f"sentence {self.sentence.id!r}: category column length mismatch")

    @property
    def has_categories(self):
        return self.categories is not None and any(c is not None for c in self.categories)


@dataclass(frozen=True)
class Phrase:
    sentence_id: str
    start: int
    end: int
    polarity: Polarity
    category: Optional[Category] = None
    text: str = ""

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise OutOfBounds(f"invalid phrase span [{self.start},{self.end})")

    @classmethod
    def in_sentence(cls, sentence: Sentence, start, end, polarity, category=None) -> "Phrase":
        if not (0 <= start < end <= len(sentence)):
            raise OutOfBounds(f"span [{start},{end}) outside sentence {sentence.id!r} of length {len(sentence)}")
        text = " ".join(sentence.words[start:end])
        return cls(sentence.id, start, end, polarity, category, text)

    @property
    def span(self) -> Tuple[int, int]:
        return self.start, self.end

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class CategorizedPhrase:
    """One row of a category dataset file."""

    category: Category
    text: str
    polarity: Optional[Polarity] = None


@dataclass(frozen=True)
class KeywordLexicon:
    keywords: Dict[Category, FrozenSet[str]] = field(default_factory=dict)

    def categories_for(self, word) -> FrozenSet[Category]:
        low = word.lower()
        return frozenset(c for c, kws in self.keywords.items() if low in kws)

    def __eq__(self, other):
        if not isinstance(other, KeywordLexicon):
            return NotImplemented
        return {c: set(k) for c, k in self.keywords.items() if k} == {
            c: set(k) for c, k in other.keywords.items() if k
        }


@dataclass(frozen=True)
class DatasetStats:
    tag_counts: Dict[BioTag, int]
    polarity_counts: Dict[Polarity, int]
    category_counts: Dict[Category, int]
    uncategorized: int = 0
    sentences: int = 0
    tokens: int = 0

    @property
    def total_phrases(self):
        return sum(self.polarity_counts.values())


# ===================================================================
# SPAN DATASET FORMAT
# ===================================================================
def parse_dataset(text: str, allow_untagged=False) -> List[LabeledSentence]:
    """Parse a span dataset; one LabeledSentence per blank-line-delimited block."""
    sentences: List[LabeledSentence] = []
    seen_ids: Dict[str, int] = {}
    block = _Block()

    def flush():
        nonlocal block
        if block.words:
            ls = block.build(len(sentences))
            if ls.sentence.id in seen_ids:
                raise MalformedLine(
                    f"duplicate sentence id {ls.sentence.id!r} (first used at line {seen_ids[ls.sentence.id]})",
                    block.start_line,
                )
            seen_ids[ls.sentence.id] = block.start_line
            sentences.append(ls)
        elif block.sid is not None or block.spot is not None:
            raise MalformedLine("sentence header without tokens", block.header_line)
        block = _Block()

    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if line.strip() == "":
            flush()
            continue

        if line.startswith("#id ") or line.startswith("#spot "):
            if block.words:
                raise MalformedLine("header line inside a sentence block", line_no)
            key, _, value = line.partition(" ")
            if not value.strip():
                raise MalformedLine(f"empty {key} header", line_no)
            if "\t" in value:
                raise MalformedLine(f"tab inside {key} header", line_no)
            if key == "#id":
                block.sid = value.strip()
            else:
                block.spot = value.strip()
            block.header_line = block.header_line or line_no
            block.start_line = block.start_line or line_no
            continue

        cols = line.split("\t")
        if len(cols) == 1 and allow_untagged:
            cols = [cols[0], BioTag.O.value]
        if len(cols) not in (2, 3) or not cols[0] or any(ch.isspace() for ch in cols[0]):
            raise MalformedLine(f"expected 'token<TAB>tag[<TAB>category]', got {line!r}", line_no)

        block.start_line = block.start_line or line_no
        block.words.append(cols[0])
        block.tags.append(parse_tag(cols[1], line_no))
        if len(cols) == 3 and cols[2] != NO_CATEGORY:
            block.categories.append(parse_category(cols[2], line_no))
        else:
            block.categories.append(None)
    flush()

    if not sentences:
        raise EmptyDataset("dataset contains no sentences")
    LOGGER.debug("parsed %d sentences", len(sentences))
    return sentences


class _Block:
    def __init__(self):
        self.sid = None
        self.spot = None
        self.header_line = None
        self.start_line = None
        self.words: List[str] = []
        self.tags: List[BioTag] = []
        self.categories: List[Optional[Category]] = []

    def build(self, position) -> LabeledSentence:
        sid = self.sid if self.sid is not None else str(position)
        sentence = Sentence.from_words(sid, self.words, self.spot)
        cats = tuple(self.categories) if any(c is not None for c in self.categories) else None
        return LabeledSentence(sentence, tuple(self.tags), cats)


def serialize_dataset(sentences: Sequence[LabeledSentence]) -> str:
    blocks = []
    for position, ls in enumerate(sentences):
        lines = []
        if ls.sentence.id != str(position):
            lines.append(f"#id {ls.sentence.id}")
        if ls.sentence.source_spot is not None:
            lines.append(f"#spot {ls.sentence.source_spot}")
        with_cats = ls.has_categories
        for i, (tok, tag) in enumerate(zip(ls.sentence.tokens, ls.tags)):
            if with_cats:
                cat = ls.categories[i]
                lines.append(f"{tok.text}\t{tag.value}\t{cat.value if cat else NO_CATEGORY}")
            else:
                lines.append(f"{tok.text}\t{tag.value}")
        blocks.append("".join(line + "\n" for line in lines))
    return "\n".join(blocks)


# ===================================================================
# CATEGORY DATASET FORMAT
# ===================================================================
def parse_category_dataset(text: str) -> List[CategorizedPhrase]:
    rows = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) not in (2, 3) or not cols[1].strip():
            raise MalformedLine(f"expected 'category<TAB>phrase[<TAB>polarity]', got {line!r}", line_no)
        category = parse_category(cols[0], line_no)
        polarity = parse_polarity(cols[2], line_no) if len(cols) == 3 and cols[2].strip() else None
        rows.append(CategorizedPhrase(category, " ".join(cols[1].split()), polarity))
    if not rows:
        raise EmptyDataset("category dataset contains no rows")
    return rows


def serialize_category_dataset(rows: Sequence[CategorizedPhrase]) -> str:
    out = []
    for row in rows:
        if row.polarity is None:
            out.append(f"{row.category.value}\t{row.text}\n")
        else:
            out.append(f"{row.category.value}\t{row.text}\t{row.polarity.value}\n")
    return "".join(out)


# ===================================================================
# KEYWORD LEXICON + FILTERING
# ===================================================================
def load_lexicon(text: str) -> KeywordLexicon:
    keywords: Dict[Category, set] = {}
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2 or not cols[1].strip():
            raise MalformedLine(f"expected 'category<TAB>keyword', got {line!r}", line_no)
        category = parse_category(cols[0], line_no)
        keywords.setdefault(category, set()).add(cols[1].strip().lower())
    return KeywordLexicon({c: frozenset(k) for c, k in keywords.items()})


def filter_sentences(
    sentences: Sequence[Sentence], lexicon: KeywordLexicon
) -> List[Tuple[Sentence, FrozenSet[Category]]]:
    """Keep sentences with at least one token exactly matching a keyword (case-insensitive)."""
    index: Dict[str, set] = {}
    for category, kws in lexicon.keywords.items():
        for kw in kws:
            index.setdefault(kw, set()).add(category)

    kept = []
    for sentence in sentences:
        matched = set()
        for tok in sentence.tokens:
            matched |= index.get(tok.text.lower(), set())
        if matched:
            kept.append((sentence, frozenset(matched)))
    LOGGER.info("keyword filter kept %d of %d sentences", len(kept), len(sentences))
    return kept


# ===================================================================
# BIO <-> PHRASES
# ===================================================================
def decode_phrases(tags: Sequence[BioTag], sentence: Sentence) -> List[Phrase]:
    """
    Turn a (possibly invalid) tag sequence into phrases.
    Orphan inside tags open a phrase; a polarity switch closes the open phrase.
    """
    if len(tags) != len(sentence):
        raise LengthMismatch(f"{len(tags)} tags for sentence {sentence.id!r} of length {len(sentence)}")

    phrases = []
    open_pol, open_start = None, None

    def close(end):
        if open_pol is not None:
            phrases.append(Phrase.in_sentence(sentence, open_start, end, open_pol))

    for i, tag in enumerate(tags):
        tag = BioTag(tag)
        pol = tag.polarity
        if pol is None:
            close(i)
            open_pol = None
        elif tag.is_begin or pol != open_pol:
            close(i)
            open_pol, open_start = pol, i
    close(len(tags))
    return phrases


def labeled_phrases(ls: LabeledSentence) -> List[Phrase]:
    """Gold phrases of a labeled sentence, with categories from the category column."""
    phrases = decode_phrases(ls.tags, ls.sentence)
    if ls.categories is None:
        return phrases
    return [
        Phrase(p.sentence_id, p.start, p.end, p.polarity, ls.categories[p.start], p.text)
        for p in phrases
    ]


def encode_tags(phrases: Sequence[Phrase], length: int) -> List[BioTag]:
    tags = [BioTag.O] * length
    last_end = 0
    for p in sorted(phrases, key=lambda ph: ph.start):
        if p.start < 0 or p.end > length or p.end <= p.start:
            raise OutOfBounds(f"span [{p.start},{p.end}) outside [0,{length})")
        if p.start < last_end:
            raise OverlappingPhrases(f"span [{p.start},{p.end}) overlaps a previous phrase")
        tags[p.start] = BEGIN_TAG[p.polarity]
        for i in range(p.start + 1, p.end):
            tags[i] = INSIDE_TAG[p.polarity]
        last_end = p.end
    return tags


def with_phrases(sentence: Sentence, phrases: Sequence[Phrase]) -> LabeledSentence:
    """Build a labeled sentence (tags + category column) from disjoint phrases."""
    tags = encode_tags(phrases, len(sentence))
    cats: List[Optional[Category]] = [None] * len(sentence)
    for p in phrases:
        for i in range(p.start, p.end):
            cats[i] = p.category
    has_cats = any(c is not None for c in cats)
    return LabeledSentence(sentence, tuple(tags), tuple(cats) if has_cats else None)


# ===================================================================
# STATISTICS + SPLITS
# ===================================================================
def dataset_stats(sentences: Sequence[LabeledSentence]) -> DatasetStats:
    tag_counts = Counter({t: 0 for t in TAGS})
    pol_counts = Counter({p: 0 for p in Polarity})
    cat_counts = Counter({c: 0 for c in CATEGORIES})
    uncategorized = 0
    tokens = 0

    for ls in sentences:
        tokens += len(ls.tags)
        tag_counts.update(ls.tags)
        for p in labeled_phrases(ls):
            pol_counts[p.polarity] += 1
            if p.category is None:
                uncategorized += 1
            else:
                cat_counts[p.category] += 1

    return DatasetStats(
        tag_counts=dict(tag_counts),
        polarity_counts=dict(pol_counts),
        category_counts=dict(cat_counts),
        uncategorized=uncategorized,
        sentences=len(sentences),
        tokens=tokens,
    )


def category_histogram(rows: Sequence[CategorizedPhrase]) -> Dict[Category, int]:
    counts = Counter({c: 0 for c in CATEGORIES})
    counts.update(r.category for r in rows)
    return dict(counts)


def split_dataset(items: Sequence, test_fraction: float, seed: int):
    """Seeded shuffle split -> (train, test); original order kept inside each part."""
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError("test_fraction must be in [0, 1)")
    order = list(range(len(items)))
    random.Random(seed).shuffle(order)
    n_test = int(round(len(items) * test_fraction))
    test_idx = set(order[:n_test])
    train = [x for i, x in enumerate(items) if i not in test_idx]
    test = [x for i, x in enumerate(items) if i in test_idx]
    return train, test
