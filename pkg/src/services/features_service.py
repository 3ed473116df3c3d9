# src/services/features_service.py
import logging
import unicodedata
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.services.corpus_service import Phrase, Polarity, Sentence
from src.utils.errors import DimensionMismatch, IndexOutOfRange, OutOfBounds, UnparsableNumber

LOGGER = logging.getLogger(__name__)

FeatureVector = Dict[str, float]

BOS = "<BOS>"
EOS = "<EOS>"
AFFIX_LENGTHS = (2, 3)
CHAR_NGRAM_RANGE = (3, 5)
CONTEXT_SIZE = 2


# ------------------------------------------------------
# EMBEDDINGS
# ------------------------------------------------------
class EmbeddingTable:
    """Lowercase word -> D-vector lookup."""

    def __init__(self, dim: int, vectors: Optional[Dict[str, np.ndarray]] = None):
        self.dim = dim
        self.vectors = vectors or {}

    def get(self, word) -> Optional[np.ndarray]:
        return self.vectors.get(word.lower())

    def __len__(self):
        return len(self.vectors)


def load_embeddings(text: str, expected_dim: Optional[int] = None) -> EmbeddingTable:
    """GloVe-style text: 'word v1 ... vD' per line. First line fixes D unless expected_dim is given."""
    dim = expected_dim
    vectors: Dict[str, np.ndarray] = {}

    for line_no, raw in enumerate(text.split("\n"), start=1):
        items = raw.strip().split(" ")
        if items == [""]:
            continue
        word, values = items[0], [v for v in items[1:] if v != ""]
        try:
            vec = np.array([float(v) for v in values], dtype=float)
        except ValueError:
            raise UnparsableNumber(f"non-numeric component in vector for {word!r}", line_no) from None
        if not np.all(np.isfinite(vec)):
            raise UnparsableNumber(f"non-finite component in vector for {word!r}", line_no)
        if dim is None:
            dim = len(vec)
        if len(vec) != dim or dim == 0:
            raise DimensionMismatch(f"expected {dim} components for {word!r}, got {len(vec)}", line_no)
        vectors.setdefault(word.lower(), vec)

    LOGGER.info("loaded %d embeddings (dim=%s)", len(vectors), dim)
    return EmbeddingTable(dim or 0, vectors)


# ------------------------------------------------------
# CONFIG
# ------------------------------------------------------
class FeatureConfig(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    window: int = Field(default=1, ge=0, le=3)
    use_affixes: bool = True
    use_shape: bool = True
    embeddings: Optional[EmbeddingTable] = None

    @property
    def embedding_dim(self):
        return self.embeddings.dim if self.embeddings is not None else 0


# ------------------------------------------------------
# TOKEN FEATURES (CRF emissions)
# ------------------------------------------------------
def _char_class(ch):
    if ch.isupper():
        return "X"
    if ch.islower():
        return "x"
    if ch.isdigit():
        return "d"
    if unicodedata.category(ch).startswith("L"):
        return "x"
    return "·"


def word_shape(word: str) -> str:
    """Map character classes (X, x, d, ·) and collapse runs: 'Crowded' -> 'Xx', '25' -> 'd'."""
    shape = []
    for ch in word:
        c = _char_class(ch)
        if not shape or shape[-1] != c:
            shape.append(c)
    return "".join(shape)


def _offset_name(off):
    return "0" if off == 0 else f"{off:+d}"


def token_features(sentence: Sentence, i: int, cfg: FeatureConfig) -> FeatureVector:
    n = len(sentence)
    if not 0 <= i < n:
        raise IndexOutOfRange(f"token index {i} outside sentence of length {n}")

    words = sentence.words
    feats: FeatureVector = {"bias": 1.0}

    for off in range(-cfg.window, cfg.window + 1):
        j = i + off
        name = _offset_name(off)
        if j < 0:
            feats[f"w{name}={BOS}"] = 1.0
        elif j >= n:
            feats[f"w{name}={EOS}"] = 1.0
        else:
            feats[f"w{name}={words[j]}"] = 1.0
            feats[f"low{name}={words[j].lower()}"] = 1.0

    word = words[i]
    if cfg.use_affixes:
        for k in AFFIX_LENGTHS:
            if len(word) >= k:
                feats[f"pre{k}={word[:k]}"] = 1.0
                feats[f"suf{k}={word[-k:]}"] = 1.0

    if cfg.use_shape:
        feats[f"shape0={word_shape(word)}"] = 1.0

    if cfg.embeddings is not None:
        vec = cfg.embeddings.get(word)
        if vec is None:
            feats["emb_oov"] = 1.0
        else:
            for j, v in enumerate(vec):
                if v != 0.0:
                    feats[f"emb{j}"] = float(v)
    return feats


def sentence_features(sentence: Sentence, cfg: FeatureConfig) -> List[FeatureVector]:
    return [token_features(sentence, i, cfg) for i in range(len(sentence))]


# ------------------------------------------------------
# PHRASE FEATURES (classifier input)
# ------------------------------------------------------
def _bump(feats, key, value=1.0):
    feats[key] = feats.get(key, 0.0) + value


def phrase_features(phrase: Phrase, sentence: Sentence) -> FeatureVector:
    n = len(sentence)
    if not (0 <= phrase.start < phrase.end <= n):
        raise OutOfBounds(f"phrase span [{phrase.start},{phrase.end}) outside sentence of length {n}")

    low = [w.lower() for w in sentence.words]
    span = low[phrase.start:phrase.end]
    feats: FeatureVector = {"bias": 1.0}

    for w in span:
        _bump(feats, f"uni={w}")
    for a, b in zip(span, span[1:]):
        _bump(feats, f"bi={a}_{b}")

    padded = " " + " ".join(span) + " "
    lo, hi = CHAR_NGRAM_RANGE
    for k in range(lo, hi + 1):
        for s in range(len(padded) - k + 1):
            _bump(feats, f"chr={padded[s:s + k]}")

    left = low[max(0, phrase.start - CONTEXT_SIZE):phrase.start]
    right = low[phrase.end:phrase.end + CONTEXT_SIZE]
    for w in left + right:
        _bump(feats, f"ctx={w}")
    return feats


def text_phrase(text: str, polarity: Optional[Polarity] = None, sentence_id="0"):
    """Wrap a bare phrase (category dataset row) as a one-phrase sentence without context."""
    sentence = Sentence.from_words(sentence_id, text.split())
    phrase = Phrase.in_sentence(sentence, 0, len(sentence), polarity or Polarity.INCLUSION)
    return phrase, sentence
