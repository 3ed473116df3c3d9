# src/services/classifier_service.py
"""11-way phrase categorization: multinomial logistic regression over sparse phrase features."""
import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from src.services.corpus_service import CATEGORIES, CATEGORY_INDEX, Category, Phrase, Sentence, parse_category
from src.services.features_service import FeatureVector, phrase_features, text_phrase
from src.services.model_loader import format_weight, parse_weight, read_model_file, write_model_file
from src.services.tagger_service import ADAGRAD_EPS, TrainConfig
from src.utils.errors import DegenerateData, EmptyData, IncexError, MalformedModel

LOGGER = logging.getLogger(__name__)

NUM_CLASSES = len(CATEGORIES)

CategoryScores = Dict[Category, float]


@dataclass(frozen=True)
class ClassifierExample:
    """A phrase in its sentence (context features) with its gold category."""

    phrase: Phrase
    sentence: Sentence
    category: Category


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    symbols: Dict[str, int]
    weights: np.ndarray    # F x 11
    l2: float = 0.0

    @classmethod
    def zeros(cls, symbols: Dict[str, int], l2=0.0) -> "ClassifierModel":
        return cls(dict(symbols), np.zeros((len(symbols), NUM_CLASSES)), l2)

    @property
    def num_features(self):
        return len(self.symbols)

    def with_flat_weights(self, flat) -> "ClassifierModel":
        return ClassifierModel(self.symbols, np.array(flat).reshape(self.num_features, NUM_CLASSES), self.l2)

    def __eq__(self, other):
        if not isinstance(other, ClassifierModel):
            return NotImplemented
        return (
            self.symbols == other.symbols
            and np.array_equal(self.weights, other.weights)
            and self.l2 == other.l2
        )


# ------------------------------------------------------
# SPARSE VECTORS
# ------------------------------------------------------
def _vectorize(feats: FeatureVector, symbols: Dict[str, int]) -> Tuple[np.ndarray, np.ndarray]:
    # sorted by column so scores do not depend on feature insertion order
    pairs = sorted((symbols[name], v) for name, v in feats.items() if name in symbols and v != 0.0)
    idx = np.array([p[0] for p in pairs], dtype=np.int64)
    val = np.array([p[1] for p in pairs], dtype=float)
    return idx, val


def _class_scores(idx, val, W) -> np.ndarray:
    if len(idx) == 0:
        return np.zeros(NUM_CLASSES)
    return val @ W[idx]


def score_vector(model: ClassifierModel, feats: FeatureVector) -> CategoryScores:
    idx, val = _vectorize(feats, model.symbols)
    probs = softmax(_class_scores(idx, val, model.weights))
    return {c: float(p) for c, p in zip(CATEGORIES, probs)}


# ===================================================================
# PREDICTION
# ===================================================================
def predict_category(model: ClassifierModel, phrase: Phrase, sentence: Sentence) -> Tuple[Category, CategoryScores]:
    idx, val = _vectorize(phrase_features(phrase, sentence), model.symbols)
    probs = softmax(_class_scores(idx, val, model.weights))
    # argmax keeps the first maximum: ties go to the lower canonical category
    best = CATEGORIES[int(np.argmax(probs))]
    return best, {c: float(p) for c, p in zip(CATEGORIES, probs)}


# ===================================================================
# OBJECTIVE
# ===================================================================
def loss_and_gradient(model: ClassifierModel, batch: Sequence[ClassifierExample], l2: float):
    """Multinomial logistic loss + l2/2 ||W||^2 and its gradient (F x 11)."""
    grad = np.zeros_like(model.weights)
    loss = 0.0
    for ex in batch:
        idx, val = _vectorize(phrase_features(ex.phrase, ex.sentence), model.symbols)
        scores = _class_scores(idx, val, model.weights)
        gold = CATEGORY_INDEX[ex.category]
        loss += float(logsumexp(scores) - scores[gold])
        delta = softmax(scores)
        delta[gold] -= 1.0
        if len(idx):
            grad[idx] += val[:, None] * delta[None, :]
    loss += 0.5 * l2 * float(np.sum(model.weights ** 2))
    return loss, grad + l2 * model.weights


# ===================================================================
# TRAINING
# ===================================================================
def train_classifier(data: Sequence[ClassifierExample], tcfg: TrainConfig) -> ClassifierModel:
    """
    AdaGrad over single examples, order reshuffled every epoch from tcfg.seed.
    L2 is split per feature across the examples that contain it.
    """
    if not data:
        raise EmptyData("cannot train a classifier on an empty dataset")
    if len({ex.category for ex in data}) < 2:
        raise DegenerateData("training data needs at least two distinct categories")
    started = time.time()

    symbols: Dict[str, int] = {}
    vectors = []
    for ex in data:
        feats = phrase_features(ex.phrase, ex.sentence)
        for name in feats:
            if name not in symbols:
                symbols[name] = len(symbols)
        vectors.append(_vectorize(feats, symbols))
    golds = [CATEGORY_INDEX[ex.category] for ex in data]
    N, F = len(data), len(symbols)

    counts = np.zeros(F)
    for idx, _ in vectors:
        counts[idx] += 1.0
    row_reg = np.divide(tcfg.l2, counts, out=np.zeros(F), where=counts > 0)

    W = np.zeros((F, NUM_CLASSES))
    G = np.zeros_like(W)
    rng = np.random.default_rng(tcfg.seed)
    lr = tcfg.learning_rate

    for epoch in range(tcfg.epochs):
        running = 0.0
        for s in rng.permutation(N):
            idx, val = vectors[s]
            gold = golds[s]
            scores = _class_scores(idx, val, W)
            running += float(logsumexp(scores) - scores[gold])
            delta = softmax(scores)
            delta[gold] -= 1.0
            g = val[:, None] * delta[None, :] + row_reg[idx][:, None] * W[idx]
            G[idx] += g ** 2
            W[idx] -= lr * g / (np.sqrt(G[idx]) + ADAGRAD_EPS)
        LOGGER.debug("classifier epoch %d/%d running loss %.6f", epoch + 1, tcfg.epochs, running)

    W.setflags(write=False)
    LOGGER.info(
        "classifier trained: %d phrases, %d features, %d epochs (%.1fs)",
        N, F, tcfg.epochs, time.time() - started,
    )
    return ClassifierModel(symbols, W, tcfg.l2)


# ------------------------------------------------------
# MODEL FILES
# ------------------------------------------------------
def save_classifier(model: ClassifierModel) -> str:
    class_names = [c.value for c in CATEGORIES]
    headers = [("classes", " ".join(class_names)), ("l2", format_weight(model.l2))]
    features = sorted(model.symbols, key=model.symbols.get)
    records = []
    for name in features:
        row = model.weights[model.symbols[name]]
        for k, cls in enumerate(class_names):
            if row[k] != 0.0:
                records.append(f"U {name} {cls} {format_weight(row[k])}")
    return write_model_file("clf", headers, features, records)


def load_classifier(text: str) -> ClassifierModel:
    mf = read_model_file(text, "clf")
    if mf.require("classes").split(" ") != [c.value for c in CATEGORIES]:
        raise MalformedModel(f"class set mismatch: {mf.require('classes')!r}")

    symbols = {name: i for i, name in enumerate(mf.features)}
    W = np.zeros((len(symbols), NUM_CLASSES))
    for line_no, line in mf.records:
        if not line.startswith("U "):
            raise MalformedModel(f"unknown record {line!r}", line_no)
        try:
            name, cls, w = line[2:].rsplit(" ", 2)
            if name not in symbols:
                raise MalformedModel(f"weight for undeclared feature {name!r}", line_no)
            W[symbols[name], CATEGORY_INDEX[parse_category(cls, line_no)]] = parse_weight(w, line_no)
        except MalformedModel:
            raise
        except (ValueError, IncexError) as exc:
            raise MalformedModel(f"malformed record {line!r}: {exc}", line_no) from None

    W.setflags(write=False)
    return ClassifierModel(symbols, W, parse_weight(mf.require("l2"), None))


def examples_from_rows(rows) -> List[ClassifierExample]:
    """Category dataset rows -> context-free training examples."""
    examples = []
    for i, row in enumerate(rows):
        phrase, sentence = text_phrase(row.text, row.polarity, sentence_id=str(i))
        examples.append(ClassifierExample(phrase, sentence, row.category))
    return examples
