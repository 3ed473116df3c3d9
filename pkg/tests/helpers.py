"""Builders and brute-force oracles shared by the test modules."""
import functools
import itertools
import os

import numpy as np

from src.services.corpus_service import TAGS, BioTag, LabeledSentence, Sentence
from src.services.tagger_service import CrfModel, build_symbol_table

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

# token -> tag, fixed for the synthetic learnability corpus
SYNTHETIC_LEXICON = {
    "cheap": BioTag.B_INC,
    "tickets": BioTag.INC,
    "for": BioTag.INC,
    "kids": BioTag.INC,
    "long": BioTag.B_EXC,
    "queues": BioTag.EXC,
    "everywhere": BioTag.EXC,
}
SYNTHETIC_PHRASES = (
    ("cheap", "tickets"),
    ("cheap", "tickets", "for", "kids"),
    ("long", "queues"),
    ("long", "queues", "everywhere"),
)
SYNTHETIC_FILLER = ("the", "place", "was", "nice", "and", "we", "saw", "a", "museum", "there")


def make_sentence(text, sid="0"):
    return Sentence.from_words(sid, text.split())


def make_labeled(text, tags, sid="0"):
    return LabeledSentence(make_sentence(text, sid), tuple(BioTag(t) for t in tags.split()))


def synthetic_corpus(n=200, seed=7):
    """Sentences whose tags are a deterministic function of the token."""
    rng = np.random.default_rng(seed)
    corpus = []
    for k in range(n):
        words = []
        for _ in range(rng.integers(1, 4)):
            words += [str(w) for w in rng.choice(SYNTHETIC_FILLER, size=rng.integers(1, 3))]
            if rng.random() < 0.7:
                words += SYNTHETIC_PHRASES[rng.integers(len(SYNTHETIC_PHRASES))]
        tags = tuple(SYNTHETIC_LEXICON.get(w, BioTag.O) for w in words)
        corpus.append(LabeledSentence(Sentence.from_words(str(k), words), tags))
    return corpus


def random_crf(sentences, cfg, seed=0, scale=2.0, l2=0.0):
    """Model over the features of `sentences` with uniform random weights in [-scale, scale]."""
    data = [LabeledSentence(s, (BioTag.O,) * len(s)) for s in sentences]
    model = CrfModel.zeros(build_symbol_table(data, cfg), l2, cfg)
    rng = np.random.default_rng(seed)
    return model.with_flat_weights(rng.uniform(-scale, scale, size=model.flat_weights().shape))


def enumerate_paths(E, T, begin, end):
    """(path, score) for all 5^n tag paths."""
    n = E.shape[0]
    for path in itertools.product(range(len(TAGS)), repeat=n):
        s = begin[path[0]] + end[path[-1]] + sum(E[i, t] for i, t in enumerate(path))
        s += sum(T[a, b] for a, b in zip(path, path[1:]))
        yield path, s




@functools.lru_cache(maxsize=None)
def all_paths(n):
    """Every tag path of length n as rows of an (5^n, n) index array, lexicographic."""
    return np.indices((len(TAGS),) * n).reshape(n, -1).T.copy()


def path_scores(E, T, begin, end):
    """Vectorized `enumerate_paths`: (paths, scores) arrays."""
    n = E.shape[0]
    paths = all_paths(n)
    scores = begin[paths[:, 0]] + end[paths[:, -1]] + E[np.arange(n), paths].sum(axis=1)
    if n > 1:
        scores += T[paths[:, :-1], paths[:, 1:]].sum(axis=1)
    return paths, scores
