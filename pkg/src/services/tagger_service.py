# src/services/tagger_service.py
"""
Linear-chain CRF over the five BIO tags.

Path score of tags t_1..t_n:
    begin[t_1] + sum_i E[i, t_i] + sum_i T[t_i, t_{i+1}] + end[t_n]
with emissions E[i, t] = <token_features(i), W[:, t]>.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import logsumexp

from src.config import DEFAULT_EPOCHS, DEFAULT_L2, DEFAULT_LR, DEFAULT_SEED
from src.services.corpus_service import TAG_INDEX, TAGS, BioTag, LabeledSentence, Sentence, parse_tag
from src.services.features_service import EmbeddingTable, FeatureConfig, sentence_features
from src.services.model_loader import format_weight, parse_weight, read_model_file, write_model_file
from src.utils.errors import EmptyData, IncexError, MalformedModel

LOGGER = logging.getLogger(__name__)

NUM_TAGS = len(TAGS)
ADAGRAD_EPS = 1e-8


# ------------------------------------------------------
# CONFIG + MODEL
# ------------------------------------------------------
class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    l2: float = Field(default=DEFAULT_L2, ge=0.0)
    epochs: int = Field(default=DEFAULT_EPOCHS, ge=0)
    learning_rate: float = Field(default=DEFAULT_LR, gt=0.0)
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    optimizer: str = Field(default="adagrad", pattern="^adagrad$")


@dataclass(frozen=True, eq=False)
class CrfModel:
    symbols: Dict[str, int]
    unary: np.ndarray          # F x 5
    transitions: np.ndarray    # 5 x 5, [from, to]
    begin: np.ndarray          # 5
    end: np.ndarray            # 5
    l2: float = 0.0
    window: int = 1
    use_affixes: bool = True
    use_shape: bool = True
    embedding_dim: int = 0
    tags: tuple = field(default=TAGS)

    @classmethod
    def zeros(cls, symbols: Dict[str, int], l2=0.0, cfg: Optional[FeatureConfig] = None) -> "CrfModel":
        cfg = cfg or FeatureConfig()
        return cls(
            symbols=dict(symbols),
            unary=np.zeros((len(symbols), NUM_TAGS)),
            transitions=np.zeros((NUM_TAGS, NUM_TAGS)),
            begin=np.zeros(NUM_TAGS),
            end=np.zeros(NUM_TAGS),
            l2=l2,
            window=cfg.window,
            use_affixes=cfg.use_affixes,
            use_shape=cfg.use_shape,
            embedding_dim=cfg.embedding_dim,
        )

    def feature_config(self, embeddings: Optional[EmbeddingTable] = None) -> FeatureConfig:
        return FeatureConfig(
            window=self.window,
            use_affixes=self.use_affixes,
            use_shape=self.use_shape,
            embeddings=embeddings,
        )

    @property
    def num_features(self):
        return len(self.symbols)

    def flat_weights(self) -> np.ndarray:
        return np.concatenate([self.unary.ravel(), self.transitions.ravel(), self.begin, self.end])

    def with_flat_weights(self, flat: np.ndarray) -> "CrfModel":
        F = self.num_features
        u = F * NUM_TAGS
        t = u + NUM_TAGS * NUM_TAGS
        return CrfModel(
            symbols=self.symbols,
            unary=np.array(flat[:u]).reshape(F, NUM_TAGS),
            transitions=np.array(flat[u:t]).reshape(NUM_TAGS, NUM_TAGS),
            begin=np.array(flat[t:t + NUM_TAGS]),
            end=np.array(flat[t + NUM_TAGS:t + 2 * NUM_TAGS]),
            l2=self.l2,
            window=self.window,
            use_affixes=self.use_affixes,
            use_shape=self.use_shape,
            embedding_dim=self.embedding_dim,
        )

    def __eq__(self, other):
        if not isinstance(other, CrfModel):
            return NotImplemented
        return (
            self.symbols == other.symbols
            and np.array_equal(self.unary, other.unary)
            and np.array_equal(self.transitions, other.transitions)
            and np.array_equal(self.begin, other.begin)
            and np.array_equal(self.end, other.end)
            and self.l2 == other.l2
            and (self.window, self.use_affixes, self.use_shape, self.embedding_dim)
            == (other.window, other.use_affixes, other.use_shape, other.embedding_dim)
        )


@dataclass
class CrfGradient:
    unary: np.ndarray
    transitions: np.ndarray
    begin: np.ndarray
    end: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.unary.ravel(), self.transitions.ravel(), self.begin, self.end])


@dataclass(frozen=True)
class TrainSummary:
    initial_nll: float
    final_nll: float
    epochs: int
    num_features: int
    seconds: float


# ------------------------------------------------------
# FEATURE COMPILATION
# ------------------------------------------------------
@dataclass(frozen=True)
class _Compiled:
    n: int
    pos: np.ndarray   # token position of each active feature
    idx: np.ndarray   # feature column
    val: np.ndarray   # feature value


def _compile(sentence: Sentence, symbols: Dict[str, int], cfg: FeatureConfig) -> _Compiled:
    pos, idx, val = [], [], []
    for i, feats in enumerate(sentence_features(sentence, cfg)):
        for name, v in feats.items():
            col = symbols.get(name)
            if col is not None:
                pos.append(i)
                idx.append(col)
                val.append(v)
    return _Compiled(
        n=len(sentence),
        pos=np.array(pos, dtype=np.int64),
        idx=np.array(idx, dtype=np.int64),
        val=np.array(val, dtype=float),
    )


def _emissions(comp: _Compiled, unary: np.ndarray) -> np.ndarray:
    E = np.zeros((comp.n, NUM_TAGS))
    if len(comp.idx):
        np.add.at(E, comp.pos, comp.val[:, None] * unary[comp.idx])
    return E


def _gold_indices(tags: Sequence[BioTag]) -> np.ndarray:
    return np.array([TAG_INDEX[BioTag(t)] for t in tags], dtype=np.int64)


# ------------------------------------------------------
# DYNAMIC PROGRAMS (log space)
# ------------------------------------------------------
def _forward(E, T, begin, end):
    n = E.shape[0]
    alpha = np.empty_like(E)
    alpha[0] = begin + E[0]
    for i in range(1, n):
        alpha[i] = logsumexp(alpha[i - 1][:, None] + T, axis=0) + E[i]
    return alpha, float(logsumexp(alpha[-1] + end))


def _backward(E, T, end):
    n = E.shape[0]
    beta = np.empty_like(E)
    beta[-1] = end
    for i in range(n - 2, -1, -1):
        beta[i] = logsumexp(T + (E[i + 1] + beta[i + 1])[None, :], axis=1)
    return beta


def _marginals(E, T, begin, end):
    alpha, log_z = _forward(E, T, begin, end)
    beta = _backward(E, T, end)
    node = np.exp(alpha + beta - log_z)
    edge = np.exp(alpha[:-1, :, None] + T[None, :, :] + (E[1:] + beta[1:])[:, None, :] - log_z)
    return node, edge, log_z


def _path_score(E, T, begin, end, gold: np.ndarray) -> float:
    score = begin[gold[0]] + E[np.arange(len(gold)), gold].sum() + end[gold[-1]]
    if len(gold) > 1:
        score += T[gold[:-1], gold[1:]].sum()
    return float(score)


def _viterbi(E, T, begin, end) -> np.ndarray:
    n = E.shape[0]
    delta = begin + E[0]
    back = np.zeros((n, NUM_TAGS), dtype=np.int64)
    for i in range(1, n):
        scores = delta[:, None] + T
        # argmax returns the first maximum: ties go to the lower canonical tag
        back[i] = np.argmax(scores, axis=0)
        delta = scores[back[i], np.arange(NUM_TAGS)] + E[i]
    path = np.empty(n, dtype=np.int64)
    path[-1] = int(np.argmax(delta + end))
    for i in range(n - 1, 0, -1):
        path[i - 1] = back[i, path[i]]
    return path


# ===================================================================
# PUBLIC OPERATIONS
# ===================================================================
def sequence_scores(model: CrfModel, sentence: Sentence, cfg: FeatureConfig) -> np.ndarray:
    return _emissions(_compile(sentence, model.symbols, cfg), model.unary)


def log_partition(model: CrfModel, sentence: Sentence, cfg: FeatureConfig) -> float:
    E = sequence_scores(model, sentence, cfg)
    return _forward(E, model.transitions, model.begin, model.end)[1]


def posterior_marginals(model: CrfModel, sentence: Sentence, cfg: FeatureConfig):
    """Exact node (n x 5) and edge ((n-1) x 5 x 5) marginals by forward-backward."""
    E = sequence_scores(model, sentence, cfg)
    node, edge, _ = _marginals(E, model.transitions, model.begin, model.end)
    return node, edge


def path_score(model: CrfModel, sentence: Sentence, cfg: FeatureConfig, tags: Sequence[BioTag]) -> float:
    E = sequence_scores(model, sentence, cfg)
    return _path_score(E, model.transitions, model.begin, model.end, _gold_indices(tags))


def viterbi(model: CrfModel, sentence: Sentence, cfg: FeatureConfig) -> List[BioTag]:
    E = sequence_scores(model, sentence, cfg)
    return [TAGS[k] for k in _viterbi(E, model.transitions, model.begin, model.end)]


def tag_sentences(model: CrfModel, sentences: Sequence[Sentence], cfg: FeatureConfig, jobs=1) -> List[List[BioTag]]:
    """Viterbi over many sentences; joblib keeps results in input order."""
    if jobs == 1 or len(sentences) < 2:
        return [viterbi(model, s, cfg) for s in sentences]
    return Parallel(n_jobs=jobs)(delayed(viterbi)(model, s, cfg) for s in sentences)


def nll_and_gradient(model: CrfModel, batch: Sequence[LabeledSentence], cfg: FeatureConfig, l2: float):
    """sum(log Z - gold score) + l2/2 ||w||^2, and its gradient (expected - empirical + l2 w)."""
    g_unary = np.zeros_like(model.unary)
    g_trans = np.zeros_like(model.transitions)
    g_begin = np.zeros_like(model.begin)
    g_end = np.zeros_like(model.end)
    nll = 0.0

    for ls in batch:
        comp = _compile(ls.sentence, model.symbols, cfg)
        gold = _gold_indices(ls.tags)
        E = _emissions(comp, model.unary)
        node, edge, log_z = _marginals(E, model.transitions, model.begin, model.end)
        nll += log_z - _path_score(E, model.transitions, model.begin, model.end, gold)

        delta = node.copy()
        delta[np.arange(comp.n), gold] -= 1.0
        if len(comp.idx):
            np.add.at(g_unary, comp.idx, comp.val[:, None] * delta[comp.pos])
        g_trans += edge.sum(axis=0)
        np.add.at(g_trans, (gold[:-1], gold[1:]), -1.0)
        g_begin += node[0]
        g_begin[gold[0]] -= 1.0
        g_end += node[-1]
        g_end[gold[-1]] -= 1.0

    flat = model.flat_weights()
    nll += 0.5 * l2 * float(flat @ flat)
    grad = CrfGradient(
        unary=g_unary + l2 * model.unary,
        transitions=g_trans + l2 * model.transitions,
        begin=g_begin + l2 * model.begin,
        end=g_end + l2 * model.end,
    )
    return nll, grad


def training_nll(model: CrfModel, data: Sequence[LabeledSentence], cfg: FeatureConfig, l2: float) -> float:
    nll = 0.0
    for ls in data:
        E = sequence_scores(model, ls.sentence, cfg)
        _, log_z = _forward(E, model.transitions, model.begin, model.end)
        nll += log_z - _path_score(E, model.transitions, model.begin, model.end, _gold_indices(ls.tags))
    flat = model.flat_weights()
    return nll + 0.5 * l2 * float(flat @ flat)


# ------------------------------------------------------
# TRAINING
# ------------------------------------------------------
def build_symbol_table(data: Sequence[LabeledSentence], cfg: FeatureConfig) -> Dict[str, int]:
    symbols: Dict[str, int] = {}
    for ls in data:
        for feats in sentence_features(ls.sentence, cfg):
            for name in feats:
                if name not in symbols:
                    symbols[name] = len(symbols)
    return symbols


def train(data: Sequence[LabeledSentence], cfg: FeatureConfig, tcfg: TrainConfig) -> CrfModel:
    return train_with_summary(data, cfg, tcfg)[0]


def train_with_summary(data: Sequence[LabeledSentence], cfg: FeatureConfig, tcfg: TrainConfig):
    """
    AdaGrad with per-sentence updates in a seeded shuffled order.

    The L2 term is split across sentences: a feature seen in c sentences gets
    l2/c of its penalty on each of them, transition/begin/end weights get l2/N,
    so one epoch of per-sentence objectives sums to the full objective.
    """
    if not data:
        raise EmptyData("cannot train a tagger on an empty dataset")
    started = time.time()

    symbols = build_symbol_table(data, cfg)
    compiled = [_compile(ls.sentence, symbols, cfg) for ls in data]
    golds = [_gold_indices(ls.tags) for ls in data]
    N, F = len(data), len(symbols)

    active = []
    counts = np.zeros(F)
    for comp in compiled:
        uniq, inverse = np.unique(comp.idx, return_inverse=True)
        active.append((uniq, inverse))
        counts[uniq] += 1.0
    row_reg = np.divide(tcfg.l2, counts, out=np.zeros(F), where=counts > 0)
    dense_reg = tcfg.l2 / N

    W = np.zeros((F, NUM_TAGS))
    T = np.zeros((NUM_TAGS, NUM_TAGS))
    b = np.zeros(NUM_TAGS)
    e = np.zeros(NUM_TAGS)
    G_W, G_T, G_b, G_e = np.zeros_like(W), np.zeros_like(T), np.zeros_like(b), np.zeros_like(e)

    model = CrfModel.zeros(symbols, tcfg.l2, cfg)
    initial_nll = training_nll(model, data, cfg, tcfg.l2)
    LOGGER.debug("initial NLL %.6f over %d sentences, %d features", initial_nll, N, F)

    rng = np.random.default_rng(tcfg.seed)
    lr = tcfg.learning_rate

    for epoch in range(tcfg.epochs):
        running = 0.0
        for s in rng.permutation(N):
            comp, gold = compiled[s], golds[s]
            uniq, inverse = active[s]

            E = _emissions(comp, W)
            node, edge, log_z = _marginals(E, T, b, e)
            running += log_z - _path_score(E, T, b, e, gold)

            delta = node
            delta[np.arange(comp.n), gold] -= 1.0

            g_rows = np.zeros((len(uniq), NUM_TAGS))
            if len(uniq):
                np.add.at(g_rows, inverse, comp.val[:, None] * delta[comp.pos])
                g_rows += row_reg[uniq][:, None] * W[uniq]
            g_T = edge.sum(axis=0)
            np.add.at(g_T, (gold[:-1], gold[1:]), -1.0)
            g_T += dense_reg * T
            g_b = delta[0] + dense_reg * b
            g_e = delta[-1] + dense_reg * e

            if len(uniq):
                G_W[uniq] += g_rows ** 2
                W[uniq] -= lr * g_rows / (np.sqrt(G_W[uniq]) + ADAGRAD_EPS)
            G_T += g_T ** 2
            T -= lr * g_T / (np.sqrt(G_T) + ADAGRAD_EPS)
            G_b += g_b ** 2
            b -= lr * g_b / (np.sqrt(G_b) + ADAGRAD_EPS)
            G_e += g_e ** 2
            e -= lr * g_e / (np.sqrt(G_e) + ADAGRAD_EPS)
        LOGGER.debug("epoch %d/%d running NLL %.6f", epoch + 1, tcfg.epochs, running)

    for arr in (W, T, b, e):
        arr.setflags(write=False)
    model = CrfModel(symbols, W, T, b, e, tcfg.l2, cfg.window, cfg.use_affixes, cfg.use_shape, cfg.embedding_dim)
    final_nll = training_nll(model, data, cfg, tcfg.l2)

    summary = TrainSummary(initial_nll, final_nll, tcfg.epochs, F, time.time() - started)
    LOGGER.info(
        "tagger trained: %d sentences, %d features, %d epochs, NLL %.4f -> %.4f (%.1fs)",
        N, F, tcfg.epochs, initial_nll, final_nll, summary.seconds,
    )
    return model, summary


# ------------------------------------------------------
# MODEL FILES
# ------------------------------------------------------
def save_model(model: CrfModel) -> str:
    tag_names = [t.value for t in TAGS]
    headers = [
        ("tags", " ".join(tag_names)),
        ("l2", format_weight(model.l2)),
        ("window", str(model.window)),
        ("affixes", str(int(model.use_affixes))),
        ("shape", str(int(model.use_shape))),
        ("embdim", str(model.embedding_dim)),
    ]
    features = sorted(model.symbols, key=model.symbols.get)

    records = []
    for k, tag in enumerate(tag_names):
        if model.begin[k] != 0.0:
            records.append(f"B {tag} {format_weight(model.begin[k])}")
    for k, tag in enumerate(tag_names):
        if model.end[k] != 0.0:
            records.append(f"E {tag} {format_weight(model.end[k])}")
    for a, tag_a in enumerate(tag_names):
        for c, tag_c in enumerate(tag_names):
            if model.transitions[a, c] != 0.0:
                records.append(f"T {tag_a} {tag_c} {format_weight(model.transitions[a, c])}")
    for name in features:
        row = model.unary[model.symbols[name]]
        for k, tag in enumerate(tag_names):
            if row[k] != 0.0:
                records.append(f"U {name} {tag} {format_weight(row[k])}")
    return write_model_file("crf", headers, features, records)


def _int_header(mf, key, line_no=None):
    try:
        return int(mf.require(key))
    except ValueError:
        raise MalformedModel(f"#{key} must be an integer", line_no) from None


def load_model(text: str) -> CrfModel:
    mf = read_model_file(text, "crf")
    if mf.require("tags").split(" ") != [t.value for t in TAGS]:
        raise MalformedModel(f"tag set mismatch: {mf.require('tags')!r}")

    symbols = {name: i for i, name in enumerate(mf.features)}
    W = np.zeros((len(symbols), NUM_TAGS))
    T = np.zeros((NUM_TAGS, NUM_TAGS))
    b = np.zeros(NUM_TAGS)
    e = np.zeros(NUM_TAGS)

    for line_no, line in mf.records:
        kind = line[:2]
        try:
            if kind in ("B ", "E "):
                _, tag, w = line.split(" ")
                target = b if kind == "B " else e
                target[TAG_INDEX[parse_tag(tag, line_no)]] = parse_weight(w, line_no)
            elif kind == "T ":
                _, a, c, w = line.split(" ")
                T[TAG_INDEX[parse_tag(a, line_no)], TAG_INDEX[parse_tag(c, line_no)]] = parse_weight(w, line_no)
            elif kind == "U ":
                name, tag, w = line[2:].rsplit(" ", 2)
                if name not in symbols:
                    raise MalformedModel(f"weight for undeclared feature {name!r}", line_no)
                W[symbols[name], TAG_INDEX[parse_tag(tag, line_no)]] = parse_weight(w, line_no)
            else:
                raise MalformedModel(f"unknown record {line!r}", line_no)
        except MalformedModel:
            raise
        except (ValueError, IncexError) as exc:
            raise MalformedModel(f"malformed record {line!r}: {exc}", line_no) from None

    for arr in (W, T, b, e):
        arr.setflags(write=False)
    return CrfModel(
        symbols=symbols,
        unary=W,
        transitions=T,
        begin=b,
        end=e,
        l2=parse_weight(mf.require("l2"), None),
        window=_int_header(mf, "window"),
        use_affixes=bool(_int_header(mf, "affixes")),
        use_shape=bool(_int_header(mf, "shape")),
        embedding_dim=_int_header(mf, "embdim"),
    )
