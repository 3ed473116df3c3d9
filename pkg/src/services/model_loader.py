# src/services/model_loader.py
"""
Line-oriented model files shared by the tagger and the classifier.

    #version 1
    #type crf|clf
    #<key> <value> ...        type specific headers
    F <feature>               symbol table, in index order
    <record lines>            B / E / T / U, zero weights omitted
    #end
"""
import logging
import math
from typing import Dict, List, Tuple

from src.config import MODEL_FORMAT_VERSION
from src.utils.errors import MalformedModel, VersionMismatch

LOGGER = logging.getLogger(__name__)

END_MARKER = "#end"


# ------------------------------------------------------
# WEIGHTS
# ------------------------------------------------------
def format_weight(w) -> str:
    # repr() of a python float is the shortest round-trip exact decimal
    return repr(float(w))


def parse_weight(text, line_no) -> float:
    try:
        w = float(text)
    except ValueError:
        raise MalformedModel(f"unparsable weight {text!r}", line_no) from None
    if not math.isfinite(w):
        raise MalformedModel(f"non-finite weight {text!r}", line_no)
    return w


# ------------------------------------------------------
# WRITE
# ------------------------------------------------------
def write_model_file(model_type: str, headers: List[Tuple[str, str]], features: List[str], records: List[str]) -> str:
    lines = [f"#version {MODEL_FORMAT_VERSION}", f"#type {model_type}"]
    lines += [f"#{key} {value}" for key, value in headers]
    for name in features:
        if "\t" in name or "\n" in name or "\r" in name:
            raise ValueError(f"feature name {name!r} contains a tab or newline")
        lines.append(f"F {name}")
    lines += records
    lines.append(END_MARKER)
    return "".join(line + "\n" for line in lines)


# ------------------------------------------------------
# READ
# ------------------------------------------------------
class ModelFile:
    """Parsed container: headers, symbol table and raw record lines."""

    def __init__(self, headers: Dict[str, str], features: List[str], records: List[Tuple[int, str]]):
        self.headers = headers
        self.features = features
        self.records = records

    def require(self, key) -> str:
        if key not in self.headers:
            raise MalformedModel(f"missing #{key} header")
        return self.headers[key]


def read_model_file(text: str, expected_type: str) -> ModelFile:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedModel("empty model file", 1)

    first = lines[0].split(" ")
    if len(first) != 2 or first[0] != "#version":
        raise MalformedModel("first line must be '#version <n>'", 1)
    if first[1] != str(MODEL_FORMAT_VERSION):
        raise VersionMismatch(f"unsupported model version {first[1]!r} (expected {MODEL_FORMAT_VERSION})", 1)

    if lines[-1] != END_MARKER:
        raise MalformedModel("model file is truncated (missing #end)", len(lines))

    headers: Dict[str, str] = {}
    features: List[str] = []
    records: List[Tuple[int, str]] = []

    for line_no, line in enumerate(lines[1:-1], start=2):
        if line.startswith("#"):
            if features or records:
                raise MalformedModel("header after body lines", line_no)
            key, _, value = line[1:].partition(" ")
            if not key:
                raise MalformedModel("empty header", line_no)
            headers[key] = value
        elif line.startswith("F "):
            if records:
                raise MalformedModel("feature line after weight records", line_no)
            features.append(line[2:])
        elif line:
            records.append((line_no, line))
        else:
            raise MalformedModel("blank line inside model file", line_no)

    if headers.get("type") != expected_type:
        raise MalformedModel(f"expected model type {expected_type!r}, found {headers.get('type')!r}", 2)
    if len(set(features)) != len(features):
        raise MalformedModel("duplicate feature in symbol table")
    return ModelFile(headers, features, records)


# ------------------------------------------------------
# ModelBundle loader
# ------------------------------------------------------
class ModelBundle:
    """Tagger + classifier pair used by the end-to-end pipeline."""

    def __init__(self, tagger_path, classifier_path, embeddings_path=None):
        self.tagger_path = tagger_path
        self.classifier_path = classifier_path
        self.embeddings_path = embeddings_path
        self.tagger = None
        self.classifier = None
        self.embeddings = None
        self._load_models()

    def _load_models(self):
        from src.services.classifier_service import load_classifier
        from src.services.features_service import load_embeddings
        from src.services.tagger_service import load_model

        with open(self.tagger_path, encoding="utf-8") as f:
            self.tagger = load_model(f.read())
        with open(self.classifier_path, encoding="utf-8") as f:
            self.classifier = load_classifier(f.read())
        if self.embeddings_path:
            with open(self.embeddings_path, encoding="utf-8") as f:
                self.embeddings = load_embeddings(f.read(), self.tagger.embedding_dim or None)
        LOGGER.info("✔️ models loaded: tagger=%s classifier=%s", self.tagger_path, self.classifier_path)

    def feature_config(self):
        return self.tagger.feature_config(self.embeddings)
