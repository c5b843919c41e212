"""Linear one-vs-rest practice classifiers over policy segments.

The suite holds exactly 32 binary models: one per PII type plus Performed,
Not_Performed, 1stParty, and 3rdParty. Each model is a hinge-loss linear
classifier trained by seeded stochastic subgradient descent, so identical
(corpus, seed) inputs reproduce bit-identical weights.

A segment is *valid* when at least one PII model, a procedure model, and a
party model all fire; only valid segments contribute disclosures. When both
procedure models fire on one segment, every flagged PII type is emitted as
Performed, and when both party models fire, one disclosure is emitted per
party.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ModelFormatError
from .features import (
    FeatureVector,
    KeywordCatalog,
    Vocabulary,
    featurize,
    fit_vocabulary,
    load_stopwords,
)
from .labels import (
    CLASSIFIER_LABELS,
    FIRST_PARTY,
    NOT_PERFORMED,
    PERFORMED,
    PII_LABELS,
    PracticeDisclosure,
    THIRD_PARTY,
)
from .policy_text import normalize_segment

SUITE_FORMAT = "policy-suite/1"
DEFAULT_EPOCHS = 20
LAMBDA = 1e-4


@dataclass(frozen=True)
class AnnotatedSegment:
    """A segment with gold (pii, procedure, party) triples.

    Triples use classifier-tier names, e.g.
    ("Identifier_Cookie", "Performed", "3rdParty"); an empty set marks a
    negative example for all 32 models.
    """

    text: str
    triples: frozenset[tuple[str, str, str]] = frozenset()


def read_annotated_jsonl(path: str | Path) -> list[AnnotatedSegment]:
    """One object per line: {"text": ..., "triples": [[pii, proc, party], ...]}."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        triples = frozenset(tuple(t) for t in obj.get("triples", []))
        out.append(AnnotatedSegment(obj["text"], triples))
    return out


def write_annotated_jsonl(segments: list[AnnotatedSegment], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seg in segments:
            fh.write(
                json.dumps(
                    {"text": seg.text, "triples": sorted(list(t) for t in seg.triples)},
                    sort_keys=True,
                )
                + "\n"
            )


def segment_is_positive(segment: AnnotatedSegment, label: str) -> bool:
    """Binary target for one of the 32 models, derived from gold triples."""
    if label in ("Performed", "Not_Performed"):
        return any(t[1] == label for t in segment.triples)
    if label in ("1stParty", "3rdParty"):
        return any(t[2] == label for t in segment.triples)
    return any(t[0] == label for t in segment.triples)


@dataclass
class LinearModel:
    """One binary hinge-loss model: decision = w.x + b, positive iff > 0."""

    label: str
    weights: np.ndarray
    bias: float
    constant_negative: bool = False
    seed: int = 0
    epochs: int = 0

    def decision(self, fv: FeatureVector) -> float:
        if fv.total_dim != self.weights.shape[0]:
            raise DimensionMismatch(
                f"{self.label}: vector dim {fv.total_dim} != model dim {self.weights.shape[0]}"
            )
        w = self.weights
        return float(sum(w[i] * v for i, v in fv.entries) + self.bias)

    def predict(self, fv: FeatureVector) -> bool:
        return self.decision(fv) > 0.0


def train_binary(
    corpus: list[tuple[FeatureVector, bool]],
    dim: int,
    seed: int = 0,
    epochs: int = DEFAULT_EPOCHS,
    lam: float = LAMBDA,
    label: str = "",
) -> LinearModel:
    """Pegasos-style SGD on the hinge loss, deterministic under (corpus, seed).

    Learning rate is 1/(lam*t) over a seeded per-epoch shuffle. Examples are
    class-balance weighted so rare labels still train. The bias decays with
    the weights (a regularized constant column); an unregularized bias never
    recovers from the large first-step learning rate. A corpus missing
    either class yields a constant-negative model with its flag set.
    """
    for fv, _ in corpus:
        if fv.total_dim != dim:
            raise DimensionMismatch(f"vector dim {fv.total_dim} != suite dim {dim}")
    n = len(corpus)
    n_pos = sum(1 for _, y in corpus if y)
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return LinearModel(
            label, np.zeros(dim), -1.0, constant_negative=True, seed=seed, epochs=epochs
        )

    weight_pos = n / (2.0 * n_pos)
    weight_neg = n / (2.0 * n_neg)
    rng = random.Random(seed)
    w = np.zeros(dim)
    b = 0.0
    t = 0
    order = list(range(n))
    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            t += 1
            fv, y = corpus[idx]
            sign = 1.0 if y else -1.0
            margin = sign * (sum(w[i] * v for i, v in fv.entries) + b)
            eta = 1.0 / (lam * t)
            decay = 1.0 - eta * lam
            w *= decay
            b *= decay
            if margin < 1.0:
                step = eta * (weight_pos if y else weight_neg) * sign
                for i, v in fv.entries:
                    w[i] += step * v
                b += step
    return LinearModel(label, w, b, False, seed, epochs)


def _hash_json(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def feature_space_hash(vocab: Vocabulary, catalog: KeywordCatalog) -> str:
    return _hash_json(
        {
            "tokens": sorted((t, i, vocab.document_frequency[t]) for t, i in vocab.index.items()),
            "n_documents": vocab.n_documents,
            "catalog": [list(c) for c in catalog.columns],
        }
    )


def corpus_hash(segments: list[AnnotatedSegment]) -> str:
    return _hash_json([[s.text, sorted(map(list, s.triples))] for s in segments])


@dataclass
class EvaluationReport:
    """Per-model accuracy/precision/recall/F1 plus macro averages."""

    per_label: dict[str, dict[str, float]] = field(default_factory=dict)
    macro: dict[str, float] = field(default_factory=dict)
    computed: bool = True
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_label": self.per_label,
            "macro": self.macro,
            "computed": self.computed,
            "warnings": self.warnings,
        }


@dataclass
class ClassifierSuite:
    """The 32 trained models plus their shared feature space."""

    vocabulary: Vocabulary
    catalog: KeywordCatalog
    models: dict[str, LinearModel]
    corpus_digest: str = ""

    def __post_init__(self):
        if set(self.models) != set(CLASSIFIER_LABELS):
            raise ValueError(
                f"suite requires exactly the {len(CLASSIFIER_LABELS)} classifier labels, "
                f"got {len(self.models)}"
            )

    @property
    def dim(self) -> int:
        return len(self.vocabulary) + len(self.catalog)

    @property
    def space_digest(self) -> str:
        return feature_space_hash(self.vocabulary, self.catalog)

    def featurize_text(self, raw_text: str) -> FeatureVector:
        return featurize(normalize_segment(raw_text), self.vocabulary, self.catalog)

    def save(self, path: str | Path) -> None:
        payload = {
            "format": SUITE_FORMAT,
            "corpus_hash": self.corpus_digest,
            "feature_space_hash": self.space_digest,
            "vocabulary": self.vocabulary.to_dict(),
            "catalog": self.catalog.raw,
            "models": {
                label: {
                    "weights": [[i, float(w)] for i, w in enumerate(m.weights) if w != 0.0],
                    "bias": m.bias,
                    "constant_negative": m.constant_negative,
                    "seed": m.seed,
                    "epochs": m.epochs,
                }
                for label, m in self.models.items()
            },
        }
        Path(path).write_text(
            json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierSuite":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelFormatError(f"cannot read suite: {exc}") from exc
        if payload.get("format") != SUITE_FORMAT:
            raise ModelFormatError(f"unsupported suite format: {payload.get('format')!r}")
        vocab = Vocabulary.from_dict(payload["vocabulary"])
        catalog = KeywordCatalog.from_mapping(payload["catalog"])
        dim = len(vocab) + len(catalog)
        models = {}
        for label, spec in payload["models"].items():
            w = np.zeros(dim)
            for i, v in spec["weights"]:
                w[int(i)] = float(v)
            models[label] = LinearModel(
                label,
                w,
                float(spec["bias"]),
                bool(spec.get("constant_negative", False)),
                int(spec.get("seed", 0)),
                int(spec.get("epochs", 0)),
            )
        suite = cls(vocab, catalog, models, payload.get("corpus_hash", ""))
        # Refuse to classify with a model whose feature space was tampered with.
        if payload.get("feature_space_hash") != suite.space_digest:
            raise ModelFormatError("feature-space hash mismatch; refusing to load suite")
        return suite


def train_suite(
    corpus: list[AnnotatedSegment],
    split: tuple[list[int], list[int]],
    seed: int = 0,
    epochs: int = DEFAULT_EPOCHS,
    stopwords: frozenset[str] | None = None,
    catalog: KeywordCatalog | None = None,
) -> tuple[ClassifierSuite, EvaluationReport]:
    """Fit the vocabulary on the training split only and train all 32 models.

    Split indices must be disjoint. Labels with no positive training
    example produce flagged constant-negative models and a warning.
    """
    train_ids, test_ids = split
    if set(train_ids) & set(test_ids):
        raise ValueError("train/test splits overlap")
    train = [corpus[i] for i in train_ids]
    test = [corpus[i] for i in test_ids]
    if not train:
        raise ValueError("empty training split")

    if stopwords is None:
        stopwords = load_stopwords()
    if catalog is None:
        catalog = KeywordCatalog.load()

    normalized = [normalize_segment(s.text) for s in train]
    vocab = fit_vocabulary(normalized, stopwords)
    dim = len(vocab) + len(catalog)
    vectors = [featurize(text, vocab, catalog) for text in normalized]

    warnings = []
    models = {}
    for label in CLASSIFIER_LABELS:
        targets = [segment_is_positive(s, label) for s in train]
        if not any(targets):
            warnings.append(f"label absent from training split: {label}")
        models[label] = train_binary(
            list(zip(vectors, targets)), dim, seed=seed, epochs=epochs, label=label
        )

    suite = ClassifierSuite(vocab, catalog, models, corpus_hash(train))
    report = evaluate_suite(suite, test) if test else EvaluationReport(computed=False)
    report.warnings = warnings + report.warnings
    return suite, report


def classify_segment(suite: ClassifierSuite, text: str) -> set[str]:
    """Names of the models that return a positive decision for this text."""
    fv = suite.featurize_text(text)
    return {label for label, m in suite.models.items() if m.predict(fv)}


def derive_practices(
    positive_labels: set[str],
) -> tuple[bool, frozenset[PracticeDisclosure]]:
    """Resolve one segment's positive labels into disclosure triples.

    Valid needs a PII label, a procedure label, and a party label. If
    Performed fired (alone or alongside Not_Performed) every flagged PII
    type is emitted as Performed; only-Not_Performed emits NotPerformed.
    Both parties firing emits one triple per party.
    """
    pii = [l for l in PII_LABELS if l in positive_labels]
    performed = "Performed" in positive_labels
    not_performed = "Not_Performed" in positive_labels
    first = "1stParty" in positive_labels
    third = "3rdParty" in positive_labels
    valid = bool(pii) and (performed or not_performed) and (first or third)
    if not valid:
        return False, frozenset()
    procedure = PERFORMED if performed else NOT_PERFORMED
    parties = [p for p, hit in ((FIRST_PARTY, first), (THIRD_PARTY, third)) if hit]
    return True, frozenset(
        PracticeDisclosure(p, procedure, party) for p in pii for party in parties
    )


@dataclass
class PolicyDisclosureProfile:
    """Union of disclosures over one policy's valid segments."""

    policy_id: str
    disclosed: frozenset[PracticeDisclosure]
    valid_segment_count: int
    total_segment_count: int


def aggregate_policy(
    suite: ClassifierSuite, segments: list[str], policy_id: str = ""
) -> PolicyDisclosureProfile:
    """Classify every segment and union the derived practices."""
    disclosed: set[PracticeDisclosure] = set()
    valid_count = 0
    for text in segments:
        valid, practices = derive_practices(classify_segment(suite, text))
        if valid:
            valid_count += 1
            disclosed |= practices
    return PolicyDisclosureProfile(
        policy_id, frozenset(disclosed), valid_count, len(segments)
    )


def _metrics(tp: int, fp: int, fn: int, tn: int) -> dict[str, float]:
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return {
        "accuracy": accuracy,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "support": tp + fn,
    }


def evaluate_suite(
    suite: ClassifierSuite, segments: list[AnnotatedSegment]
) -> EvaluationReport:
    """Per-model metrics on an annotated test set (0/0 conventions -> 0)."""
    if not segments:
        return EvaluationReport(computed=False)
    vectors = [suite.featurize_text(s.text) for s in segments]
    per_label = {}
    for label in CLASSIFIER_LABELS:
        model = suite.models[label]
        tp = fp = fn = tn = 0
        for fv, seg in zip(vectors, segments):
            predicted = model.predict(fv)
            actual = segment_is_positive(seg, label)
            if predicted and actual:
                tp += 1
            elif predicted:
                fp += 1
            elif actual:
                fn += 1
            else:
                tn += 1
        per_label[label] = _metrics(tp, fp, fn, tn)
    macro = {
        key: sum(m[key] for m in per_label.values()) / len(per_label)
        for key in ("accuracy", "precision", "recall", "f1")
    }
    return EvaluationReport(per_label, macro)
