"""Multinomial Naive Bayes over sparse vectors, plus evaluation and sweeps."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .features import SourceMode, SparseVector, Vocabulary
from .tableio import round12
from .textprep import Document

MODEL_FORMAT = "nbmodel/1"

DEFAULT_THRESHOLD_GRID = tuple(i / 100.0 for i in range(101))


@dataclass(frozen=True)
class NBModel:
    classes: Tuple[str, ...]  # canonical (alphabetical) order
    log_prior: Tuple[float, ...]
    log_likelihood: Tuple[Tuple[float, ...], ...]  # [class][feature]
    alpha: float
    vocab_ref: str  # content hash of the vocabulary the matrix was built over
    mode: SourceMode

    @property
    def n_features(self) -> int:
        return len(self.log_likelihood[0]) if self.log_likelihood else 0


@dataclass(frozen=True)
class Prediction:
    probabilities: Tuple[float, ...]  # aligned with the model's class order
    predicted_class: str
    p_max: float


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: Tuple[str, ...]
    counts: Tuple[Tuple[int, ...], ...]  # counts[actual][predicted]
    row_percent: Tuple[Tuple[float, ...], ...]
    zero_rows: Tuple[str, ...]  # actual classes absent from the validation set


def _grouped_by_class(docs: Sequence[Document]) -> Dict[str, List[int]]:
    groups: Dict[str, List[int]] = {}
    for i, doc in enumerate(docs):
        if doc.category_label is None:
            raise ValueError(f"unlabeled document: {doc.source_url}")
        groups.setdefault(doc.category_label, []).append(i)
    if not groups:
        raise ValueError("no labeled documents")
    return groups


def balance_classes(docs: Sequence[Document], seed: int) -> List[Document]:
    """Downsample every class, uniformly without replacement, to the smallest one."""
    groups = _grouped_by_class(docs)
    target = min(len(indices) for indices in groups.values())
    rng = random.Random(seed)
    kept: List[int] = []
    for label in sorted(groups):
        kept.extend(sorted(rng.sample(groups[label], target)))
    return [docs[i] for i in kept]


def split_train_validation(
    docs: Sequence[Document], ratio: float = 0.7, seed: int = 0
) -> Tuple[List[Document], List[Document]]:
    """Stratified split: floor(ratio x class size) to train, the rest to validation."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    groups = _grouped_by_class(docs)
    rng = random.Random(seed)
    train_idx: List[int] = []
    val_idx: List[int] = []
    for label in sorted(groups):
        indices = list(groups[label])
        rng.shuffle(indices)
        n_train = math.floor(ratio * len(indices))
        train_idx.extend(indices[:n_train])
        val_idx.extend(indices[n_train:])
    return [docs[i] for i in sorted(train_idx)], [docs[i] for i in sorted(val_idx)]


def train(
    matrix: Sequence[SparseVector],
    labels: Sequence[str],
    vocab: Vocabulary,
    alpha: float = 1.0,
) -> NBModel:
    """Fit priors and smoothed per-class feature likelihoods.

    Weights act as (possibly fractional) counts, so BoW and TF-IDF inputs go
    through the identical estimator.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not matrix or len(matrix) != len(labels):
        raise ValueError("matrix and labels must be equal-length and non-empty")
    classes = tuple(sorted(set(labels)))
    k = vocab.k
    counts = {label: 0 for label in classes}
    sums = {label: [0.0] * k for label in classes}
    totals = {label: 0.0 for label in classes}
    for vector, label in zip(matrix, labels):
        counts[label] += 1
        row = sums[label]
        for feature_id, weight in vector.entries:
            if feature_id >= k:
                raise ValueError("feature id outside the vocabulary")
            row[feature_id] += weight
            totals[label] += weight
    n_docs = len(matrix)
    log_prior = tuple(math.log(counts[c] / n_docs) for c in classes)
    log_likelihood = tuple(
        tuple(
            math.log((alpha + sums[c][i]) / (k * alpha + totals[c])) for i in range(k)
        )
        for c in classes
    )
    return NBModel(
        classes=classes,
        log_prior=log_prior,
        log_likelihood=log_likelihood,
        alpha=alpha,
        vocab_ref=vocab.content_hash(),
        mode=vocab.source_mode,
    )


def predict_proba(model: NBModel, vector: SparseVector) -> Prediction:
    """Posterior over classes, computed in log space with max-subtraction."""
    k = model.n_features
    scores: List[float] = []
    for c, _ in enumerate(model.classes):
        score = model.log_prior[c]
        row = model.log_likelihood[c]
        for feature_id, weight in vector.entries:
            if feature_id >= k:
                raise ValueError("feature id outside the model's feature space")
            score += weight * row[feature_id]
        scores.append(score)
    peak = max(scores)
    exps = [math.exp(score - peak) for score in scores]
    total = sum(exps)
    probabilities = tuple(value / total for value in exps)
    best = max(range(len(probabilities)), key=lambda i: (probabilities[i], -i))
    return Prediction(
        probabilities=probabilities,
        predicted_class=model.classes[best],
        p_max=probabilities[best],
    )


def classify_unlabeled(
    model: NBModel, vector: SparseVector, threshold: float
) -> Optional[str]:
    """Predicted class when confidence clears the threshold, else None."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    prediction = predict_proba(model, vector)
    return prediction.predicted_class if prediction.p_max >= threshold else None


def confusion_matrix(
    pairs: Sequence[Tuple[str, str]], classes: Sequence[str]
) -> ConfusionMatrix:
    """Row-normalized actual-vs-predicted percentages; empty rows stay zero."""
    order = {label: i for i, label in enumerate(classes)}
    counts = [[0] * len(classes) for _ in classes]
    for actual, predicted in pairs:
        if actual not in order or predicted not in order:
            raise ValueError(f"label outside the class set: {(actual, predicted)!r}")
        counts[order[actual]][order[predicted]] += 1
    row_percent: List[Tuple[float, ...]] = []
    zero_rows: List[str] = []
    for label, row in zip(classes, counts):
        total = sum(row)
        if total == 0:
            zero_rows.append(label)
            row_percent.append(tuple(0.0 for _ in row))
        else:
            row_percent.append(tuple(100.0 * cell / total for cell in row))
    return ConfusionMatrix(
        classes=tuple(classes),
        counts=tuple(tuple(row) for row in counts),
        row_percent=tuple(row_percent),
        zero_rows=tuple(zero_rows),
    )


def evaluate(
    model: NBModel, matrix: Sequence[SparseVector], labels: Sequence[str]
) -> Tuple[float, ConfusionMatrix, Tuple[float, ...]]:
    """(accuracy percent, confusion matrix, per-class accuracy = its diagonal)."""
    if not matrix or len(matrix) != len(labels):
        raise ValueError("validation matrix and labels must be equal-length, non-empty")
    pairs = [
        (label, predict_proba(model, vector).predicted_class)
        for vector, label in zip(matrix, labels)
    ]
    accuracy = 100.0 * sum(1 for actual, predicted in pairs if actual == predicted) / len(pairs)
    matrix_out = confusion_matrix(pairs, model.classes)
    per_class = tuple(matrix_out.row_percent[i][i] for i in range(len(model.classes)))
    return accuracy, matrix_out, per_class


def threshold_sweep(
    predictions: Sequence[Tuple[Prediction, bool]],
    grid: Sequence[float] = DEFAULT_THRESHOLD_GRID,
) -> List[Tuple[float, float, float]]:
    """(threshold, precision among accepted, fraction of positives retained) per step."""
    if not predictions:
        raise ValueError("threshold_sweep needs at least one prediction")
    total_truth = sum(1 for _, truth in predictions if truth)
    out: List[Tuple[float, float, float]] = []
    for threshold in grid:
        accepted = [truth for prediction, truth in predictions if prediction.p_max >= threshold]
        true_hits = sum(1 for truth in accepted if truth)
        tp_rate = true_hits / max(1, len(accepted))
        retained = true_hits / max(1, total_truth)
        out.append((threshold, tp_rate, retained))
    return out


def top_features(
    model: NBModel, vocab: Vocabulary, n: int = 10
) -> Dict[str, List[Tuple[str, float]]]:
    """Class-distinctive terms: likelihood margin over the best other class."""
    if n > vocab.k:
        raise ValueError("n exceeds the vocabulary size")
    if len(model.classes) < 2:
        raise ValueError("top_features needs at least two classes")
    result: Dict[str, List[Tuple[str, float]]] = {}
    for c, label in enumerate(model.classes):
        scores: List[Tuple[str, float]] = []
        for i, term in enumerate(vocab.terms):
            rival = max(
                model.log_likelihood[other][i]
                for other in range(len(model.classes))
                if other != c
            )
            scores.append((term, model.log_likelihood[c][i] - rival))
        scores.sort(key=lambda item: (-item[1], item[0]))
        result[label] = scores[:n]
    return result


def model_to_json(model: NBModel) -> str:
    """Single-document serialization with floats clamped to 12 significant digits."""
    flat = [round12(x) for row in model.log_likelihood for x in row]
    obj = {
        "version": MODEL_FORMAT,
        "classes": list(model.classes),
        "log_prior": [round12(x) for x in model.log_prior],
        "log_likelihood": flat,  # row-major, classes x features
        "n_features": model.n_features,
        "alpha": round12(model.alpha),
        "vocab_ref": model.vocab_ref,
        "mode": model.mode.value,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def model_from_json(text: str) -> NBModel:
    obj = json.loads(text)
    if obj.get("version") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format: {obj.get('version')!r}")
    classes = tuple(obj["classes"])
    k = int(obj["n_features"])
    flat = obj["log_likelihood"]
    if len(flat) != len(classes) * k:
        raise ValueError("likelihood matrix does not match classes x features")
    rows = tuple(
        tuple(float(x) for x in flat[c * k : (c + 1) * k]) for c in range(len(classes))
    )
    return NBModel(
        classes=classes,
        log_prior=tuple(float(x) for x in obj["log_prior"]),
        log_likelihood=rows,
        alpha=float(obj["alpha"]),
        vocab_ref=str(obj["vocab_ref"]),
        mode=SourceMode(obj["mode"]),
    )
