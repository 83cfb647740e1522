"""Base classifiers and the two-stage group-then-language classifier.

Multinomial naive Bayes (one-pass, rank-friendly, strong for character
n-gram language ID) is the workhorse; an averaged multiclass perceptron
provides a heterogeneous second system for self-built ensembles.  The
hierarchical model predicts the language group first, then the language
within the predicted group.  Trained models are immutable and safe for
concurrent prediction.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .corpus import (
    Dataset,
    Instance,
    LabelSpace,
    label_space_from_dict,
    label_space_to_dict,
)
from .errors import ConfigError, InsufficientDataError, ParseError
from .features import (
    FeatureConfig,
    Vocabulary,
    build_vocabulary,
    vectorize,
    vocabulary_from_dict,
    vocabulary_to_dict,
)
from .rng import derived_seed

MODEL_FORMAT = "simlangid-model"
MODEL_VERSION = 1

# label, score pairs in descending score order; ties keep label-space order
RankedPrediction = tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class NBModel:
    """Multinomial naive Bayes with add-alpha smoothing.

    Smoothing is applied to per-document average counts, so parameters (and
    hence rankings) are exactly invariant to duplicating the training data.
    Scores are log priors plus count-weighted log likelihoods; exponentiated
    priors sum to 1, as do the per-label likelihoods over the vocabulary.
    """

    label_space: LabelSpace
    vocab: Vocabulary
    cfg: FeatureConfig
    alpha: float
    log_priors: np.ndarray  # (n_labels,)
    log_likelihood: np.ndarray  # (n_labels, vocab size)

    def scores(self, text: str) -> np.ndarray:
        fv = vectorize(text, self.vocab, self.cfg)
        scores = self.log_priors.astype(float)
        if fv.ids:
            ids = np.asarray(fv.ids, dtype=np.intp)
            weights = np.asarray(fv.weights)
            scores = scores + self.log_likelihood[:, ids] @ weights
        return scores


@dataclass(frozen=True)
class LinearModel:
    """Averaged multiclass perceptron over sparse feature vectors."""

    label_space: LabelSpace
    vocab: Vocabulary
    cfg: FeatureConfig
    epochs: int
    seed: int
    weights: np.ndarray  # (n_labels, vocab size), averaged over all updates

    def scores(self, text: str) -> np.ndarray:
        fv = vectorize(text, self.vocab, self.cfg)
        if not fv.ids:
            return np.zeros(len(self.label_space))
        ids = np.asarray(fv.ids, dtype=np.intp)
        return self.weights[:, ids] @ np.asarray(fv.weights)


@dataclass(frozen=True)
class HierarchicalModel:
    """Stage 1 predicts the language group, stage 2 the language within it.

    ``per_group`` maps each group either to a trained within-group model or,
    for singleton groups, directly to the group's only label.  ``group_model``
    is None when the label space has a single group (stage 1 skipped).
    """

    label_space: LabelSpace
    group_model: Union[NBModel, LinearModel, None]
    per_group: Mapping[str, Union[NBModel, LinearModel, str]]


Model = Union[NBModel, LinearModel, HierarchicalModel]


def train_nb(ds: Dataset, cfg: FeatureConfig = FeatureConfig(), alpha: float = 0.5) -> NBModel:
    """Train multinomial NB with add-alpha smoothing on the vocabulary built from ``ds``."""
    if len(ds) == 0:
        raise InsufficientDataError("cannot train on an empty dataset")
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    vocab = build_vocabulary(ds, cfg)
    n_labels, n_feats = len(ds.label_space), len(vocab)
    counts = np.zeros((n_labels, n_feats))
    doc_counts = np.zeros(n_labels)
    for inst in ds.instances:
        li = ds.label_space.index_of(inst.label)
        doc_counts[li] += 1
        fv = vectorize(inst.text, vocab, cfg)
        if fv.ids:
            counts[li, np.asarray(fv.ids, dtype=np.intp)] += np.asarray(fv.weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_priors = np.log(doc_counts / len(ds))
        # Per-document average counts keep the parameters invariant to
        # duplicating the training data (labels without documents get a
        # uniform distribution; their -inf prior excludes them anyway).
        avg = counts / np.where(doc_counts > 0, doc_counts, 1.0)[:, None]
    totals = avg.sum(axis=1, keepdims=True)
    log_likelihood = np.log(avg + alpha) - np.log(totals + alpha * n_feats)
    return NBModel(ds.label_space, vocab, cfg, alpha, log_priors, log_likelihood)


def train_linear(
    ds: Dataset, cfg: FeatureConfig = FeatureConfig(), epochs: int = 5, seed: int = 0
) -> LinearModel:
    """Train an averaged multiclass perceptron; instance order is shuffled per epoch by seed."""
    if len(ds) == 0:
        raise InsufficientDataError("cannot train on an empty dataset")
    if epochs < 1:
        raise ConfigError("epochs must be >= 1")
    vocab = build_vocabulary(ds, cfg)
    n_labels, n_feats = len(ds.label_space), len(vocab)
    examples = []
    for inst in ds.instances:
        fv = vectorize(inst.text, vocab, cfg)
        examples.append(
            (
                np.asarray(fv.ids, dtype=np.intp),
                np.asarray(fv.weights),
                ds.label_space.index_of(inst.label),
            )
        )

    # Averaging via the lazy accumulator trick: u collects t * delta, so the
    # true average over all T steps is ((T+1) * w - u) / T.
    w = np.zeros((n_labels, n_feats))
    u = np.zeros((n_labels, n_feats))
    t = 1
    rng = random.Random(seed)
    order = list(range(len(examples)))
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            ids, x, gold = examples[k]
            scores = w[:, ids] @ x if len(ids) else np.zeros(n_labels)
            pred = int(np.argmax(scores))
            if pred != gold:
                w[gold, ids] += x
                w[pred, ids] -= x
                u[gold, ids] += t * x
                u[pred, ids] -= t * x
            t += 1
    total_steps = t - 1
    averaged = ((total_steps + 1) * w - u) / total_steps
    return LinearModel(ds.label_space, vocab, cfg, epochs, seed, averaged)


def _rank(label_space: LabelSpace, scores: np.ndarray) -> RankedPrediction:
    order = np.argsort(-scores, kind="stable")
    return tuple((label_space.labels[i], float(scores[i])) for i in order)


def predict_ranked(model: Model, text: str) -> RankedPrediction:
    """Full label ranking, best first; score ties keep label-space order.

    For hierarchical models the order is two-stage (groups ranked first,
    labels ranked within each group) and the scores are ordinal ranks,
    since stage scores are not comparable across groups.
    """
    if isinstance(model, HierarchicalModel):
        return _ranked_hierarchical(model, text)
    return _rank(model.label_space, model.scores(text))


def predict(model: Model, text: str) -> str:
    """Top-1 label: the head of predict_ranked."""
    if isinstance(model, HierarchicalModel):
        return predict_hierarchical(model, text)[1]
    return predict_ranked(model, text)[0][0]


def apply_model(model: Model, texts) -> list[str]:
    """Predicted label per text, aligned with input order."""
    return [predict(model, t) for t in texts]


def train_hierarchical(
    ds: Dataset,
    cfg: FeatureConfig = FeatureConfig(),
    base: str = "nb",
    alpha: float = 0.5,
    epochs: int = 5,
    seed: int = 0,
) -> HierarchicalModel:
    """Train the two-stage model: a group classifier plus one model per multi-label group.

    Singleton groups need no within-group model; a single-group label space
    skips stage 1 entirely.
    """
    if base not in ("nb", "linear"):
        raise ConfigError(f"unknown base classifier {base!r}")
    if len(ds) == 0:
        raise InsufficientDataError("cannot train on an empty dataset")
    space = ds.label_space
    groups = space.groups
    group_counts = {g: 0 for g in groups}
    for inst in ds.instances:
        group_counts[space.group_of[inst.label]] += 1
    empty = [g for g in groups if group_counts[g] == 0]
    if empty:
        raise InsufficientDataError(f"groups with no training instances: {empty}")

    def fit(sub: Dataset, sub_seed: int):
        if base == "nb":
            return train_nb(sub, cfg, alpha)
        return train_linear(sub, cfg, epochs, sub_seed)

    group_model = None
    if len(groups) > 1:
        group_space = LabelSpace.from_pairs((g, g) for g in groups)
        relabeled = tuple(Instance(i.text, space.group_of[i.label]) for i in ds.instances)
        group_model = fit(Dataset(relabeled, group_space), derived_seed(seed, "group"))

    per_group: dict[str, Union[NBModel, LinearModel, str]] = {}
    for g in groups:
        members = space.labels_in_group(g)
        if len(members) == 1:
            per_group[g] = members[0]
        else:
            sub_space = LabelSpace.from_pairs((c, g) for c in members)
            insts = tuple(i for i in ds.instances if space.group_of[i.label] == g)
            per_group[g] = fit(Dataset(insts, sub_space), derived_seed(seed, "within", g))
    return HierarchicalModel(space, group_model, per_group)


def predict_hierarchical(model: HierarchicalModel, text: str) -> tuple[str, str]:
    """(group, label); the label always belongs to the predicted group."""
    if model.group_model is None:
        group = model.label_space.groups[0]
    else:
        group = predict(model.group_model, text)
    sub = model.per_group[group]
    label = sub if isinstance(sub, str) else predict(sub, text)
    return group, label


def _ranked_hierarchical(model: HierarchicalModel, text: str) -> RankedPrediction:
    if model.group_model is None:
        group_order = [model.label_space.groups[0]]
    else:
        group_order = [g for g, _ in predict_ranked(model.group_model, text)]
    ordered: list[str] = []
    for g in group_order:
        sub = model.per_group[g]
        if isinstance(sub, str):
            ordered.append(sub)
        else:
            ordered.extend(lab for lab, _ in predict_ranked(sub, text))
    return tuple((lab, float(len(ordered) - k)) for k, lab in enumerate(ordered))


def _flat_model_to_dict(model: Union[NBModel, LinearModel]) -> dict:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "label_space": label_space_to_dict(model.label_space),
        "config": model.cfg.to_dict(),
        "vocabulary": vocabulary_to_dict(model.vocab),
    }
    if isinstance(model, NBModel):
        doc.update(
            kind="nb",
            alpha=model.alpha,
            log_priors=model.log_priors.tolist(),
            log_likelihood=model.log_likelihood.tolist(),
        )
    else:
        doc.update(
            kind="linear",
            epochs=model.epochs,
            seed=model.seed,
            weights=model.weights.tolist(),
        )
    return doc


def model_to_dict(model: Model) -> dict:
    if isinstance(model, HierarchicalModel):
        per_group = {}
        for g, sub in model.per_group.items():
            if isinstance(sub, str):
                per_group[g] = {"singleton": sub}
            else:
                per_group[g] = {"model": _flat_model_to_dict(sub)}
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": "hierarchical",
            "label_space": label_space_to_dict(model.label_space),
            "group_model": None if model.group_model is None else _flat_model_to_dict(model.group_model),
            "per_group": per_group,
        }
    return _flat_model_to_dict(model)


def _flat_model_from_dict(doc: Mapping):
    space = label_space_from_dict(doc["label_space"])
    cfg = FeatureConfig.from_dict(doc["config"])
    vocab = vocabulary_from_dict(doc["vocabulary"])
    kind = doc.get("kind")
    if kind == "nb":
        return NBModel(
            space,
            vocab,
            cfg,
            float(doc["alpha"]),
            np.asarray(doc["log_priors"], dtype=float),
            np.asarray(doc["log_likelihood"], dtype=float),
        )
    if kind == "linear":
        return LinearModel(
            space,
            vocab,
            cfg,
            int(doc["epochs"]),
            int(doc["seed"]),
            np.asarray(doc["weights"], dtype=float),
        )
    raise ParseError(f"unknown model kind {kind!r}")


def model_from_dict(doc: Mapping) -> Model:
    if not isinstance(doc, Mapping) or doc.get("format") != MODEL_FORMAT:
        raise ParseError("not a simlangid model document")
    if doc.get("version") != MODEL_VERSION:
        raise ParseError(f"unsupported model version {doc.get('version')!r}")
    if doc.get("kind") != "hierarchical":
        return _flat_model_from_dict(doc)
    space = label_space_from_dict(doc["label_space"])
    group_model = None if doc["group_model"] is None else _flat_model_from_dict(doc["group_model"])
    per_group: dict[str, Union[NBModel, LinearModel, str]] = {}
    for g, entry in doc["per_group"].items():
        if "singleton" in entry:
            per_group[g] = entry["singleton"]
        else:
            per_group[g] = _flat_model_from_dict(entry["model"])
    return HierarchicalModel(space, group_model, per_group)


def save_model(model: Model, path) -> None:
    """Serialize to versioned JSON; round-trip preserves predictions exactly."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> Model:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except ValueError as exc:
        raise ParseError(f"invalid model JSON: {exc}", source=str(path)) from exc
    return model_from_dict(doc)
