"""Ensemble fusion over M systems x N instances.

Combiners: plurality vote (most votes, no threshold), majority vote (over
50% of votes or abstain), Oracle (correct if any system is correct), and
Accuracy@N (correct if the gold label is among the top N vote-ranked
candidates; N=1 reproduces plurality).  Vote ties are broken uniformly at
random by a generator seeded per (run seed, instance index), so results are
reproducible and independent of system column order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import LabelSpace
from .errors import AlignmentError, ConfigError, LabelSpaceError, ParseError
from .rng import instance_rng

ABSTAIN = None  # majority-vote marker for "no label reached over 50%"


@dataclass(frozen=True)
class PredictionMatrix:
    """Predictions of M systems over N shared instances, plus gold labels.

    ``columns[m][i]`` is system m's label for instance i; all labels must
    belong to the label space and every system must cover every instance.
    """

    system_names: tuple[str, ...]
    columns: tuple[tuple[str, ...], ...]
    gold: tuple[str, ...]
    label_space: LabelSpace

    def __post_init__(self):
        if not self.system_names:
            raise ConfigError("need at least one system")
        if len(self.system_names) != len(self.columns):
            raise AlignmentError("system_names and columns differ in length")
        if not self.gold:
            raise ConfigError("empty prediction matrix")
        n = len(self.gold)
        for name, col in zip(self.system_names, self.columns):
            if len(col) != n:
                raise AlignmentError(f"system {name!r}: {len(col)} predictions, expected {n}")
        for lab in self.gold:
            self.label_space.index_of(lab)
        for col in self.columns:
            for lab in col:
                self.label_space.index_of(lab)

    @property
    def n_systems(self) -> int:
        return len(self.columns)

    @property
    def n_instances(self) -> int:
        return len(self.gold)

    def votes(self, i: int) -> Counter:
        """Vote tally for instance i; counts sum to M."""
        return Counter(col[i] for col in self.columns)


def _read_label_lines(path, label_space: LabelSpace) -> tuple[str, ...]:
    name = Path(path).name
    labels = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.endswith("\n"):
                line = line[:-1]
            if line.endswith("\r"):
                line = line[:-1]
            if not line:
                raise ParseError("empty line", line=lineno, source=name)
            if line not in label_space:
                raise LabelSpaceError(f"{name}: line {lineno}: unknown label {line!r}")
            labels.append(line)
    return tuple(labels)


def load_predictions(run_files: Sequence, gold_file, label_space: LabelSpace) -> PredictionMatrix:
    """Build a prediction matrix from per-system run files aligned with a gold file.

    One label per line, N lines each; system names are the file stems.
    """
    gold = _read_label_lines(gold_file, label_space)
    names, cols = [], []
    for path in run_files:
        col = _read_label_lines(path, label_space)
        if len(col) != len(gold):
            raise AlignmentError(
                f"{Path(path).name}: {len(col)} lines, gold has {len(gold)}"
            )
        names.append(Path(path).stem)
        cols.append(col)
    return PredictionMatrix(tuple(names), tuple(cols), gold, label_space)


def ranked_vote_labels(pm: PredictionMatrix, i: int, seed: int) -> list[str]:
    """Voted labels for instance i, by vote count descending.

    Equal-vote strata are permuted uniformly at random by the per-instance
    generator; labels without votes never appear.
    """
    tally = pm.votes(i)
    by_count: dict[int, list[str]] = {}
    for lab, c in tally.items():
        by_count.setdefault(c, []).append(lab)
    rng = instance_rng(seed, i)
    ranked: list[str] = []
    for c in sorted(by_count, reverse=True):
        stratum = sorted(by_count[c], key=pm.label_space.index_of)
        rng.shuffle(stratum)
        ranked.extend(stratum)
    return ranked


def plurality_vote(pm: PredictionMatrix, seed: int) -> list[str]:
    """Per instance, the label with the most votes; ties resolved uniformly at random."""
    return [ranked_vote_labels(pm, i, seed)[0] for i in range(pm.n_instances)]


def majority_vote(pm: PredictionMatrix, seed: int = 0) -> list[Optional[str]]:
    """Per instance, the label holding over 50% of the votes, else ABSTAIN.

    Deterministic (a strict majority is unique); the seed is accepted for
    signature parity with the other combiners and never consumed.
    """
    out: list[Optional[str]] = []
    m = pm.n_systems
    for i in range(pm.n_instances):
        lab, c = pm.votes(i).most_common(1)[0]
        out.append(lab if 2 * c > m else ABSTAIN)
    return out


@dataclass(frozen=True)
class OracleResult:
    accuracy: float
    misclassified: tuple[int, ...]


def oracle(pm: PredictionMatrix) -> OracleResult:
    """Fusion upper bound: an instance is correct if at least one system got it right."""
    missed = tuple(
        i
        for i in range(pm.n_instances)
        if all(col[i] != pm.gold[i] for col in pm.columns)
    )
    return OracleResult(1.0 - len(missed) / pm.n_instances, missed)


def accuracy_at_n(pm: PredictionMatrix, n: int, seed: int) -> float:
    """Fraction of instances whose gold label is among the top n vote-ranked candidates."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    hits = sum(
        1
        for i in range(pm.n_instances)
        if pm.gold[i] in ranked_vote_labels(pm, i, seed)[:n]
    )
    return hits / pm.n_instances


def vote_accuracy(pm: PredictionMatrix, combined: Sequence[Optional[str]]) -> float:
    """Accuracy of a combined prediction list; abstentions count as errors."""
    if len(combined) != pm.n_instances:
        raise AlignmentError("combined predictions misaligned with matrix")
    return sum(1 for p, g in zip(combined, pm.gold) if p == g) / pm.n_instances


def error_breakdown(pm: PredictionMatrix, combined: Sequence[Optional[str]]) -> dict:
    """Within-group vs cross-group error counts per gold group.

    Abstentions are tallied separately; predicted labels must belong to the
    matrix's label space.
    """
    if len(combined) != pm.n_instances:
        raise AlignmentError("combined predictions misaligned with matrix")
    space = pm.label_space
    out = {
        g: {
            "total": 0,
            "correct": 0,
            "within_group_errors": 0,
            "cross_group_errors": 0,
            "abstentions": 0,
        }
        for g in space.groups
    }
    for pred, gold in zip(combined, pm.gold):
        row = out[space.group_of[gold]]
        row["total"] += 1
        if pred is ABSTAIN:
            row["abstentions"] += 1
        elif pred == gold:
            row["correct"] += 1
        elif space.group_of.get(pred) == space.group_of[gold]:
            row["within_group_errors"] += 1
        else:
            space.index_of(pred)  # unknown labels fail here
            row["cross_group_errors"] += 1
    return out


def misclassified_by_group(pm: PredictionMatrix, indices: Iterable[int]) -> dict:
    """Count misclassified instances per gold group (e.g. the oracle residue)."""
    counts = Counter(pm.label_space.group_of[pm.gold[i]] for i in indices)
    return {g: counts[g] for g in pm.label_space.groups if counts[g]}


def ensemble_report(pm: PredictionMatrix, combiner: str, n: int = 2, seed: int = 0) -> dict:
    """Run one combiner and package accuracy, misclassified indices, per-group summary."""
    if combiner == "plurality":
        combined = plurality_vote(pm, seed)
        accuracy = vote_accuracy(pm, combined)
        missed = tuple(i for i, (p, g) in enumerate(zip(combined, pm.gold)) if p != g)
        per_group = error_breakdown(pm, combined)
        params = {}
    elif combiner == "majority":
        combined = majority_vote(pm, seed)
        accuracy = vote_accuracy(pm, combined)
        missed = tuple(i for i, (p, g) in enumerate(zip(combined, pm.gold)) if p != g)
        per_group = error_breakdown(pm, combined)
        params = {}
    elif combiner == "oracle":
        result = oracle(pm)
        accuracy = result.accuracy
        missed = result.misclassified
        per_group = misclassified_by_group(pm, missed)
        params = {}
    elif combiner == "accuracy-at-n":
        accuracy = accuracy_at_n(pm, n, seed)
        missed = tuple(
            i
            for i in range(pm.n_instances)
            if pm.gold[i] not in ranked_vote_labels(pm, i, seed)[:n]
        )
        per_group = misclassified_by_group(pm, missed)
        params = {"n": n}
    else:
        raise ConfigError(f"unknown combiner {combiner!r}")
    return {
        "combiner": combiner,
        "params": params,
        "seed": seed,
        "n_systems": pm.n_systems,
        "n_instances": pm.n_instances,
        "systems": list(pm.system_names),
        "accuracy": accuracy,
        "accuracy_pct": round(100.0 * accuracy, 2),
        "misclassified_indices": list(missed),
        "per_group": per_group,
    }
