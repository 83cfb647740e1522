"""Scoring, learning-curve experiments, and human-annotation statistics.

Accuracy is the task metric throughout.  Learning curves subsample the
training data balanced per label, train, and score on the full test set,
replicated with derived seeds so every run is reproducible in isolation;
error bars are +/-1 sample standard deviation.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .classifiers import apply_model, train_hierarchical, train_linear, train_nb
from .corpus import Dataset, LabelSpace, label_space_from_dict, label_space_to_dict, subsample_balanced
from .errors import AlignmentError, ConfigError, InsufficientDataError, ParseError
from .features import FeatureConfig
from .rng import derived_seed


@dataclass(frozen=True)
class EvalReport:
    """Accuracy summary: overall, per group, and a gold x predicted confusion matrix."""

    label_space: LabelSpace
    confusion: np.ndarray  # (L, L) counts, rows gold, columns predicted

    @property
    def n_instances(self) -> int:
        return int(self.confusion.sum())

    @property
    def overall_accuracy(self) -> float:
        return float(np.trace(self.confusion)) / self.n_instances

    def per_group_accuracy(self) -> dict[str, float]:
        """Accuracy per gold group; groups without gold instances are omitted."""
        out = {}
        for g in self.label_space.groups:
            rows = [self.label_space.index_of(c) for c in self.label_space.labels_in_group(g)]
            total = int(self.confusion[rows, :].sum())
            if total:
                correct = int(self.confusion[rows, rows].sum())
                out[g] = correct / total
        return out

    def to_dict(self) -> dict:
        return {
            "label_space": label_space_to_dict(self.label_space),
            "confusion": self.confusion.tolist(),
            "n_instances": self.n_instances,
            "overall_accuracy": self.overall_accuracy,
            "overall_accuracy_pct": round(100.0 * self.overall_accuracy, 2),
            "per_group_accuracy": self.per_group_accuracy(),
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "EvalReport":
        space = label_space_from_dict(doc["label_space"])
        return cls(space, np.asarray(doc["confusion"], dtype=int))


def evaluate(pred: Sequence[str], gold: Sequence[str], label_space: LabelSpace) -> EvalReport:
    """Score aligned prediction/gold label lists."""
    if len(pred) != len(gold):
        raise AlignmentError(f"{len(pred)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise ConfigError("nothing to evaluate: empty label lists")
    n = len(label_space)
    confusion = np.zeros((n, n), dtype=int)
    for p, g in zip(pred, gold):
        confusion[label_space.index_of(g), label_space.index_of(p)] += 1
    return EvalReport(label_space, confusion)


def group_stage_accuracy(pred: Sequence[str], gold: Sequence[str], label_space: LabelSpace) -> float:
    """Fraction of instances whose predicted label falls in the gold label's group."""
    if len(pred) != len(gold):
        raise AlignmentError(f"{len(pred)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise ConfigError("nothing to evaluate: empty label lists")
    hits = sum(
        1 for p, g in zip(pred, gold) if label_space.group_of[p] == label_space.group_of[g]
    )
    return hits / len(gold)


def progress_eval(entries: Sequence[tuple]) -> dict[str, EvalReport]:
    """Score a batch of named test sets.

    Each entry is (name, predicted labels, gold labels, label space); use
    corpus.filter_groups to build progress-style subsets and
    classifiers.apply_model to produce predictions from a trained model.
    """
    out: dict[str, EvalReport] = {}
    for name, pred, gold, space in entries:
        if name in out:
            raise ConfigError(f"duplicate test set name {name!r}")
        out[name] = evaluate(pred, gold, space)
    return out


@dataclass(frozen=True)
class TrainerSpec:
    """Recipe for training a model inside an experiment harness."""

    kind: str = "nb"  # "nb" | "linear"
    hierarchical: bool = False
    cfg: FeatureConfig = FeatureConfig()
    alpha: float = 0.5
    epochs: int = 5

    def __post_init__(self):
        if self.kind not in ("nb", "linear"):
            raise ConfigError(f"unknown trainer kind {self.kind!r}")

    def train(self, ds: Dataset, seed: int = 0):
        if self.hierarchical:
            return train_hierarchical(
                ds, self.cfg, base=self.kind, alpha=self.alpha, epochs=self.epochs, seed=seed
            )
        if self.kind == "nb":
            return train_nb(ds, self.cfg, self.alpha)
        return train_linear(ds, self.cfg, self.epochs, seed)


@dataclass(frozen=True)
class RunScore:
    """Accuracies of one training run (all values are fractions)."""

    size: int
    replicate: int
    overall: float
    group_stage: float
    per_group: Mapping[str, float]


@dataclass(frozen=True)
class LearningCurveResult:
    """Replicate accuracies per training size, plus mean/std summaries."""

    sizes: tuple[int, ...]
    replicates: int
    base_seed: int
    runs: tuple[RunScore, ...]

    def scopes(self) -> tuple[str, ...]:
        groups: dict[str, None] = {}
        for run in self.runs:
            for g in run.per_group:
                groups.setdefault(g, None)
        return ("overall", "group-stage") + tuple(f"group:{g}" for g in groups)

    def accuracies(self, size: int, scope: str) -> list[float]:
        values = []
        for run in self.runs:
            if run.size != size:
                continue
            if scope == "overall":
                values.append(run.overall)
            elif scope == "group-stage":
                values.append(run.group_stage)
            elif scope.startswith("group:"):
                g = scope[len("group:"):]
                if g in run.per_group:
                    values.append(run.per_group[g])
            else:
                raise ConfigError(f"unknown scope {scope!r}")
        return values

    def mean_std(self, size: int, scope: str) -> tuple[float, float]:
        """Mean and sample standard deviation over replicates (std 0.0 for one run)."""
        values = self.accuracies(size, scope)
        if not values:
            raise ConfigError(f"no runs for size {size}")
        mean = sum(values) / len(values)
        std = statistics.stdev(values) if len(values) > 1 else 0.0
        return mean, std


def _curve_task(args) -> RunScore:
    train, test, trainer, base_seed, size, rep, full = args
    if full:
        sub = train
    else:
        sub = subsample_balanced(train, size, derived_seed(base_seed, "sample", size, rep))
    model = trainer.train(sub, seed=derived_seed(base_seed, "train", size, rep))
    pred = apply_model(model, test.texts())
    gold = test.labels()
    report = evaluate(pred, gold, test.label_space)
    return RunScore(
        size,
        rep,
        report.overall_accuracy,
        group_stage_accuracy(pred, gold, test.label_space),
        report.per_group_accuracy(),
    )


def learning_curve(
    train: Dataset,
    test: Dataset,
    sizes: Sequence[int],
    replicates: int,
    base_seed: int,
    trainer: TrainerSpec,
    jobs: int = 1,
) -> LearningCurveResult:
    """Balanced-subsample learning curve: train at each size, score on the full test set.

    Each (size, replicate) run gets a seed derived from (base_seed, size,
    replicate), so runs can be re-executed in isolation and the result does
    not depend on execution order or ``jobs``.  A size matching the full
    per-label count uses the whole training set and runs exactly once.
    """
    if not sizes:
        raise ConfigError("no sizes given")
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    counts = train.per_label_counts()
    limit = min(counts.values()) if counts else 0
    sizes = tuple(dict.fromkeys(int(s) for s in sizes))
    for s in sizes:
        if s < 1:
            raise ConfigError(f"invalid size {s}")
        if s > limit:
            raise InsufficientDataError(
                f"size {s} exceeds the smallest per-label count {limit}"
            )

    def is_full(s: int) -> bool:
        return all(c == s for c in counts.values())

    tasks = []
    for s in sizes:
        reps = 1 if is_full(s) else replicates
        for r in range(reps):
            tasks.append((train, test, trainer, base_seed, s, r, is_full(s)))

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_curve_task, tasks))
    else:
        runs = [_curve_task(t) for t in tasks]
    runs.sort(key=lambda r: (sizes.index(r.size), r.replicate))
    return LearningCurveResult(sizes, replicates, base_seed, tuple(runs))


@dataclass(frozen=True)
class AnnotationTable:
    """Human annotation choices for one language group.

    ``annotators`` holds (name, choices) rows aligned with ``gold``; every
    label must belong to the group's label set.
    """

    group: str
    labels: tuple[str, ...]
    gold: tuple[str, ...]
    annotators: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        if not self.labels:
            raise ConfigError("annotation table needs a label set")
        if not self.gold:
            raise ConfigError("annotation table has no instances")
        if not self.annotators:
            raise ConfigError("annotation table has no annotators")
        label_set = set(self.labels)
        for lab in self.gold:
            if lab not in label_set:
                raise ConfigError(f"gold label {lab!r} outside the group's label set")
        n = len(self.gold)
        for name, choices in self.annotators:
            if len(choices) != n:
                raise AlignmentError(
                    f"annotator {name!r}: {len(choices)} choices for {n} instances"
                )
            for lab in choices:
                if lab not in label_set:
                    raise ConfigError(
                        f"annotator {name!r} chose {lab!r}, outside the group's label set"
                    )

    @property
    def n_instances(self) -> int:
        return len(self.gold)

    @property
    def n_annotators(self) -> int:
        return len(self.annotators)


def load_annotation_table(path) -> AnnotationTable:
    """Read the annotation-file JSON: {group, labels, gold, annotators:[{name, choices}]}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except ValueError as exc:
        raise ParseError(f"invalid annotation JSON: {exc}", source=str(path)) from exc
    try:
        annotators = tuple(
            (entry["name"], tuple(entry["choices"])) for entry in doc["annotators"]
        )
        return AnnotationTable(
            doc["group"], tuple(doc["labels"]), tuple(doc["gold"]), annotators
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"annotation file missing field: {exc}", source=str(path)) from exc


@dataclass(frozen=True)
class AnnotatorStats:
    """Percent-correct statistics for one annotation table (all values in percent)."""

    group: str
    per_instance_pct_correct: tuple[float, ...]
    per_annotator_accuracy: tuple[tuple[str, float], ...]
    best: float
    mean: float
    worst: float


def annotator_stats(table: AnnotationTable) -> AnnotatorStats:
    """Per-instance %-correct plus best/mean/worst annotator accuracy.

    Computed in exact rational arithmetic before the final float conversion,
    so the grand-mean identity (mean annotator accuracy == mean per-instance
    %-correct) holds exactly.
    """
    a, n = table.n_annotators, table.n_instances
    per_instance = []
    for i in range(n):
        correct = sum(1 for _, choices in table.annotators if choices[i] == table.gold[i])
        per_instance.append(Fraction(100 * correct, a))
    per_annotator = []
    for name, choices in table.annotators:
        correct = sum(1 for c, g in zip(choices, table.gold) if c == g)
        per_annotator.append((name, Fraction(100 * correct, n)))
    accs = [acc for _, acc in per_annotator]
    mean = sum(accs, Fraction(0)) / a
    return AnnotatorStats(
        table.group,
        tuple(float(p) for p in per_instance),
        tuple((name, float(acc)) for name, acc in per_annotator),
        best=float(max(accs)),
        mean=float(mean),
        worst=float(min(accs)),
    )


def annotator_stats_to_dict(stats: AnnotatorStats) -> dict:
    return {
        "group": stats.group,
        "per_instance_pct_correct": [round(p, 2) for p in stats.per_instance_pct_correct],
        "per_annotator_accuracy": {name: round(acc, 2) for name, acc in stats.per_annotator_accuracy},
        "best_annotator_accuracy": round(stats.best, 2),
        "mean_annotator_accuracy": round(stats.mean, 2),
        "worst_annotator_accuracy": round(stats.worst, 2),
    }


def _pct(fraction: float) -> str:
    return f"{100.0 * fraction:.2f}"


def _meta_comment_lines(meta: Optional[Mapping]) -> str:
    if not meta:
        return ""
    blob = json.dumps(meta, sort_keys=True)
    return f"# run_config: {blob}\n"


def _curve_csv(result: LearningCurveResult, meta: Optional[Mapping]) -> bytes:
    buf = io.StringIO()
    buf.write(_meta_comment_lines(meta))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["size", "replicate", "scope", "accuracy"])
    scopes = result.scopes()
    for size in result.sizes:
        for run in result.runs:
            if run.size != size:
                continue
            for scope in scopes:
                values = {
                    "overall": run.overall,
                    "group-stage": run.group_stage,
                    **{f"group:{g}": v for g, v in run.per_group.items()},
                }
                if scope in values:
                    writer.writerow([size, run.replicate, scope, _pct(values[scope])])
    for size in result.sizes:
        for scope in scopes:
            mean, std = result.mean_std(size, scope)
            writer.writerow([size, "mean", scope, _pct(mean)])
            writer.writerow([size, "std", scope, f"{100.0 * std:.2f}"])
    return buf.getvalue().encode("utf-8")


def _curve_dict(result: LearningCurveResult, meta: Optional[Mapping]) -> dict:
    doc = {
        "sizes": list(result.sizes),
        "replicates": result.replicates,
        "base_seed": result.base_seed,
        "runs": [
            {
                "size": r.size,
                "replicate": r.replicate,
                "overall": r.overall,
                "group_stage": r.group_stage,
                "per_group": dict(r.per_group),
            }
            for r in result.runs
        ],
        "summary": [
            {
                "size": size,
                "scope": scope,
                "mean": result.mean_std(size, scope)[0],
                "std": result.mean_std(size, scope)[1],
                "n_runs": len(result.accuracies(size, scope)),
            }
            for size in result.sizes
            for scope in result.scopes()
        ],
    }
    if meta:
        doc["run_config"] = dict(meta)
    return doc


_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _curve_svg(result: LearningCurveResult, meta: Optional[Mapping]) -> bytes:
    """Hand-rolled SVG line chart: mean curve with +/-1 std error bars per scope.

    Fully self-contained and byte-deterministic (fixed float formatting, no
    timestamps), which matplotlib SVG output is not.
    """
    import math

    width, height = 760, 480
    left, right, top, bottom = 64.0, 200.0, 24.0, 56.0
    plot_w, plot_h = width - left - right, height - top - bottom
    sizes = result.sizes
    scopes = result.scopes()

    logs = [math.log10(s) for s in sizes]
    lo, hi = min(logs), max(logs)
    span = (hi - lo) or 1.0

    def x_of(size: int) -> float:
        return left + (math.log10(size) - lo) / span * plot_w

    stats = {(s, sc): result.mean_std(s, sc) for s in sizes for sc in scopes}
    y_lo = min(100.0 * (m - sd) for m, sd in stats.values())
    y_hi = max(100.0 * (m + sd) for m, sd in stats.values())
    y_min = max(0.0, math.floor(y_lo) - 2.0)
    y_max = min(102.0, math.ceil(y_hi) + 2.0)
    if y_max <= y_min:
        y_max = y_min + 1.0

    def y_of(pct: float) -> float:
        return top + (y_max - pct) / (y_max - y_min) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    ]
    if meta:
        blob = json.dumps(meta, sort_keys=True).replace("&", "&amp;").replace("<", "&lt;")
        parts.append(f"<desc>{blob}</desc>")
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    # axes
    parts.append(
        f'<line x1="{left:.2f}" y1="{top + plot_h:.2f}" x2="{left + plot_w:.2f}" '
        f'y2="{top + plot_h:.2f}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{left:.2f}" y1="{top:.2f}" x2="{left:.2f}" y2="{top + plot_h:.2f}" stroke="black"/>'
    )
    for s in sizes:
        x = x_of(s)
        parts.append(
            f'<line x1="{x:.2f}" y1="{top + plot_h:.2f}" x2="{x:.2f}" y2="{top + plot_h + 5:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{top + plot_h + 20:.2f}" text-anchor="middle">{s}</text>'
        )
    for k in range(6):
        pct = y_min + (y_max - y_min) * k / 5.0
        y = y_of(pct)
        parts.append(
            f'<line x1="{left - 5:.2f}" y1="{y:.2f}" x2="{left:.2f}" y2="{y:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{left - 9:.2f}" y="{y + 4:.2f}" text-anchor="end">{pct:.1f}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 12:.2f}" text-anchor="middle">'
        "training examples per label</text>"
    )
    parts.append(
        f'<text x="16" y="{top + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.2f})">accuracy (%)</text>'
    )
    for idx, scope in enumerate(scopes):
        color = _PALETTE[idx % len(_PALETTE)]
        points = []
        for s in sizes:
            mean, std = stats[(s, scope)]
            x, m_pct, s_pct = x_of(s), 100.0 * mean, 100.0 * std
            points.append(f"{x:.2f},{y_of(m_pct):.2f}")
            if s_pct > 0:
                y1, y2 = y_of(m_pct - s_pct), y_of(m_pct + s_pct)
                parts.append(
                    f'<line x1="{x:.2f}" y1="{y1:.2f}" x2="{x:.2f}" y2="{y2:.2f}" stroke="{color}"/>'
                )
                for yc in (y1, y2):
                    parts.append(
                        f'<line x1="{x - 3:.2f}" y1="{yc:.2f}" x2="{x + 3:.2f}" y2="{yc:.2f}" stroke="{color}"/>'
                    )
        parts.append(
            f'<polyline points="{" ".join(points)}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = top + 16 + 18 * idx
        lx = left + plot_w + 16
        parts.append(
            f'<line x1="{lx:.2f}" y1="{ly - 4:.2f}" x2="{lx + 22:.2f}" y2="{ly - 4:.2f}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(f'<text x="{lx + 28:.2f}" y="{ly:.2f}">{scope}</text>')
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def _eval_csv(report: EvalReport, meta: Optional[Mapping]) -> bytes:
    buf = io.StringIO()
    buf.write(_meta_comment_lines(meta))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scope", "accuracy_pct"])
    writer.writerow(["overall", _pct(report.overall_accuracy)])
    for g, acc in report.per_group_accuracy().items():
        writer.writerow([f"group:{g}", _pct(acc)])
    writer.writerow([])
    labels = report.label_space.labels
    writer.writerow(["gold\\predicted", *labels])
    for gi, gold_label in enumerate(labels):
        writer.writerow([gold_label, *(int(c) for c in report.confusion[gi])])
    return buf.getvalue().encode("utf-8")


def _annot_csv(stats: AnnotatorStats, meta: Optional[Mapping]) -> bytes:
    buf = io.StringIO()
    buf.write(_meta_comment_lines(meta))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "value"])
    writer.writerow(["group", stats.group])
    for i, pct in enumerate(stats.per_instance_pct_correct, start=1):
        writer.writerow([f"pct_correct_instance_{i}", f"{pct:.2f}"])
    writer.writerow(["best_annotator_accuracy", f"{stats.best:.2f}"])
    writer.writerow(["mean_annotator_accuracy", f"{stats.mean:.2f}"])
    writer.writerow(["worst_annotator_accuracy", f"{stats.worst:.2f}"])
    return buf.getvalue().encode("utf-8")


def _json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def render_report(result, fmt: str, meta: Optional[Mapping] = None) -> bytes:
    """Render a result object to csv/json/svg bytes.

    Supported: LearningCurveResult (csv, json, svg), EvalReport (csv, json),
    AnnotatorStats (csv, json).  Anything else raises ConfigError.  ``meta``
    (typically the effective run configuration) is embedded in the output.
    """
    if isinstance(result, LearningCurveResult):
        if not result.runs:
            raise ConfigError("learning-curve result has no runs")
        if fmt == "csv":
            return _curve_csv(result, meta)
        if fmt == "json":
            return _json_bytes(_curve_dict(result, meta))
        if fmt == "svg":
            return _curve_svg(result, meta)
    elif isinstance(result, EvalReport):
        if fmt == "json":
            doc = result.to_dict()
            if meta:
                doc["run_config"] = dict(meta)
            return _json_bytes(doc)
        if fmt == "csv":
            return _eval_csv(result, meta)
    elif isinstance(result, AnnotatorStats):
        if fmt == "json":
            doc = annotator_stats_to_dict(result)
            if meta:
                doc["run_config"] = dict(meta)
            return _json_bytes(doc)
        if fmt == "csv":
            return _annot_csv(result, meta)
    raise ConfigError(f"unsupported report: {type(result).__name__} as {fmt!r}")
