"""DSLCC-style corpora: parsing, label spaces, filtering, balanced subsampling.

Corpus files are UTF-8 text with one ``sentence<TAB>label`` record per line
(LF or CRLF).  A label space assigns every language/variety code to a group
id such as "A".."G" or the catch-all "X" used for out-of-task languages.
Datasets are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import random
import re
import string
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, InsufficientDataError, LabelSpaceError, ParseError


def _check_label_token(code: str) -> None:
    if not code:
        raise LabelSpaceError("empty label code")
    if "\t" in code or "\n" in code or "\r" in code:
        raise LabelSpaceError(f"label code {code!r} contains tab or newline")


@dataclass(frozen=True)
class LabelSpace:
    """Ordered label set plus a total label-to-group assignment.

    Label order is stable and defines the row/column order of every matrix,
    ranking, and report built downstream.
    """

    labels: tuple[str, ...]
    group_of: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "group_of", dict(self.group_of))
        seen = set()
        for code in self.labels:
            _check_label_token(code)
            if code in seen:
                raise LabelSpaceError(f"duplicate label {code!r}")
            seen.add(code)
        for code in self.labels:
            if not self.group_of.get(code):
                raise LabelSpaceError(f"label {code!r} has no group")
        extra = set(self.group_of) - seen
        if extra:
            raise LabelSpaceError(f"group assignment for unknown labels: {sorted(extra)}")
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.labels)})

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "LabelSpace":
        pairs = list(pairs)
        return cls(tuple(code for code, _ in pairs), dict(pairs))

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, code: str) -> bool:
        return code in self._index

    def index_of(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise LabelSpaceError(f"unknown label {code!r}") from None

    @property
    def groups(self) -> tuple[str, ...]:
        """Group ids in order of first appearance."""
        seen: dict[str, None] = {}
        for code in self.labels:
            seen.setdefault(self.group_of[code], None)
        return tuple(seen)

    def labels_in_group(self, group: str) -> tuple[str, ...]:
        return tuple(c for c in self.labels if self.group_of[c] == group)

    def with_extra_labels(self, codes: Sequence[str], group: str = "X") -> "LabelSpace":
        """New space with additional labels appended, all assigned to ``group``."""
        mapping = dict(self.group_of)
        for code in codes:
            mapping[code] = group
        return LabelSpace(self.labels + tuple(codes), mapping)


@dataclass(frozen=True)
class Instance:
    """One labeled sentence or excerpt."""

    text: str
    label: str


@dataclass(frozen=True)
class Dataset:
    """Ordered instances bound to a label space; order matches the source file."""

    instances: tuple[Instance, ...]
    label_space: LabelSpace

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        for inst in self.instances:
            if inst.label not in self.label_space:
                raise LabelSpaceError(f"instance label {inst.label!r} not in label space")

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def texts(self) -> list[str]:
        return [inst.text for inst in self.instances]

    def labels(self) -> list[str]:
        return [inst.label for inst in self.instances]

    def per_label_counts(self) -> dict[str, int]:
        counts = Counter(inst.label for inst in self.instances)
        return {code: counts.get(code, 0) for code in self.label_space.labels}


def parse_dslcc(source, label_space: LabelSpace, strict: bool = True) -> Dataset:
    """Parse ``text<TAB>label`` lines into a Dataset, order preserved.

    ``source`` may be a string, an open text file, or any iterable of lines.
    In strict mode an unknown label aborts; in lenient mode unknown labels
    extend the label space into group "X" (the shared tasks' "Others" bucket).
    """
    if isinstance(source, str):
        raw_lines = source.split("\n")
    else:
        raw_lines = [ln[:-1] if ln.endswith("\n") else ln for ln in source]

    instances: list[Instance] = []
    extras: dict[str, None] = {}
    for lineno, line in enumerate(raw_lines, start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if not line:
            continue
        text, sep, label = line.rpartition("\t")
        if not sep:
            raise ParseError("expected text<TAB>label", line=lineno)
        if not text.strip():
            raise ParseError("empty text field", line=lineno)
        if not label:
            raise ParseError("empty label field", line=lineno)
        if label not in label_space and label not in extras:
            if strict:
                raise LabelSpaceError(f"line {lineno}: unknown label {label!r}")
            extras[label] = None
        instances.append(Instance(text, label))

    space = label_space
    if extras:
        space = label_space.with_extra_labels(tuple(extras), group="X")
    return Dataset(tuple(instances), space)


def serialize_dslcc(ds: Dataset) -> str:
    """Inverse of parse_dslcc: one LF-terminated ``text<TAB>label`` line per instance."""
    return "".join(f"{inst.text}\t{inst.label}\n" for inst in ds.instances)


def load_dataset(path, label_space: LabelSpace, strict: bool = True) -> Dataset:
    """Read a corpus file (UTF-8) into a Dataset."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_dslcc(fh, label_space, strict=strict)


def save_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_dslcc(ds))


def label_space_to_dict(space: LabelSpace) -> dict:
    return {"labels": [{"code": c, "group": space.group_of[c]} for c in space.labels]}


def label_space_from_dict(doc) -> LabelSpace:
    if not isinstance(doc, dict) or not isinstance(doc.get("labels"), list):
        raise LabelSpaceError('label-space config must be an object with a "labels" array')
    entries = doc["labels"]
    if not entries:
        raise LabelSpaceError("empty label space")
    pairs = []
    for k, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise LabelSpaceError(f"labels[{k}]: expected an object")
        code = entry.get("code")
        group = entry.get("group")
        if not isinstance(code, str) or not code:
            raise LabelSpaceError(f"labels[{k}]: missing or empty code")
        if not isinstance(group, str) or not group:
            raise LabelSpaceError(f"labels[{k}]: label {code!r} has empty group")
        if any(code == c for c, _ in pairs):
            raise LabelSpaceError(f"duplicate label {code!r}")
        pairs.append((code, group))
    return LabelSpace.from_pairs(pairs)


def load_label_space(source) -> LabelSpace:
    """Load a label-space config: JSON ``{"labels": [{"code": ..., "group": ...}]}``."""
    try:
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        else:
            doc = json.load(source)
    except ValueError as exc:
        raise ParseError(f"invalid label-space JSON: {exc}") from exc
    return label_space_from_dict(doc)


def save_label_space(space: LabelSpace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(label_space_to_dict(space), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sample_preserving_order(pool: list[int], n: int, rng: random.Random) -> list[int]:
    # Partial Fisher-Yates over a copy; the chosen indices are re-sorted by
    # the caller so relative source order survives.
    picked = list(pool)
    for i in range(n):
        j = rng.randrange(i, len(picked))
        picked[i], picked[j] = picked[j], picked[i]
    return picked[:n]


def subsample_balanced(ds: Dataset, n_per_label: int, seed: int) -> Dataset:
    """Uniform sample without replacement of exactly ``n_per_label`` instances per label.

    Deterministic for a given seed: selection is a partial Fisher-Yates
    shuffle driven by ``random.Random(seed)`` (MT19937), labels visited in
    label-space order.  Relative source order is preserved within each label.
    """
    if n_per_label < 1:
        raise ConfigError("n_per_label must be >= 1")
    rng = random.Random(seed)
    by_label: dict[str, list[int]] = {code: [] for code in ds.label_space.labels}
    for i, inst in enumerate(ds.instances):
        by_label[inst.label].append(i)
    keep: list[int] = []
    for code in ds.label_space.labels:
        pool = by_label[code]
        if len(pool) < n_per_label:
            raise InsufficientDataError(
                f"label {code!r} has {len(pool)} instances, need {n_per_label}"
            )
        keep.extend(_sample_preserving_order(pool, n_per_label, rng))
    keep.sort()
    return Dataset(tuple(ds.instances[i] for i in keep), ds.label_space)


def filter_groups(ds: Dataset, groups: Iterable[str]) -> Dataset:
    """Keep only instances whose label's group is in ``groups``; restrict the label space.

    Instance order and content are untouched.  An empty group set yields an
    empty dataset over an empty label space.
    """
    wanted = set(groups)
    unknown = wanted - set(ds.label_space.groups)
    if unknown:
        raise LabelSpaceError(f"unknown group ids: {sorted(unknown)}")
    keep_labels = tuple(
        c for c in ds.label_space.labels if ds.label_space.group_of[c] in wanted
    )
    space = LabelSpace(keep_labels, {c: ds.label_space.group_of[c] for c in keep_labels})
    keep_set = set(keep_labels)
    instances = tuple(inst for inst in ds.instances if inst.label in keep_set)
    return Dataset(instances, space)


def normalize_placeholders(ds: Dataset, marker: str, canonical: str = "#NE#") -> Dataset:
    """Replace each maximal run of ``marker`` tokens with the single ``canonical`` token.

    Token boundaries are whitespace; all other text (including its exact
    whitespace) is left unchanged.  Idempotent.
    """
    for name, tok in (("marker", marker), ("canonical", canonical)):
        if not tok or any(ch.isspace() for ch in tok):
            raise ConfigError(f"{name} must be a non-empty token without whitespace")
    esc = re.escape(marker)
    pattern = re.compile(rf"(?:(?<=\s)|^){esc}(?:\s+{esc})*(?=\s|$)")
    instances = tuple(
        Instance(pattern.sub(lambda m: canonical, inst.text), inst.label)
        for inst in ds.instances
    )
    return Dataset(instances, ds.label_space)


_ALPHABET_BASE = string.ascii_lowercase + string.ascii_uppercase + string.digits


def _alphabet(size: int) -> str:
    if size <= len(_ALPHABET_BASE):
        return _ALPHABET_BASE[:size]
    # Continue into Latin Extended letters; none are whitespace.
    extra = "".join(chr(0x100 + k) for k in range(size - len(_ALPHABET_BASE)))
    return _ALPHABET_BASE + extra


def _synthetic_blocks(n_labels: int, alphabet: str) -> list[tuple[str, str]]:
    """Carve the alphabet into one block per group and one sub-block per label.

    Returns (own sub-block, group block) per label, in label order.
    """
    group_members = [list(range(g * 2, min(g * 2 + 2, n_labels))) for g in range((n_labels + 1) // 2)]
    sizes = [len(members) for members in group_members]
    spare = len(alphabet) - sum(sizes)
    g = 0
    while spare > 0:
        sizes[g % len(sizes)] += 1
        spare -= 1
        g += 1
    blocks: list[tuple[str, str]] = [("", "")] * n_labels
    start = 0
    for members, size in zip(group_members, sizes):
        block = alphabet[start : start + size]
        start += size
        half = (len(block) + 1) // 2 if len(members) > 1 else len(block)
        subs = [block[:half], block[half:]]
        for idx, label_i in enumerate(members):
            blocks[label_i] = (subs[idx] if len(members) > 1 else block, block)
    return blocks


def _synthetic_sentence(rng: random.Random, sub: str, block: str, skew: float) -> str:
    # Short excerpts keep the small-training-size regime genuinely hard.
    target = rng.randint(10, 22)
    words = []
    total = 0
    while total < target:
        length = rng.randint(3, 6)
        chars = []
        for _ in range(length):
            pool = sub if rng.random() < skew else block
            chars.append(pool[rng.randrange(len(pool))])
        words.append("".join(chars))
        total += length + 1
    return " ".join(words)


def gen_synthetic(
    n_labels: int, n_per_label: int, alphabet_size: int, skew: float, seed: int
) -> Dataset:
    """Desk-scale synthetic corpus with per-label character distributions.

    Labels lang00, lang01, ... are auto-grouped in pairs (g0, g1, ...).  The
    shared alphabet is carved into one block per group and one sub-block per
    label; each character is drawn from the label's own sub-block with
    probability ``skew`` and uniformly from the whole group block otherwise,
    so confusions concentrate within groups.  At skew=1.0 the per-label
    alphabets are disjoint.  Deterministic per seed (MT19937).
    """
    if n_labels < 2:
        raise ConfigError("n_labels must be >= 2")
    if n_per_label < 1:
        raise ConfigError("n_per_label must be >= 1")
    if alphabet_size < n_labels:
        raise ConfigError("alphabet_size must be >= n_labels")
    if not 0.0 < skew <= 1.0:
        raise ConfigError("skew must be in (0, 1]")

    labels = [f"lang{i:02d}" for i in range(n_labels)]
    space = LabelSpace.from_pairs((lab, f"g{i // 2}") for i, lab in enumerate(labels))
    blocks = _synthetic_blocks(n_labels, _alphabet(alphabet_size))

    rng = random.Random(seed)
    instances = []
    for lab, (sub, block) in zip(labels, blocks):
        for _ in range(n_per_label):
            instances.append(Instance(_synthetic_sentence(rng, sub, block, skew), lab))
    return Dataset(tuple(instances), space)
