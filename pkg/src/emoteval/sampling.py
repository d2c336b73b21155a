"""Label filtering, seeded stratified sampling, and agreement-subset carving.

Stratified sampling preserves the emotion-label distribution exactly: the
overall sample size round(fraction * N) is apportioned across labels by the
largest-remainder method, making "keeps the original distribution" a testable
arithmetic property rather than a statistical one. Per-stratum selection is
uniform without replacement, seeded from (seed, label) through a stable hash,
so results are independent of label iteration order and reproducible across
runs and platforms.
"""

import hashlib
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Mapping

from .ingestion import Corpus
from .model import EmotionLabel


def _hash64(seed: int, tag: str) -> int:
    digest = hashlib.sha256(seed.to_bytes(8, "big") + b"\x1f" + tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _as_fraction(value) -> Fraction:
    # Fraction(str(float)) keeps the decimal the user wrote (0.2 -> 1/5),
    # instead of the binary float it became.
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class SamplePlan:
    seed: int
    fraction: Fraction
    exclude_labels: frozenset = frozenset()
    strategy: str = "stratified_proportional"

    def __post_init__(self):
        object.__setattr__(self, "fraction", _as_fraction(self.fraction))
        object.__setattr__(self, "exclude_labels", frozenset(self.exclude_labels))
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not (0 < self.fraction <= 1):
            raise ValueError(f"fraction must be in (0, 1], got {self.fraction}")
        if self.strategy != "stratified_proportional":
            raise ValueError(f"unknown strategy {self.strategy!r}")
        for label in self.exclude_labels:
            if not isinstance(label, EmotionLabel):
                raise ValueError("exclude_labels must contain EmotionLabel values")


@dataclass(frozen=True)
class AgreementPlan:
    seed: int
    inter_fraction: Fraction = Fraction(1, 10)
    intra_count: int = 100

    def __post_init__(self):
        object.__setattr__(self, "inter_fraction", _as_fraction(self.inter_fraction))
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not (0 <= self.inter_fraction <= 1):
            raise ValueError(f"inter_fraction must be in [0, 1], got {self.inter_fraction}")
        if not isinstance(self.intra_count, int) or self.intra_count < 1:
            raise ValueError(f"intra_count must be a positive integer, got {self.intra_count!r}")


@dataclass(frozen=True)
class AgreementSubsets:
    inter_ids: frozenset
    intra_ids: frozenset


@dataclass(frozen=True)
class DistributionReport:
    """Per-label proportions of two corpora and their maximum absolute deviation."""

    original: Mapping[EmotionLabel, Fraction]
    sampled: Mapping[EmotionLabel, Fraction]
    max_deviation: Fraction


def filter_labels(corpus: Corpus, exclude) -> Corpus:
    """Drop segments whose emotion label is excluded; order preserved. Idempotent."""
    exclude = frozenset(exclude)
    kept = tuple(seg for seg in corpus.segments if seg.emotion not in exclude)
    return Corpus(name=corpus.name, segments=kept, provenance=corpus.provenance)


def largest_remainder(counts: Mapping[EmotionLabel, int], target: int) -> dict:
    """Apportion `target` across strata proportionally to their sizes.

    Floor the exact quotas, then hand the leftover units to the strata with the
    largest fractional remainders (ties: larger stratum first, then label name).
    """
    total = sum(counts.values())
    if total == 0:
        raise ValueError("cannot apportion over an empty population")
    if not (0 <= target <= total):
        raise ValueError(f"target {target} out of range for population {total}")
    labels = sorted(counts, key=lambda lab: lab.value)
    base = {}
    remainders = []
    for label in labels:
        quota = Fraction(target * counts[label], total)
        base[label] = floor(quota)
        remainders.append((quota - base[label], label))
    leftover = target - sum(base.values())
    remainders.sort(key=lambda item: (-item[0], -counts[item[1]], item[1].value))
    for i in range(leftover):
        base[remainders[i][1]] += 1
    return base


def stratified_sample(corpus: Corpus, plan: SamplePlan) -> Corpus:
    """Seeded stratified sample preserving label proportions; output keeps corpus order."""
    pool = filter_labels(corpus, plan.exclude_labels)
    if not pool.segments:
        raise ValueError("corpus is empty after label exclusion")
    n = len(pool.segments)
    target = round(plan.fraction * n)
    strata = {}
    for seg in pool.segments:
        strata.setdefault(seg.emotion, []).append(seg.id)
    quotas = largest_remainder({lab: len(ids) for lab, ids in strata.items()}, target)
    selected = set()
    for label in sorted(strata, key=lambda lab: lab.value):
        members = strata[label]
        k = quotas[label]
        rng = random.Random(_hash64(plan.seed, label.value))
        selected.update(members[i] for i in rng.sample(range(len(members)), k))
    kept = tuple(seg for seg in pool.segments if seg.id in selected)
    return Corpus(name=corpus.name, segments=kept, provenance=corpus.provenance)


def carve_agreement_subsets(eval_corpus: Corpus, plan: AgreementPlan) -> AgreementSubsets:
    """Draw the double-annotation subset and the repeat-annotation subset.

    Both are drawn from the evaluation set: the inter subset stratified at
    inter_fraction, the intra subset uniform of size intra_count. Deterministic
    in the plan seed; the two subsets may overlap.
    """
    if not eval_corpus.segments:
        raise ValueError("evaluation set is empty")
    if plan.intra_count > len(eval_corpus.segments):
        raise ValueError(
            f"intra_count {plan.intra_count} exceeds evaluation set size {len(eval_corpus.segments)}")
    if plan.inter_fraction == 0:
        inter_ids = frozenset()
    else:
        inter_plan = SamplePlan(seed=_hash64(plan.seed, "inter"), fraction=plan.inter_fraction)
        inter_ids = frozenset(stratified_sample(eval_corpus, inter_plan).ids())
    rng = random.Random(_hash64(plan.seed, "intra"))
    intra_ids = frozenset(rng.sample(eval_corpus.ids(), plan.intra_count))
    return AgreementSubsets(inter_ids=inter_ids, intra_ids=intra_ids)


def distribution_report(original: Corpus, sampled: Corpus) -> DistributionReport:
    """Compare per-label proportions; exact rationals, so deviations are exact."""
    if not original.segments or not sampled.segments:
        raise ValueError("distribution report needs non-empty corpora")

    def proportions(corpus):
        counts = Counter(seg.emotion for seg in corpus.segments)
        total = len(corpus.segments)
        return {label: Fraction(counts.get(label, 0), total) for label in EmotionLabel}

    orig, samp = proportions(original), proportions(sampled)
    deviation = max(abs(orig[label] - samp[label]) for label in EmotionLabel)
    return DistributionReport(original=orig, sampled=samp, max_deviation=deviation)
