"""Cohen's kappa agreement between two sets of annotation passes.

Each pass is first reduced to one categorical label per task:

* existence: error / no_error
* type: the error type at the pass's maximum severity ("none" for clean passes);
  ties at the maximum broken by a fixed priority
  mistranslation > omission > addition > untranslated > source_error
* severity: the maximum severity across errors ("none" for clean passes)

"none" participates as a category in the type and severity tasks, since the
agreement subsets necessarily include error-free segments.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .model import AnnotationPass, ErrorType, Severity, SEVERITY_ORDER
from .render import csv_bytes, dec4, json_bytes

NONE_LABEL = "none"

EXISTENCE_AXIS = ("error", "no_error")
TYPE_AXIS = (NONE_LABEL,) + tuple(t.value for t in ErrorType)
SEVERITY_AXIS = (NONE_LABEL,) + tuple(s.value for s in SEVERITY_ORDER)

TASKS = ("existence", "type", "severity")

# Tie-break priority for the type label when several errors share the max severity.
TYPE_PRIORITY = (
    ErrorType.MISTRANSLATION,
    ErrorType.OMISSION,
    ErrorType.ADDITION,
    ErrorType.UNTRANSLATED,
    ErrorType.SOURCE_ERROR,
)
_TYPE_RANK = {t: i for i, t in enumerate(TYPE_PRIORITY)}


class CoverageMismatchError(ValueError):
    """The two pass sets do not cover the same segments."""

    def __init__(self, missing_from_a: Sequence[str], missing_from_b: Sequence[str]):
        self.missing_from_a = sorted(missing_from_a)
        self.missing_from_b = sorted(missing_from_b)
        parts = []
        if self.missing_from_a:
            parts.append(f"missing from A: {', '.join(self.missing_from_a)}")
        if self.missing_from_b:
            parts.append(f"missing from B: {', '.join(self.missing_from_b)}")
        super().__init__("segment coverage mismatch; " + "; ".join(parts))


@dataclass(frozen=True)
class DerivedLabels:
    """Single per-segment labels reduced from a pass, for kappa computation."""

    segment_id: str
    existence: str                       # "error" | "no_error"
    type_label: Optional[ErrorType]      # None iff no_error
    severity_label: Optional[Severity]   # None iff no_error

    def label_for(self, task: str) -> str:
        if task == "existence":
            return self.existence
        if task == "type":
            return NONE_LABEL if self.type_label is None else self.type_label.value
        if task == "severity":
            return NONE_LABEL if self.severity_label is None else self.severity_label.value
        raise ValueError(f"unknown task {task!r}")


def derive_labels(pass_: AnnotationPass) -> DerivedLabels:
    """Reduce a completed pass to its existence / dominant-type / max-severity labels."""
    if not pass_.completed:
        raise ValueError(f"pass {pass_.key!r} is not completed")
    if not pass_.errors:
        return DerivedLabels(pass_.segment_id, "no_error", None, None)
    max_severity = max(e.severity for e in pass_.errors)
    candidates = [e.error_type for e in pass_.errors if e.severity == max_severity]
    type_label = min(candidates, key=lambda t: _TYPE_RANK[t])
    return DerivedLabels(pass_.segment_id, "error", type_label, max_severity)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square contingency table of paired labels (rows: rater A, cols: rater B)."""

    labels: tuple
    counts: tuple

    def __post_init__(self):
        k = len(self.labels)
        if len(self.counts) != k or any(len(row) != k for row in self.counts):
            raise ValueError("counts must be square and match the label axis")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be non-negative")

    @property
    def n(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_totals(self) -> list:
        return [sum(row) for row in self.counts]

    def col_totals(self) -> list:
        return [sum(row[j] for row in self.counts) for j in range(len(self.labels))]


def _axis_for(task: str) -> tuple:
    if task == "existence":
        return EXISTENCE_AXIS
    if task == "type":
        return TYPE_AXIS
    if task == "severity":
        return SEVERITY_AXIS
    raise ValueError(f"unknown task {task!r}")


def _pair_by_segment(a: Iterable[DerivedLabels], b: Iterable[DerivedLabels]) -> list:
    def as_map(labels, name):
        mapping = {}
        for lab in labels:
            if lab.segment_id in mapping:
                raise ValueError(f"duplicate segment id {lab.segment_id!r} in side {name}")
            mapping[lab.segment_id] = lab
        return mapping

    map_a = as_map(a, "A")
    map_b = as_map(b, "B")
    if set(map_a) != set(map_b):
        raise CoverageMismatchError(set(map_b) - set(map_a), set(map_a) - set(map_b))
    return [(map_a[sid], map_b[sid]) for sid in sorted(map_a)]


def build_confusion(a: Sequence[DerivedLabels], b: Sequence[DerivedLabels], task: str) -> ConfusionMatrix:
    """Count paired labels into a confusion matrix; pairing is by segment id."""
    pairs = _pair_by_segment(a, b)
    if not pairs:
        raise ValueError("cannot build a confusion matrix from zero items")
    axis = _axis_for(task)
    index = {label: i for i, label in enumerate(axis)}
    counts = [[0] * len(axis) for _ in axis]
    for lab_a, lab_b in pairs:
        counts[index[lab_a.label_for(task)]][index[lab_b.label_for(task)]] += 1
    return ConfusionMatrix(labels=axis, counts=tuple(tuple(row) for row in counts))


def cohen_kappa(matrix: ConfusionMatrix, weighting: str = "none") -> Fraction:
    """Chance-corrected agreement from a confusion matrix.

        kappa = (p_o - p_e) / (1 - p_e)

    p_o is the observed agreement (trace / n) and p_e the agreement expected
    from the marginals. If p_e = 1 (both raters constant on the same label,
    which forces p_o = 1) the result is 1 by convention. Exact rationals.

    weighting: "none" (default), or "linear" / "quadratic" for ordinal axes,
    where disagreement cells are weighted by their index distance.
    """
    n = matrix.n
    if n < 1:
        raise ValueError("kappa is undefined on an empty matrix")
    k = len(matrix.labels)
    rows = matrix.row_totals()
    cols = matrix.col_totals()
    if weighting == "none":
        p_o = Fraction(sum(matrix.counts[i][i] for i in range(k)), n)
        p_e = sum(Fraction(rows[i] * cols[i], n * n) for i in range(k))
        if p_e == 1:
            return Fraction(1)
        return (p_o - p_e) / (1 - p_e)
    if weighting in ("linear", "quadratic"):
        power = 1 if weighting == "linear" else 2
        observed = Fraction(0)
        expected = Fraction(0)
        for i in range(k):
            for j in range(k):
                w = Fraction(abs(i - j)) ** power
                observed += w * matrix.counts[i][j]
                expected += w * Fraction(rows[i] * cols[j], n)
        if expected == 0:
            return Fraction(1)
        return 1 - observed / expected
    raise ValueError(f"unknown weighting {weighting!r}")


@dataclass(frozen=True)
class TaskAgreement:
    task: str
    matrix: ConfusionMatrix
    kappa: Fraction


@dataclass(frozen=True)
class AgreementReport:
    mode: str  # "inter" | "intra"
    n_items: int
    existence: TaskAgreement
    type: TaskAgreement
    severity: TaskAgreement

    def task_agreement(self, task: str) -> TaskAgreement:
        return {"existence": self.existence, "type": self.type, "severity": self.severity}[task]


def _derive_all(passes: Iterable[AnnotationPass], segment_ids=None) -> list:
    labels = []
    for p in passes:
        if segment_ids is not None and p.segment_id not in segment_ids:
            continue
        labels.append(derive_labels(p))
    return labels


def agreement_report(passes_a: Iterable[AnnotationPass], passes_b: Iterable[AnnotationPass],
                     mode: str, segment_ids=None) -> AgreementReport:
    """Kappa for existence/type/severity over paired passes.

    segment_ids optionally restricts both sides to a subset scope; coverage
    gaps (ids present on one side only, or missing from the scope) raise
    CoverageMismatchError naming the segments.
    """
    if mode not in ("inter", "intra"):
        raise ValueError(f"unknown mode {mode!r}")
    scope = None if segment_ids is None else set(segment_ids)
    a = _derive_all(passes_a, scope)
    b = _derive_all(passes_b, scope)
    if scope is not None:
        covered_a = {lab.segment_id for lab in a}
        covered_b = {lab.segment_id for lab in b}
        gaps_a = scope - covered_a
        gaps_b = scope - covered_b
        if gaps_a or gaps_b:
            raise CoverageMismatchError(gaps_a, gaps_b)
    tasks = {}
    for task in TASKS:
        matrix = build_confusion(a, b, task)
        tasks[task] = TaskAgreement(task=task, matrix=matrix, kappa=cohen_kappa(matrix))
    return AgreementReport(
        mode=mode,
        n_items=tasks["existence"].matrix.n,
        existence=tasks["existence"],
        type=tasks["type"],
        severity=tasks["severity"],
    )


@dataclass(frozen=True)
class Disagreement:
    segment_id: str
    label_a: str
    label_b: str


def disagreement_listing(passes_a: Iterable[AnnotationPass], passes_b: Iterable[AnnotationPass],
                         task: str) -> list:
    """Segments whose derived labels differ for the task.

    Severity disagreements are ordered by ordinal distance (largest first) on
    the none < minor < major < critical chain; other tasks lexicographically.
    """
    axis = _axis_for(task)
    rank = {label: i for i, label in enumerate(axis)}
    pairs = _pair_by_segment(_derive_all(passes_a), _derive_all(passes_b))
    out = []
    for lab_a, lab_b in pairs:
        va, vb = lab_a.label_for(task), lab_b.label_for(task)
        if va != vb:
            out.append(Disagreement(lab_a.segment_id, va, vb))
    if task == "severity":
        out.sort(key=lambda d: (-abs(rank[d.label_a] - rank[d.label_b]), d.segment_id))
    else:
        out.sort(key=lambda d: (d.label_a, d.label_b, d.segment_id))
    return out


def agreement_report_obj(report: AgreementReport) -> dict:
    obj = {"report": "agreement", "mode": report.mode, "n_items": report.n_items}
    for task in TASKS:
        ta = report.task_agreement(task)
        obj[task] = {
            "kappa": dec4(ta.kappa),
            "labels": list(ta.matrix.labels),
            "matrix": [list(row) for row in ta.matrix.counts],
        }
    return obj


def agreement_report_bytes(report: AgreementReport) -> bytes:
    return json_bytes(agreement_report_obj(report))


AGREEMENT_CSV_HEADER = ("task", "record", "label_a", "label_b", "value")


def agreement_csv(report: AgreementReport) -> bytes:
    """One CSV: per task, all matrix cells, then a kappa row and an n row."""
    rows = []
    for task in TASKS:
        ta = report.task_agreement(task)
        for i, la in enumerate(ta.matrix.labels):
            for j, lb in enumerate(ta.matrix.labels):
                rows.append((task, "cell", la, lb, ta.matrix.counts[i][j]))
        rows.append((task, "kappa", "", "", dec4(ta.kappa)))
        rows.append((task, "n", "", "", ta.matrix.n))
    return csv_bytes(AGREEMENT_CSV_HEADER, rows)
