"""Durable single-node project store backing the annotation service.

One directory per project: an immutable corpus snapshot (canonical JSONL), a
project manifest (plans, roster, materialized task queues), and an append-only
submission log. Every acknowledged write is flushed and fsynced before the
call returns, and the current state is a pure replay of the log, so a killed
process loses nothing it acknowledged. Last submission wins; the log itself is
the audit trail.
"""

import datetime as dt
import json
import os
import threading
import uuid
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import agreement as agreement_mod
from . import analytics, scoring
from .ingestion import (
    Corpus,
    export_annotations,
    export_corpus,
    parse_corpus,
    pass_from_obj,
    pass_to_obj,
)
from .model import AnnotationPass, filter_passes
from .sampling import AgreementPlan, SamplePlan, carve_agreement_subsets, stratified_sample

PROJECT_FILE = "project.json"
CORPUS_FILE = "corpus.jsonl"
LOG_FILE = "passes.log"


class StoreError(ValueError):
    pass


class NotFoundError(StoreError):
    pass


class ConflictError(StoreError):
    """State conflicts: stale revision, segment not in queue, wrong queue."""


class IncompleteProjectError(StoreError):
    """A report was requested before its required passes exist."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        triples = ", ".join(f"({s}, {a}, round {r})" for s, a, r in self.missing)
        super().__init__(f"missing completed pass(es): {triples}")


@dataclass(frozen=True)
class Annotator:
    id: str
    name: str = ""


def _utcnow() -> dt.datetime:
    return dt.datetime.now(dt.timezone.utc)


def _fsync_dir(path: Path):
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def _write_file(path: Path, data: bytes):
    with open(path, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())


class ProjectState:
    """In-memory view of one project, kept consistent with its on-disk log."""

    def __init__(self, directory: Path, manifest: dict, corpus_full: Corpus):
        self.directory = directory
        self.lock = threading.Lock()
        self.project_id = manifest["project_id"]
        self.name = manifest["name"]
        self.provenance = manifest["provenance"]
        self.created_at = manifest["created_at"]
        self.sample_plan = manifest["sample_plan"]
        self.agreement_plan = manifest["agreement_plan"]
        self.roster = tuple(Annotator(r["id"], r.get("name", "")) for r in manifest["roster"])
        self.corpus_full = corpus_full
        eval_ids = manifest["eval_ids"]
        self.eval_corpus = Corpus(
            name=corpus_full.name,
            segments=tuple(corpus_full.segment(sid) for sid in eval_ids),
            provenance=corpus_full.provenance,
        )
        self.inter_ids = frozenset(manifest["inter_ids"])
        self.intra_ids = frozenset(manifest["intra_ids"])
        self.queues = {}
        for annotator_id, rounds in manifest["queues"].items():
            for round_str, ids in rounds.items():
                self.queues[(annotator_id, int(round_str))] = tuple(ids)
        # Replayed from the log:
        self.current = {}       # key -> AnnotationPass
        self.revisions = {}     # key -> submission count
        self.submit_ts = {}     # key -> datetime of latest submission
        self.skipped = set()    # keys currently marked skipped
        self.next_seq = 1
        self._replay()

    # -- log ----------------------------------------------------------------

    @property
    def log_path(self) -> Path:
        return self.directory / LOG_FILE

    def _replay(self):
        if not self.log_path.exists():
            return
        raw = self.log_path.read_bytes()
        lines = raw.split(b"\n")
        incomplete_tail = lines and lines[-1] != b""
        if not incomplete_tail:
            lines = lines[:-1] if lines else lines
        else:
            lines = lines[:-1]  # unacknowledged torn write; drop it
        for idx, line in enumerate(lines):
            if line == b"":
                continue
            try:
                record = json.loads(line.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise StoreError(f"corrupt log record {idx + 1} in {self.log_path}: {exc}") from exc
            self._apply(record)
            self.next_seq = max(self.next_seq, record["seq"] + 1)

    def _apply(self, record: dict):
        ts = dt.datetime.fromisoformat(record["ts"])
        if record["kind"] == "pass":
            pass_ = pass_from_obj(record["pass"], corpus=self.eval_corpus, created_at=ts)
            key = pass_.key
            self.current[key] = pass_
            self.revisions[key] = self.revisions.get(key, 0) + 1
            self.submit_ts[key] = ts
            self.skipped.discard(key)
        elif record["kind"] == "skip":
            key = (record["segment_id"], record["annotator_id"], record["round"])
            if key not in self.current:
                self.skipped.add(key)
        else:
            raise StoreError(f"unknown log record kind {record['kind']!r}")

    def _append(self, record: dict):
        line = (json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")
        with open(self.log_path, "ab") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    # -- queues ---------------------------------------------------------------

    def queue_for(self, annotator_id: str, round: int) -> tuple:
        try:
            return self.queues[(annotator_id, round)]
        except KeyError:
            raise NotFoundError(
                f"no queue for annotator {annotator_id!r} round {round}") from None

    def queue_progress(self, annotator_id: str, round: int, round2_delay: float = 0.0,
                       now: Optional[dt.datetime] = None):
        """First pending segment plus done/skipped/gated counts for the queue."""
        queue = self.queue_for(annotator_id, round)
        now = now or _utcnow()
        done = skipped = gated = 0
        first_pending = None
        for sid in queue:
            key = (sid, annotator_id, round)
            if key in self.current:
                done += 1
                continue
            if key in self.skipped:
                skipped += 1
                continue
            if round == 2 and round2_delay > 0:
                first = self.submit_ts.get((sid, annotator_id, 1))
                if first is None or (now - first).total_seconds() < round2_delay:
                    gated += 1
                    continue
            if first_pending is None:
                first_pending = sid
        return first_pending, {"total": len(queue), "done": done, "skipped": skipped, "gated": gated}

    def status(self) -> str:
        for (annotator_id, round), queue in self.queues.items():
            for sid in queue:
                if (sid, annotator_id, round) not in self.current:
                    return "annotating"
        return "complete"

    # -- writes ---------------------------------------------------------------

    def submit_pass(self, pass_: AnnotationPass, expected_revision: Optional[int] = None) -> int:
        """Durably record a pass; returns the new revision number for its key."""
        with self.lock:
            annotators = {a.id for a in self.roster}
            if pass_.annotator_id not in annotators:
                raise NotFoundError(f"unknown annotator {pass_.annotator_id!r}")
            queue = self.queues.get((pass_.annotator_id, pass_.round))
            if queue is None:
                raise ConflictError(
                    f"annotator {pass_.annotator_id!r} has no round-{pass_.round} queue")
            if pass_.segment_id not in queue:
                raise ConflictError(
                    f"segment {pass_.segment_id!r} is not in annotator "
                    f"{pass_.annotator_id!r}'s round-{pass_.round} queue")
            if not pass_.completed:
                raise StoreError("only completed passes can be submitted")
            key = pass_.key
            revision = self.revisions.get(key, 0)
            if expected_revision is not None and expected_revision != revision:
                raise ConflictError(
                    f"stale submission for {key!r}: expected revision "
                    f"{expected_revision}, current is {revision}")
            ts = _utcnow()
            record = {
                "seq": self.next_seq,
                "ts": ts.isoformat(),
                "kind": "pass",
                "pass": pass_to_obj(pass_),
            }
            self._append(record)
            self.next_seq += 1
            self._apply(record)
            return self.revisions[key]

    def skip_segment(self, annotator_id: str, round: int, segment_id: str):
        with self.lock:
            queue = self.queue_for(annotator_id, round)
            if segment_id not in queue:
                raise ConflictError(
                    f"segment {segment_id!r} is not in annotator {annotator_id!r}'s "
                    f"round-{round} queue")
            key = (segment_id, annotator_id, round)
            if key in self.current:
                raise ConflictError(f"segment {segment_id!r} is already done in this queue")
            record = {
                "seq": self.next_seq,
                "ts": _utcnow().isoformat(),
                "kind": "skip",
                "segment_id": segment_id,
                "annotator_id": annotator_id,
                "round": round,
            }
            self._append(record)
            self.next_seq += 1
            self._apply(record)

    def get_pass(self, annotator_id: str, round: int, segment_id: str):
        key = (segment_id, annotator_id, round)
        pass_ = self.current.get(key)
        if pass_ is None:
            raise NotFoundError(f"no pass for {key!r}")
        return pass_, self.revisions[key]

    # -- exports & reports ------------------------------------------------------

    def _eval_order(self) -> dict:
        return {sid: i for i, sid in enumerate(self.eval_corpus.ids())}

    def current_passes(self) -> list:
        order = self._eval_order()
        return sorted(
            self.current.values(),
            key=lambda p: (order[p.segment_id], p.annotator_id, p.round),
        )

    def export_corpus_bytes(self) -> bytes:
        return export_corpus(self.eval_corpus)

    def export_annotations_bytes(self) -> bytes:
        return export_annotations(self.current_passes())

    def _require(self, keys):
        missing = [k for k in keys if k not in self.current]
        if missing:
            raise IncompleteProjectError(missing)

    def primary_annotator(self) -> str:
        return self.roster[0].id

    def scores_report(self):
        primary = self.primary_annotator()
        self._require([(sid, primary, 1) for sid in self.eval_corpus.ids()])
        passes = filter_passes(self.current_passes(), annotator_id=primary, round=1)
        return scoring.score_corpus(passes, self.eval_corpus)

    def agreement_report(self, mode: str):
        primary = self.primary_annotator()
        if mode == "inter":
            if len(self.roster) < 2 or not self.inter_ids:
                raise StoreError("project has no inter-annotator subset")
            secondary = self.roster[1].id
            self._require([(sid, primary, 1) for sid in sorted(self.inter_ids)]
                          + [(sid, secondary, 1) for sid in sorted(self.inter_ids)])
            passes_a = filter_passes(self.current_passes(), annotator_id=primary, round=1,
                                     segment_ids=self.inter_ids)
            passes_b = filter_passes(self.current_passes(), annotator_id=secondary, round=1,
                                     segment_ids=self.inter_ids)
            return agreement_mod.agreement_report(passes_a, passes_b, mode="inter",
                                                  segment_ids=self.inter_ids)
        if mode == "intra":
            self._require([(sid, primary, 1) for sid in sorted(self.intra_ids)]
                          + [(sid, primary, 2) for sid in sorted(self.intra_ids)])
            passes_a = filter_passes(self.current_passes(), annotator_id=primary, round=1,
                                     segment_ids=self.intra_ids)
            passes_b = filter_passes(self.current_passes(), annotator_id=primary, round=2,
                                     segment_ids=self.intra_ids)
            return agreement_mod.agreement_report(passes_a, passes_b, mode="intra",
                                                  segment_ids=self.intra_ids)
        raise StoreError(f"unknown agreement mode {mode!r}")

    def stats_report(self):
        primary = self.primary_annotator()
        self._require([(sid, primary, 1) for sid in self.eval_corpus.ids()])
        passes = filter_passes(self.current_passes(), annotator_id=primary, round=1)
        return analytics.compute_stats(passes, self.eval_corpus)

    def describe(self) -> dict:
        queues = {}
        for annotator in self.roster:
            rounds = {}
            for (aid, rnd) in sorted(self.queues, key=lambda k: (k[0], k[1])):
                if aid != annotator.id:
                    continue
                _, progress = self.queue_progress(aid, rnd)
                rounds[str(rnd)] = progress
            queues[annotator.id] = rounds
        return {
            "project_id": self.project_id,
            "name": self.name,
            "status": self.status(),
            "created_at": self.created_at,
            "provenance": self.provenance,
            "sample_plan": self.sample_plan,
            "agreement_plan": self.agreement_plan,
            "roster": [{"id": a.id, "name": a.name} for a in self.roster],
            "n_segments_full": len(self.corpus_full),
            "n_segments_eval": len(self.eval_corpus),
            "eval_ids": self.eval_corpus.ids(),
            "inter_ids": sorted(self.inter_ids),
            "intra_ids": sorted(self.intra_ids),
            "queues": queues,
        }


class ProjectStore:
    """Registry of projects under one data directory."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.projects_dir = self.data_dir / "projects"
        self.projects_dir.mkdir(parents=True, exist_ok=True)
        self._cache = {}
        self._lock = threading.Lock()

    def create_project(self, *, name: str, corpus: Corpus, sample_plan: SamplePlan,
                       agreement_plan: AgreementPlan, roster, provenance: str = "") -> ProjectState:
        """Run the filter -> sample -> carve pipeline and persist everything atomically."""
        roster = tuple(roster)
        if not roster:
            raise StoreError("roster must contain at least one annotator")
        ids = [a.id for a in roster]
        if len(set(ids)) != len(ids) or any(not a.id for a in roster):
            raise StoreError("annotator ids must be unique and non-empty")
        if agreement_plan.inter_fraction > 0 and len(roster) < 2:
            raise StoreError("inter-annotator agreement requires at least 2 annotators")
        eval_corpus = stratified_sample(corpus, sample_plan)
        subsets = carve_agreement_subsets(eval_corpus, agreement_plan)
        eval_ids = eval_corpus.ids()

        queues = {roster[0].id: {
            "1": eval_ids,
            "2": [sid for sid in eval_ids if sid in subsets.intra_ids],
        }}
        if len(roster) >= 2:
            queues[roster[1].id] = {"1": [sid for sid in eval_ids if sid in subsets.inter_ids]}
        for extra in roster[2:]:
            queues[extra.id] = {}

        project_id = uuid.uuid4().hex[:12]
        manifest = {
            "project_id": project_id,
            "name": name,
            "created_at": _utcnow().isoformat(),
            "provenance": provenance,
            "sample_plan": {
                "seed": sample_plan.seed,
                "fraction": str(sample_plan.fraction),
                "exclude": sorted(l.value for l in sample_plan.exclude_labels),
            },
            "agreement_plan": {
                "seed": agreement_plan.seed,
                "inter_fraction": str(agreement_plan.inter_fraction),
                "intra_count": agreement_plan.intra_count,
            },
            "roster": [{"id": a.id, "name": a.name} for a in roster],
            "eval_ids": eval_ids,
            "inter_ids": sorted(subsets.inter_ids),
            "intra_ids": sorted(subsets.intra_ids),
            "queues": queues,
        }

        tmp_dir = self.projects_dir / f".tmp-{project_id}"
        tmp_dir.mkdir(parents=True)
        _write_file(tmp_dir / PROJECT_FILE,
                    (json.dumps(manifest, ensure_ascii=False, indent=1) + "\n").encode("utf-8"))
        _write_file(tmp_dir / CORPUS_FILE, export_corpus(corpus))
        final_dir = self.projects_dir / project_id
        os.rename(tmp_dir, final_dir)
        _fsync_dir(self.projects_dir)

        state = ProjectState(final_dir, manifest, corpus)
        with self._lock:
            self._cache[project_id] = state
        return state

    def get(self, project_id: str) -> ProjectState:
        with self._lock:
            if project_id in self._cache:
                return self._cache[project_id]
        directory = self.projects_dir / project_id
        manifest_path = directory / PROJECT_FILE
        if not manifest_path.exists():
            raise NotFoundError(f"unknown project {project_id!r}")
        manifest = json.loads(manifest_path.read_text("utf-8"))
        corpus = parse_corpus(
            (directory / CORPUS_FILE).read_bytes(), name=manifest["name"],
            provenance=manifest["provenance"])
        state = ProjectState(directory, manifest, corpus)
        with self._lock:
            self._cache.setdefault(project_id, state)
            return self._cache[project_id]

    def list_ids(self) -> list:
        return sorted(
            p.name for p in self.projects_dir.iterdir()
            if p.is_dir() and not p.name.startswith(".") and (p / PROJECT_FILE).exists()
        )
