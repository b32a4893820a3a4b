"""HTTP annotation service: serves verification work items and logs decisions.

Items are queued per annotator with a deterministic order; a configurable
share (default 10%) goes to every annotator for agreement measurement, the
rest is partitioned round-robin. Decisions land in an append-only line log;
the effective state is the fold of that log, so restarts and resubmissions
are safe.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .records import CandidateExample, read_jsonl, write_jsonl
from .verification import (
    STAGE1_FLAGS,
    Stage1Decision,
    Stage2Decision,
    VerificationError,
)

logger = logging.getLogger(__name__)

OVERLAP_FRACTION = 0.10


@dataclass(frozen=True)
class WorkItem:
    item_id: str
    stage: int  # 1 or 2
    payload: dict
    assigned_to: str | None = None

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "stage": self.stage,
            "payload": self.payload,
            "assigned_to": self.assigned_to,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "WorkItem":
        return cls(row["item_id"], row["stage"], row["payload"], row.get("assigned_to"))


def stage1_item(example: CandidateExample) -> WorkItem:
    return WorkItem(
        example.item_id,
        1,
        {
            "question": example.question,
            "passage_id": example.passage_id,
            "passage_text": example.passage_text,
            "span": {
                "char_start": example.answer_char_start,
                "char_end": example.answer_char_end,
                "text": example.answer_text,
            },
        },
    )


def stage2_item(example: CandidateExample, labels: dict[str, str]) -> WorkItem:
    def candidates(ids):
        return [{"id": entity_id, "label": labels.get(entity_id, entity_id)} for entity_id in sorted(ids)]

    return WorkItem(
        example.item_id,
        2,
        {
            "question": example.question,
            "answer_candidates": candidates(example.answer_entities),
            "topic_candidates": candidates(example.topic_entities),
        },
    )


def _interleave(own: list[str], shared: list[str]) -> list[str]:
    """Spreads the shared items evenly through the annotator's own queue."""
    total = len(own) + len(shared)
    queue: list[str] = []
    own_iter = iter(own)
    shared_iter = iter(shared)
    taken_shared = 0
    for position in range(total):
        due = (position + 1) * len(shared) // total
        if due > taken_shared:
            queue.append(next(shared_iter))
            taken_shared += 1
        else:
            queue.append(next(own_iter))
    return queue


class AnnotationStore:
    """Work queues plus the append-only decision log for both stages."""

    def __init__(
        self,
        items: list[WorkItem],
        annotators: list[str],
        log_path: str | Path,
        overlap_fraction: float = OVERLAP_FRACTION,
        seed: int = 0,
    ):
        if not annotators:
            raise ValueError("at least one annotator is required")
        self.annotators = sorted(annotators)
        self.items: dict[str, WorkItem] = {}
        for item in items:
            key = f"{item.stage}:{item.item_id}"
            if key in self.items:
                raise ValueError(f"duplicate work item {item.item_id} for stage {item.stage}")
            self.items[key] = item
        self.log_path = Path(log_path)
        self.queues: dict[tuple[str, int], list[str]] = {}
        self.served: dict[tuple[str, int], set[str]] = {}
        self.in_progress: dict[tuple[str, int], str | None] = {}
        self.effective: dict[tuple[str, str, int], dict] = {}
        self.audit_count = 0
        self._build_queues(overlap_fraction, seed)
        self._replay_log()

    # -- queue construction -------------------------------------------

    def _build_queues(self, overlap_fraction: float, seed: int) -> None:
        for stage in (1, 2):
            ids = sorted(item.item_id for key, item in self.items.items() if item.stage == stage)
            pool_size = int(len(ids) * overlap_fraction)
            rng = random.Random(seed + stage)
            shared = sorted(rng.sample(ids, pool_size)) if pool_size else []
            shared_set = set(shared)
            rest = [item_id for item_id in ids if item_id not in shared_set]
            per_annotator: dict[str, list[str]] = {name: [] for name in self.annotators}
            for index, item_id in enumerate(rest):
                per_annotator[self.annotators[index % len(self.annotators)]].append(item_id)
            for name in self.annotators:
                self.queues[(name, stage)] = _interleave(per_annotator[name], shared)
                self.served[(name, stage)] = set()
                self.in_progress[(name, stage)] = None

    # -- log persistence ----------------------------------------------

    def _replay_log(self) -> None:
        if not self.log_path.exists():
            return
        for row in read_jsonl(self.log_path):
            self._apply(row)
            self.audit_count += 1
        logger.info("replayed %d decision records", self.audit_count)

    def _apply(self, row: dict) -> None:
        key = (row["item_id"], row["annotator_id"], row["stage"])
        self.effective[key] = row
        served = self.served.setdefault((row["annotator_id"], row["stage"]), set())
        served.add(row["item_id"])
        progress_key = (row["annotator_id"], row["stage"])
        if self.in_progress.get(progress_key) == row["item_id"]:
            self.in_progress[progress_key] = None

    def _append_log(self, row: dict) -> None:
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with self.log_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        self.audit_count += 1

    # -- operations ---------------------------------------------------

    def _check_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self.annotators:
            raise KeyError(f"unknown annotator {annotator_id!r}")

    def get_item(self, item_id: str) -> WorkItem:
        for stage in (1, 2):
            item = self.items.get(f"{stage}:{item_id}")
            if item is not None:
                return item
        raise KeyError(f"unknown item {item_id!r}")

    def next_item(self, annotator_id: str, stage: int) -> WorkItem | None:
        self._check_annotator(annotator_id)
        if stage not in (1, 2):
            raise VerificationError(f"stage must be 1 or 2, got {stage}")
        key = (annotator_id, stage)
        current = self.in_progress.get(key)
        if current is not None and (current, annotator_id, stage) not in self.effective:
            return self._serve(annotator_id, stage, current)
        for item_id in self.queues[key]:
            if (item_id, annotator_id, stage) not in self.effective:
                self.in_progress[key] = item_id
                return self._serve(annotator_id, stage, item_id)
        self.in_progress[key] = None
        return None

    def _serve(self, annotator_id: str, stage: int, item_id: str) -> WorkItem:
        self.served[(annotator_id, stage)].add(item_id)
        item = self.items[f"{stage}:{item_id}"]
        return WorkItem(item.item_id, item.stage, item.payload, annotator_id)

    def submit(self, stage: int, decision: Stage1Decision | Stage2Decision) -> dict:
        self._check_annotator(decision.annotator_id)
        key = f"{stage}:{decision.item_id}"
        item = self.items.get(key)
        if item is None:
            raise KeyError(f"unknown item {decision.item_id!r} for stage {stage}")
        if decision.item_id not in self.served[(decision.annotator_id, stage)]:
            raise VerificationError(f"item {decision.item_id} was not served to {decision.annotator_id}")
        if stage == 2:
            answer_ids = {row["id"] for row in item.payload.get("answer_candidates", [])}
            topic_ids = {row["id"] for row in item.payload.get("topic_candidates", [])}
            bad_answers = set(decision.accepted_answer_entities) - answer_ids
            bad_topics = set(decision.accepted_topic_entities) - topic_ids
            if bad_answers:
                raise VerificationError(f"accepted_answer_entities outside candidates: {sorted(bad_answers)}")
            if bad_topics:
                raise VerificationError(f"accepted_topic_entities outside candidates: {sorted(bad_topics)}")
        row = dict(decision.to_dict(), stage=stage)
        if not row.get("timestamp"):
            row["timestamp"] = datetime.now(timezone.utc).isoformat()
        replaced = (decision.item_id, decision.annotator_id, stage) in self.effective
        self._append_log(row)
        self._apply(row)
        return {"ok": True, "replaced": replaced, "audit_count": self.audit_count}

    def progress(self) -> dict:
        per_annotator = {}
        for name in self.annotators:
            per_annotator[name] = {
                str(stage): {
                    "queued": len(self.queues[(name, stage)]),
                    "served": len(self.served[(name, stage)]),
                    "decided": sum(
                        1 for item, annotator, dstage in self.effective if annotator == name and dstage == stage
                    ),
                }
                for stage in (1, 2)
            }
        return {"annotators": per_annotator, "audit_count": self.audit_count}

    def export(self, stage: int) -> list[dict]:
        rows = [row for (item, annotator, dstage), row in sorted(self.effective.items()) if dstage == stage]
        return rows


# -- HTTP layer --------------------------------------------------------


def create_app(store: AnnotationStore, static_dir: str | Path | None = None):
    from fastapi import Body, FastAPI, HTTPException

    app = FastAPI(title="annotation-service")

    @app.get("/items/next")
    def items_next(annotator: str, stage: int):
        try:
            item = store.next_item(annotator, stage)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except VerificationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return item.to_dict() if item else None

    @app.get("/items/{item_id}")
    def items_get(item_id: str):
        try:
            return store.get_item(item_id).to_dict()
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/decisions")
    def decisions_post(payload: dict = Body(...)):
        stage = payload.get("stage")
        if stage not in (1, 2):
            raise HTTPException(status_code=422, detail="stage: must be 1 or 2")
        try:
            if stage == 1:
                if payload.get("flag") not in STAGE1_FLAGS:
                    raise VerificationError(f"flag: must be one of {list(STAGE1_FLAGS)}")
                decision = Stage1Decision(
                    payload["item_id"], payload["annotator_id"], payload["flag"], payload.get("timestamp", "")
                )
            else:
                decision = Stage2Decision(
                    payload["item_id"],
                    payload["annotator_id"],
                    frozenset(payload.get("accepted_answer_entities", [])),
                    frozenset(payload.get("accepted_topic_entities", [])),
                    payload.get("rejected", False),
                    payload.get("timestamp", ""),
                )
        except KeyError as exc:
            raise HTTPException(status_code=422, detail=f"{exc.args[0]}: field required")
        except VerificationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            return store.submit(stage, decision)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except VerificationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/progress")
    def progress_get():
        return store.progress()

    @app.get("/export")
    def export_get(stage: int):
        if stage not in (1, 2):
            raise HTTPException(status_code=422, detail="stage: must be 1 or 2")
        return store.export(stage)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def load_work_items(path: str | Path) -> list[WorkItem]:
    return [WorkItem.from_dict(row) for row in read_jsonl(path)]


def save_work_items(items: list[WorkItem], path: str | Path) -> int:
    return write_jsonl(path, (item.to_dict() for item in items))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="kbqakit-service", description="annotation service")
    parser.add_argument("--items", action="append", required=True, help="work item JSONL (repeatable)")
    parser.add_argument("--log", required=True, help="decision log path")
    parser.add_argument("--annotators", required=True, help="comma-separated annotator ids")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8137)
    parser.add_argument("--overlap", type=float, default=OVERLAP_FRACTION)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--static", default=None, help="directory of UI files to serve at /")
    args = parser.parse_args(argv)

    items: list[WorkItem] = []
    for path in args.items:
        items.extend(load_work_items(path))
    store = AnnotationStore(
        items, args.annotators.split(","), args.log, overlap_fraction=args.overlap, seed=args.seed
    )
    app = create_app(store, static_dir=args.static)
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
