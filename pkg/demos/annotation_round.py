"""Walks one verification round through the annotation store, in process.

Builds a handful of candidate examples, has two annotators flag them in
stage 1, resolves the flags, and shows how the routing feeds the datasets:
correct items go on to stage 2 (entity selection), fragment-only items keep
their retrieval value, rejected items drop out.

Run from the repository root:  python3 demos/annotation_round.py
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from kbqakit.service import (  # noqa: E402
    AnnotationStore,
    CandidateExample,
    Stage1Decision,
    Stage2Decision,
    stage1_item,
    stage2_item,
)
from kbqakit.verification import apply_stage1, resolve_stage1  # noqa: E402

QUESTIONS = [
    ("Who taught the composer of the Ninth Symphony?", "correct"),
    ("What river flows through the city of bridges?", "correct"),
    ("When was was the old town hall built?", "incorrect_question"),
    ("Which mountain is the highest in the range?", "incorrect_fragment"),
]


def example(index: int, question: str) -> CandidateExample:
    return CandidateExample(
        item_id=f"demo{index}",
        question=question,
        source="natural",
        passage_id=f"page:{index}",
        passage_text=f"A passage answering question {index}.",
        answer_text="A passage",
        answer_char_start=0,
        answer_char_end=9,
        answer_entities=frozenset({"Qa", "Qb"}),
        topic_entities=frozenset({"Qt"}),
    )


def main() -> int:
    examples = [example(i, q) for i, (q, _) in enumerate(QUESTIONS)]
    scratch = Path(tempfile.mkdtemp(prefix="kbqakit-demo-"))

    store = AnnotationStore(
        [stage1_item(e) for e in examples],
        annotators=["anna", "piotr"],
        log_path=scratch / "decisions.log",
        seed=7,
    )

    print("stage 1: both annotators work their queues")
    for annotator in ("anna", "piotr"):
        while (item := store.next_item(annotator, stage=1)) is not None:
            flag = dict(zip([e.item_id for e in examples], [f for _, f in QUESTIONS]))[item.item_id]
            store.submit(1, Stage1Decision(item.item_id, annotator, flag, ""))
            print(f"  {annotator} -> {item.item_id}: {flag}")

    decisions = [
        Stage1Decision(row["item_id"], row["annotator_id"], row["flag"], row["timestamp"])
        for row in store.export(stage=1)
    ]
    flags = resolve_stage1(decisions)
    routing = apply_stage1(examples, flags)
    print()
    print(f"resolved flags: {dict(sorted(flags.items()))}")
    print(f"IR keeps          : {[e.item_id for e in routing.ir_pass]}")
    print(f"MRC and stage 2   : {[e.item_id for e in routing.mrc_pass]}")
    print(f"rejected          : {[e.item_id for e in routing.rejected]}")
    print()

    labels = {"Qa": "Answer A", "Qb": "Answer B", "Qt": "Topic"}
    stage2 = AnnotationStore(
        [stage2_item(e, labels) for e in routing.mrc_pass],
        annotators=["anna"],
        log_path=scratch / "decisions2.log",
        seed=7,
    )
    print("stage 2: anna accepts one answer entity and the topic")
    while (item := stage2.next_item("anna", stage=2)) is not None:
        decision = Stage2Decision(item.item_id, "anna", frozenset({"Qa"}), frozenset({"Qt"}), False, "")
        ack = stage2.submit(2, decision)
        print(f"  {item.item_id}: accepted Qa/Qt -> ack {ack['ok']}")
    for row in stage2.export(stage=2):
        print(f"  export: {row['item_id']} answers={row['accepted_answer_entities']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
