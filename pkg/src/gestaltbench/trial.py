"""Human-trial protocol engine: staged training exhibits, four 20-item
test rounds, retraining on error, append-only event logging.

A session opens in training with an exhibit of 12 pairs drawn from A1.
The subject may request 3 more unseen examples of either class while
training, and starts testing when ready.  Test round k draws 20 fresh
items (10 per class, shuffled) from the k-th test set; a clean sheet
advances straight into the next round, passing round 4 ends the game
as Passed, and any mistake sends the subject back to training on the
next set (A1 -> A2 -> A3, then capped).  The fourth failed round ends
the game as Exhausted.

Every state change appends one event to the session log, and the
report is computed from the log alone, so replaying a log file always
reproduces the summary exactly.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .dataset import MANIFEST_NAME, Manifest, load_png
from .errors import DataError, ProtocolError
from .raster import components
from .rng import make_rng

TRAIN_SETS = ("a1", "a2", "a3")
TEST_SETS = ("c1", "d1a1", "d2a2", "d3a3")

INITIAL_PAIRS = 12
MORE_STEP = 3
TEST_ITEMS = 20
TEST_PER_CLASS = 10
MAX_ROUNDS = 4
MAX_FAILURES = 4

_TERMINAL = ("passed", "failed", "exhausted")


@dataclass(frozen=True)
class Phase:
    """Protocol phase. `round` is the training round r or the test round
    k; `item` is the 1-based pending item index while testing. The
    `failed` kind is reserved (no documented transition reaches it)."""

    kind: str  # training | testing | passed | failed | exhausted
    round: int = 0
    item: int = 0

    @property
    def terminal(self) -> bool:
        return self.kind in _TERMINAL

    def as_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "training":
            d["round"] = self.round
        elif self.kind == "testing":
            d["round"] = self.round
            d["item"] = self.item
        return d


@dataclass
class TestItem:
    item_id: str
    round: int
    index: int  # 1-based position within the 20-item round
    path: Path  # absolute; never exposed to the subject
    label: int
    answer: Optional[int] = None
    correct: Optional[bool] = None
    response_ms: Optional[float] = None

    def view(self) -> dict:
        """Subject-facing payload: no label, no path."""
        return {"item_id": self.item_id, "round": self.round,
                "index": self.index, "total": TEST_ITEMS}


class TrialSession:
    """Single-subject session over one task's curriculum directory.

    Operations are not thread-safe; callers serialize per session.
    The biased option restricts class-0 training draws to images with a
    single foreground component (the deliberate-bias group), leaving
    test rounds untouched.
    """

    def __init__(self, task: str, root, seed: int = 0, biased: bool = False,
                 log_dir=None, session_id: Optional[str] = None):
        self.id = session_id or uuid.uuid4().hex[:16]
        self.task = task
        self.seed = seed
        self.biased = biased
        self.root = Path(root).resolve()
        self.rng = make_rng(seed)
        self.manifests: dict[str, Manifest] = {}
        for name in TRAIN_SETS + TEST_SETS:
            d = self.root / task / name
            if not (d / MANIFEST_NAME).is_file():
                raise DataError(f"missing dataset round {task}/{name} under {self.root}")
            self.manifests[name] = Manifest.load(d)

        self._queues: dict[tuple, deque] = {}
        self._seen: set = set()
        self._ncomp: dict[str, int] = {}
        self.items: dict[str, TestItem] = {}
        self.round_items: list[TestItem] = []
        self.examples_seen = 0
        self.training_round = 1
        self.passed_rounds = 0
        self.failures = 0
        self.attempts = 0
        self.phase = Phase("training", round=1)
        self._events: list[dict] = []
        self._log_path = None
        if log_dir is not None:
            log_dir = Path(log_dir)
            log_dir.mkdir(parents=True, exist_ok=True)
            self._log_path = log_dir / f"{self.id}.jsonl"

        self._log_event("created", session=self.id, task=task,
                        seed=seed, biased=biased)
        zeros = self._draw("a1", 0, INITIAL_PAIRS)
        ones = self._draw("a1", 1, INITIAL_PAIRS)
        self.exhibit = {0: [e for _, e in zeros], 1: [e for _, e in ones]}
        self.examples_seen = 2 * INITIAL_PAIRS
        self._log_event("exhibit", class0=self.exhibit[0], class1=self.exhibit[1],
                        examples_seen=self.examples_seen)

    # -- sampling ---------------------------------------------------------

    def _component_count(self, path: Path) -> int:
        key = str(path)
        if key not in self._ncomp:
            self._ncomp[key] = len(components(load_png(path)))
        return self._ncomp[key]

    def _queue(self, set_name: str, label: int) -> deque:
        key = (set_name, label)
        if key not in self._queues:
            man = self.manifests[set_name]
            idx = [i for i, r in enumerate(man.records) if r.label == label]
            order = self.rng.permutation(len(idx))
            self._queues[key] = deque(idx[j] for j in order)
        return self._queues[key]

    def _draw(self, set_name: str, label: int, n: int) -> list[tuple]:
        """n unseen samples of one class, as (abs_path, entry) pairs.

        Unseen is keyed by resolved file path, so a sample shown from A1
        stays consumed when it reappears inside the A2/A3 unions.
        """
        man = self.manifests[set_name]
        queue = self._queue(set_name, label)
        single_only = (self.biased and label == 0 and set_name in TRAIN_SETS)
        out = []
        while queue and len(out) < n:
            rec = man.records[queue.popleft()]
            # normalize: union records point at "<set>/../a1/..." and the
            # seen-key must match the same file drawn via its own round
            path = Path(os.path.normpath(man.resolve(rec)))
            if str(path) in self._seen:
                continue
            if single_only and self._component_count(path) != 1:
                continue
            rel = path.relative_to(self.root).as_posix()
            out.append((path, {"path": rel, "label": label}))
        if len(out) < n:
            raise DataError(f"training set {set_name} exhausted for class {label}"
                            if set_name in TRAIN_SETS else
                            f"test set {set_name} exhausted for class {label}")
        for path, _ in out:
            self._seen.add(str(path))
        return out

    # -- event log --------------------------------------------------------

    def _log_event(self, event: str, **fields) -> None:
        entry = {"t": time.time(), "event": event,
                 "phase": self.phase.as_dict(), **fields}
        self._events.append(entry)
        if self._log_path is not None:
            with open(self._log_path, "a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    @property
    def events(self) -> list[dict]:
        return list(self._events)

    # -- operations -------------------------------------------------------

    def state_view(self) -> dict:
        view = {"session": self.id, "task": self.task, "biased": self.biased,
                "phase": self.phase.as_dict(),
                "examples_seen": self.examples_seen,
                "training_set": TRAIN_SETS[self.training_round - 1],
                "passed_rounds": self.passed_rounds,
                "failures": self.failures,
                "exhibit": {"class0": self.exhibit[0], "class1": self.exhibit[1]},
                "item": None}
        if self.phase.kind == "testing":
            view["item"] = self.round_items[self.phase.item - 1].view()
        return view

    def more_examples(self, class_id: int) -> dict:
        if self.phase.kind != "training":
            raise ProtocolError(f"more_examples outside training "
                                f"(phase {self.phase.kind})")
        if class_id not in (0, 1):
            raise ProtocolError(f"unknown class {class_id}")
        set_name = TRAIN_SETS[self.training_round - 1]
        drawn = self._draw(set_name, class_id, MORE_STEP)
        entries = [e for _, e in drawn]
        self.exhibit[class_id].extend(entries)
        self.examples_seen += MORE_STEP
        self._log_event("more", class_id=class_id, samples=entries,
                        examples_seen=self.examples_seen)
        return {"samples": entries, "examples_seen": self.examples_seen}

    def begin_testing(self) -> dict:
        if self.phase.kind != "training":
            raise ProtocolError(f"begin_testing outside training "
                                f"(phase {self.phase.kind})")
        return self._start_round()

    def _start_round(self) -> dict:
        k = self.passed_rounds + 1
        set_name = TEST_SETS[k - 1]
        zeros = self._draw(set_name, 0, TEST_PER_CLASS)
        ones = self._draw(set_name, 1, TEST_PER_CLASS)
        pool = [(p, 0) for p, _ in zeros] + [(p, 1) for p, _ in ones]
        order = self.rng.permutation(TEST_ITEMS)
        self.attempts += 1
        self.round_items = []
        for j, pick in enumerate(order):
            path, label = pool[pick]
            item = TestItem(item_id=f"r{k}a{self.attempts}i{j + 1:02d}",
                            round=k, index=j + 1, path=path, label=label)
            self.round_items.append(item)
            self.items[item.item_id] = item
        self.phase = Phase("testing", round=k, item=1)
        self._log_event("begin_testing", round=k, attempt=self.attempts,
                        items=[{"item_id": it.item_id,
                                "path": it.path.relative_to(self.root).as_posix(),
                                "label": it.label} for it in self.round_items])
        return {"round": k, "attempt": self.attempts,
                "item": self.round_items[0].view()}

    def item_path(self, item_id: str) -> Path:
        try:
            return self.items[item_id].path
        except KeyError:
            raise ProtocolError(f"unknown item {item_id}") from None

    def submit_answer(self, item_id: str, class_id: int,
                      response_ms: Optional[float] = None) -> dict:
        """Record one answer; on the 20th, return the round verdict.

        The response never reveals per-item correctness: the subject
        only learns pass/fail (and the error count) at the round end.
        """
        if self.phase.kind != "testing":
            raise ProtocolError(f"answer outside testing (phase {self.phase.kind})")
        if class_id not in (0, 1):
            raise ProtocolError(f"unknown class {class_id}")
        item = self.items.get(item_id)
        if item is None:
            raise ProtocolError(f"unknown item {item_id}")
        pending = self.round_items[self.phase.item - 1]
        if item_id != pending.item_id:
            if item.answer is not None:
                raise ProtocolError(f"duplicate answer for item {item_id}")
            raise ProtocolError(f"out-of-order answer for item {item_id}; "
                                f"pending item is {pending.item_id}")
        item.answer = class_id
        item.correct = class_id == item.label
        item.response_ms = response_ms
        k = self.phase.round

        if self.phase.item < TEST_ITEMS:
            self.phase = Phase("testing", round=k, item=self.phase.item + 1)
            self._log_event("answer", item_id=item_id, round=k, index=item.index,
                            given=class_id, correct=item.correct,
                            response_ms=response_ms)
            return {"verdict": None, "item": self.round_items[self.phase.item - 1].view(),
                    "phase": self.phase.as_dict()}

        # round complete: decide the verdict, then log answer + result with
        # the resulting phase
        errors = sum(1 for it in self.round_items if not it.correct)
        result = "pass" if errors == 0 else "fail"
        if errors == 0:
            self.passed_rounds += 1
            if k == MAX_ROUNDS:
                self.phase = Phase("passed")
        else:
            self.failures += 1
            if self.failures >= MAX_FAILURES:
                self.phase = Phase("exhausted")
            else:
                self.training_round = min(self.training_round + 1, len(TRAIN_SETS))
                self.phase = Phase("training", round=self.training_round)
        self._log_event("answer", item_id=item_id, round=k, index=item.index,
                        given=class_id, correct=item.correct,
                        response_ms=response_ms)
        verdict = {"round": k, "attempt": self.attempts, "errors": errors,
                   "correct": TEST_ITEMS - errors, "result": result}
        self._log_event("round_result", **verdict, failures=self.failures)
        out = {"verdict": verdict, "item": None, "phase": self.phase.as_dict()}
        if result == "pass" and self.phase.kind != "passed":
            started = self._start_round()
            out["item"] = started["item"]
            out["phase"] = self.phase.as_dict()
        return out

    def report(self) -> dict:
        return summarize(self._events)


# ---------------------------------------------------------------------------
# Log replay.


def read_events(path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no event log at {path}")
    events = []
    for i, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{i}: bad event line: {exc}") from None
    return events


def summarize(events: list[dict]) -> dict:
    """Session summary from the event log alone.

    `report()` routes through this function, so a replayed log file
    reproduces the live summary by construction.
    """
    if not events or events[0].get("event") != "created":
        raise DataError("event log does not start with a created event")
    head = events[0]
    examples_seen = 0
    failures = 0
    answers = 0
    rounds: list[dict] = []
    open_round: Optional[dict] = None
    for e in events:
        kind = e["event"]
        if kind in ("exhibit", "more"):
            examples_seen = e["examples_seen"]
        elif kind == "begin_testing":
            open_round = {"start": e["t"], "last": e["t"], "ms": []}
        elif kind == "answer":
            if open_round is None:
                raise DataError("answer event outside a test round")
            answers += 1
            open_round["last"] = e["t"]
            if e.get("response_ms") is not None:
                open_round["ms"].append(e["response_ms"])
        elif kind == "round_result":
            if open_round is None:
                raise DataError("round_result event outside a test round")
            ms = open_round["ms"]
            rounds.append({"round": e["round"], "attempt": e["attempt"],
                           "errors": e["errors"], "correct": e["correct"],
                           "accuracy": e["correct"] / TEST_ITEMS,
                           "result": e["result"],
                           "duration_s": open_round["last"] - open_round["start"],
                           "mean_answer_ms": sum(ms) / len(ms) if ms else None})
            failures = e["failures"]
            open_round = None
    phase = events[-1]["phase"]
    return {"session": head["session"], "task": head["task"],
            "seed": head["seed"], "biased": head["biased"],
            "phase": phase, "passed": phase["kind"] == "passed",
            "examples_seen": examples_seen, "failures": failures,
            "answers": answers, "rounds": rounds}
