"""Dataset emission, manifests, metrics, and curriculum construction.

A dataset on disk is a PNG tree plus one JSON manifest per round:

    <out>/<task>/<round>/<class>/<index>.png
    <out>/<task>/<round>/manifest.json

Record paths are POSIX-relative to the manifest's own directory, so a
union set (a2 = a1 with d1a1) references its constituents' files without
copying them.  Every record stores the per-sample seed and the recipe,
so any single file can be rebuilt and checked bit for bit: base rounds
regenerate from the seed alone, derived rounds re-apply their operator
to the stored source file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import statistics
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from PIL import Image

from . import __version__
from .errors import (
    DataError,
    DecodeError,
    EvaluationError,
    GenerationError,
    OracleError,
    TrainingError,
)
from .rng import make_rng, sample_seed
from .sample import Sample
from .tasks import get_round, symmetry_global

MANIFEST_NAME = "manifest.json"
_FORMAT = 1
_EMIT_ATTEMPTS = 10  # fresh child streams before an emit gives up


# ---------------------------------------------------------------------------
# Image files.


def image_digest(img: np.ndarray) -> str:
    """sha256 of the raw row-major pixel buffer (not the PNG container)."""
    return hashlib.sha256(np.ascontiguousarray(img).tobytes()).hexdigest()


def save_png(img: np.ndarray, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path, format="PNG")


def load_png(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except FileNotFoundError:
        raise DataError(f"missing sample file {path}") from None
    except OSError as exc:
        raise DecodeError(f"unreadable image {path}: {exc}") from None


# ---------------------------------------------------------------------------
# Manifests.


@dataclass
class Record:
    """One sample file; `path` is POSIX-relative to its manifest's directory.

    `round` is the origin round, which differs from the manifest round
    inside union sets and picks the oracle during verification.
    """

    path: str
    label: int
    seed: int
    sha256: str
    round: str
    recipe: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"path": self.path, "label": self.label, "seed": self.seed,
                "sha256": self.sha256, "round": self.round, "recipe": self.recipe}

    @classmethod
    def from_json(cls, doc: dict) -> "Record":
        try:
            return cls(str(doc["path"]), int(doc["label"]), int(doc["seed"]),
                       str(doc["sha256"]), str(doc["round"]), dict(doc.get("recipe", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed manifest record: {exc}") from None


@dataclass
class Manifest:
    task: str
    round: str
    version: str
    master_seed: Optional[int]
    records: list[Record]
    parts: list[str] = field(default_factory=list)
    path: Optional[Path] = None

    @property
    def directory(self) -> Path:
        if self.path is None:
            raise DataError("manifest has no on-disk location yet")
        return self.path.parent

    def counts(self) -> dict[int, int]:
        c: dict[int, int] = {0: 0, 1: 0}
        for r in self.records:
            c[r.label] = c.get(r.label, 0) + 1
        return c

    def by_label(self, label: int) -> list[Record]:
        return [r for r in self.records if r.label == label]

    def resolve(self, rec: Record) -> Path:
        return self.directory.resolve() / PurePosixPath(rec.path)

    def save(self, directory) -> Path:
        """One record per line: big manifests stay diffable."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        counts = {str(k): v for k, v in sorted(self.counts().items())}
        lines = ["{"]
        for key, value in (("format", _FORMAT), ("task", self.task),
                           ("round", self.round), ("version", self.version),
                           ("master_seed", self.master_seed),
                           ("counts", counts), ("parts", self.parts)):
            lines.append(f' "{key}": {json.dumps(value)},')
        lines.append(' "records": [')
        last = len(self.records) - 1
        for i, rec in enumerate(self.records):
            row = json.dumps(rec.to_json(), separators=(",", ":"))
            lines.append("  " + row + ("," if i < last else ""))
        lines.append(" ]")
        lines.append("}")
        self.path = directory / MANIFEST_NAME
        self.path.write_text("\n".join(lines) + "\n")
        return self.path

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        if not path.is_file():
            raise DataError(f"no manifest at {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"manifest {path} is not valid JSON: {exc}") from None
        if doc.get("format") != _FORMAT:
            raise DataError(f"unsupported manifest format {doc.get('format')!r}")
        m = cls(str(doc["task"]), str(doc["round"]), str(doc.get("version", "")),
                doc.get("master_seed"),
                [Record.from_json(r) for r in doc.get("records", [])],
                [str(p) for p in doc.get("parts", [])], path)
        stored = {int(k): int(v) for k, v in doc.get("counts", {}).items()}
        if stored != m.counts():
            raise DataError(f"manifest {path}: stored counts {stored} do not "
                            f"match records {m.counts()}")
        return m


def _round_dir(out_root, task: str, round_id: str) -> Path:
    return Path(out_root) / task / round_id


# ---------------------------------------------------------------------------
# Emission.


def emit_round(task: str, round_id: str, count: int, master_seed: int,
               out_root) -> Manifest:
    """Generate `count` samples (labels alternate 0,1,0,...) and write
    the round directory plus its manifest.

    Sample i draws from seed split(master, i); the rare generator
    rejection retries on child streams and the record keeps whichever
    seed produced the file, so every record regenerates in one step.
    """
    rd = get_round(task, round_id)
    if count <= 0:
        raise DataError(f"count must be positive, got {count}")
    out_dir = _round_dir(out_root, task, round_id)
    records: list[Record] = []
    for i in range(count):
        label = i % 2
        base = sample_seed(master_seed, i)
        sample = None
        seed = base
        for attempt in range(_EMIT_ATTEMPTS):
            seed = sample_seed(base, attempt) if attempt else base
            try:
                sample = rd.gen(make_rng(seed), label)
                break
            except GenerationError:
                continue
        if sample is None:
            raise GenerationError(
                f"{task}/{round_id}: sample {i} failed {_EMIT_ATTEMPTS} attempts")
        rel = f"{label}/{i:06d}.png"
        save_png(sample.image, out_dir / rel)
        records.append(Record(rel, label, seed, image_digest(sample.image),
                              round_id, sample.recipe))
    manifest = Manifest(task, round_id, __version__, master_seed, records)
    manifest.save(out_dir)
    return manifest


def _apply_d1(src: Sample, rng: np.random.Generator, target: int) -> Sample:
    out = symmetry_global.d1(src, rng)
    if out.label != target:
        raise GenerationError("d1 source pool out of step with target label")
    return out


_DERIVED_OPS: dict[str, Callable[[Sample, np.random.Generator, int], Sample]] = {
    "d1": _apply_d1,
    "d2": symmetry_global.d2,
    "d3": symmetry_global.d3,
}


def derive_round(source: Manifest, op: str, round_id: str, count: int,
                 master_seed: int, out_root) -> Manifest:
    """Build a deliberate set by applying `op` to an emitted set's files.

    d1 flips labels, so it walks both source pools; d2/d3 transform
    symmetric scenes (label 0) toward an explicit target.  Each record
    stores the source file path for one-step regeneration.
    """
    if op not in _DERIVED_OPS:
        raise DataError(f"unknown derive op {op!r}; have {sorted(_DERIVED_OPS)}")
    if count <= 0:
        raise DataError(f"count must be positive, got {count}")
    apply_op = _DERIVED_OPS[op]
    pools = {0: source.by_label(0), 1: source.by_label(1)}
    if op == "d1" and not (pools[0] and pools[1]):
        raise DataError("d1 needs source records of both labels")
    if op != "d1" and not pools[0]:
        raise DataError(f"{op} needs symmetric (label 0) source records")
    out_dir = _round_dir(out_root, source.task, round_id).resolve()
    records: list[Record] = []
    for i in range(count):
        target = i % 2
        if op == "d1":
            pool = pools[1 - target]
            src_rec = pool[(i // 2) % len(pool)]
        else:
            pool = pools[0]
            src_rec = pool[i % len(pool)]
        src_file = source.resolve(src_rec)
        src = Sample(load_png(src_file), src_rec.label, source.task,
                     src_rec.round, src_rec.seed)
        base = sample_seed(master_seed, i)
        out = None
        seed = base
        for attempt in range(_EMIT_ATTEMPTS):
            seed = sample_seed(base, attempt) if attempt else base
            try:
                out = apply_op(src, make_rng(seed), target)
                break
            except GenerationError:
                continue
        if out is None:
            raise GenerationError(
                f"{source.task}/{round_id}: derive {i} failed {_EMIT_ATTEMPTS} attempts")
        rel = f"{target}/{i:06d}.png"
        save_png(out.image, out_dir / rel)
        recipe = dict(out.recipe)
        recipe["source_path"] = Path(os.path.relpath(src_file, out_dir)).as_posix()
        recipe["source_label"] = src_rec.label
        records.append(Record(rel, target, seed, image_digest(out.image),
                              round_id, recipe))
    manifest = Manifest(source.task, round_id, __version__, master_seed, records)
    manifest.save(out_dir)
    return manifest


def union_manifest(parts: Sequence[Manifest], round_id: str, out_root) -> Manifest:
    """Compose sets by reference: records point at constituent files.

    Order-stable (parts order, then record order) and idempotent, so
    re-unioning the same parts rewrites an identical manifest.
    """
    if not parts:
        raise DataError("union needs at least one part")
    task = parts[0].task
    if any(p.task != task for p in parts):
        raise DataError("union parts must share one task")
    out_dir = _round_dir(out_root, task, round_id).resolve()
    out_dir.mkdir(parents=True, exist_ok=True)
    records: list[Record] = []
    part_paths: list[str] = []
    for part in parts:
        part_paths.append(Path(os.path.relpath(part.path, out_dir)).as_posix())
        for rec in part.records:
            rel = Path(os.path.relpath(part.resolve(rec), out_dir)).as_posix()
            records.append(Record(rel, rec.label, rec.seed, rec.sha256,
                                  rec.round, rec.recipe))
    manifest = Manifest(task, round_id, __version__, None, records, part_paths)
    manifest.save(out_dir)
    return manifest


#: seed-split ordinals of the named curriculum sets, in emission order
_CURRICULUM_SETS = ("a1", "c1", "d1a1", "d2a2", "d3a3")


def emit_curriculum(out_root, master_seed: int, a1_count: int = 8000,
                    d_ratio: float = 1.0,
                    c1_count: Optional[int] = None) -> dict[str, Manifest]:
    """The whole-image symmetry ladder.

    a1 and c1 are fresh draws; d1a1 = D1(a1); a2 unions a1 with d1a1;
    d2a2 = D2(a2); a3 unions a2 with d2a2; d3a3 = D3(a3).  Deliberate
    set sizes default to their source's size (d_ratio 1.0).
    """
    seeds = {name: sample_seed(master_seed, k)
             for k, name in enumerate(_CURRICULUM_SETS)}
    task = "symmetry_global"
    out: dict[str, Manifest] = {}
    out["a1"] = emit_round(task, "a1", a1_count, seeds["a1"], out_root)
    out["c1"] = emit_round(task, "c1",
                           a1_count if c1_count is None else c1_count,
                           seeds["c1"], out_root)
    out["d1a1"] = derive_round(out["a1"], "d1", "d1a1",
                               max(2, int(round(a1_count * d_ratio))),
                               seeds["d1a1"], out_root)
    out["a2"] = union_manifest([out["a1"], out["d1a1"]], "a2", out_root)
    out["d2a2"] = derive_round(out["a2"], "d2", "d2a2",
                               max(2, int(round(len(out["a2"].records) * d_ratio))),
                               seeds["d2a2"], out_root)
    out["a3"] = union_manifest([out["a2"], out["d2a2"]], "a3", out_root)
    out["d3a3"] = derive_round(out["a3"], "d3", "d3a3",
                               max(2, int(round(len(out["a3"].records) * d_ratio))),
                               seeds["d3a3"], out_root)
    return out


# ---------------------------------------------------------------------------
# Verification.


def regenerate(manifest: Manifest, rec: Record) -> np.ndarray:
    """Rebuild a record's pixels.

    Derived records re-apply their operator to the stored source file
    with the recorded stream; everything else regenerates from the
    (task, round, seed, label) tuple alone.
    """
    recipe = rec.recipe or {}
    op = recipe.get("op")
    if op in _DERIVED_OPS and "source_path" in recipe:
        src_file = manifest.directory.resolve() / PurePosixPath(recipe["source_path"])
        src = Sample(load_png(src_file), int(recipe["source_label"]),
                     manifest.task, str(recipe.get("source_round", "")),
                     int(recipe.get("source_seed", -1)))
        return _DERIVED_OPS[op](src, make_rng(rec.seed), rec.label).image
    rd = get_round(manifest.task, rec.round)
    return rd.gen(make_rng(rec.seed), rec.label).image


@dataclass
class VerifyReport:
    manifest: str
    total: int
    oracle_checked: int = 0
    regen_skipped: int = 0  # records with no seed-only rebuild (face photos)
    missing: list = field(default_factory=list)
    digest_mismatches: list = field(default_factory=list)
    oracle_disagreements: list = field(default_factory=list)
    regen_mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.missing or self.digest_mismatches
                    or self.oracle_disagreements or self.regen_mismatches)

    @property
    def agreement(self) -> float:
        """Generator/oracle agreement over the checked records, percent."""
        if not self.oracle_checked:
            return 100.0
        good = self.oracle_checked - len(self.oracle_disagreements)
        return 100.0 * good / self.oracle_checked

    def summary(self) -> str:
        state = "OK" if self.ok else "FAIL"
        return (f"{state} {self.manifest}: {self.total} records, "
                f"oracle agreement {self.agreement:.2f}% "
                f"({self.oracle_checked} checked), "
                f"{len(self.missing)} missing, "
                f"{len(self.digest_mismatches)} digest mismatches, "
                f"{len(self.regen_mismatches)} regen mismatches")


def verify_manifest(manifest: Manifest, regen: bool = False,
                    dump_dir=None) -> VerifyReport:
    """Check files, digests, and label/oracle agreement for every record.

    With regen=True each record is also rebuilt from its seed (derived
    records from their source file) and compared digest against digest.
    Disagreeing images are copied into dump_dir for inspection.
    """
    report = VerifyReport(str(manifest.path), len(manifest.records))
    dump = Path(dump_dir) if dump_dir is not None else None
    for i, rec in enumerate(manifest.records):
        path = manifest.resolve(rec)
        if not path.is_file():
            report.missing.append(rec.path)
            continue
        img = load_png(path)
        if image_digest(img) != rec.sha256:
            report.digest_mismatches.append(rec.path)
            continue
        try:
            oracle = get_round(manifest.task, rec.round).oracle
        except DataError:
            oracle = None  # no registered oracle for this task/round
        if oracle is not None:
            report.oracle_checked += 1
            try:
                verdict = oracle(img)
                agreed = verdict.label == rec.label
            except OracleError:
                agreed = False
            if not agreed:
                report.oracle_disagreements.append(rec.path)
                if dump is not None:
                    save_png(img, dump / f"{manifest.round}_{i:06d}_label{rec.label}.png")
        if regen:
            try:
                rebuilt = regenerate(manifest, rec)
            except DataError:
                report.regen_skipped += 1
                continue
            if image_digest(rebuilt) != rec.sha256:
                report.regen_mismatches.append(rec.path)
    return report


# ---------------------------------------------------------------------------
# Metrics.  Class 0 (concept holds) is the positive class throughout.


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return 100.0 * (self.tp + self.tn) / self.total

    @property
    def error_rate(self) -> float:
        return 100.0 - self.accuracy

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return 100.0 * self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return 100.0 * self.tp / denom if denom else 0.0

    @property
    def flags(self) -> list[str]:
        """Degenerate denominators: the 0.0 above is a convention, not a
        measurement, so it is flagged."""
        out = []
        if self.tp + self.fp == 0:
            out.append("precision_degenerate")
        if self.tp + self.fn == 0:
            out.append("recall_degenerate")
        return out

    def summary(self) -> str:
        line = (f"acc {self.accuracy:.2f}%  er {self.error_rate:.2f}%  "
                f"precision {self.precision:.2f}%  recall {self.recall:.2f}%  "
                f"(tp {self.tp} fp {self.fp} tn {self.tn} fn {self.fn})")
        if self.flags:
            line += "  flags: " + ",".join(self.flags)
        return line


def evaluate(predictions: Mapping[str, int], manifest: Manifest) -> MetricsReport:
    """Score per-sample class predictions keyed by record path.

    The prediction set must cover the manifest exactly; order never
    matters because records are matched by path.
    """
    if not manifest.records:
        raise EvaluationError("cannot evaluate an empty manifest")
    want = {r.path for r in manifest.records}
    got = set(predictions)
    if want != got:
        miss, extra = sorted(want - got), sorted(got - want)
        raise EvaluationError(
            f"predictions do not cover the manifest: {len(miss)} missing "
            f"(e.g. {miss[:3]}), {len(extra)} extra (e.g. {extra[:3]})")
    tp = fp = tn = fn = 0
    for rec in manifest.records:
        pred = int(predictions[rec.path])
        if pred not in (0, 1):
            raise EvaluationError(f"prediction for {rec.path} must be 0 or 1, got {pred}")
        if rec.label == 0:
            if pred == 0:
                tp += 1
            else:
                fn += 1
        else:
            if pred == 0:
                fp += 1
            else:
                tn += 1
    return MetricsReport(tp, fp, tn, fn)


def read_predictions(path) -> dict[str, int]:
    """CSV rows of `path,class`; a non-numeric second field in the first
    row is treated as a header."""
    out: dict[str, int] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise EvaluationError(f"prediction line {lineno + 1} needs `path,class`")
            key, value = row[0].strip(), row[1].strip()
            if lineno == 0 and not value.lstrip("-").isdigit():
                continue
            if key in out:
                raise EvaluationError(f"duplicate prediction for {key}")
            try:
                out[key] = int(value)
            except ValueError:
                raise EvaluationError(
                    f"bad class value {value!r} on line {lineno + 1}") from None
    return out


# ---------------------------------------------------------------------------
# Learning curves.


@dataclass(frozen=True)
class CurvePoint:
    size: int
    accuracy: float  # seed-median hold-out accuracy, percent; NaN if failed
    per_seed: tuple
    failed: bool = False


def learning_curve(sizes: Sequence[int],
                   run_point: Callable[[int, int], float],
                   seeds: Sequence[int] = (0, 1, 2)) -> list[CurvePoint]:
    """Median hold-out accuracy of run_point(train_size, seed) per size.

    Divergent runs (TrainingError) are kept as NaN entries rather than
    dropped silently; a point with no surviving seed is marked failed.
    """
    points: list[CurvePoint] = []
    for size in sizes:
        if int(size) <= 0:
            raise DataError(f"train size must be positive, got {size}")
        accs: list[float] = []
        for seed in seeds:
            try:
                accs.append(float(run_point(int(size), int(seed))))
            except TrainingError:
                accs.append(float("nan"))
        good = [a for a in accs if a == a]
        median = statistics.median(good) if good else float("nan")
        points.append(CurvePoint(int(size), median, tuple(accs), not good))
    return points


def csv_export(obj, path) -> Path:
    """Write a MetricsReport or a curve (list of CurvePoint) as CSV.

    Values are written at full float precision so a round-trip parse
    recovers them exactly; rounding belongs to presentation.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, MetricsReport):
        rows = [("tp", "fp", "tn", "fn", "accuracy", "precision", "recall",
                 "error_rate", "flags"),
                (obj.tp, obj.fp, obj.tn, obj.fn, obj.accuracy, obj.precision,
                 obj.recall, obj.error_rate, ";".join(obj.flags))]
    elif isinstance(obj, (list, tuple)) and all(isinstance(p, CurvePoint) for p in obj):
        rows = [("size", "accuracy", "per_seed", "failed")]
        rows += [(p.size, p.accuracy, ";".join(repr(a) for a in p.per_seed),
                  int(p.failed)) for p in obj]
    else:
        raise DataError(f"cannot export {type(obj).__name__} as CSV")
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    return path
