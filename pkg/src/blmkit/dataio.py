"""Dataset files, splits and statistics.

Datasets are JSON-lines, UTF-8: a header line carrying the format version
and dataset metadata, then one record per line.  Both puzzle instances and
sentence banks share the container (the header's ``kind`` field tells them
apart).  Writes are canonical (sorted keys, fixed separators), so writing
the same data twice yields byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .core import BlmError, BlmInstance, ChunkSpec, Sentence
from .generate import BankSentence
from .rng import shuffled, substream

DATASET_FORMAT = "blm-dataset"
DATASET_VERSION = 1


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":"))


def sentence_to_dict(s: Sentence) -> dict:
    return {
        "text": s.text,
        "pattern": s.pattern,
        "chunks": [
            {"role": spec.role, "slot": spec.slot,
             "features": {k: v for k, v in spec.features}, "span": span}
            for spec, span in s.chunks
        ],
    }


def sentence_from_dict(d: dict) -> Sentence:
    chunks = tuple(
        (ChunkSpec(c["role"], tuple(sorted(c["features"].items())), c["slot"]),
         c["span"])
        for c in d["chunks"]
    )
    return Sentence(text=d["text"], chunks=chunks, pattern=d["pattern"])


def instance_to_dict(inst: BlmInstance) -> dict:
    return {
        "id": inst.instance_id,
        "task": inst.task,
        "language": inst.language,
        "variation": inst.variation,
        "seed_id": inst.seed_id,
        "correct_index": inst.correct_index,
        "context": [sentence_to_dict(s) for s in inst.context],
        "answers": [{"label": lab, "sentence": sentence_to_dict(s)}
                    for s, lab in inst.answers],
    }


def instance_from_dict(d: dict) -> BlmInstance:
    return BlmInstance(
        task=d["task"],
        language=d["language"],
        variation=d["variation"],
        context=tuple(sentence_from_dict(s) for s in d["context"]),
        answers=tuple((sentence_from_dict(a["sentence"]), a["label"])
                      for a in d["answers"]),
        correct_index=d["correct_index"],
        seed_id=d["seed_id"],
        instance_id=d["id"],
    )


def write_dataset(items, path):
    """Write instances or bank sentences; lossless, byte-stable."""
    items = list(items)
    kind = "bank" if items and isinstance(items[0], BankSentence) else "instances"
    header = {"format": DATASET_FORMAT, "version": DATASET_VERSION,
              "kind": kind, "count": len(items)}
    if kind == "instances" and items:
        header["task"] = items[0].task
        header["language"] = items[0].language
        header["variation"] = items[0].variation
    lines = [_dumps(header)]
    for item in items:
        if kind == "bank":
            lines.append(_dumps({"id": item.sid,
                                 "sentence": sentence_to_dict(item.sentence)}))
        else:
            lines.append(_dumps(instance_to_dict(item)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_dataset(path):
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise BlmError(f"{path}: empty file, no header")
    try:
        header = json.loads(raw[0])
    except json.JSONDecodeError as exc:
        raise BlmError(f"{path}: line 1: malformed header ({exc})") from exc
    if header.get("format") != DATASET_FORMAT:
        raise BlmError(f"{path}: not a dataset file (format={header.get('format')!r})")
    if header.get("version") != DATASET_VERSION:
        raise BlmError(
            f"{path}: unsupported format version {header.get('version')!r}, "
            f"this toolkit reads version {DATASET_VERSION}"
        )
    kind = header.get("kind", "instances")
    items = []
    for lineno, line in enumerate(raw[1:], start=2):
        if not line:
            continue
        try:
            record = json.loads(line)
            if kind == "bank":
                items.append(BankSentence(sid=record["id"],
                                          sentence=sentence_from_dict(record["sentence"])))
            else:
                items.append(instance_from_dict(record))
        except (json.JSONDecodeError, KeyError, TypeError, BlmError) as exc:
            raise BlmError(f"{path}: line {lineno}: malformed record ({exc})") from exc
    if len(items) != header.get("count"):
        raise BlmError(
            f"{path}: header count {header.get('count')} != {len(items)} records "
            "(truncated file?)"
        )
    return items


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """Two-stage split: hold out test first, then sample the train pool and
    carve the dev set out of the sample.

    With the defaults this is the 90:10 protocol with a 2000-instance train
    sample and 20% development carve-out.  ``stratify_by_pattern`` applies
    the same arithmetic per sentence pattern (used for the sentence banks).
    """

    train_fraction: float = 0.9
    dev_fraction: float = 0.2
    train_sample_size: int | None = 2000
    rng_seed: int = 0
    stratify_by_pattern: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise BlmError("train_fraction must be in (0, 1)")
        if not 0.0 < self.dev_fraction < 1.0:
            raise BlmError("dev_fraction must be in (0, 1)")


def _floor_fraction(n: int, fraction: float) -> int:
    # guard against float dust around exact integers (e.g. 4780 * 0.1)
    return math.floor(round(n * fraction, 9))


def _split_group(items, spec: SplitSpec, stream):
    order = shuffled(stream, items)
    n = len(order)
    test_count = _floor_fraction(n, 1.0 - spec.train_fraction)
    test = order[:test_count]
    pool = order[test_count:]
    sample_size = spec.train_sample_size if spec.train_sample_size is not None else len(pool)
    if sample_size > len(pool):
        raise BlmError(
            f"train sample size {sample_size} exceeds the available pool "
            f"({len(pool)} of {n} after holding out {test_count} for test)"
        )
    sample = pool[:sample_size]
    dev_count = _floor_fraction(sample_size, spec.dev_fraction)
    dev = sample[:dev_count]
    train = sample[dev_count:]
    return train, dev, test


def _pattern_of_item(item):
    if isinstance(item, BankSentence):
        return item.pattern
    return item.context[0].pattern


def split(items, spec: SplitSpec):
    """(train, dev, test); deterministic per seed, disjoint by construction."""
    items = list(items)
    if not spec.stratify_by_pattern:
        return _split_group(items, spec, substream(spec.rng_seed, "split"))
    groups = {}
    for item in items:
        groups.setdefault(_pattern_of_item(item), []).append(item)
    train, dev, test = [], [], []
    for pattern in sorted(groups):
        tr, dv, te = _split_group(groups[pattern], spec,
                                  substream(spec.rng_seed, "split", pattern))
        train += tr
        dev += dv
        test += te
    return train, dev, test


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def stats(items) -> dict:
    """Counts per task/language/variation, pattern coverage and label
    availability; all-zero structure for empty input."""
    report = {
        "total": 0,
        "by_task": {},
        "by_language": {},
        "by_variation": {},
        "patterns": {},
        "labels": {},
    }
    for item in items:
        report["total"] += 1
        if isinstance(item, BankSentence):
            report["patterns"][item.pattern] = report["patterns"].get(item.pattern, 0) + 1
            continue
        report["by_task"][item.task] = report["by_task"].get(item.task, 0) + 1
        report["by_language"][item.language] = report["by_language"].get(item.language, 0) + 1
        report["by_variation"][item.variation] = report["by_variation"].get(item.variation, 0) + 1
        for sentence in item.context:
            report["patterns"][sentence.pattern] = report["patterns"].get(sentence.pattern, 0) + 1
        for _, label in item.answers:
            report["labels"][label] = report["labels"].get(label, 0) + 1
    return report


def stats_table(report: dict) -> str:
    lines = [f"total\t{report['total']}"]
    for section in ("by_task", "by_language", "by_variation", "labels", "patterns"):
        for key in sorted(report[section]):
            lines.append(f"{section}.{key}\t{report[section][key]}")
    return "\n".join(lines) + "\n"
