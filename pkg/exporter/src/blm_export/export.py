"""Embedding export: sentence files in, BLME files out."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .blme import PROVENANCE_PREFIX, write_blme
from .encoders import load_encoder

import numpy as np


@dataclass
class ExportJob:
    model_id: str
    sentences_path: str
    output_path: str
    batch_size: int = 16


def read_sentences(path):
    """(id, text) pairs from a sentence file.

    Accepts plain JSON-lines records {"id", "text"} or the toolkit's
    dataset/bank containers, whose header carries format "blm-dataset";
    instance sentences get the ids the solvers expect
    ("<instance-id>|ctx<i>" / "<instance-id>|ans<j>").
    """
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line]
    if not lines:
        return []
    first = json.loads(lines[0])
    pairs = []
    if first.get("format") == "blm-dataset":
        kind = first.get("kind", "instances")
        for line in lines[1:]:
            record = json.loads(line)
            if kind == "bank":
                pairs.append((record["id"], record["sentence"]["text"]))
            else:
                iid = record["id"]
                for i, sentence in enumerate(record["context"]):
                    pairs.append((f"{iid}|ctx{i}", sentence["text"]))
                for j, answer in enumerate(record["answers"]):
                    pairs.append((f"{iid}|ans{j}", answer["sentence"]["text"]))
    else:
        for line in lines:
            record = json.loads(line)
            pairs.append((record["id"], record["text"]))
    seen = set()
    for sid, _ in pairs:
        if sid in seen:
            raise ValueError(f"sentence id collision: {sid!r}")
        seen.add(sid)
    return pairs


def export_embeddings(job: ExportJob) -> int:
    pairs = read_sentences(job.sentences_path)
    if not pairs:
        raise ValueError(f"{job.sentences_path}: no sentences to embed")
    encoder = load_encoder(job.model_id, batch_size=job.batch_size)
    texts = [text for _, text in pairs]
    vectors = encoder.encode(texts)
    provenance = (f"{PROVENANCE_PREFIX} model={encoder.identity};layer=last;"
                  f"special_tokens=excluded")
    records = [(provenance, np.zeros(encoder.dim, dtype=np.float32))]
    records += [(sid, vectors[i]) for i, (sid, _) in enumerate(pairs)]
    write_blme(job.output_path, records, dim=encoder.dim)
    return len(pairs)
