"""Embedding providers, the 32x24 reshape, and the BLME vector container.

The deterministic structural embedder makes the whole pipeline self
contained: each sentence maps to a 768-vector composed of a pattern block
(fixed pseudo-random projection of the chunk-pattern key), per-chunk
lexical blocks (hash-seeded vectors per span+features) and small seeded
noise.  Pretrained-model embeddings enter only through BLME files, whose
byte layout is fixed:

    magic "BLME" | version u16 LE (=1) | dim u32 LE | count u64 LE |
    per record: id-length u16 LE, id UTF-8 bytes, dim x float32 LE
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .core import BlmError, Sentence
from .generate import BankSentence
from .rng import substream

DIM = 768
GRID = (32, 24)
PATTERN_BLOCK = 384  # first half of the vector encodes the chunk pattern
_PROJECTION_SEED = 765432  # global seed of the pattern projection
LEXICAL_SCALE = 0.5
NOISE_SIGMA = 0.01

BLME_MAGIC = b"BLME"
BLME_VERSION = 1
PROVENANCE_PREFIX = "#provenance:"


def to_grid(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    if vec.shape != (DIM,):
        raise BlmError(f"expected a flat {DIM}-vector, got shape {vec.shape}")
    return vec.reshape(GRID)


def to_flat(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid)
    if grid.shape != GRID:
        raise BlmError(f"expected a {GRID[0]}x{GRID[1]} grid, got shape {grid.shape}")
    return grid.reshape(DIM)


def _hash_vector(size: int, *names) -> np.ndarray:
    # unit-norm-in-expectation so margin-1 hinge losses bite at this scale
    return substream(_PROJECTION_SEED, *names).standard_normal(size) / np.sqrt(size)


PATTERN_UNIQUE_SCALE = 1.0
PATTERN_TOKEN_SCALE = 0.2


def pattern_block(pattern: str) -> np.ndarray:
    """Fixed projection of the pattern key.

    Mixes a whole-key component (every pattern gets its own direction, so
    ranking candidates apart is learnable) with a compositional per-token
    component (patterns sharing most of their chunk structure get nearby
    blocks, so minimally different patterns stay hard, as with pretrained
    encoders).
    """
    tokens = pattern.split(" ")
    block = PATTERN_UNIQUE_SCALE * _hash_vector(PATTERN_BLOCK, "pattern", pattern)
    comp = np.zeros(PATTERN_BLOCK)
    for j, token in enumerate(tokens):
        comp += _hash_vector(PATTERN_BLOCK, "pattern-token", j, token)
    return block + PATTERN_TOKEN_SCALE * comp / np.sqrt(len(tokens))


def structural_embed(sentence: Sentence, rng_seed: int) -> np.ndarray:
    """Deterministic 768-d embedding of an annotated sentence.

    Same pattern key => bit-identical pattern block (the noise lives in the
    lexical half only); the lexical half varies with the chunk surfaces;
    noise is a function of (seed, text) so repeated calls are identical.
    """
    if not isinstance(sentence, Sentence) or not sentence.chunks:
        raise BlmError("structural_embed needs a chunk-annotated sentence")
    vec = np.zeros(DIM)
    vec[:PATTERN_BLOCK] = pattern_block(sentence.pattern)
    lexical = np.zeros(DIM - PATTERN_BLOCK)
    for spec, span in sentence.chunks:
        key = span.lower() + "|" + ",".join(f"{k}={v}" for k, v in spec.features)
        lexical += _hash_vector(DIM - PATTERN_BLOCK, "lexical", key)
    lexical *= LEXICAL_SCALE / max(1.0, np.sqrt(len(sentence.chunks)))
    noise = substream(rng_seed, "noise", sentence.text).standard_normal(len(lexical))
    vec[PATTERN_BLOCK:] = lexical + NOISE_SIGMA * noise
    return vec.astype(np.float32)


class StructuralEmbedder:
    """Embedding provider wrapping :func:`structural_embed`."""

    def __init__(self, rng_seed: int = 0):
        self.rng_seed = rng_seed
        self.identity = f"structural:v1:seed={rng_seed}"

    def embed(self, sid: str, sentence: Sentence) -> np.ndarray:
        return structural_embed(sentence, self.rng_seed)


class BlmeProvider:
    """Embedding provider backed by a BLME file (ids must match)."""

    def __init__(self, path):
        records = read_blme(path)
        self.vectors = {}
        provenance = []
        for sid, vec in records:
            if sid.startswith(PROVENANCE_PREFIX):
                provenance.append(sid[len(PROVENANCE_PREFIX):].strip())
            else:
                self.vectors[sid] = vec
        self.provenance = tuple(provenance)
        tag = provenance[0] if provenance else "unknown"
        self.identity = f"blme:{tag}"

    def embed(self, sid: str, sentence: Sentence) -> np.ndarray:
        if sid not in self.vectors:
            raise KeyError(sid)
        vec = self.vectors[sid]
        if vec.shape != (DIM,):
            raise BlmError(
                f"record {sid!r} has dim {vec.shape[0]}, the solvers need {DIM}"
            )
        return vec


# ---------------------------------------------------------------------------
# BLME container
# ---------------------------------------------------------------------------

def write_blme(path, records, dim: int = DIM):
    """records: iterable of (sentence-id, vector). Float32 little-endian."""
    records = list(records)
    with open(path, "wb") as fh:
        fh.write(BLME_MAGIC)
        fh.write(struct.pack("<H", BLME_VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(records)))
        for sid, vec in records:
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise BlmError(f"record {sid!r}: vector shape {arr.shape} != ({dim},)")
            sid_bytes = sid.encode("utf-8")
            if len(sid_bytes) > 0xFFFF:
                raise BlmError(f"record id too long ({len(sid_bytes)} bytes)")
            fh.write(struct.pack("<H", len(sid_bytes)))
            fh.write(sid_bytes)
            fh.write(arr.tobytes())


def read_blme(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != BLME_MAGIC:
        raise BlmError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 18:
        raise BlmError(f"{path}: truncated header")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != BLME_VERSION:
        raise BlmError(f"{path}: unsupported BLME version {version}")
    (dim,) = struct.unpack_from("<I", data, 6)
    (count,) = struct.unpack_from("<Q", data, 10)
    offset = 18
    records = []
    for i in range(count):
        if offset + 2 > len(data):
            raise BlmError(f"{path}: truncated at record {i}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        end = offset + id_len + 4 * dim
        if end > len(data):
            raise BlmError(f"{path}: truncated payload at record {i}")
        sid = data[offset:offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data[offset:offset + 4 * dim], dtype="<f4").copy()
        offset += 4 * dim
        records.append((sid, vec))
    if offset != len(data):
        raise BlmError(f"{path}: {len(data) - offset} trailing bytes after records")
    return records


# ---------------------------------------------------------------------------
# Embedded datasets
# ---------------------------------------------------------------------------

def context_sid(instance_id: str, i: int) -> str:
    return f"{instance_id}|ctx{i}"


def answer_sid(instance_id: str, j: int) -> str:
    return f"{instance_id}|ans{j}"


@dataclass
class EmbeddedInstances:
    """Vectors aligned with a list of instances, one provider throughout."""

    provider_id: str
    ids: list
    context: np.ndarray        # (n, 7, DIM) float32
    answers: np.ndarray        # (n, k, DIM) float32
    correct_index: np.ndarray  # (n,) int
    labels: list               # per instance: tuple of labels
    answer_patterns: list = field(default_factory=list)

    def __len__(self):
        return len(self.ids)


@dataclass
class EmbeddedBank:
    provider_id: str
    ids: list
    vectors: np.ndarray  # (n, DIM) float32
    patterns: list

    def __len__(self):
        return len(self.ids)


def embed_dataset(provider, items) -> "EmbeddedInstances | EmbeddedBank":
    """Map every sentence through one provider; missing ids are an error."""
    items = list(items)
    missing = []
    if items and isinstance(items[0], BankSentence):
        vectors, patterns, ids = [], [], []
        for s in items:
            try:
                vectors.append(provider.embed(s.sid, s.sentence))
            except KeyError:
                missing.append(s.sid)
                continue
            patterns.append(s.pattern)
            ids.append(s.sid)
        if missing:
            raise BlmError(
                f"provider {provider.identity} is missing {len(missing)} "
                f"sentence ids: {', '.join(missing[:5])}..."
            )
        arr = np.stack(vectors).astype(np.float32) if vectors else np.zeros((0, DIM), np.float32)
        return EmbeddedBank(provider_id=provider.identity, ids=ids,
                            vectors=arr, patterns=patterns)
    n = len(items)
    k = len(items[0].answers) if n else 0
    context = np.zeros((n, 7, DIM), np.float32)
    answers = np.zeros((n, k, DIM), np.float32)
    correct = np.zeros(n, dtype=np.int64)
    labels, ids, patterns = [], [], []
    for a, inst in enumerate(items):
        try:
            for i, s in enumerate(inst.context):
                context[a, i] = provider.embed(context_sid(inst.instance_id, i), s)
            for j, (s, _) in enumerate(inst.answers):
                answers[a, j] = provider.embed(answer_sid(inst.instance_id, j), s)
        except KeyError as exc:
            missing.append(str(exc))
            continue
        correct[a] = inst.correct_index
        labels.append(inst.labels())
        patterns.append(tuple(s.pattern for s, _ in inst.answers))
        ids.append(inst.instance_id)
    if missing:
        raise BlmError(
            f"provider {provider.identity} is missing ids for "
            f"{len(missing)} sentences: {', '.join(missing[:5])}..."
        )
    return EmbeddedInstances(provider_id=provider.identity, ids=ids,
                             context=context, answers=answers,
                             correct_index=correct, labels=labels,
                             answer_patterns=patterns)


def save_embedded(embedded, path, provenance: str = ""):
    """Persist an embedded dataset as a BLME file with structured ids."""
    records = []
    tag = provenance or embedded.provider_id
    records.append((PROVENANCE_PREFIX + " " + tag, np.zeros(DIM, np.float32)))
    if isinstance(embedded, EmbeddedBank):
        for sid, vec in zip(embedded.ids, embedded.vectors):
            records.append((sid, vec))
    else:
        for a, iid in enumerate(embedded.ids):
            for i in range(embedded.context.shape[1]):
                records.append((context_sid(iid, i), embedded.context[a, i]))
            for j in range(embedded.answers.shape[1]):
                records.append((answer_sid(iid, j), embedded.answers[a, j]))
    write_blme(path, records)


def merge_check(*embedded):
    """Embedded datasets may only be combined under one provider."""
    ids = {e.provider_id for e in embedded}
    if len(ids) > 1:
        raise BlmError(
            "mixed-provider inputs: an embedded dataset must come from a "
            f"single provider, got {sorted(ids)}"
        )
