"""Fill-mask candidate generation into the toolkit's audit-file format.

Each lexicon slot's masked contexts (indefinite, plus a definite-marked
variant when provided) are queried for top-k candidates; candidates from
both contexts are pooled by best rank, written with accepted=0 so a human
review pass decides what enters the lexicon.
"""

from __future__ import annotations

import hashlib
import json


class StubMaskedLM:
    """Deterministic test double: scores a small vocabulary by a stable
    hash of (context, word); strictly rank-ordered output."""

    VOCAB = (
        "table", "window", "garden", "river", "marble", "lantern",
        "basket", "mirror", "ladder", "barrel", "ribbon", "kettle",
    )

    def __init__(self):
        self.identity = "stub:mlm"

    def scored_candidates(self, context: str, k: int):
        scored = []
        for word in self.VOCAB:
            digest = hashlib.sha256(f"{context}|{word}".encode()).digest()
            score = int.from_bytes(digest[:4], "little") / 2**32
            scored.append((word, score))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored[:k]


class TransformersMaskedLM:
    def __init__(self, model_id: str):
        from transformers import pipeline

        self.pipe = pipeline("fill-mask", model=model_id)
        if self.pipe.tokenizer.mask_token is None:
            raise ValueError(f"model {model_id!r} has no mask token")
        self.mask_token = self.pipe.tokenizer.mask_token
        self.identity = f"hf:{model_id}"

    def scored_candidates(self, context: str, k: int):
        text = context.replace("[MASK]", self.mask_token)
        results = self.pipe(text, top_k=k)
        return [(r["token_str"].strip(), float(r["score"])) for r in results]


def load_masked_lm(model_id: str):
    if model_id == "stub:mlm":
        return StubMaskedLM()
    return TransformersMaskedLM(model_id)


def read_slot_requests(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh.read().splitlines() if line]


def fill_mask_audit(slots_path, model_id: str, k: int, audit_path) -> int:
    """Write top-k candidates per slot in audit format; returns row count."""
    requests = read_slot_requests(slots_path)
    model = load_masked_lm(model_id)
    lines = [f"# fillmask model={model.identity} k={k}"]
    rows = 0
    for request in requests:
        slot = request["slot"]
        contexts = request.get("contexts") or [
            {"tag": "indef", "text": request["context"]}]
        pooled = {}
        for ctx in contexts:
            lines.append(f"# context slot={slot} tag={ctx['tag']}: {ctx['text']}")
            for rank, (word, score) in enumerate(
                    model.scored_candidates(ctx["text"], k)):
                best = pooled.get(word)
                if best is None or score > best[0]:
                    pooled[word] = (score, ctx["tag"])
        ranked = sorted(pooled.items(), key=lambda kv: (-kv[1][0], kv[0]))[:k]
        for word, (score, tag) in ranked:
            lines.append(f"# candidate slot={slot} word={word} score={score:.6f} from={tag}")
            lines.append(f"{slot}\t{word}\t0")
            rows += 1
    with open(audit_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return rows
