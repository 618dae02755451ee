"""Sentence encoders: averaged token embeddings from the final hidden layer.

Models are referenced by identifier string only. "stub:identity[:dim]"
resolves to the deterministic test double (per-token one-hot rows, loud
marker vectors on special tokens so a faulty average is detectable);
anything else loads a transformers model lazily.
"""

from __future__ import annotations

import numpy as np


class IdentityStubEncoder:
    """Test double: token i of a sentence embeds as one-hot e_(i mod dim).

    Special tokens ([CLS]/[SEP]) carry large constant vectors; the averaged
    sentence embedding must exclude them, so it equals the token-count
    normalized sum of the one-hot rows.
    """

    SPECIAL_VALUE = 100.0

    def __init__(self, dim: int = 16):
        self.dim = dim
        self.identity = f"stub:identity:{dim}"

    def token_rows(self, text: str):
        """(vectors, special_mask) including [CLS]/[SEP] wrappers."""
        words = text.split()
        n = len(words) + 2
        rows = np.zeros((n, self.dim), dtype=np.float32)
        special = np.zeros(n, dtype=bool)
        rows[0] = self.SPECIAL_VALUE
        special[0] = True
        for i, _ in enumerate(words):
            rows[i + 1, i % self.dim] = 1.0
        rows[-1] = self.SPECIAL_VALUE
        special[-1] = True
        return rows, special

    def encode(self, texts):
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for b, text in enumerate(texts):
            rows, special = self.token_rows(text)
            kept = rows[~special]
            out[b] = kept.mean(axis=0) if len(kept) else 0.0
        return out


class TransformersEncoder:
    """Averaged final-hidden-layer token embeddings from a pretrained model;
    padding and special tokens are excluded from the average."""

    def __init__(self, model_id: str, batch_size: int = 16):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModel.from_pretrained(model_id)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)
        self.batch_size = batch_size
        self.identity = f"hf:{model_id}"

    def encode(self, texts):
        torch = self._torch
        chunks = []
        with torch.no_grad():
            for start in range(0, len(texts), self.batch_size):
                batch = list(texts[start:start + self.batch_size])
                enc = self.tokenizer(batch, return_tensors="pt", padding=True,
                                     truncation=True)
                hidden = self.model(**enc).last_hidden_state
                mask = enc["attention_mask"].clone()
                if "special_tokens_mask" in enc:
                    mask = mask * (1 - enc["special_tokens_mask"])
                else:
                    special = [self.tokenizer.get_special_tokens_mask(
                        ids, already_has_special_tokens=True)
                        for ids in enc["input_ids"].tolist()]
                    mask = mask * (1 - torch.tensor(special))
                mask = mask.unsqueeze(-1).to(hidden.dtype)
                summed = (hidden * mask).sum(dim=1)
                counts = mask.sum(dim=1).clamp(min=1.0)
                chunks.append((summed / counts).cpu().numpy().astype(np.float32))
        return np.concatenate(chunks, axis=0)


def load_encoder(model_id: str, batch_size: int = 16):
    if model_id.startswith("stub:identity"):
        parts = model_id.split(":")
        dim = int(parts[2]) if len(parts) > 2 else 16
        return IdentityStubEncoder(dim)
    return TransformersEncoder(model_id, batch_size=batch_size)
