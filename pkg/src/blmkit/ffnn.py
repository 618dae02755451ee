"""Baseline solver: compress the 7-sentence context through three dense
layers and rank answer candidates by dot product, trained with the
summed-hinge margin loss.

Layer widths follow the 7d -> 3.5d -> 3.5d -> d compression (d = 768 by
default; configurable so gradient checks can run at toy sizes).  Candidate
embeddings are frozen inputs; only the network parameters are learned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BlmError
from .embedding import EmbeddedInstances
from .nn import (
    Adam,
    TrainConfig,
    glorot,
    linear,
    linear_backward,
    margin_loss_grad,
    relu,
    relu_backward,
    save_checkpoint,
    sharded_loss_grads,
)
from .rng import shuffled, substream


@dataclass
class FfnnConfig:
    dim: int = 768

    @property
    def input_dim(self) -> int:
        return 7 * self.dim

    @property
    def hidden_dim(self) -> int:
        if (7 * self.dim) % 2 != 0:
            raise BlmError("embedding dim must be even for the 3.5x hidden width")
        return (7 * self.dim) // 2


def init_ffnn(config: FfnnConfig, rng_seed: int, dtype=np.float32) -> dict:
    d_in, d_h, d_out = config.input_dim, config.hidden_dim, config.dim
    params = {}
    for name, (fi, fo) in (("W1", (d_in, d_h)), ("W2", (d_h, d_h)), ("W3", (d_h, d_out))):
        params[name] = glorot(substream(rng_seed, "init", name), fi, fo, (fi, fo), dtype)
    params["b1"] = np.zeros(d_h, dtype)
    params["b2"] = np.zeros(d_h, dtype)
    params["b3"] = np.zeros(d_out, dtype)
    return params


def ffnn_forward(params: dict, context: np.ndarray, want_cache: bool = False):
    """context: (7, d) or (B, 7, d) -> predicted answer embedding(s)."""
    context = np.asarray(context)
    single = context.ndim == 2
    if single:
        context = context[None]
    if context.ndim != 3 or context.shape[1] != 7:
        raise BlmError(f"ffnn_forward expects (B, 7, d) context, got {context.shape}")
    if context.shape[2] * 7 != params["W1"].shape[0]:
        raise BlmError(
            f"context dim {context.shape[2]} does not match W1 {params['W1'].shape}"
        )
    x = context.reshape(context.shape[0], -1)
    a1 = linear(x, params["W1"], params["b1"])
    h1 = relu(a1)
    a2 = linear(h1, params["W2"], params["b2"])
    h2 = relu(a2)
    out = linear(h2, params["W3"], params["b3"])
    if single:
        out = out[0]
    if want_cache:
        return out, (x, a1, h1, a2, h2)
    return out


def ffnn_backward(params: dict, cache, dout: np.ndarray) -> dict:
    x, a1, h1, a2, h2 = cache
    dh2, dW3, db3 = linear_backward(dout, h2, params["W3"])
    da2 = relu_backward(dh2, a2)
    dh1, dW2, db2 = linear_backward(da2, h1, params["W2"])
    da1 = relu_backward(dh1, a1)
    _, dW1, db1 = linear_backward(da1, x, params["W1"])
    return {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2, "W3": dW3, "b3": db3}


def batch_loss_grads(params, context, answers, correct, indices):
    """Mean margin loss over the indexed instances plus parameter grads."""
    idx = np.asarray(indices)
    preds, cache = ffnn_forward(params, context[idx], want_cache=True)
    dpred = np.zeros_like(preds)
    total = 0.0
    for row, b in enumerate(idx):
        loss, g = margin_loss_grad(preds[row], answers[b], int(correct[b]))
        total += loss
        dpred[row] = g
    grads = ffnn_backward(params, cache, dpred)
    return total, grads


def predict(params: dict, context: np.ndarray, answers: np.ndarray):
    """(chosen index, scores, tie flag); ties break to the lowest index."""
    e_pred = ffnn_forward(params, context)
    scores = np.asarray(answers) @ e_pred
    best = int(np.argmax(scores))
    tie = bool(np.sum(scores == scores[best]) > 1)
    return best, scores, tie


def evaluate(params: dict, data: EmbeddedInstances):
    preds = ffnn_forward(params, data.context)
    scores = np.einsum("bkd,bd->bk", data.answers.astype(preds.dtype), preds)
    chosen = scores.argmax(axis=1)
    accuracy = float((chosen == data.correct_index).mean()) if len(data) else 0.0
    return chosen, accuracy


def mean_loss(params: dict, data: EmbeddedInstances) -> float:
    if not len(data):
        return 0.0
    preds = ffnn_forward(params, data.context)
    total = 0.0
    for b in range(len(data)):
        loss, _ = margin_loss_grad(preds[b], data.answers[b], int(data.correct_index[b]))
        total += loss
    return total / len(data)


def train_ffnn(train: EmbeddedInstances, dev: EmbeddedInstances | None,
               config: TrainConfig, ffnn_config: FfnnConfig | None = None):
    """Adam on the margin loss for a fixed number of epochs (no early
    stopping); per-epoch train/dev loss and dev accuracy are logged."""
    if ffnn_config is None:
        ffnn_config = FfnnConfig(dim=train.context.shape[2])
    dtype = config.np_dtype
    params = init_ffnn(ffnn_config, config.rng_seed, dtype)
    context = train.context.astype(dtype)
    answers = train.answers.astype(dtype)
    correct = train.correct_index
    optimizer = Adam(params, config)
    threads = config.resolved_threads()
    n = len(train)
    log = []
    for epoch in range(config.epochs):
        order = shuffled(substream(config.rng_seed, "epoch", epoch), range(n))
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]

            def shard(ix):
                return batch_loss_grads(params, context, answers, correct, ix)

            loss, grads = sharded_loss_grads(shard, batch, threads)
            if not np.isfinite(loss):
                raise BlmError(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                )
            scale = 1.0 / len(batch)
            grads = {k: (v * scale).astype(dtype) for k, v in grads.items()}
            optimizer.step(params, grads)
            epoch_loss += loss
        entry = {"epoch": epoch, "train_loss": epoch_loss / max(1, n)}
        if dev is not None and len(dev):
            entry["dev_loss"] = mean_loss(params, dev)
            _, entry["dev_accuracy"] = evaluate(params, dev)
        log.append(entry)
    return params, log


def save_ffnn(path, params: dict, config: TrainConfig, ffnn_config: FfnnConfig,
              provider_id: str = ""):
    meta = {"dim": ffnn_config.dim, "nonlinearity": "relu",
            "train_config": config.to_dict(), "provider": provider_id}
    save_checkpoint(path, "ffnn", params, meta)
