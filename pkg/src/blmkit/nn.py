"""Numeric kernels with hand-derived gradients, shared by the solvers.

Everything is plain numpy so gradients can be validated against central
finite differences and training is bitwise-reproducible in single-threaded
mode.  The transposed convolution is implemented as the exact adjoint of
the valid convolution (same im2col/col2im pair), which the test suite
verifies via inner-product identities.
"""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import BlmError


# ---------------------------------------------------------------------------
# Training configuration
# ---------------------------------------------------------------------------

def default_threads() -> int:
    value = os.environ.get("BLM_THREADS", "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 100
    epochs: int = 120
    rng_seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    threads: int = 0  # 0: honor BLM_THREADS (default 1, bitwise reproducible)
    dtype: str = "float32"

    def __post_init__(self):
        if self.learning_rate < 0 or self.batch_size < 1 or self.epochs < 0:
            raise BlmError("training config values must be positive")

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    def resolved_threads(self) -> int:
        return self.threads if self.threads >= 1 else default_threads()

    def to_dict(self):
        return {
            "learning_rate": self.learning_rate, "batch_size": self.batch_size,
            "epochs": self.epochs, "rng_seed": self.rng_seed,
            "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "dtype": self.dtype,
        }


# ---------------------------------------------------------------------------
# Initialization and optimizer
# ---------------------------------------------------------------------------

def glorot(rng, fan_in: int, fan_out: int, shape, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return (rng.uniform(-limit, limit, size=shape)).astype(dtype)


class Adam:
    """Adaptive-moment gradient descent with bias correction."""

    def __init__(self, params: dict, config: TrainConfig):
        self.config = config
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict):
        c = self.config
        self.t += 1
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        for key, g in grads.items():
            p = params[key]
            m = self.m[key]
            v = self.v[key]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * np.square(g)
            p -= c.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + c.eps)


# ---------------------------------------------------------------------------
# Dense / activation pieces
# ---------------------------------------------------------------------------

def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(dout, x):
    return dout * (x > 0)


def linear(x, W, b):
    return x @ W + b


def linear_backward(dout, x, W):
    dW = x.T @ dout
    db = dout.sum(axis=0)
    dx = dout @ W.T
    return dx, dW, db


# ---------------------------------------------------------------------------
# Convolution (valid, stride 1) and its exact adjoint
# ---------------------------------------------------------------------------

def im2col(x: np.ndarray, k: int):
    """x: (B, C, H, W) -> (B, C*k*k, P) patch matrix, P = (H-k+1)*(W-k+1)."""
    from numpy.lib.stride_tricks import sliding_window_view

    win = sliding_window_view(x, (k, k), axis=(2, 3))  # (B, C, h, w, k, k)
    h, w = win.shape[2], win.shape[3]
    cols = win.transpose(0, 1, 4, 5, 2, 3).reshape(x.shape[0], -1, h * w)
    return np.ascontiguousarray(cols), (h, w)


def col2im(cols: np.ndarray, x_shape, k: int):
    """Exact adjoint of im2col: scatter-add patch columns back."""
    B, C, H, W = x_shape
    h, w = H - k + 1, W - k + 1
    x = np.zeros(x_shape, dtype=cols.dtype)
    cols6 = cols.reshape(B, C, k, k, h, w)
    for di in range(k):
        for dj in range(k):
            x[:, :, di:di + h, dj:dj + w] += cols6[:, :, di, dj]
    return x


def conv_forward(x, K, b):
    """x: (B, Cin, H, W), K: (Cout, Cin, k, k) -> (B, Cout, h, w)."""
    k = K.shape[-1]
    cols, (h, w) = im2col(x, k)
    Kr = K.reshape(K.shape[0], -1)
    out = np.matmul(Kr, cols).reshape(x.shape[0], K.shape[0], h, w)
    out += b[None, :, None, None]
    return out, cols


def conv_backward(dout, x_shape, cols, K):
    B = dout.shape[0]
    k = K.shape[-1]
    Kr = K.reshape(K.shape[0], -1)
    dout_r = dout.reshape(B, K.shape[0], -1)
    dK = np.einsum("bop,bcp->oc", dout_r, cols).reshape(K.shape)
    db = dout.sum(axis=(0, 2, 3))
    dcols = np.matmul(Kr.T, dout_r)
    dx = col2im(dcols, x_shape, k)
    return dx, dK, db


def conv_transpose_forward(y, K, b, out_hw):
    """Adjoint of conv_forward w.r.t. its input.

    y: (B, Cout, h, w), K: (Cout, Cres, k, k) -> (B, Cres, H, W) with
    H = h+k-1, W = w+k-1 (== out_hw).
    """
    B = y.shape[0]
    k = K.shape[-1]
    Kr = K.reshape(K.shape[0], -1)
    y_r = y.reshape(B, K.shape[0], -1)
    cols = np.matmul(Kr.T, y_r)
    out = col2im(cols, (B, K.shape[1], out_hw[0], out_hw[1]), k)
    out += b[None, :, None, None]
    return out


def conv_transpose_backward(dout, y, K):
    B = y.shape[0]
    k = K.shape[-1]
    cols_g, _ = im2col(dout, k)
    Kr = K.reshape(K.shape[0], -1)
    y_r = y.reshape(B, K.shape[0], -1)
    dy = np.matmul(Kr, cols_g).reshape(y.shape)
    dK = np.einsum("bop,bcp->oc", y_r, cols_g).reshape(K.shape)
    db = dout.sum(axis=(0, 2, 3))
    return dy, dK, db


# ---------------------------------------------------------------------------
# Shared scoring / loss pieces
# ---------------------------------------------------------------------------

def score(e_i: np.ndarray, e_pred: np.ndarray) -> float:
    """Dot product between a candidate embedding and a predicted one."""
    e_i = np.asarray(e_i)
    e_pred = np.asarray(e_pred)
    if e_i.shape != e_pred.shape:
        raise BlmError(f"score: dim mismatch {e_i.shape} vs {e_pred.shape}")
    return float(np.dot(e_i, e_pred))


def margin_loss(e_pred, answers, correct_index: int):
    """Sum of hinges against every wrong candidate (selection loss)."""
    answers = np.asarray(answers)
    if answers.ndim != 2 or len(answers) < 2:
        raise BlmError("margin_loss needs at least two candidate embeddings")
    if not 0 <= correct_index < len(answers):
        raise BlmError(f"correct index {correct_index} out of range")
    scores = answers @ np.asarray(e_pred)
    margins = 1.0 - scores[correct_index] + scores
    margins[correct_index] = 0.0
    return float(np.maximum(margins, 0.0).sum())


def margin_loss_grad(e_pred, answers, correct_index: int):
    """(loss, d loss / d e_pred); non-finite scores propagate to the loss."""
    answers = np.asarray(answers)
    scores = answers @ np.asarray(e_pred)
    margins = 1.0 - scores[correct_index] + scores
    margins[correct_index] = 0.0
    active = margins > 0.0
    loss = float(np.maximum(margins, 0.0).sum())
    dpred = answers[active].sum(axis=0) - active.sum() * answers[correct_index]
    return loss, dpred


def max_margin(e_hat, e_pos, negatives):
    """Single hinge with averaged negative scores."""
    negatives = np.asarray(negatives)
    if negatives.ndim != 2 or len(negatives) < 1:
        raise BlmError("max_margin needs at least one negative embedding")
    neg_term = float(np.mean(negatives @ np.asarray(e_hat)))
    return max(0.0, 1.0 - score(e_hat, e_pos) + neg_term)


def max_margin_grad(e_hat, e_pos, negatives):
    negatives = np.asarray(negatives)
    neg_term = float(np.mean(negatives @ np.asarray(e_hat)))
    margin = 1.0 - float(np.dot(e_hat, e_pos)) + neg_term
    if margin <= 0.0:
        return 0.0, np.zeros_like(e_hat)
    return margin, negatives.mean(axis=0) - e_pos


def kl_to_standard_normal(mu, logvar) -> float:
    """Closed-form KL(N(mu, diag exp(logvar)) || N(0, I)); never negative."""
    mu = np.asarray(mu)
    logvar = np.asarray(logvar)
    return float(-0.5 * np.sum(1.0 + logvar - np.square(mu) - np.exp(logvar)))


def kl_grad(mu, logvar):
    return np.asarray(mu).copy(), 0.5 * (np.exp(logvar) - 1.0)


# ---------------------------------------------------------------------------
# Optional batch-parallel gradient computation
# ---------------------------------------------------------------------------

def sharded_loss_grads(fn, indices, threads: int):
    """Run fn(index_shard) -> (loss_sum, grads dict) over shards and sum.

    With threads == 1 this is plain sequential evaluation (bitwise
    reproducible); more threads shard the batch and sum the results, which
    changes floating-point summation order.
    """
    if threads <= 1 or len(indices) < 2 * threads:
        return fn(indices)
    shards = np.array_split(np.asarray(indices), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(fn, shards))
    loss = sum(r[0] for r in results)
    grads = {k: sum(r[1][k] for r in results) for k in results[0][1]}
    return loss, grads


# ---------------------------------------------------------------------------
# Checkpoints: JSON header + float32 little-endian blob
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"BLMC"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, kind: str, arrays: dict, meta: dict):
    names = list(arrays)
    header = {
        "format": "blm-checkpoint",
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "shapes": [[name, list(arrays[name].shape)] for name in names],
        "meta": meta,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in names:
            fh.write(np.ascontiguousarray(arrays[name], dtype="<f4").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CHECKPOINT_MAGIC:
        raise BlmError(f"{path}: bad checkpoint magic {data[:4]!r}")
    (hlen,) = struct.unpack_from("<I", data, 4)
    header = json.loads(data[8:8 + hlen].decode("utf-8"))
    if header.get("version") != CHECKPOINT_VERSION:
        raise BlmError(f"{path}: unsupported checkpoint version")
    offset = 8 + hlen
    arrays = {}
    for name, shape in header["shapes"]:
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data[offset:offset + 4 * count], dtype="<f4")
        if arr.size != count:
            raise BlmError(f"{path}: truncated blob at array {name!r}")
        arrays[name] = arr.reshape(shape).copy()
        offset += 4 * count
    return header["kind"], arrays, header["meta"]
