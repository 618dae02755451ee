"""Variational encoder-decoder solvers.

The sentence-level model compresses a 32x24-shaped sentence embedding
through one valid convolution (15x15 kernel) and a linear layer into a
5-unit Gaussian latent; the decoder mirrors it (linear, then transposed
convolution).  Training pushes the decoded output toward a same-pattern
positive and away from pattern-distinct negatives (single averaged-negative
hinge) plus a KL term against the standard normal.

The two-level model feeds the seven sampled sentence latents into a second
encoder-decoder that predicts the answer embedding for the whole matrix;
both levels are learned jointly and the total loss is the sum of the seven
sentence losses and the task loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BlmError
from .embedding import EmbeddedBank, EmbeddedInstances
from .nn import (
    Adam,
    TrainConfig,
    conv_backward,
    conv_forward,
    conv_transpose_backward,
    conv_transpose_forward,
    glorot,
    kl_grad,
    kl_to_standard_normal,
    linear,
    linear_backward,
    max_margin_grad,
    relu,
    relu_backward,
    save_checkpoint,
    sharded_loss_grads,
)
from .rng import pick, shuffled, substream

N_NEGS = 7


@dataclass(frozen=True)
class VaeConfig:
    grid: tuple = (32, 24)
    kernel: int = 15
    channels: int = 8
    latent: int = 5
    logvar_min: float = -20.0
    logvar_max: float = 2.0
    # starting the posterior narrow lets the decoder learn a clean
    # latent-to-pattern mapping before the KL pulls the variance up
    logvar_init: float = -6.0

    @property
    def dim(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def feat_hw(self) -> tuple:
        h = self.grid[0] - self.kernel + 1
        w = self.grid[1] - self.kernel + 1
        if h < 1 or w < 1:
            raise BlmError("kernel larger than grid")
        return (h, w)

    @property
    def feat_dim(self) -> int:
        h, w = self.feat_hw
        return self.channels * h * w


def init_sentence_vae(cfg: VaeConfig, rng_seed: int, dtype=np.float32) -> dict:
    k, c, L, F = cfg.kernel, cfg.channels, cfg.latent, cfg.feat_dim
    conv_fan = k * k
    params = {
        "enc_K": glorot(substream(rng_seed, "init", "enc_K"),
                        conv_fan, c * conv_fan, (c, 1, k, k), dtype),
        "enc_b": np.zeros(c, dtype),
        "enc_Wmu": glorot(substream(rng_seed, "init", "enc_Wmu"), F, L, (F, L), dtype),
        "enc_bmu": np.zeros(L, dtype),
        "enc_Wlv": glorot(substream(rng_seed, "init", "enc_Wlv"), F, L, (F, L), dtype),
        "enc_blv": np.full(L, cfg.logvar_init, dtype),
        "dec_W": glorot(substream(rng_seed, "init", "dec_W"), L, F, (L, F), dtype),
        "dec_b": np.zeros(F, dtype),
        "dec_K": glorot(substream(rng_seed, "init", "dec_K"),
                        c * conv_fan, conv_fan, (c, 1, k, k), dtype),
        "dec_ob": np.zeros(1, dtype),
    }
    return params


def _as_grids(cfg: VaeConfig, vecs: np.ndarray) -> np.ndarray:
    vecs = np.asarray(vecs)
    if vecs.shape[-1] != cfg.dim:
        raise BlmError(f"expected {cfg.dim}-d vectors, got {vecs.shape}")
    return vecs.reshape(-1, 1, cfg.grid[0], cfg.grid[1])


def encode(params: dict, cfg: VaeConfig, vecs: np.ndarray):
    """vecs: (B, dim) -> (mu, logvar) of shape (B, latent), plus cache."""
    grids = _as_grids(cfg, vecs)
    a, cols = conv_forward(grids, params["enc_K"], params["enc_b"])
    r = relu(a)
    flat = r.reshape(grids.shape[0], -1)
    mu = linear(flat, params["enc_Wmu"], params["enc_bmu"])
    lv_raw = linear(flat, params["enc_Wlv"], params["enc_blv"])
    lv = np.clip(lv_raw, cfg.logvar_min, cfg.logvar_max)
    cache = (grids.shape, cols, a, flat, lv_raw)
    return mu, lv, cache


def encode_backward(params: dict, cfg: VaeConfig, cache, dmu, dlv):
    grids_shape, cols, a, flat, lv_raw = cache
    inside = (lv_raw > cfg.logvar_min) & (lv_raw < cfg.logvar_max)
    dlv_raw = dlv * inside
    dflat_mu, dWmu, dbmu = linear_backward(dmu, flat, params["enc_Wmu"])
    dflat_lv, dWlv, dblv = linear_backward(dlv_raw, flat, params["enc_Wlv"])
    dr = (dflat_mu + dflat_lv).reshape(a.shape)
    da = relu_backward(dr, a)
    _, dK, db = conv_backward(da, grids_shape, cols, params["enc_K"])
    return {"enc_K": dK, "enc_b": db, "enc_Wmu": dWmu, "enc_bmu": dbmu,
            "enc_Wlv": dWlv, "enc_blv": dblv}


def sample_latent(mu, logvar, rng=None, noise=None):
    """Reparameterized draw z = mu + exp(logvar/2) * u, u ~ N(0, I)."""
    mu = np.asarray(mu)
    logvar = np.asarray(logvar)
    if noise is None:
        if rng is None:
            raise BlmError("sample_latent needs an rng or explicit noise")
        noise = rng.standard_normal(mu.shape)
    return mu + np.exp(0.5 * logvar) * noise, noise


def decode(params: dict, cfg: VaeConfig, z: np.ndarray):
    """z: (B, latent) -> reconstructed embeddings (B, dim), plus cache."""
    t = linear(z, params["dec_W"], params["dec_b"])
    rt = relu(t)
    h, w = cfg.feat_hw
    y = rt.reshape(-1, cfg.channels, h, w)
    out = conv_transpose_forward(y, params["dec_K"], params["dec_ob"], cfg.grid)
    e_hat = out.reshape(z.shape[0], cfg.dim)
    cache = (z, t, y)
    return e_hat, cache


def decode_backward(params: dict, cfg: VaeConfig, cache, de_hat):
    z, t, y = cache
    dout = de_hat.reshape(-1, 1, cfg.grid[0], cfg.grid[1])
    dy, dK, dob = conv_transpose_backward(dout, y, params["dec_K"])
    dt = relu_backward(dy.reshape(t.shape), t)
    dz, dW, db = linear_backward(dt, z, params["dec_W"])
    grads = {"dec_W": dW, "dec_b": db, "dec_K": dK, "dec_ob": dob}
    return dz, grads


# ---------------------------------------------------------------------------
# Triples
# ---------------------------------------------------------------------------

@dataclass
class Triples:
    """(in, out+, Out-) batches: positives share the input's pattern, the
    seven negatives carry pairwise-distinct other patterns."""

    inputs: np.ndarray      # (n, dim)
    positives: np.ndarray   # (n, dim)
    negatives: np.ndarray   # (n, N_NEGS, dim)
    patterns: list          # input pattern per triple
    candidate_patterns: list  # per triple: pattern of [pos, neg1..negN]

    def __len__(self):
        return len(self.patterns)


def make_triples(bank: EmbeddedBank, rng_seed: int) -> Triples:
    """Bank mode: sample out+ from same-pattern sentences and negatives from
    seven distinct other patterns."""
    by_pattern = {}
    for i, pattern in enumerate(bank.patterns):
        by_pattern.setdefault(pattern, []).append(i)
    patterns = sorted(by_pattern)
    if len(patterns) < N_NEGS + 1:
        raise BlmError(
            f"bank has {len(patterns)} patterns; triples need at least {N_NEGS + 1}"
        )
    inputs, positives, negatives = [], [], []
    in_patterns, cand_patterns = [], []
    for i in range(len(bank)):
        rng = substream(rng_seed, "triple", i)
        pattern = bank.patterns[i]
        same = [j for j in by_pattern[pattern] if j != i]
        if not same:
            raise BlmError(f"pattern {pattern!r} has a single sentence; no positive")
        pos = pick(rng, same)
        others = [p for p in patterns if p != pattern]
        neg_patterns = shuffled(rng, others)[:N_NEGS]
        negs = [pick(rng, by_pattern[p]) for p in neg_patterns]
        inputs.append(bank.vectors[i])
        positives.append(bank.vectors[pos])
        negatives.append(bank.vectors[negs])
        in_patterns.append(pattern)
        cand_patterns.append([pattern] + neg_patterns)
    return Triples(
        inputs=np.stack(inputs),
        positives=np.stack(positives),
        negatives=np.stack(negatives),
        patterns=in_patterns,
        candidate_patterns=cand_patterns,
    )


def context_triples(context: np.ndarray):
    """Dynamic triples for one 7-sentence context: out+_i = s_i and the
    negatives are the other six sentences."""
    context = np.asarray(context)
    if context.ndim != 2 or context.shape[0] != 7:
        raise BlmError(f"context_triples expects (7, dim), got {context.shape}")
    negatives = []
    for i in range(7):
        negatives.append(np.stack([context[j] for j in range(7) if j != i]))
    return context.copy(), context.copy(), np.stack(negatives)


# ---------------------------------------------------------------------------
# Sentence-level model
# ---------------------------------------------------------------------------

@dataclass
class SentenceVae:
    params: dict
    config: VaeConfig
    latent_range: np.ndarray | None = None  # (latent, 2) min/max of train means


def sentence_loss_grads(params, cfg, inputs, positives, negatives, noise):
    """Summed loss over a batch of triples plus parameter gradients."""
    mu, lv, enc_cache = encode(params, cfg, inputs)
    z, _ = sample_latent(mu, lv, noise=noise)
    e_hat, dec_cache = decode(params, cfg, z)
    B = len(inputs)
    total = 0.0
    de_hat = np.zeros_like(e_hat)
    for b in range(B):
        mm, g = max_margin_grad(e_hat[b], positives[b], negatives[b])
        total += mm + kl_to_standard_normal(mu[b], lv[b])
        de_hat[b] = g
    dz, dec_grads = decode_backward(params, cfg, dec_cache, de_hat)
    dmu_kl, dlv_kl = kl_grad(mu, lv)
    dmu = dz + dmu_kl
    dlv = dz * noise * 0.5 * np.exp(0.5 * lv) + dlv_kl
    enc_grads = encode_backward(params, cfg, enc_cache, dmu, dlv)
    grads = {**enc_grads, **dec_grads}
    return total, grads


def predict_candidates(model: SentenceVae, inputs, candidates):
    """Scores of the decoded outputs against per-item candidate sets.

    candidates: (n, m, dim); prediction samples nothing (z = mu).
    """
    mu, _, _ = encode(model.params, model.config, inputs)
    e_hat, _ = decode(model.params, model.config, mu)
    scores = np.einsum("nmd,nd->nm", np.asarray(candidates, e_hat.dtype), e_hat)
    return scores


def evaluate_triples(model: SentenceVae, triples: Triples):
    """Fraction of triples whose out+ outscores every negative (pattern
    identification accuracy; equal to positive-class F1 for one pick/item)."""
    candidates = np.concatenate([triples.positives[:, None, :], triples.negatives],
                                axis=1)
    scores = predict_candidates(model, triples.inputs, candidates)
    chosen = scores.argmax(axis=1)
    accuracy = float((chosen == 0).mean()) if len(triples) else 0.0
    return chosen, accuracy


def latent_means(model: SentenceVae, vecs) -> np.ndarray:
    mu, _, _ = encode(model.params, model.config, vecs)
    return mu


def train_sentence_vae(train: Triples, dev: Triples | None, config: TrainConfig,
                       cfg: VaeConfig | None = None) -> tuple:
    """Adam on hinge+KL; stores the per-unit min/max of the training latent
    means with the model (needed by latent traversal)."""
    if cfg is None:
        if train.inputs.shape[1] != VaeConfig().dim:
            raise BlmError("non-default embedding dim needs an explicit VaeConfig")
        cfg = VaeConfig()
    dtype = config.np_dtype
    params = init_sentence_vae(cfg, config.rng_seed, dtype)
    inputs = train.inputs.astype(dtype)
    positives = train.positives.astype(dtype)
    negatives = train.negatives.astype(dtype)
    optimizer = Adam(params, config)
    threads = config.resolved_threads()
    n = len(train)
    log = []
    for epoch in range(config.epochs):
        order = shuffled(substream(config.rng_seed, "epoch", epoch), range(n))
        epoch_loss = 0.0
        for bi, start in enumerate(range(0, n, config.batch_size)):
            batch = np.asarray(order[start:start + config.batch_size])
            noise = substream(config.rng_seed, "noise", epoch, bi).standard_normal(
                (len(batch), cfg.latent)).astype(dtype)
            lookup = {int(b): row for row, b in enumerate(batch)}

            def shard(ix):
                rows = np.asarray([lookup[int(b)] for b in ix])
                return sentence_loss_grads(params, cfg, inputs[ix], positives[ix],
                                           negatives[ix], noise[rows])

            loss, grads = sharded_loss_grads(shard, batch, threads)
            if not np.isfinite(loss):
                raise BlmError(f"non-finite loss at epoch {epoch}, batch {bi}")
            scale = 1.0 / len(batch)
            grads = {k: (v * scale).astype(dtype) for k, v in grads.items()}
            optimizer.step(params, grads)
            epoch_loss += loss
        entry = {"epoch": epoch, "train_loss": epoch_loss / max(1, n)}
        model = SentenceVae(params=params, config=cfg)
        if dev is not None and len(dev):
            _, entry["dev_accuracy"] = evaluate_triples(model, dev)
        log.append(entry)
    model = SentenceVae(params=params, config=cfg)
    mu = latent_means(model, inputs)
    model.latent_range = np.stack([mu.min(axis=0), mu.max(axis=0)], axis=1)
    return model, log


# ---------------------------------------------------------------------------
# Two-level model
# ---------------------------------------------------------------------------

@dataclass
class TwoLevelVae:
    sent_params: dict
    task_params: dict
    config: VaeConfig
    answer_dim: int = 768


def init_task_params(cfg: VaeConfig, answer_dim: int, rng_seed: int,
                     dtype=np.float32) -> dict:
    L = cfg.latent
    seq = 7 * L
    return {
        "task_Wmu": glorot(substream(rng_seed, "init", "task_Wmu"),
                           seq, L, (seq, L), dtype),
        "task_bmu": np.zeros(L, dtype),
        "task_Wlv": glorot(substream(rng_seed, "init", "task_Wlv"),
                           seq, L, (seq, L), dtype),
        "task_blv": np.full(L, cfg.logvar_init, dtype),
        "task_Wdec": glorot(substream(rng_seed, "init", "task_Wdec"),
                            L, answer_dim, (L, answer_dim), dtype),
        "task_bdec": np.zeros(answer_dim, dtype),
    }


def two_level_forward(sent_params: dict, task_params: dict, cfg: VaeConfig,
                      context: np.ndarray, noise_s=None, noise_t=None,
                      sample: bool = False):
    """context: (B, 7, dim) -> decoded answer embedding plus both latents.

    With sample=False (prediction) the latents are the posterior means; a
    fixed seed with sample=True reproduces training behavior exactly.
    """
    context = np.asarray(context)
    if context.ndim != 3 or context.shape[1] != 7:
        raise BlmError(f"two_level_forward expects (B, 7, dim), got {context.shape}")
    B = context.shape[0]
    flat_ctx = context.reshape(B * 7, context.shape[2])
    mu_s, lv_s, enc_cache = encode(sent_params, cfg, flat_ctx)
    if sample:
        z_s, noise_s = sample_latent(mu_s, lv_s, noise=noise_s)
    else:
        z_s, noise_s = mu_s, np.zeros_like(mu_s)
    e_hat_s, dec_cache_s = decode(sent_params, cfg, z_s)
    cat = z_s.reshape(B, 7 * cfg.latent)
    mu_t = linear(cat, task_params["task_Wmu"], task_params["task_bmu"])
    lv_t_raw = linear(cat, task_params["task_Wlv"], task_params["task_blv"])
    lv_t = np.clip(lv_t_raw, cfg.logvar_min, cfg.logvar_max)
    if sample:
        z_t, noise_t = sample_latent(mu_t, lv_t, noise=noise_t)
    else:
        z_t, noise_t = mu_t, np.zeros_like(mu_t)
    e_ans = linear(z_t, task_params["task_Wdec"], task_params["task_bdec"])
    cache = {
        "enc_cache": enc_cache, "dec_cache_s": dec_cache_s,
        "mu_s": mu_s, "lv_s": lv_s, "z_s": z_s, "noise_s": noise_s,
        "cat": cat, "mu_t": mu_t, "lv_t": lv_t, "lv_t_raw": lv_t_raw,
        "z_t": z_t, "noise_t": noise_t, "e_hat_s": e_hat_s, "flat_ctx": flat_ctx,
    }
    return e_ans, cache


def two_level_loss_grads(sent_params, task_params, cfg, context, answers,
                         correct, noise_s, noise_t):
    """Joint objective: sum of the seven per-sentence losses plus the task
    loss; returns (total, sentence_term, task_term, grads)."""
    B = context.shape[0]
    e_ans, cache = two_level_forward(sent_params, task_params, cfg, context,
                                     noise_s=noise_s, noise_t=noise_t, sample=True)
    # task-level hinge against the full answer set
    task_term = 0.0
    de_ans = np.zeros_like(e_ans)
    for b in range(B):
        c = int(correct[b])
        negs = np.delete(answers[b], c, axis=0)
        mm, g = max_margin_grad(e_ans[b], answers[b, c], negs)
        task_term += mm + kl_to_standard_normal(cache["mu_t"][b], cache["lv_t"][b])
        de_ans[b] = g
    # sentence-level triples: out+ is the sentence itself, the negatives are
    # the other six context sentences
    sentence_term = 0.0
    e_hat_s = cache["e_hat_s"]
    de_hat_s = np.zeros_like(e_hat_s)
    for b in range(B):
        for i in range(7):
            negs = np.delete(context[b], i, axis=0)
            mm, g = max_margin_grad(e_hat_s[b * 7 + i], context[b, i], negs)
            sentence_term += mm + kl_to_standard_normal(
                cache["mu_s"][b * 7 + i], cache["lv_s"][b * 7 + i])
            de_hat_s[b * 7 + i] = g

    # ---- task backward
    dz_t, dWdec, dbdec = linear_backward(de_ans, cache["z_t"], task_params["task_Wdec"])
    dmu_t_kl, dlv_t_kl = kl_grad(cache["mu_t"], cache["lv_t"])
    dmu_t = dz_t + dmu_t_kl
    dlv_t = dz_t * cache["noise_t"] * 0.5 * np.exp(0.5 * cache["lv_t"]) + dlv_t_kl
    inside_t = (cache["lv_t_raw"] > cfg.logvar_min) & (cache["lv_t_raw"] < cfg.logvar_max)
    dlv_t_raw = dlv_t * inside_t
    dcat_mu, dWmu_t, dbmu_t = linear_backward(dmu_t, cache["cat"], task_params["task_Wmu"])
    dcat_lv, dWlv_t, dblv_t = linear_backward(dlv_t_raw, cache["cat"], task_params["task_Wlv"])
    dcat = dcat_mu + dcat_lv
    task_grads = {"task_Wmu": dWmu_t, "task_bmu": dbmu_t,
                  "task_Wlv": dWlv_t, "task_blv": dblv_t,
                  "task_Wdec": dWdec, "task_bdec": dbdec}

    # ---- sentence backward: gradients reach z_s from the task encoder and
    # from the sentence decoder; mu/logvar also receive the KL terms
    dz_s_dec, dec_grads = decode_backward(sent_params, cfg, cache["dec_cache_s"], de_hat_s)
    dz_s = dz_s_dec + dcat.reshape(B * 7, cfg.latent)
    dmu_s_kl, dlv_s_kl = kl_grad(cache["mu_s"], cache["lv_s"])
    dmu_s = dz_s + dmu_s_kl
    dlv_s = dz_s * cache["noise_s"] * 0.5 * np.exp(0.5 * cache["lv_s"]) + dlv_s_kl
    enc_grads = encode_backward(sent_params, cfg, cache["enc_cache"], dmu_s, dlv_s)
    sent_grads = {**enc_grads, **dec_grads}
    total = sentence_term + task_term
    return total, sentence_term, task_term, sent_grads, task_grads


def predict_two_level(model: TwoLevelVae, context, answers):
    """argmax of score(decoded answer, candidate); deterministic (z = mu)."""
    e_ans, _ = two_level_forward(model.sent_params, model.task_params,
                                 model.config, context, sample=False)
    scores = np.einsum("bkd,bd->bk", np.asarray(answers, e_ans.dtype), e_ans)
    chosen = scores.argmax(axis=1)
    return chosen, scores


def evaluate_two_level(model: TwoLevelVae, data: EmbeddedInstances):
    chosen, _ = predict_two_level(model, data.context, data.answers)
    accuracy = float((chosen == data.correct_index).mean()) if len(data) else 0.0
    return chosen, accuracy


def train_two_level(train: EmbeddedInstances, dev: EmbeddedInstances | None,
                    config: TrainConfig, cfg: VaeConfig | None = None,
                    warm_sent_params: dict | None = None):
    """Both levels learned together (optionally warm-starting the sentence
    level from a trained sentence VAE)."""
    if cfg is None:
        cfg = VaeConfig()
    dtype = config.np_dtype
    answer_dim = train.answers.shape[2]
    if warm_sent_params is not None:
        sent_params = {k: v.astype(dtype).copy() for k, v in warm_sent_params.items()}
    else:
        sent_params = init_sentence_vae(cfg, config.rng_seed, dtype)
    task_params = init_task_params(cfg, answer_dim, config.rng_seed, dtype)
    context = train.context.astype(dtype)
    answers = train.answers.astype(dtype)
    correct = train.correct_index
    opt_sent = Adam(sent_params, config)
    opt_task = Adam(task_params, config)
    threads = config.resolved_threads()
    n = len(train)
    log = []
    for epoch in range(config.epochs):
        order = shuffled(substream(config.rng_seed, "epoch", epoch), range(n))
        totals = np.zeros(3)
        for bi, start in enumerate(range(0, n, config.batch_size)):
            batch = np.asarray(order[start:start + config.batch_size])
            stream = substream(config.rng_seed, "noise", epoch, bi)
            noise_s = stream.standard_normal((len(batch) * 7, cfg.latent)).astype(dtype)
            noise_t = stream.standard_normal((len(batch), cfg.latent)).astype(dtype)
            lookup = {int(b): row for row, b in enumerate(batch)}

            def shard(ix):
                rows = np.asarray([lookup[int(b)] for b in ix])
                srows = (rows[:, None] * 7 + np.arange(7)[None, :]).ravel()
                total_, s_term_, t_term_, sg, tg = two_level_loss_grads(
                    sent_params, task_params, cfg,
                    context[ix], answers[ix], correct[ix],
                    noise_s[srows], noise_t[rows])
                merged_ = {**sg, **{f"@{k}": v for k, v in tg.items()}}
                # thread-safe loss decomposition: ride the summed-grads path
                merged_["#terms"] = np.array([s_term_, t_term_])
                return total_, merged_

            total, merged = sharded_loss_grads(shard, batch, threads)
            s_term, t_term = (float(v) for v in merged.pop("#terms"))
            sent_grads = {k: v for k, v in merged.items() if not k.startswith("@")}
            task_grads = {k[1:]: v for k, v in merged.items() if k.startswith("@")}
            if not np.isfinite(total):
                raise BlmError(f"non-finite loss at epoch {epoch}, batch {bi}")
            scale = 1.0 / len(batch)
            opt_sent.step(sent_params, {k: (v * scale).astype(dtype)
                                        for k, v in sent_grads.items()})
            opt_task.step(task_params, {k: (v * scale).astype(dtype)
                                        for k, v in task_grads.items()})
            totals += (total, s_term, t_term)
        entry = {"epoch": epoch,
                 "train_loss": float(totals[0]) / max(1, n),
                 "sentence_term": float(totals[1]) / max(1, n),
                 "task_term": float(totals[2]) / max(1, n)}
        model = TwoLevelVae(sent_params, task_params, cfg, answer_dim)
        if dev is not None and len(dev):
            _, entry["dev_accuracy"] = evaluate_two_level(model, dev)
        log.append(entry)
    return TwoLevelVae(sent_params, task_params, cfg, answer_dim), log


def save_sentence_vae(path, model: SentenceVae, config: TrainConfig,
                      provider_id: str = ""):
    arrays = dict(model.params)
    if model.latent_range is not None:
        arrays["latent_range"] = model.latent_range.astype(np.float32)
    meta = {"grid": list(model.config.grid), "kernel": model.config.kernel,
            "channels": model.config.channels, "latent": model.config.latent,
            "nonlinearity": "relu", "train_config": config.to_dict(),
            "provider": provider_id}
    save_checkpoint(path, "sentence-vae", arrays, meta)


def save_two_level(path, model: TwoLevelVae, config: TrainConfig,
                   provider_id: str = ""):
    arrays = {**model.sent_params, **model.task_params}
    meta = {"grid": list(model.config.grid), "kernel": model.config.kernel,
            "channels": model.config.channels, "latent": model.config.latent,
            "answer_dim": model.answer_dim, "nonlinearity": "relu",
            "train_config": config.to_dict(), "provider": provider_id}
    save_checkpoint(path, "two-level-vae", arrays, meta)
