"""Variational solvers: shapes, sampling, losses, gradients, training."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blmkit.core import BlmError
from blmkit.embedding import EmbeddedBank, EmbeddedInstances
from blmkit.nn import (
    TrainConfig,
    conv_forward,
    conv_transpose_forward,
    kl_to_standard_normal,
    max_margin,
)
from blmkit.vae import (
    SentenceVae,
    VaeConfig,
    context_triples,
    decode,
    encode,
    evaluate_two_level,
    init_sentence_vae,
    init_task_params,
    make_triples,
    sample_latent,
    sentence_loss_grads,
    train_sentence_vae,
    train_two_level,
    two_level_forward,
    two_level_loss_grads,
)

TINY = VaeConfig(grid=(8, 6), kernel=3, channels=2, latent=2)


def tiny_params(seed=0, dtype=np.float64, zero=False):
    params = init_sentence_vae(TINY, seed, dtype)
    if zero:
        params = {k: np.zeros_like(v) for k, v in params.items()}
    return params


def test_feature_map_dims_from_convolution_arithmetic():
    cfg = VaeConfig()
    assert cfg.feat_hw == (18, 10)   # 32-15+1 x 24-15+1
    assert cfg.feat_dim == 8 * 18 * 10
    assert cfg.latent == 5 and cfg.kernel == 15


def test_encode_zero_params_gives_zero_stats():
    params = tiny_params(zero=True)
    mu, lv, _ = encode(params, TINY, np.ones((3, TINY.dim)))
    assert np.array_equal(mu, np.zeros((3, 2)))
    assert np.array_equal(lv, np.zeros((3, 2)))


def test_encode_deterministic_and_shape_checked():
    params = tiny_params()
    x = np.random.default_rng(0).standard_normal((4, TINY.dim))
    a = encode(params, TINY, x)[0]
    b = encode(params, TINY, x)[0]
    assert np.array_equal(a, b)
    with pytest.raises(BlmError):
        encode(params, TINY, np.zeros((4, TINY.dim + 1)))


def test_sample_latent_degenerate_variance():
    mu = np.array([[1.0, -2.0]])
    z, _ = sample_latent(mu, np.full((1, 2), -20.0),
                         rng=np.random.default_rng(0))
    assert np.allclose(z, mu, atol=1e-4)


def test_sample_latent_reproducible_and_monte_carlo_mean():
    mu = np.array([0.5, -1.5, 2.0])
    lv = np.array([0.2, -0.4, 0.0])
    a, _ = sample_latent(mu, lv, rng=np.random.default_rng(7))
    b, _ = sample_latent(mu, lv, rng=np.random.default_rng(7))
    assert np.array_equal(a, b)
    n = 100_000
    rng = np.random.default_rng(1)
    draws = np.stack([sample_latent(mu, lv, rng=rng)[0] for _ in range(200)])
    # vectorized draw for the real Monte-Carlo check
    noise = np.random.default_rng(2).standard_normal((n, 3))
    z = mu + np.exp(lv / 2) * noise
    sigma = np.exp(lv / 2)
    assert np.all(np.abs(z.mean(axis=0) - mu) < 3 * sigma / np.sqrt(n))
    with pytest.raises(BlmError):
        sample_latent(mu, lv)


def test_kl_hand_values():
    assert kl_to_standard_normal(np.zeros(5), np.zeros(5)) == pytest.approx(0.0, abs=1e-9)
    mu = np.array([1.0, 0, 0, 0, 0])
    assert kl_to_standard_normal(mu, np.zeros(5)) == pytest.approx(0.5, abs=1e-9)


@settings(max_examples=100)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6),
       st.lists(st.floats(-4, 2), min_size=1, max_size=6))
def test_kl_never_negative(mu, lv):
    size = min(len(mu), len(lv))
    value = kl_to_standard_normal(np.array(mu[:size]), np.array(lv[:size]))
    assert value >= -1e-12


def test_max_margin_hand_values():
    dim = 3
    e_hat = np.array([1.0, 0, 0])
    pos = np.array([1.0, 0, 0])
    negs = np.zeros((7, dim))
    assert max_margin(e_hat, pos, negs) == pytest.approx(0.0, abs=1e-9)
    assert max_margin(np.zeros(dim), np.zeros(dim), negs) == pytest.approx(1.0, abs=1e-9)
    # positive 0.5; negatives 0.7, 0.7, then five zeros -> mean 0.2
    pos = np.array([0.5, 0, 0])
    negs = np.zeros((7, dim))
    negs[0, 0] = 0.7
    negs[1, 0] = 0.7
    assert max_margin(e_hat, pos, negs) == pytest.approx(0.7, abs=1e-9)
    with pytest.raises(BlmError):
        max_margin(e_hat, pos, np.zeros((0, dim)))


def _bank(n_patterns=9, per=6, dim=TINY.dim):
    rng = np.random.default_rng(0)
    vectors, patterns, ids = [], [], []
    for p in range(n_patterns):
        base = rng.standard_normal(dim)
        for j in range(per):
            vectors.append(base + 0.1 * rng.standard_normal(dim))
            patterns.append(f"pat-{p}")
            ids.append(f"s{p}.{j}")
    return EmbeddedBank(provider_id="t", ids=ids,
                        vectors=np.stack(vectors).astype(np.float32),
                        patterns=patterns)


def test_make_triples_structure():
    bank = _bank()
    triples = make_triples(bank, rng_seed=1)
    assert len(triples) == len(bank)
    for i in range(len(triples)):
        cands = triples.candidate_patterns[i]
        assert cands[0] == triples.patterns[i]
        assert len(cands) == 8
        assert len(set(cands[1:])) == 7          # pairwise-distinct negatives
        assert triples.patterns[i] not in cands[1:]
        assert not np.array_equal(triples.inputs[i], triples.positives[i])


def test_make_triples_needs_8_patterns():
    with pytest.raises(BlmError, match="at least 8"):
        make_triples(_bank(n_patterns=3), rng_seed=0)


def test_context_triples_mode():
    context = np.random.default_rng(0).standard_normal((7, 12))
    inputs, positives, negatives = context_triples(context)
    assert np.array_equal(inputs, context)
    assert np.array_equal(positives, context)   # out+ is the sentence itself
    assert negatives.shape == (7, 6, 12)
    for i in range(7):
        rest = np.delete(context, i, axis=0)
        assert np.array_equal(negatives[i], rest)


def test_conv_adjointness():
    rng = np.random.default_rng(3)
    K = rng.standard_normal((4, 2, 5, 5))
    x = rng.standard_normal((3, 2, 12, 9))
    y = rng.standard_normal((3, 4, 8, 5))
    cx, _ = conv_forward(x, K, np.zeros(4))
    ty = conv_transpose_forward(y, K, np.zeros(2), (12, 9))
    lhs = float((cx * y).sum())
    rhs = float((x * ty).sum())
    assert abs(lhs - rhs) < 1e-6


def _fd_check(loss_fn, param_trees, grads_trees, samples=25, eps=1e-6, seed=0):
    rng = np.random.default_rng(seed)
    base = loss_fn()
    for params, grads in zip(param_trees, grads_trees):
        for name in params:
            flat = params[name].ravel()
            idx = rng.choice(flat.size, size=min(samples, flat.size), replace=False)
            for i in idx:
                old = flat[i]
                flat[i] = old + eps
                up = loss_fn()
                flat[i] = old - eps
                down = loss_fn()
                flat[i] = old
                fd = (up - down) / (2 * eps)
                an = grads[name].ravel()[i]
                if max(abs(fd), abs(an)) < 1e-6:
                    continue  # both zero up to central-difference noise
                rel = abs(fd - an) / max(abs(fd), abs(an))
                assert rel < 1e-4, (name, i, fd, an)
    return base


def test_sentence_vae_gradients_match_finite_differences():
    params = tiny_params(5)
    rng = np.random.default_rng(1)
    inputs = rng.standard_normal((3, TINY.dim))
    pos = rng.standard_normal((3, TINY.dim))
    negs = rng.standard_normal((3, 4, TINY.dim))
    noise = rng.standard_normal((3, TINY.latent))
    loss, grads = sentence_loss_grads(params, TINY, inputs, pos, negs, noise)

    def loss_fn():
        mu, lv, _ = encode(params, TINY, inputs)
        z = mu + np.exp(0.5 * lv) * noise
        e_hat, _ = decode(params, TINY, z)
        return sum(max_margin(e_hat[b], pos[b], negs[b])
                   + kl_to_standard_normal(mu[b], lv[b]) for b in range(3))

    assert abs(loss - loss_fn()) < 1e-9
    _fd_check(loss_fn, [params], [grads])


def test_two_level_gradients_and_loss_decomposition():
    sent = tiny_params(7)
    task = init_task_params(TINY, 10, 8, np.float64)
    rng = np.random.default_rng(2)
    context = rng.standard_normal((2, 7, TINY.dim))
    answers = rng.standard_normal((2, 5, 10))
    correct = np.array([1, 3])
    noise_s = rng.standard_normal((14, TINY.latent))
    noise_t = rng.standard_normal((2, TINY.latent))
    total, s_term, t_term, sg, tg = two_level_loss_grads(
        sent, task, TINY, context, answers, correct, noise_s, noise_t)
    assert total == pytest.approx(s_term + t_term, abs=1e-6)

    def loss_fn():
        e_ans, cache = two_level_forward(sent, task, TINY, context,
                                         noise_s=noise_s, noise_t=noise_t,
                                         sample=True)
        value = 0.0
        for b in range(2):
            c = int(correct[b])
            negs_b = np.delete(answers[b], c, axis=0)
            value += max_margin(e_ans[b], answers[b, c], negs_b)
            value += kl_to_standard_normal(cache["mu_t"][b], cache["lv_t"][b])
            for i in range(7):
                nb = np.delete(context[b], i, axis=0)
                value += max_margin(cache["e_hat_s"][b * 7 + i], context[b, i], nb)
                value += kl_to_standard_normal(cache["mu_s"][b * 7 + i],
                                               cache["lv_s"][b * 7 + i])
        return value

    assert abs(total - loss_fn()) < 1e-8
    _fd_check(loss_fn, [sent, task], [sg, tg], samples=20)


def test_two_level_forward_zero_params_and_dims():
    sent = tiny_params(zero=True)
    task = init_task_params(TINY, 10, 0, np.float64)
    task = {k: np.zeros_like(v) for k, v in task.items()}
    context = np.ones((2, 7, TINY.dim))
    e_ans, cache = two_level_forward(sent, task, TINY, context, sample=False)
    assert np.array_equal(e_ans, np.zeros((2, 10)))
    assert cache["z_s"].shape == (14, TINY.latent)   # 7 sentence latents each
    assert cache["z_t"].shape == (2, TINY.latent)    # one task latent
    with pytest.raises(BlmError):
        two_level_forward(sent, task, TINY, np.ones((2, 6, TINY.dim)))


def test_two_level_forward_deterministic_given_seed():
    sent = tiny_params(3)
    task = init_task_params(TINY, 10, 3, np.float64)
    context = np.random.default_rng(4).standard_normal((2, 7, TINY.dim))
    n_s = np.random.default_rng(5).standard_normal((14, TINY.latent))
    n_t = np.random.default_rng(6).standard_normal((2, TINY.latent))
    a, _ = two_level_forward(sent, task, TINY, context, n_s, n_t, sample=True)
    b, _ = two_level_forward(sent, task, TINY, context, n_s, n_t, sample=True)
    assert np.array_equal(a, b)


def _tiny_triples(n=40):
    bank = _bank(n_patterns=8, per=5)
    return make_triples(bank, rng_seed=2)


def test_train_sentence_vae_lr0_and_determinism():
    triples = _tiny_triples()
    cfg = TrainConfig(learning_rate=0.0, epochs=1, batch_size=10, rng_seed=0)
    model, _ = train_sentence_vae(triples, None, cfg, TINY)
    fresh = init_sentence_vae(TINY, 0, np.float32)
    for name in fresh:
        assert np.array_equal(model.params[name], fresh[name]), name
    cfg = TrainConfig(epochs=2, batch_size=10, rng_seed=3)
    a, log_a = train_sentence_vae(triples, triples, cfg, TINY)
    b, log_b = train_sentence_vae(triples, triples, cfg, TINY)
    assert log_a == log_b
    for name in a.params:
        assert a.params[name].tobytes() == b.params[name].tobytes()
    assert a.latent_range is not None and a.latent_range.shape == (TINY.latent, 2)


def test_train_two_level_logs_loss_decomposition():
    rng = np.random.default_rng(0)
    n, dim, k = 12, TINY.dim, 4
    context = rng.standard_normal((n, 7, dim)).astype(np.float32)
    answers = rng.standard_normal((n, k, dim)).astype(np.float32)
    correct = rng.integers(0, k, size=n)
    data = EmbeddedInstances(provider_id="t", ids=[str(i) for i in range(n)],
                             context=context, answers=answers,
                             correct_index=correct, labels=[("x",) * k] * n)
    cfg = TrainConfig(epochs=2, batch_size=6, rng_seed=1)
    model, log = train_two_level(data, data, cfg, TINY)
    for entry in log:
        assert entry["train_loss"] == pytest.approx(
            entry["sentence_term"] + entry["task_term"], abs=1e-6)
    chosen, acc = evaluate_two_level(model, data)
    assert chosen.shape == (n,)
