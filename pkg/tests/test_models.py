"""Direct-response generator and the topic-guided CVAE."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slarm.batching import CvaeBatch, DrsgBatch
from slarm.corpus import EOS_ID, SEP_ID
from slarm.drsg import DrsgModel
from slarm.nn import autograd as ag
from slarm.nn.layers import ParameterStore
from slarm.nn.optim import Adam
from slarm.tgg_cvae import AnnealSchedule, LatentState, TggCvaeModel, kl_divergence, reparameterize

from conftest import check_gradients

TOL = 1e-4
V = 14


def small_drsg(seed=0):
    store = ParameterStore(seed=seed, init_scale=1.0)
    return store, DrsgModel(store, V, embed_size=4, hidden_size=5, num_layers=2)


def small_cvae(seed=0, **kw):
    store = ParameterStore(seed=seed, init_scale=1.0)
    return store, TggCvaeModel(store, V, embed_size=4, hidden_size=5, latent_size=3, num_topics=3, **kw)


def cvae_batch():
    return CvaeBatch.build(
        [[5, 6, SEP_ID, 7], [8, SEP_ID, 9]],
        [[10, 11, 12], []],
        [[11, 13], [12]],
        num_topics=3,
    )


# ---------------------------------------------------------------- DRSG


def test_drsg_loss_gradients():
    store, model = small_drsg()
    batch = DrsgBatch.build([[5, 6, 7], [8, 9]], [[10, 11], [12]])
    errs = check_gradients(lambda: model.batch_loss(batch), store.params, store.grads)
    assert max(errs.values()) < TOL, errs


def test_drsg_untrained_loss_near_log_v():
    store = ParameterStore(seed=0)
    model = DrsgModel(store, 50, 8, 8, 2)
    loss = float(model.loss([5, 6, 7], [8, 9]).data)
    assert abs(loss - math.log(50)) < 0.2


def test_drsg_generation_is_deterministic_and_bounded():
    _, model = small_drsg()
    a = model.generate([5, 6], max_len=4)
    assert a == model.generate([5, 6], max_len=4)
    assert len(a) <= 4
    assert model.generate([5], max_len=0) == []
    with pytest.raises(ValueError):
        model.encode([])


def test_drsg_step_distributions_are_normalized():
    _, model = small_drsg()
    dists = model.step_distributions([5, 6], [7, 8])
    assert len(dists) == 3
    for d in dists:
        assert d.sum() == pytest.approx(1.0, abs=1e-12)


def test_drsg_overfits_one_pair():
    store = ParameterStore(seed=1)
    model = DrsgModel(store, V, 8, 16, 1)
    opt = Adam(store, lr=0.01)
    post, direct = [5, 6, 7], [9, 10, 11]
    losses = []
    for _ in range(150):
        loss = model.loss(post, direct)
        losses.append(float(loss.data))
        store.zero_grad()
        loss.backward()
        opt.step()
    windows = [np.mean(losses[i : i + 50]) for i in range(0, 150, 50)]
    assert windows == sorted(windows, reverse=True)
    assert losses[-1] < 0.1
    assert model.generate(post) == direct


# ---------------------------------------------------------------- KL and reparameterization


def test_kl_analytic_unit_shift():
    assert kl_divergence(np.zeros(1), np.zeros(1), np.ones(1), np.zeros(1)) == pytest.approx(0.5, abs=1e-12)


def test_kl_identical_is_zero(rng):
    mu, lv = rng.normal(size=4), rng.normal(size=4)
    assert abs(kl_divergence(mu, lv, mu, lv)) < 1e-12


@settings(max_examples=200)
@given(arrays(np.float64, (4, 4), elements=st.floats(-3, 3)))
def test_kl_non_negative(params):
    assert kl_divergence(params[0], params[1], params[2], params[3]) >= -1e-12


def test_kl_non_negative_on_many_draws(rng):
    params = rng.normal(scale=2.0, size=(4, 10_000, 6))
    kl = kl_divergence(*params)
    assert kl.shape == (10_000,)
    assert kl.min() >= -1e-9
    assert np.all(kl[np.any(params[0] != params[2], axis=1)] > 0)


def test_kl_batched_and_tensor_modes(rng):
    mu, lv, mq, lq = (rng.normal(size=(3, 2)) for _ in range(4))
    out = kl_divergence(mu, lv, mq, lq)
    assert out.shape == (3,)
    t = kl_divergence(ag.Tensor(mu), lv, mq, lq)
    np.testing.assert_allclose(t.data, out)


def test_reparameterize_shapes_and_values():
    z = reparameterize(np.array([1.0]), np.array([math.log(4.0)]), np.array([0.5]))
    assert z[0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        reparameterize(np.zeros(2), np.zeros(3), np.zeros(2))
    state = LatentState.draw([0.0], [0.0], [1.5])
    assert state.z[0] == 1.5


def test_reparameterization_gradients():
    store = ParameterStore(seed=2)
    store.add("mu", (3,))
    store.add("lv", (3,))
    eps = np.array([0.3, -1.2, 2.0])
    errs = check_gradients(
        lambda: ag.tsum(reparameterize(store.tensor("mu"), store.tensor("lv"), eps) * np.array([1.0, 2.0, 3.0])),
        store.params,
        store.grads,
    )
    assert max(errs.values()) < TOL


def test_kl_gradients():
    store = ParameterStore(seed=3, init_scale=1.0)
    for n in ("a", "b", "c", "d"):
        store.add(n, (2, 3))
    errs = check_gradients(
        lambda: ag.tsum(kl_divergence(*(store.tensor(n) for n in "abcd"))),
        store.params,
        store.grads,
    )
    assert max(errs.values()) < TOL


# ---------------------------------------------------------------- annealing


def test_anneal_schedule():
    s = AnnealSchedule(2000, 0.0)
    assert s.weight(0) == 0.0
    assert s.weight(1000) == 0.5
    assert s.weight(2000) == 1.0
    assert s.weight(10**6) == 1.0
    assert AnnealSchedule(0).weight(0) == 1.0
    assert AnnealSchedule(10, 0.2).weight(0) == 0.2
    with pytest.raises(ValueError):
        AnnealSchedule(10, 1.5)


@given(st.integers(0, 5000), st.integers(0, 5000))
def test_anneal_is_monotone(a, b):
    s = AnnealSchedule(3000, 0.1)
    lo, hi = sorted((a, b))
    assert s.weight(lo) <= s.weight(hi)


# ---------------------------------------------------------------- CVAE gradients


def test_decode_loss_gradients():
    store, model = small_cvae()
    batch = cvae_batch()
    store.add("in.z", (2, 3))
    store.add("in.t", (2, 4))
    store.add("in.h", (2, 5))

    def loss():
        return model.decode_loss(batch, store.tensor("in.z"), store.tensor("in.t"), store.tensor("in.h"))

    errs = check_gradients(loss, store.params, store.grads)
    assert max(errs.values()) < TOL, errs


def test_bow_loss_gradients_and_floor():
    store, model = small_cvae()
    store.add("in.z", (2, 3))
    store.add("in.h", (2, 5))
    bags = [[6, 9, 11], [7]]
    errs = check_gradients(
        lambda: model.bow_loss(store.tensor("in.z"), store.tensor("in.h"), bags), store.params, store.grads
    )
    assert max(errs.values()) < TOL, errs
    # the loss is a KL from the uniform distribution over the bag, hence >= 0
    assert float(model.bow_loss(store.tensor("in.z"), store.tensor("in.h"), bags).data) > 0
    assert float(model.bow_loss(store.tensor("in.z"), store.tensor("in.h"), [[], []]).data) == 0.0


def test_topic_mixture_gradients_and_weights():
    store, model = small_cvae()
    store.add("in.z", (2, 3))
    ids = np.array([[5, 6, 7], [8, 9, 0]])
    mask = np.array([[1, 1, 1], [1, 1, 0]], dtype=float)
    errs = check_gradients(
        lambda: ag.tsum(model.topic_mixture(store.tensor("in.z"), ids, mask)[0] * np.arange(4.0)),
        store.params,
        store.grads,
    )
    assert max(errs.values()) < TOL, errs
    t, alpha = model.topic_mixture(store.params["in.z"], ids, mask)
    np.testing.assert_allclose(alpha.data.sum(axis=1), 1.0)
    assert alpha.data[1, 2] == 0.0


def test_topic_mixture_single_topic_is_its_embedding():
    store, model = small_cvae()
    t, _ = model.topic_mixture(np.ones((1, 3)), np.array([[7]]))
    np.testing.assert_allclose(t.data[0], store.params["tgg_cvae.embedding"][7])


def test_elbo_step_gradients():
    store, model = small_cvae()
    batch = cvae_batch()
    eps = np.array([[0.2, -0.4, 1.0], [0.7, 0.1, -1.3]])
    errs = check_gradients(lambda: model.elbo_step(batch, 0.3, eps)[0], store.params, store.grads)
    assert max(errs.values()) < TOL, errs


def test_elbo_bookkeeping():
    _, model = small_cvae()
    batch = cvae_batch()
    for w in (0.0, 0.37, 1.0):
        total, parts = model.elbo_step(batch, w, np.zeros((2, 3)))
        assert parts["total"] == pytest.approx(parts["recon"] + w * parts["kl"] + parts["bow"], abs=1e-9)
        assert parts["kl_weight"] == w
    total, parts = model.elbo_step(batch, 0.0, np.zeros((2, 3)))
    assert parts["total"] == pytest.approx(parts["recon"] + parts["bow"], abs=1e-12)


def test_ablation_without_topics():
    store, model = small_cvae(use_topics=False)
    assert not any(n.startswith("tgg_cvae.topic_proj") for n in store.params)
    t, _ = model.topic_mixture(np.ones((2, 3)), np.array([[5, 6], [7, 8]]))
    np.testing.assert_array_equal(t.data, 0.0)
    _, parts = model.elbo_step(cvae_batch(), 1.0, np.zeros((2, 3)))
    assert all(np.isfinite(v) for v in parts.values())


def test_ablation_without_latent_is_deterministic():
    store, model = small_cvae(use_latent=False)
    assert not any("posterior" in n for n in store.params)
    _, a = model.elbo_step(cvae_batch(), 1.0, np.zeros((2, 3)))
    _, b = model.elbo_step(cvae_batch(), 1.0, np.full((2, 3), 5.0))
    assert a == b
    assert a["kl"] == 0.0
    assert model.generate([5, SEP_ID, 6], [7], np.zeros(3)) == model.generate([5, SEP_ID, 6], [7], np.ones(3))


def test_prior_and_posterior_params():
    _, model = small_cvae()
    mu, lv = model.prior_params([5, SEP_ID, 6])
    assert mu.shape == lv.shape == (3,)
    mq, lq = model.posterior_params([5, SEP_ID, 6], [])
    assert np.all(np.isfinite(mq)) and np.all(np.isfinite(lq))
    with pytest.raises(ValueError):
        model.prior_params([])


def test_generate_respects_eos_and_length():
    store, model = small_cvae()
    store.params["tgg_cvae.output.b"][EOS_ID] = 1e3
    assert model.generate([5, SEP_ID, 6], [7, 8], np.zeros(3)) == []
    store.params["tgg_cvae.output.b"][EOS_ID] = -1e3
    assert len(model.generate([5, SEP_ID, 6], [7, 8], np.zeros(3), max_len=6)) == 6
