"""Training kernels and the federated loop: gradients, equivalences, accounting."""

import numpy as np
import pytest

from fedcost import (
    CostMeans,
    CostWeights,
    DeviceProfile,
    UnreachableLossError,
    build_population,
    draw_heterogeneous_population,
    generate_synthetic,
)
from fedcost.core import substream
from fedcost.simulation import (
    FedSimulator,
    ModelState,
    TrainingConfig,
    fedavg_run,
    local_sgd,
    measure_cost_to_target,
    softmax_grad,
    softmax_loss,
)


def rand_problem(rng, n=40, dim=61):
    x = rng.standard_normal((n, dim))
    y = rng.integers(0, 10, size=n)
    w = 0.1 * rng.standard_normal((10, dim))
    return w, x, y


def test_softmax_loss_at_zero_weights():
    rng = np.random.default_rng(0)
    _, x, y = rand_problem(rng)
    w = np.zeros((10, x.shape[1]))
    assert softmax_loss(w, x, y, l2=0.0) == pytest.approx(np.log(10.0), rel=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(5):
        w, x, y = rand_problem(rng, n=25)
        g = softmax_grad(w, x, y, l2=1e-3)
        # probe a handful of coordinates with central differences
        idx = [(int(a), int(b)) for a, b in zip(rng.integers(0, 10, 6), rng.integers(0, x.shape[1], 6))]
        h = 1e-6
        for i, j in idx:
            wp = w.copy(); wp[i, j] += h
            wm = w.copy(); wm[i, j] -= h
            fd = (softmax_loss(wp, x, y, 1e-3) - softmax_loss(wm, x, y, 1e-3)) / (2 * h)
            assert g[i, j] == pytest.approx(fd, rel=1e-5, abs=1e-10)


def test_gradient_includes_l2():
    rng = np.random.default_rng(2)
    w, x, y = rand_problem(rng)
    g0 = softmax_grad(w, x, y, l2=0.0)
    g1 = softmax_grad(w, x, y, l2=0.5)
    np.testing.assert_allclose(g1 - g0, 0.5 * w, rtol=1e-12)


def test_local_sgd_single_step_oracle():
    # batch covering the whole set, one step: w' = w - lr * grad
    rng = np.random.default_rng(3)
    w, x, y = rand_problem(rng, n=4)
    cfg = TrainingConfig(batch_size=1, l2=0.0)
    x1, y1 = x[:1], y[:1]
    out = local_sgd(w, x1, y1, local_steps=1, lr=0.3, config=cfg, rng=substream(0, "t"))
    want = w - 0.3 * softmax_grad(w, x1, y1, l2=0.0)
    np.testing.assert_allclose(out, want, atol=1e-10)


def test_local_sgd_zero_lr_is_identity():
    rng = np.random.default_rng(4)
    w, x, y = rand_problem(rng)
    out = local_sgd(w, x, y, local_steps=7, lr=0.0, config=TrainingConfig(), rng=substream(0, "t"))
    np.testing.assert_array_equal(out, w)
    assert out is not w  # input untouched, new array returned


def test_local_sgd_does_not_mutate_input():
    rng = np.random.default_rng(5)
    w, x, y = rand_problem(rng)
    w_copy = w.copy()
    local_sgd(w, x, y, local_steps=3, lr=0.1, config=TrainingConfig(batch_size=8), rng=substream(1, "t"))
    np.testing.assert_array_equal(w, w_copy)


def test_learning_rate_schedules():
    inv = TrainingConfig(eta0=0.2, lr_schedule="inverse")
    assert inv.learning_rate(1) == pytest.approx(0.2)  # first round runs at eta0
    assert inv.learning_rate(2) == pytest.approx(0.1)
    assert inv.learning_rate(4) == pytest.approx(0.05)
    mul = TrainingConfig(eta0=0.2, lr_schedule="multiplicative", lr_decay=0.5)
    assert mul.learning_rate(1) == pytest.approx(0.2)
    assert mul.learning_rate(3) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        mul.learning_rate(0)
    with pytest.raises(ValueError):
        TrainingConfig(lr_schedule="warmup")


def make_setup(n_clients=8, count=60, seed=5):
    ds = generate_synthetic(1.0, 1.0, n_clients, counts=[count] * n_clients, seed=seed)
    pop = draw_heterogeneous_population(
        n_clients, CostMeans(0.1, 2.0, 1e-3, 2e-2), 1 / 3, seed=seed, data_weights=ds.data_weights
    )
    return pop, ds


def test_fedavg_matches_sequential_reference():
    # the batched round must equal per-client local_sgd plus weighted averaging
    pop, ds = make_setup()
    cfg = TrainingConfig()
    rec = fedavg_run(pop, ds, k=3, e=5, config=cfg, seed=21, max_rounds=2)

    w = ModelState.zeros(ds.feature_dim).weights
    for rnd in (1, 2):
        lr = cfg.learning_rate(rnd)
        sel = np.sort(substream(21, "sample", rnd).choice(ds.n_clients, size=3, replace=False))
        locals_ = []
        for cid in sel:
            x = np.hstack([ds.features[cid], np.ones((ds.features[cid].shape[0], 1))])
            rng = substream(21, "local", rnd, int(cid))
            locals_.append(local_sgd(w, x, ds.labels[cid], 5, lr, cfg, rng))
        pw = ds.data_weights[sel]
        w = np.tensordot(pw / pw.sum(), np.stack(locals_), axes=1)
    np.testing.assert_allclose(rec.final_weights, w, atol=1e-12)


def test_fedavg_deterministic_given_seed():
    pop, ds = make_setup()
    a = fedavg_run(pop, ds, 4, 3, TrainingConfig(), seed=9, max_rounds=5)
    b = fedavg_run(pop, ds, 4, 3, TrainingConfig(), seed=9, max_rounds=5)
    np.testing.assert_array_equal(a.losses, b.losses)
    np.testing.assert_array_equal(a.final_weights, b.final_weights)
    c = fedavg_run(pop, ds, 4, 3, TrainingConfig(), seed=10, max_rounds=5)
    assert not np.array_equal(a.losses, c.losses)


def test_single_client_pool_is_centralized_sgd():
    # n=1, k=1: every round trains the only client; equals plain mini-batch SGD
    ds = generate_synthetic(0.0, 0.0, 1, counts=[120], seed=7)
    pop = build_population([DeviceProfile(0.1, 2.0, 1e-3, 2e-2)])
    cfg = TrainingConfig(batch_size=16)
    rec = fedavg_run(pop, ds, 1, 4, cfg, seed=13, max_rounds=3)

    x = np.hstack([ds.features[0], np.ones((ds.features[0].shape[0], 1))])
    w = ModelState.zeros(ds.feature_dim).weights
    for rnd in (1, 2, 3):
        w = local_sgd(w, x, ds.labels[0], 4, cfg.learning_rate(rnd), cfg, substream(13, "local", rnd, 0))
    np.testing.assert_allclose(rec.final_weights, w, atol=1e-12)


def test_round_costs_use_sampled_devices():
    pop, ds = make_setup()
    e = 6
    rec = fedavg_run(pop, ds, 3, e, TrainingConfig(), seed=33, max_rounds=4)
    times = pop.round_times_s(e)
    energies = pop.round_energies_j(e)
    for rnd, sel in enumerate(rec.sampled):
        assert rec.round_times_s[rnd] == pytest.approx(times[list(sel)].max())
        assert rec.round_energies_j[rnd] == pytest.approx(energies[list(sel)].sum())


def test_target_stop_and_rounds_to():
    pop, ds = make_setup(n_clients=10, count=80)
    rec = fedavg_run(pop, ds, 10, 10, TrainingConfig(), seed=3, target_loss=1.8, max_rounds=400)
    assert rec.reached_target
    assert rec.losses[-1] <= 1.8
    assert np.all(rec.losses[:-1] > 1.8)
    assert rec.rounds_to(1.8) == rec.rounds
    assert rec.rounds_to(0.0) is None
    # cumulative cost lengths line up with rounds
    assert len(rec.round_times_s) == rec.rounds
    assert rec.cumulative_time_s[-1] == pytest.approx(rec.round_times_s.sum())


def test_measure_cost_to_target():
    pop, ds = make_setup(n_clients=10, count=80)
    rec = fedavg_run(pop, ds, 5, 8, TrainingConfig(), seed=4, target_loss=1.9, max_rounds=400)
    cb = measure_cost_to_target(rec, CostWeights(gamma=0.25))
    assert cb.time_s == pytest.approx(rec.round_times_s.sum())
    assert cb.weighted_total == pytest.approx(0.75 * cb.time_s + 0.25 * cb.energy_j)


def test_unreachable_target_raises():
    pop, ds = make_setup()
    rec = fedavg_run(pop, ds, 2, 2, TrainingConfig(), seed=5, target_loss=0.0001, max_rounds=3)
    assert not rec.reached_target
    with pytest.raises(UnreachableLossError):
        measure_cost_to_target(rec, CostWeights(gamma=0.5))
    cb = measure_cost_to_target(rec, CostWeights(gamma=0.5), require_reached=False)
    assert cb.time_s > 0


def test_simulator_wrapper_matches_free_function():
    pop, ds = make_setup()
    sim = FedSimulator(pop, ds, TrainingConfig())
    a = sim.run(3, 4, seed=2, max_rounds=6)
    b = fedavg_run(pop, ds, 3, 4, TrainingConfig(), seed=2, max_rounds=6)
    np.testing.assert_array_equal(a.losses, b.losses)


def test_k_validation():
    pop, ds = make_setup()
    with pytest.raises(ValueError):
        fedavg_run(pop, ds, 0, 4, TrainingConfig(), seed=1)
    with pytest.raises(ValueError):
        fedavg_run(pop, ds, 9, 4, TrainingConfig(), seed=1)  # k > n
    with pytest.raises(ValueError):
        fedavg_run(pop, ds, 3, 0, TrainingConfig(), seed=1)


def test_loss_decreases_on_average():
    pop, ds = make_setup(n_clients=10, count=100)
    rec = fedavg_run(pop, ds, 10, 10, TrainingConfig(), seed=6, max_rounds=60)
    assert rec.losses[-1] < rec.initial_loss
    assert rec.initial_loss == pytest.approx(np.log(10.0), rel=1e-6)
