"""Full-scale simulator checks that tie realized runs back to the cost model."""

import numpy as np

from fedcost.core import CostMeans, CostWeights, derive_seed, draw_heterogeneous_population
from fedcost.costs import expected_round_time_exact
from fedcost.simulation import FedSimulator, TrainingConfig, measure_cost_to_target
from fedcost.synthetic import generate_synthetic

SETUP3_MEANS = CostMeans(0.1, 2.0, 1e-3, 2e-2)


def test_more_clients_need_fewer_rounds_at_scale():
    # N=100 pool, inverse-decay schedule: averaging 20 clients per round
    # reaches the target in fewer mean rounds than averaging 10
    dataset = generate_synthetic(1.0, 1.0, 100, seed=20240601)
    pop = draw_heterogeneous_population(
        100, SETUP3_MEANS, 1 / 3, seed=20240601, data_weights=dataset.data_weights
    )
    sim = FedSimulator(pop, dataset, TrainingConfig(eta0=0.1, lr_schedule="inverse"))
    mean_rounds = {}
    for k in (10, 20):
        counts = []
        for i in range(20):
            record = sim.run(k, 20, seed=derive_seed(20240601, "k-comparison", k, i),
                             target_loss=1.05, max_rounds=2000)
            assert record.reached_target
            counts.append(record.rounds)
        mean_rounds[k] = float(np.mean(counts))
    assert mean_rounds[20] < mean_rounds[10], mean_rounds


def test_realized_time_matches_expected_straggler_time():
    # fixed 5-round runs: realized mean total time across 50 seeds agrees
    # with the exact expected straggler round time within 3 standard errors
    n, k, e, r = 20, 6, 7, 5
    dataset = generate_synthetic(1.0, 1.0, n, counts=[40] * n, seed=9)
    pop = draw_heterogeneous_population(
        n, SETUP3_MEANS, 1 / 3, seed=9, data_weights=dataset.data_weights
    )
    sim = FedSimulator(pop, dataset, TrainingConfig())
    totals = []
    for i in range(50):
        record = sim.run(k, e, seed=derive_seed(9, "fixed-rounds", i), max_rounds=r)
        assert record.rounds == r and not record.reached_target
        cost = measure_cost_to_target(record, CostWeights(0.0), require_reached=False)
        totals.append(cost.weighted_total)
    totals = np.asarray(totals)
    expected = expected_round_time_exact(pop, k, e) * r
    se = totals.std(ddof=1) / np.sqrt(len(totals))
    assert abs(totals.mean() - expected) <= 3.0 * se, (totals.mean(), expected, se)
