"""Synchronous federated averaging on multinomial logistic regression.

Each round samples clients uniformly without replacement, runs the same
number of local SGD steps on every sampled client starting from the
current global model, aggregates by data weight, and evaluates the global
loss on the full pool.  Wall-clock time per round is the slowest sampled
device (straggler), energy is the sum over sampled devices.

Per-client randomness is keyed by (seed, round, client id), so results
are a pure function of the inputs and independent of execution layout;
the inner loop batches all sampled clients into stacked matmuls for
throughput.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import CostWeights, Population, UnreachableLossError, substream
from .costs import CostBreakdown
from .synthetic import NUM_CLASSES, SyntheticDataset

__all__ = [
    "TrainingConfig",
    "ModelState",
    "FedRunRecord",
    "FedSimulator",
    "softmax_loss",
    "softmax_grad",
    "local_sgd",
    "fedavg_run",
    "measure_cost_to_target",
]


@dataclass(frozen=True)
class TrainingConfig:
    """Local-training hyperparameters shared by every client.

    The learning rate is constant within a round: the "inverse" schedule
    uses eta0 / (1 + r) with r the zero-based round index, "multiplicative"
    uses eta0 * lr_decay^r.  Mini-batches are drawn uniformly with
    replacement (one draw call per client-round, so batched and sequential
    execution consume identical streams).  The l2 penalty 0.5 * l2 * |w|^2
    keeps the objective strongly convex.
    """

    batch_size: int = 64
    eta0: float = 0.1
    lr_schedule: str = "inverse"
    lr_decay: float = 0.996
    l2: float = 1e-4

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (self.eta0 > 0.0 and math.isfinite(self.eta0)):
            raise ValueError("eta0 must be strictly positive")
        if self.lr_schedule not in ("inverse", "multiplicative"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if not (0.0 < self.lr_decay <= 1.0):
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.l2 < 0.0:
            raise ValueError("l2 must be nonnegative")

    def learning_rate(self, round_number: int) -> float:
        """Learning rate for a 1-based round number."""
        if round_number < 1:
            raise ValueError("round_number is 1-based")
        r = round_number - 1
        if self.lr_schedule == "inverse":
            return self.eta0 / (1.0 + r)
        return self.eta0 * self.lr_decay ** r


@dataclass(frozen=True)
class ModelState:
    """Global softmax model: weight matrix (classes, features + bias)."""

    weights: np.ndarray

    @classmethod
    def zeros(cls, feature_dim: int) -> "ModelState":
        return cls(weights=np.zeros((NUM_CLASSES, feature_dim + 1)))


def _with_bias(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))])


def softmax_loss(weights: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean cross entropy plus 0.5 * l2 * |weights|^2 (x already has the bias column)."""
    logits = x @ weights.T
    zmax = logits.max(axis=1, keepdims=True)
    log_norm = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
    ce = log_norm - logits[np.arange(x.shape[0]), y]
    return float(ce.mean()) + 0.5 * l2 * float(np.square(weights).sum())


def softmax_grad(weights: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    """Gradient of softmax_loss over the given batch."""
    logits = x @ weights.T
    logits -= logits.max(axis=1, keepdims=True)
    np.exp(logits, out=logits)
    logits /= logits.sum(axis=1, keepdims=True)
    logits[np.arange(x.shape[0]), y] -= 1.0
    return logits.T @ x / x.shape[0] + l2 * weights


def local_sgd(
    weights: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    local_steps: int,
    lr: float,
    config: TrainingConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Reference sequential local update: local_steps mini-batch SGD steps.

    Batch indices for all steps are drawn in one call, matching the
    batched engine draw-for-draw.
    """
    if local_steps < 1:
        raise ValueError("local_steps must be >= 1")
    idx = rng.integers(0, x.shape[0], size=(local_steps, config.batch_size))
    w = weights.copy()
    for step in range(local_steps):
        batch = idx[step]
        w = w - lr * softmax_grad(w, x[batch], y[batch], config.l2)
    return w


@dataclass
class FedRunRecord:
    """Complete per-round record of one federated run.

    losses[m-1] is the global loss after round m's aggregation; the run
    reached its target when some loss fell to target_loss or below.
    """

    target_loss: float | None
    reached_target: bool
    initial_loss: float
    losses: np.ndarray
    round_times_s: np.ndarray
    round_energies_j: np.ndarray
    sampled: tuple[np.ndarray, ...]
    final_weights: np.ndarray

    @property
    def rounds(self) -> int:
        return len(self.losses)

    @cached_property
    def cumulative_time_s(self) -> np.ndarray:
        return np.cumsum(self.round_times_s)

    @cached_property
    def cumulative_energy_j(self) -> np.ndarray:
        return np.cumsum(self.round_energies_j)

    def rounds_to(self, threshold: float) -> int | None:
        """First 1-based round whose loss is <= threshold, or None."""
        hits = np.flatnonzero(self.losses <= threshold)
        return int(hits[0]) + 1 if hits.size else None


def _pool(dataset: SyntheticDataset):
    x_pool = _with_bias(np.concatenate(dataset.features, axis=0))
    y_pool = np.concatenate(dataset.labels, axis=0)
    offsets = np.concatenate([[0], np.cumsum(dataset.counts)[:-1]])
    return x_pool, y_pool, offsets


def fedavg_run(
    pop: Population,
    dataset: SyntheticDataset,
    k: int,
    e: int,
    config: TrainingConfig,
    seed: int,
    target_loss: float | None = None,
    max_rounds: int = 1000,
    _pooled=None,
) -> FedRunRecord:
    """Run federated averaging from a zero model until the target loss or cap.

    Pure function of its arguments: replaying with identical inputs gives
    a bit-identical record.
    """
    n = pop.n_devices
    if dataset.n_clients != n:
        raise ValueError(f"dataset has {dataset.n_clients} clients, population {n}")
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    if e < 1:
        raise ValueError("e must be >= 1")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")

    x_pool, y_pool, offsets = _pooled if _pooled is not None else _pool(dataset)
    counts = dataset.counts
    # per-sample weights so the global loss is the data-weighted client average
    sample_weights = np.repeat(pop.data_weights / counts, counts)
    dim1 = x_pool.shape[1]
    batch = config.batch_size
    eye = np.eye(NUM_CLASSES)

    def global_loss(w: np.ndarray) -> float:
        logits = x_pool @ w.T
        zmax = logits.max(axis=1, keepdims=True)
        log_norm = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
        ce = log_norm - logits[np.arange(x_pool.shape[0]), y_pool]
        return float(sample_weights @ ce) + 0.5 * config.l2 * float(np.square(w).sum())

    w_global = np.zeros((NUM_CLASSES, dim1))
    initial_loss = global_loss(w_global)
    losses, times, energies, sampled_all = [], [], [], []
    reached = False

    for m in range(1, max_rounds + 1):
        lr = config.learning_rate(m)
        sel = substream(seed, "sample", m).choice(n, size=k, replace=False)
        sel.sort()
        # one index draw per sampled client, keyed by (seed, round, client)
        g_idx = np.empty((e, k, batch), dtype=np.int64)
        for j, cid in enumerate(sel):
            local = substream(seed, "local", m, int(cid)).integers(
                0, int(counts[cid]), size=(e, batch)
            )
            g_idx[:, j, :] = local + offsets[cid]

        w_stack = np.broadcast_to(w_global, (k, NUM_CLASSES, dim1)).copy()
        for step in range(e):
            rows = x_pool[g_idx[step].ravel()].reshape(k, batch, dim1)
            probs = np.matmul(rows, w_stack.transpose(0, 2, 1))
            probs -= probs.max(axis=2, keepdims=True)
            np.exp(probs, out=probs)
            probs /= probs.sum(axis=2, keepdims=True)
            probs -= eye[y_pool[g_idx[step]]]
            grad = np.matmul(probs.transpose(0, 2, 1), rows) / batch + config.l2 * w_stack
            w_stack -= lr * grad

        agg_weights = pop.data_weights[sel]
        w_global = np.tensordot(agg_weights, w_stack, axes=1) / agg_weights.sum()

        losses.append(global_loss(w_global))
        times.append(float((pop.t_comp_per_iter_s[sel] * e + pop.t_comm_s[sel]).max()))
        energies.append(float((pop.e_comp_per_iter_j[sel] * e + pop.e_comm_j[sel]).sum()))
        sampled_all.append(sel)
        if target_loss is not None and losses[-1] <= target_loss:
            reached = True
            break

    return FedRunRecord(
        target_loss=target_loss,
        reached_target=reached,
        initial_loss=initial_loss,
        losses=np.array(losses),
        round_times_s=np.array(times),
        round_energies_j=np.array(energies),
        sampled=tuple(sampled_all),
        final_weights=w_global,
    )


class FedSimulator:
    """A population + dataset + training config bundle with a cached sample pool.

    Repeated runs (probes, sweeps) share the pooled design matrix instead
    of rebuilding it per run.
    """

    def __init__(self, pop: Population, dataset: SyntheticDataset, config: TrainingConfig):
        if dataset.n_clients != pop.n_devices:
            raise ValueError("population and dataset sizes differ")
        self.pop = pop
        self.dataset = dataset
        self.config = config
        self._pooled = _pool(dataset)

    def run(
        self,
        k: int,
        e: int,
        seed: int,
        target_loss: float | None = None,
        max_rounds: int = 1000,
    ) -> FedRunRecord:
        return fedavg_run(
            self.pop,
            self.dataset,
            k,
            e,
            self.config,
            seed,
            target_loss=target_loss,
            max_rounds=max_rounds,
            _pooled=self._pooled,
        )


def measure_cost_to_target(
    record: FedRunRecord, weights: CostWeights, require_reached: bool = True
) -> CostBreakdown:
    """Realized totals of a run, blended by the time/energy weight."""
    if require_reached and not record.reached_target:
        raise UnreachableLossError(
            f"run stopped after {record.rounds} rounds above target {record.target_loss!r}"
        )
    time_s = float(record.round_times_s.sum())
    energy_j = float(record.round_energies_j.sum())
    return CostBreakdown(
        time_s=time_s,
        energy_j=energy_j,
        weighted_total=weights.time_weight * time_s + weights.energy_weight * energy_j,
    )
