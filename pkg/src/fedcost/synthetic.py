"""Synthetic non-iid classification data for federated training runs.

The generator produces 60-dimensional, 10-class client datasets whose
heterogeneity is controlled by two knobs: alpha perturbs each client's
ground-truth softmax model around a shared base (alpha = 0 means every
client labels with the same rule) and beta shifts each client's feature
means (beta = 0 means one shared feature distribution).  Sample counts
follow an unbalanced power-law profile.  A label-partition builder is
included for shard-style splits of an existing pool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import substream

__all__ = [
    "FEATURE_DIM",
    "NUM_CLASSES",
    "PowerLawCounts",
    "SyntheticDataset",
    "power_law_counts",
    "generate_synthetic",
    "partition_by_label",
    "save_dataset",
    "load_dataset",
]

FEATURE_DIM = 60
NUM_CLASSES = 10

# per-coordinate feature std: sqrt of the decaying diagonal covariance j^-1.2
_FEATURE_STD = (np.arange(1, FEATURE_DIM + 1, dtype=float) ** -1.2) ** 0.5

# Shared-base signal scale.  Labels are argmax-invariant to a positive
# rescaling of the shared model, so this leaves the alpha=0 iid limit
# untouched; at alpha=1 it sets how much client labelers disagree, which
# controls how many rounds federated SGD needs at a given target loss.
_BASE_SCALE = 0.2


@dataclass(frozen=True)
class PowerLawCounts:
    """Unbalanced sample-count profile: count at size rank r scales like r^-exponent.

    The profile is normalized so counts average mean_samples per client;
    with the default exponent 0.8 the count standard deviation lands near
    1.48x the mean.  Ranks are shuffled across clients by seed, which
    leaves the mean/std of the realized counts unchanged.
    """

    mean_samples: int = 245
    exponent: float = 0.8
    min_count: int = 2

    def __post_init__(self) -> None:
        if self.mean_samples < 1 or self.min_count < 1:
            raise ValueError("mean_samples and min_count must be >= 1")
        if self.exponent < 0.0:
            raise ValueError("exponent must be nonnegative")


def power_law_counts(n_clients: int, spec: PowerLawCounts, rng: np.random.Generator) -> np.ndarray:
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    shares = np.arange(1, n_clients + 1, dtype=float) ** -spec.exponent
    shares /= shares.sum()
    counts = np.maximum(
        np.rint(shares * spec.mean_samples * n_clients).astype(int), spec.min_count
    )
    return rng.permutation(counts)


@dataclass(frozen=True)
class SyntheticDataset:
    """Per-client feature/label arrays.

    features[k] has shape (n_k, dim) and labels[k] shape (n_k,) with
    integer classes in [0, NUM_CLASSES).
    """

    features: tuple[np.ndarray, ...]
    labels: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.features) != len(self.labels) or len(self.features) == 0:
            raise ValueError("features and labels must be nonempty and aligned")
        dim = self.features[0].shape[1]
        for x, y in zip(self.features, self.labels):
            if x.ndim != 2 or x.shape[1] != dim or y.shape != (x.shape[0],):
                raise ValueError("inconsistent client array shapes")
            if x.shape[0] < 1:
                raise ValueError("every client needs at least one sample")
            if y.min() < 0 or y.max() >= NUM_CLASSES:
                raise ValueError(f"labels must lie in [0, {NUM_CLASSES})")

    @property
    def n_clients(self) -> int:
        return len(self.features)

    @property
    def feature_dim(self) -> int:
        return self.features[0].shape[1]

    @cached_property
    def counts(self) -> np.ndarray:
        return np.array([x.shape[0] for x in self.features])

    @property
    def total_samples(self) -> int:
        return int(self.counts.sum())

    @cached_property
    def data_weights(self) -> np.ndarray:
        counts = self.counts.astype(float)
        return counts / counts.sum()


def generate_synthetic(
    alpha: float,
    beta: float,
    n_clients: int,
    counts: PowerLawCounts | np.ndarray | list[int] = PowerLawCounts(),
    seed: int = 0,
) -> SyntheticDataset:
    """Draw a heterogeneous synthetic dataset.

    A shared base softmax model (and shared feature-mean vector) is drawn
    once; each client adds Normal(0, alpha) perturbations to the model and
    a Normal(0, beta) shift to the feature means, then draws features with
    the decaying diagonal covariance and labels them with its own model's
    argmax.  alpha = beta = 0 therefore collapses to one shared labeling
    rule and one shared feature distribution.
    """
    if alpha < 0.0 or beta < 0.0:
        raise ValueError("alpha and beta must be nonnegative")
    rng = substream(seed, "synthetic")
    if isinstance(counts, PowerLawCounts):
        client_counts = power_law_counts(n_clients, counts, rng)
    else:
        client_counts = np.asarray(counts, dtype=int)
        if client_counts.shape != (n_clients,) or np.any(client_counts < 1):
            raise ValueError("explicit counts must give every client at least one sample")

    base_w = rng.standard_normal((NUM_CLASSES, FEATURE_DIM)) * _BASE_SCALE
    base_b = rng.standard_normal(NUM_CLASSES) * _BASE_SCALE
    base_mean = rng.standard_normal(FEATURE_DIM)

    features, labels = [], []
    for n_k in client_counts:
        w_k = base_w + rng.normal(0.0, alpha, size=(NUM_CLASSES, FEATURE_DIM))
        b_k = base_b + rng.normal(0.0, alpha, size=NUM_CLASSES)
        mean_k = base_mean + rng.normal(0.0, beta, size=FEATURE_DIM)
        x = mean_k + rng.standard_normal((int(n_k), FEATURE_DIM)) * _FEATURE_STD
        logits = x @ w_k.T + b_k
        features.append(x)
        labels.append(np.argmax(logits, axis=1))
    return SyntheticDataset(features=tuple(features), labels=tuple(labels))


def partition_by_label(
    features: np.ndarray,
    labels: np.ndarray,
    n_clients: int,
    labels_per_client: int,
    samples_per_client: int,
    seed: int = 0,
) -> SyntheticDataset:
    """Split a labeled pool so each client gets exactly labels_per_client classes.

    Every client receives exactly samples_per_client samples drawn without
    replacement from its assigned classes (as evenly split across them as
    possible).  Classes are assigned greedily by remaining stock with a
    seeded shuffle for tie-breaking; raises ValueError when the pool
    cannot supply a client.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ValueError("pool must be (n, dim) features with aligned labels")
    classes = np.unique(labels)
    if labels_per_client < 1 or labels_per_client > classes.size:
        raise ValueError(f"labels_per_client must lie in [1, {classes.size}]")
    if samples_per_client < labels_per_client:
        raise ValueError("samples_per_client must cover at least one sample per class")

    rng = substream(seed, "partition")
    stock = {}
    for cls in classes:
        idx = np.flatnonzero(labels == cls)
        stock[int(cls)] = list(rng.permutation(idx))

    base, extra = divmod(samples_per_client, labels_per_client)
    out_features, out_labels = [], []
    for _ in range(n_clients):
        order = rng.permutation(list(stock.keys()))
        ranked = sorted(order, key=lambda c: -len(stock[c]))
        chosen = ranked[:labels_per_client]
        takes = [base + (1 if i < extra else 0) for i in range(labels_per_client)]
        if any(len(stock[c]) < t for c, t in zip(chosen, takes)):
            raise ValueError("pool exhausted: not enough samples left for a client")
        idx = []
        for cls, take in zip(chosen, takes):
            idx.extend(stock[cls][:take])
            del stock[cls][:take]
        idx = np.array(idx)
        out_features.append(features[idx])
        out_labels.append(labels[idx].astype(int))
    return SyntheticDataset(features=tuple(out_features), labels=tuple(out_labels))


def save_dataset(dataset: SyntheticDataset, path) -> None:
    """Write one sample per row: client id, label, then the feature values."""
    dim = dataset.feature_dim
    header = "client,label," + ",".join(f"f{j:02d}" for j in range(dim))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for client, (x, y) in enumerate(zip(dataset.features, dataset.labels)):
            for row, label in zip(x, y):
                values = ",".join(repr(float(v)) for v in row)
                fh.write(f"{client},{int(label)},{values}\n")


def load_dataset(path) -> SyntheticDataset:
    """Read a dataset written by save_dataset; round-trips exactly."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        columns = header.split(",")
        if columns[:2] != ["client", "label"]:
            raise ValueError(f"unrecognized dataset header: {header!r}")
        dim = len(columns) - 2
        by_client: dict[int, tuple[list, list]] = {}
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != dim + 2:
                raise ValueError(f"row has {len(parts)} fields, expected {dim + 2}")
            client, label = int(parts[0]), int(parts[1])
            bucket = by_client.setdefault(client, ([], []))
            bucket[0].append([float(v) for v in parts[2:]])
            bucket[1].append(label)
    if not by_client:
        raise ValueError("dataset file has no rows")
    clients = sorted(by_client)
    features = tuple(np.array(by_client[c][0]) for c in clients)
    labels = tuple(np.array(by_client[c][1], dtype=int) for c in clients)
    return SyntheticDataset(features=features, labels=labels)
