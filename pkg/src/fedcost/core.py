"""Shared domain types for federated round-cost modeling.

Everything downstream (cost formulas, the alternating optimizer, the
simulator) works in terms of the types defined here: per-device cost
profiles, a population of devices with data weights, the time/energy
preference weight, and the convergence-bound constants.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "FedCostError",
    "UnidentifiedBoundError",
    "UnreachableLossError",
    "EstimationError",
    "ConfigError",
    "DeviceProfile",
    "CostMeans",
    "Population",
    "CostWeights",
    "BoundParams",
    "ControlPoint",
    "RngSeed",
    "derive_seed",
    "substream",
    "build_population",
    "draw_heterogeneous_population",
]

# Heterogeneous draws are floored at this fraction of the field mean so a
# profile can never go nonpositive.
TRUNCATION_FLOOR_FRACTION = 0.01


class FedCostError(Exception):
    """Base class for errors raised by this package."""


class UnidentifiedBoundError(FedCostError):
    """An absolute quantity was requested from ratio-only bound constants."""


class UnreachableLossError(FedCostError):
    """A target loss was not reached within the allowed number of rounds."""


class EstimationError(FedCostError):
    """The ratio estimator had no usable probe pairs."""


class ConfigError(FedCostError):
    """An experiment config failed schema validation."""


def derive_seed(seed: int, label: str, *key: int) -> int:
    """Collapse (seed, label, key...) into one reproducible 63-bit seed.

    Used to hand independent run seeds to simulations launched from a
    single base seed; stable across platforms and execution order.
    """
    material = f"{seed}:{label}:" + ":".join(str(int(k)) for k in key)
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def substream(seed: int, label: str, *key: int) -> np.random.Generator:
    """Derive an independent generator from (seed, purpose label, key...).

    The label is hashed (sha256, platform independent) so distinct
    purposes can never collide, and the integer key tuple separates e.g.
    rounds and client ids.  Identical arguments reproduce identical draw
    sequences no matter how many other streams were consumed, which is
    what makes parallel and sequential execution agree.
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    label_key = int.from_bytes(digest[:8], "little")
    entropy = (int(seed), label_key) + tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class RngSeed:
    """A seed plus a purpose label, resolvable to numpy generators.

    Two RngSeed values with equal (seed, stream_label) produce identical
    draw sequences; distinct labels give independent streams.
    """

    seed: int
    stream_label: str

    def generator(self, *key: int) -> np.random.Generator:
        return substream(self.seed, self.stream_label, *key)


@dataclass(frozen=True)
class DeviceProfile:
    """Per-round cost profile of one client device.

    The computation fields are paid once per local iteration, the
    communication fields once per round:

        round time   = t_comp_per_iter_s * local_steps + t_comm_s
        round energy = e_comp_per_iter_j * local_steps + e_comm_j

    All four fields must be strictly positive and finite.
    """

    t_comp_per_iter_s: float
    t_comm_s: float
    e_comp_per_iter_j: float
    e_comm_j: float

    def __post_init__(self) -> None:
        for name in ("t_comp_per_iter_s", "t_comm_s", "e_comp_per_iter_j", "e_comm_j"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"DeviceProfile.{name} must be strictly positive, got {value!r}")

    def round_time_s(self, local_steps: float) -> float:
        return self.t_comp_per_iter_s * local_steps + self.t_comm_s

    def round_energy_j(self, local_steps: float) -> float:
        return self.e_comp_per_iter_j * local_steps + self.e_comm_j


@dataclass(frozen=True)
class CostMeans:
    """Population-mean unit costs.

    Unlike DeviceProfile, the computation terms may be exactly zero
    (pure-communication regimes are analytically meaningful); the
    communication terms must stay strictly positive so a round always
    has nonzero cost.
    """

    t_comp_per_iter_s: float
    t_comm_s: float
    e_comp_per_iter_j: float
    e_comm_j: float

    def __post_init__(self) -> None:
        for name in ("t_comp_per_iter_s", "e_comp_per_iter_j"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"CostMeans.{name} must be nonnegative, got {value!r}")
        for name in ("t_comm_s", "e_comm_j"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"CostMeans.{name} must be strictly positive, got {value!r}")

    def round_time_s(self, local_steps: float) -> float:
        return self.t_comp_per_iter_s * local_steps + self.t_comm_s

    def round_energy_j(self, local_steps: float) -> float:
        return self.e_comp_per_iter_j * local_steps + self.e_comm_j


@dataclass(frozen=True)
class Population:
    """A fixed set of client devices with normalized data weights.

    data_weights[k] is the fraction of training samples held by device k;
    the weights must be nonnegative and sum to 1 within 1e-9.
    """

    devices: tuple[DeviceProfile, ...]
    data_weights: np.ndarray

    def __post_init__(self) -> None:
        if len(self.devices) < 1:
            raise ValueError("Population needs at least one device")
        weights = np.asarray(self.data_weights, dtype=float)
        if weights.shape != (len(self.devices),):
            raise ValueError(
                f"data_weights shape {weights.shape} does not match {len(self.devices)} devices"
            )
        if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
            raise ValueError("data_weights must be finite and nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-9:
            raise ValueError(f"data_weights must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, "data_weights", weights)

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @cached_property
    def t_comp_per_iter_s(self) -> np.ndarray:
        return np.array([d.t_comp_per_iter_s for d in self.devices])

    @cached_property
    def t_comm_s(self) -> np.ndarray:
        return np.array([d.t_comm_s for d in self.devices])

    @cached_property
    def e_comp_per_iter_j(self) -> np.ndarray:
        return np.array([d.e_comp_per_iter_j for d in self.devices])

    @cached_property
    def e_comm_j(self) -> np.ndarray:
        return np.array([d.e_comm_j for d in self.devices])

    @cached_property
    def means(self) -> CostMeans:
        """Unweighted population means of the four unit costs."""
        return CostMeans(
            t_comp_per_iter_s=float(self.t_comp_per_iter_s.mean()),
            t_comm_s=float(self.t_comm_s.mean()),
            e_comp_per_iter_j=float(self.e_comp_per_iter_j.mean()),
            e_comm_j=float(self.e_comm_j.mean()),
        )

    def round_times_s(self, local_steps: float) -> np.ndarray:
        return self.t_comp_per_iter_s * local_steps + self.t_comm_s

    def round_energies_j(self, local_steps: float) -> np.ndarray:
        return self.e_comp_per_iter_j * local_steps + self.e_comm_j


def build_population(
    devices: list[DeviceProfile] | tuple[DeviceProfile, ...],
    data_weights: np.ndarray | list[float] | None = None,
) -> Population:
    """Assemble a Population, normalizing sample counts into weights.

    data_weights may be raw (unnormalized) nonnegative counts; None means
    equal weights.
    """
    devices = tuple(devices)
    if data_weights is None:
        weights = np.full(len(devices), 1.0 / len(devices))
    else:
        raw = np.asarray(data_weights, dtype=float)
        total = float(raw.sum())
        if total <= 0.0:
            raise ValueError("data_weights must have positive total")
        weights = raw / total
    return Population(devices=devices, data_weights=weights)


def draw_heterogeneous_population(
    n: int,
    means: CostMeans,
    rel_std: float,
    seed: int,
    data_weights: np.ndarray | None = None,
) -> Population:
    """Draw n device profiles around the given means.

    Each of the four fields is drawn independently per device from
    Normal(mean, mean * rel_std) and floored at 0.01 * mean so profiles
    stay strictly positive.  rel_std = 0 reproduces the means exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if rel_std < 0.0:
        raise ValueError("rel_std must be nonnegative")
    locs = np.array(
        [means.t_comp_per_iter_s, means.t_comm_s, means.e_comp_per_iter_j, means.e_comm_j]
    )
    if np.any(locs <= 0.0):
        raise ValueError("heterogeneous draws need strictly positive means")
    rng = substream(seed, "population")
    draws = rng.normal(loc=locs, scale=locs * rel_std, size=(n, 4))
    draws = np.maximum(draws, TRUNCATION_FLOOR_FRACTION * locs)
    devices = [DeviceProfile(*row) for row in draws]
    return build_population(devices, data_weights)


@dataclass(frozen=True)
class CostWeights:
    """Preference weight between wall-clock time and device energy.

    gamma = 0 prices time only, gamma = 1 energy only; the blended cost
    of a run is (1 - gamma) * seconds + gamma * joules.
    """

    gamma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and 0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")

    @property
    def time_weight(self) -> float:
        return 1.0 - self.gamma

    @property
    def energy_weight(self) -> float:
        return self.gamma


@dataclass(frozen=True)
class BoundParams:
    """Constants of the convergence bound (a0 + b0 * (1 + penalty) * e^2) / (e * r).

    Only the ratio a0/b0 is identifiable from round-count probes, so the
    absolutes are optional.  When both absolutes are present they must be
    consistent with ratio_rho, and epsilon (the target optimality gap)
    makes round counts and absolute objective values computable.
    """

    ratio_rho: float
    a0: float | None = None
    b0: float | None = None
    epsilon: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.ratio_rho) and self.ratio_rho > 0.0):
            raise ValueError(f"ratio_rho must be strictly positive, got {self.ratio_rho!r}")
        if (self.a0 is None) != (self.b0 is None):
            raise ValueError("a0 and b0 must be provided together")
        if self.a0 is not None:
            if not (self.a0 > 0.0 and self.b0 > 0.0):
                raise ValueError("absolute bound constants must be strictly positive")
            if abs(self.a0 / self.b0 - self.ratio_rho) > 1e-9 * self.ratio_rho:
                raise ValueError(
                    f"a0/b0 = {self.a0 / self.b0!r} inconsistent with ratio_rho = {self.ratio_rho!r}"
                )
        if self.epsilon is not None and not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ValueError(f"epsilon must be strictly positive, got {self.epsilon!r}")

    @classmethod
    def from_ratio(cls, ratio_rho: float, epsilon: float | None = None) -> "BoundParams":
        return cls(ratio_rho=ratio_rho, epsilon=epsilon)

    @classmethod
    def from_absolute(cls, a0: float, b0: float, epsilon: float) -> "BoundParams":
        if not b0 > 0.0:
            raise ValueError("absolute bound constants must be strictly positive")
        return cls(ratio_rho=a0 / b0, a0=a0, b0=b0, epsilon=epsilon)

    @property
    def has_absolutes(self) -> bool:
        return self.a0 is not None

    @property
    def scale(self) -> float:
        """Factor b0/epsilon converting ratio-normalized objectives to absolute ones."""
        if self.a0 is None or self.epsilon is None:
            raise UnidentifiedBoundError(
                "absolute bound constants (a0, b0) and epsilon are required here; "
                "only the ratio a0/b0 was provided"
            )
        return self.b0 / self.epsilon


@dataclass(frozen=True)
class ControlPoint:
    """A control decision: clients sampled per round and local iterations.

    Continuous values are allowed; the optimizer rounds at the end.
    """

    k: float
    e: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k) and self.k >= 1.0):
            raise ValueError(f"k must be >= 1, got {self.k!r}")
        if not (math.isfinite(self.e) and self.e >= 1.0):
            raise ValueError(f"e must be >= 1, got {self.e!r}")
