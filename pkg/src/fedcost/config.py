"""Experiment configuration: YAML schema, validation, and runtime assembly.

A config file is a single YAML document; every section is optional and
missing fields fall back to the defaults below (a 100-device setup with
mean costs (0.1 s, 2 s, 1e-3 J, 2e-2 J), relative spread 1/3, synthetic
data with unit heterogeneity, and target loss 1.05).  Unknown keys are
rejected so typos fail loudly.  See the README for the documented schema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .core import ConfigError, CostMeans, Population, draw_heterogeneous_population
from .simulation import FedSimulator, TrainingConfig
from .synthetic import PowerLawCounts, SyntheticDataset, generate_synthetic, load_dataset

__all__ = [
    "PopulationConfig",
    "DatasetConfig",
    "TrainingSection",
    "BoundConfig",
    "EstimationConfig",
    "PlantedBound",
    "OptimizerConfig",
    "SimulateConfig",
    "SweepConfig",
    "TradeoffConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "default_config",
    "build_runtime",
]


def _expect_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


def _number(mapping: dict, key: str, default, where: str, *, minimum=None, maximum=None, allow_none=False):
    value = mapping.get(key, default)
    if value is None:
        if allow_none:
            return None
        raise ConfigError(f"{where}.{key} must be a number")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}.{key} must be finite")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}.{key} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{where}.{key} must be <= {maximum}, got {value}")
    return value


def _integer(mapping: dict, key: str, default, where: str, *, minimum=None):
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}.{key} must be >= {minimum}, got {value}")
    return int(value)


@dataclass(frozen=True)
class PopulationConfig:
    n: int = 100
    t_comp_per_iter_s: float = 0.1
    t_comm_s: float = 2.0
    e_comp_per_iter_j: float = 1e-3
    e_comm_j: float = 2e-2
    rel_std: float = 1.0 / 3.0

    @property
    def means(self) -> CostMeans:
        return CostMeans(
            self.t_comp_per_iter_s, self.t_comm_s, self.e_comp_per_iter_j, self.e_comm_j
        )


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "synthetic"  # synthetic | file
    alpha: float = 1.0
    beta: float = 1.0
    mean_samples: int = 245
    exponent: float = 0.8
    min_count: int = 2
    path: str | None = None


@dataclass(frozen=True)
class TrainingSection:
    batch_size: int = 64
    eta0: float = 0.1
    lr_schedule: str = "inverse"
    lr_decay: float = 0.996
    l2: float = 1e-4
    target_loss: float = 1.05
    max_rounds: int = 2000

    def to_training_config(self) -> TrainingConfig:
        return TrainingConfig(
            batch_size=self.batch_size,
            eta0=self.eta0,
            lr_schedule=self.lr_schedule,
            lr_decay=self.lr_decay,
            l2=self.l2,
        )


@dataclass(frozen=True)
class BoundConfig:
    rho: float | None = 3750.0
    a0: float | None = None
    b0: float | None = None
    epsilon: float | None = None


@dataclass(frozen=True)
class PlantedBound:
    a0: float
    b0: float
    f_star: float
    d: float = 0.0


@dataclass(frozen=True)
class EstimationConfig:
    probes: tuple[tuple[int, int], ...] = (
        (10, 10),
        (20, 20),
        (30, 30),
        (40, 40),
        (50, 50),
        (60, 60),
        (80, 80),
    )
    f_a: float = 1.5
    f_b: float = 1.3
    max_rounds: int = 3000
    planted: PlantedBound | None = None


@dataclass(frozen=True)
class OptimizerConfig:
    eps0: float = 1e-6
    max_iters: int = 100
    init: tuple[float, float] | None = None


@dataclass(frozen=True)
class SimulateConfig:
    point: tuple[int, int] = (10, 30)
    n_seeds: int = 1


@dataclass(frozen=True)
class SweepConfig:
    k_values: tuple[int, ...] = (1, 5, 10, 20, 50, 100)
    e_values: tuple[int, ...] = (5, 10, 20, 30, 50)
    seeds_per_cell: int = 5


@dataclass(frozen=True)
class TradeoffConfig:
    gammas: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    seeds_per_gamma: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 20240601
    gamma: float = 0.5
    output_dir: str = "out"
    workers: int = 1
    population: PopulationConfig = field(default_factory=PopulationConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    training: TrainingSection = field(default_factory=TrainingSection)
    bound: BoundConfig = field(default_factory=BoundConfig)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    tradeoff: TradeoffConfig = field(default_factory=TradeoffConfig)


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def _parse_population(raw: dict) -> PopulationConfig:
    where = "population"
    _reject_unknown(raw, {"n", "means", "rel_std"}, where)
    means = _expect_mapping(raw.get("means"), f"{where}.means")
    _reject_unknown(
        means, {"t_comp_per_iter_s", "t_comm_s", "e_comp_per_iter_j", "e_comm_j"}, f"{where}.means"
    )
    defaults = PopulationConfig()
    return PopulationConfig(
        n=_integer(raw, "n", defaults.n, where, minimum=1),
        t_comp_per_iter_s=_number(means, "t_comp_per_iter_s", defaults.t_comp_per_iter_s, f"{where}.means", minimum=1e-12),
        t_comm_s=_number(means, "t_comm_s", defaults.t_comm_s, f"{where}.means", minimum=1e-12),
        e_comp_per_iter_j=_number(means, "e_comp_per_iter_j", defaults.e_comp_per_iter_j, f"{where}.means", minimum=1e-12),
        e_comm_j=_number(means, "e_comm_j", defaults.e_comm_j, f"{where}.means", minimum=1e-12),
        rel_std=_number(raw, "rel_std", defaults.rel_std, where, minimum=0.0),
    )


def _parse_dataset(raw: dict) -> DatasetConfig:
    where = "dataset"
    _reject_unknown(raw, {"kind", "alpha", "beta", "counts", "path"}, where)
    defaults = DatasetConfig()
    kind = raw.get("kind", defaults.kind)
    if kind not in ("synthetic", "file"):
        raise ConfigError(f"{where}.kind must be 'synthetic' or 'file', got {kind!r}")
    counts = _expect_mapping(raw.get("counts"), f"{where}.counts")
    _reject_unknown(counts, {"mean_samples", "exponent", "min_count"}, f"{where}.counts")
    path = raw.get("path", defaults.path)
    if kind == "file" and not isinstance(path, str):
        raise ConfigError(f"{where}.path is required for kind 'file'")
    return DatasetConfig(
        kind=kind,
        alpha=_number(raw, "alpha", defaults.alpha, where, minimum=0.0),
        beta=_number(raw, "beta", defaults.beta, where, minimum=0.0),
        mean_samples=_integer(counts, "mean_samples", defaults.mean_samples, f"{where}.counts", minimum=1),
        exponent=_number(counts, "exponent", defaults.exponent, f"{where}.counts", minimum=0.0),
        min_count=_integer(counts, "min_count", defaults.min_count, f"{where}.counts", minimum=1),
        path=path,
    )


def _parse_training(raw: dict) -> TrainingSection:
    where = "training"
    _reject_unknown(
        raw,
        {"batch_size", "eta0", "lr_schedule", "lr_decay", "l2", "target_loss", "max_rounds"},
        where,
    )
    defaults = TrainingSection()
    schedule = raw.get("lr_schedule", defaults.lr_schedule)
    if schedule not in ("inverse", "multiplicative"):
        raise ConfigError(f"{where}.lr_schedule must be 'inverse' or 'multiplicative'")
    return TrainingSection(
        batch_size=_integer(raw, "batch_size", defaults.batch_size, where, minimum=1),
        eta0=_number(raw, "eta0", defaults.eta0, where, minimum=1e-12),
        lr_schedule=schedule,
        lr_decay=_number(raw, "lr_decay", defaults.lr_decay, where, minimum=1e-12, maximum=1.0),
        l2=_number(raw, "l2", defaults.l2, where, minimum=0.0),
        target_loss=_number(raw, "target_loss", defaults.target_loss, where, minimum=1e-12),
        max_rounds=_integer(raw, "max_rounds", defaults.max_rounds, where, minimum=1),
    )


def _parse_bound(raw: dict) -> BoundConfig:
    where = "bound"
    _reject_unknown(raw, {"rho", "a0", "b0", "epsilon"}, where)
    defaults = BoundConfig()
    rho = _number(raw, "rho", defaults.rho, where, minimum=1e-12, allow_none=True)
    a0 = _number(raw, "a0", defaults.a0, where, minimum=1e-12, allow_none=True)
    b0 = _number(raw, "b0", defaults.b0, where, minimum=1e-12, allow_none=True)
    epsilon = _number(raw, "epsilon", defaults.epsilon, where, minimum=1e-12, allow_none=True)
    if (a0 is None) != (b0 is None):
        raise ConfigError(f"{where}: a0 and b0 must be given together")
    if a0 is not None:
        # an explicit rho must agree with a0/b0; otherwise derive it
        if "rho" in raw and rho is not None and abs(a0 / b0 - rho) > 1e-9 * rho:
            raise ConfigError(f"{where}: a0/b0 = {a0 / b0} contradicts rho = {rho}")
        rho = a0 / b0
    return BoundConfig(rho=rho, a0=a0, b0=b0, epsilon=epsilon)


def _parse_probe_list(value, where: str) -> tuple[tuple[int, int], ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where} must be a nonempty list of [k, e] pairs")
    probes = []
    for item in value:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in item)
        ):
            raise ConfigError(f"{where} entries must be [k, e] integer pairs, got {item!r}")
        if item[0] < 1 or item[1] < 1:
            raise ConfigError(f"{where} entries must be >= 1, got {item!r}")
        probes.append((item[0], item[1]))
    return tuple(probes)


def _parse_estimation(raw: dict) -> EstimationConfig:
    where = "estimation"
    _reject_unknown(raw, {"probes", "f_a", "f_b", "max_rounds", "planted"}, where)
    defaults = EstimationConfig()
    probes = defaults.probes
    if "probes" in raw:
        probes = _parse_probe_list(raw["probes"], f"{where}.probes")
    f_a = _number(raw, "f_a", defaults.f_a, where, minimum=1e-12)
    f_b = _number(raw, "f_b", defaults.f_b, where, minimum=1e-12)
    if not f_a > f_b:
        raise ConfigError(f"{where}: f_a must exceed f_b, got ({f_a}, {f_b})")
    planted = None
    if raw.get("planted") is not None:
        praw = _expect_mapping(raw["planted"], f"{where}.planted")
        _reject_unknown(praw, {"a0", "b0", "f_star", "d"}, f"{where}.planted")
        planted = PlantedBound(
            a0=_number(praw, "a0", None, f"{where}.planted", minimum=1e-12),
            b0=_number(praw, "b0", None, f"{where}.planted", minimum=1e-12),
            f_star=_number(praw, "f_star", None, f"{where}.planted", minimum=0.0),
            d=_number(praw, "d", 0.0, f"{where}.planted", minimum=0.0),
        )
        if planted.f_star >= f_b:
            raise ConfigError(f"{where}.planted.f_star must lie below f_b")
    return EstimationConfig(
        probes=probes,
        f_a=f_a,
        f_b=f_b,
        max_rounds=_integer(raw, "max_rounds", defaults.max_rounds, where, minimum=1),
        planted=planted,
    )


def _parse_optimizer(raw: dict) -> OptimizerConfig:
    where = "optimizer"
    _reject_unknown(raw, {"eps0", "max_iters", "init"}, where)
    defaults = OptimizerConfig()
    init = raw.get("init")
    init_pair = None
    if init is not None:
        if not (isinstance(init, list) and len(init) == 2):
            raise ConfigError(f"{where}.init must be a [k, e] pair")
        init_pair = (float(init[0]), float(init[1]))
        if init_pair[0] < 1.0 or init_pair[1] < 1.0:
            raise ConfigError(f"{where}.init components must be >= 1")
    return OptimizerConfig(
        eps0=_number(raw, "eps0", defaults.eps0, where, minimum=0.0),
        max_iters=_integer(raw, "max_iters", defaults.max_iters, where, minimum=1),
        init=init_pair,
    )


def _parse_point(value, where: str) -> tuple[int, int]:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, int) for v in value)
        or value[0] < 1
        or value[1] < 1
    ):
        raise ConfigError(f"{where} must be a [k, e] pair of positive integers")
    return (value[0], value[1])


def _parse_simulate(raw: dict) -> SimulateConfig:
    where = "simulate"
    _reject_unknown(raw, {"point", "n_seeds"}, where)
    defaults = SimulateConfig()
    point = defaults.point if "point" not in raw else _parse_point(raw["point"], f"{where}.point")
    return SimulateConfig(
        point=point,
        n_seeds=_integer(raw, "n_seeds", defaults.n_seeds, where, minimum=1),
    )


def _parse_int_list(value, where: str) -> tuple[int, ...]:
    if (
        not isinstance(value, list)
        or not value
        or any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in value)
    ):
        raise ConfigError(f"{where} must be a nonempty list of positive integers")
    return tuple(value)


def _parse_sweep(raw: dict) -> SweepConfig:
    where = "sweep"
    _reject_unknown(raw, {"k_values", "e_values", "seeds_per_cell"}, where)
    defaults = SweepConfig()
    return SweepConfig(
        k_values=defaults.k_values if "k_values" not in raw else _parse_int_list(raw["k_values"], f"{where}.k_values"),
        e_values=defaults.e_values if "e_values" not in raw else _parse_int_list(raw["e_values"], f"{where}.e_values"),
        seeds_per_cell=_integer(raw, "seeds_per_cell", defaults.seeds_per_cell, where, minimum=1),
    )


def _parse_tradeoff(raw: dict) -> TradeoffConfig:
    where = "tradeoff"
    _reject_unknown(raw, {"gammas", "seeds_per_gamma"}, where)
    defaults = TradeoffConfig()
    gammas = defaults.gammas
    if "gammas" in raw:
        value = raw["gammas"]
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{where}.gammas must be a nonempty list")
        gammas = tuple(
            _number({"g": v}, "g", None, f"{where}.gammas", minimum=0.0, maximum=1.0) for v in value
        )
    return TradeoffConfig(
        gammas=gammas,
        seeds_per_gamma=_integer(raw, "seeds_per_gamma", defaults.seeds_per_gamma, where, minimum=1),
    )


def parse_config(raw) -> ExperimentConfig:
    """Validate a parsed YAML document into an ExperimentConfig."""
    raw = _expect_mapping(raw, "config")
    _reject_unknown(
        raw,
        {
            "seed", "gamma", "output_dir", "workers", "population", "dataset", "training",
            "bound", "estimation", "optimizer", "simulate", "sweep", "tradeoff",
        },
        "config",
    )
    defaults = ExperimentConfig()
    output_dir = raw.get("output_dir", defaults.output_dir)
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir must be a nonempty string")
    config = ExperimentConfig(
        seed=_integer(raw, "seed", defaults.seed, "config", minimum=0),
        gamma=_number(raw, "gamma", defaults.gamma, "config", minimum=0.0, maximum=1.0),
        output_dir=output_dir,
        workers=_integer(raw, "workers", defaults.workers, "config", minimum=1),
        population=_parse_population(_expect_mapping(raw.get("population"), "population")),
        dataset=_parse_dataset(_expect_mapping(raw.get("dataset"), "dataset")),
        training=_parse_training(_expect_mapping(raw.get("training"), "training")),
        bound=_parse_bound(_expect_mapping(raw.get("bound"), "bound")),
        estimation=_parse_estimation(_expect_mapping(raw.get("estimation"), "estimation")),
        optimizer=_parse_optimizer(_expect_mapping(raw.get("optimizer"), "optimizer")),
        simulate=_parse_simulate(_expect_mapping(raw.get("simulate"), "simulate")),
        sweep=_parse_sweep(_expect_mapping(raw.get("sweep"), "sweep")),
        tradeoff=_parse_tradeoff(_expect_mapping(raw.get("tradeoff"), "tradeoff")),
    )
    n = config.population.n
    for k, e in config.estimation.probes:
        if k > n:
            raise ConfigError(f"estimation probe k={k} exceeds population n={n}")
    if config.simulate.point[0] > n:
        raise ConfigError(f"simulate.point k={config.simulate.point[0]} exceeds population n={n}")
    if any(k > n for k in config.sweep.k_values):
        raise ConfigError(f"sweep.k_values contain k > population n={n}")
    if not config.training.target_loss > 0:
        raise ConfigError("training.target_loss must be positive")
    return config


def load_config(path) -> ExperimentConfig:
    """Load and validate a YAML config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    return parse_config(raw)


def build_runtime(config: ExperimentConfig) -> tuple[Population, SyntheticDataset, FedSimulator]:
    """Materialize the population, dataset, and simulator a config describes."""
    if config.dataset.kind == "file":
        dataset = load_dataset(config.dataset.path)
        if dataset.n_clients != config.population.n:
            raise ConfigError(
                f"dataset file has {dataset.n_clients} clients, population.n = {config.population.n}"
            )
    else:
        dataset = generate_synthetic(
            alpha=config.dataset.alpha,
            beta=config.dataset.beta,
            n_clients=config.population.n,
            counts=PowerLawCounts(
                mean_samples=config.dataset.mean_samples,
                exponent=config.dataset.exponent,
                min_count=config.dataset.min_count,
            ),
            seed=config.seed,
        )
    pop = draw_heterogeneous_population(
        n=config.population.n,
        means=config.population.means,
        rel_std=config.population.rel_std,
        seed=config.seed,
        data_weights=dataset.data_weights,
    )
    sim = FedSimulator(pop, dataset, config.training.to_training_config())
    return pop, dataset, sim
