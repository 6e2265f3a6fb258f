"""Expected time/energy cost of synchronous federated rounds.

A round samples k of n devices; its wall-clock time is the slowest
sampled device's round time (straggler effect) and its energy is the sum
over sampled devices.  This module gives the exact order-statistic
expectation of the straggler time, a Monte Carlo cross-check, the
classical mean-field approximation, and the per-epsilon objective that
the optimizer minimizes: expected blended cost multiplied by the rounds
required to reach a target optimality gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import BoundParams, ControlPoint, CostMeans, CostWeights, Population, substream

__all__ = [
    "CostBreakdown",
    "P3Value",
    "sampling_penalty",
    "straggler_weights",
    "expected_round_time_exact",
    "expected_round_time_mc",
    "approx_expected_time",
    "expected_energy",
    "exact_expected_total_cost",
    "rounds_factor",
    "p3_relative",
    "p3_objective",
    "r_required",
]

_MC_CHUNK = 100_000


@dataclass(frozen=True)
class CostBreakdown:
    """Total seconds, joules, and their gamma-blend for a (k, e, r) schedule."""

    time_s: float
    energy_j: float
    weighted_total: float


class P3Value(NamedTuple):
    """Objective value plus a flag for ratio-only (scale-free) evaluation.

    When relative is True the value is the true objective divided by the
    unknown positive constant b0/epsilon, so comparisons and argmins are
    unaffected but the magnitude is not in cost units.
    """

    value: float
    relative: bool


def _as_means(pop: Population | CostMeans) -> CostMeans:
    return pop.means if isinstance(pop, Population) else pop


def _resolve_n(pop: Population | CostMeans, n: int | None) -> int:
    if isinstance(pop, Population):
        if n is not None and n != pop.n_devices:
            raise ValueError(f"n={n} contradicts population of {pop.n_devices} devices")
        return pop.n_devices
    if n is None:
        raise ValueError("n is required when only cost means are given")
    return int(n)


def sampling_penalty(k, n: int):
    """Variance inflation (n - k) / (k (n - 1)) from sampling k of n clients.

    Zero at full participation and for a single-device population; grows
    to (n - 1)^-1 * (n - k)/k as participation shrinks.  Accepts scalar
    or array k.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 1.0) or np.any(k_arr > n):
        raise ValueError(f"k must lie in [1, {n}]")
    if n == 1:
        result = np.zeros_like(k_arr)
    else:
        result = (n - k_arr) / (k_arr * (n - 1))
    return float(result) if np.isscalar(k) or result.ndim == 0 else result


def straggler_weights(n: int, k: int) -> np.ndarray:
    """Probability that the i-th smallest of n values is the max of a random k-subset.

    Returns a length-n vector aligned with ascending sorted order; entries
    below index k-1 are zero.  Seeded at i = k with 1/C(n, k) and grown by
    the multiplicative identity w_{i+1}/w_i = i / (i - k + 1), all in log
    space, so no factorials are ever materialized.  The weights must sum
    to 1 within 1e-9 or an ArithmeticError is raised.
    """
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    log_w = np.full(n, -np.inf)
    log_w[k - 1] = -(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))
    for i in range(k, n):  # i is the 1-based index of the previous entry
        log_w[i] = log_w[i - 1] + math.log(i) - math.log(i - k + 1)
    weights = np.exp(log_w)
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-9:
        raise ArithmeticError(f"straggler weights sum to {total!r}, expected 1")
    return weights


def expected_round_time_exact(pop: Population, k: int, e: float) -> float:
    """Exact expected slowest-device round time under uniform k-of-n sampling."""
    times = np.sort(pop.round_times_s(e))
    return float(times @ straggler_weights(pop.n_devices, k))


def expected_round_time_mc(
    pop: Population,
    k: int,
    e: float,
    trials: int,
    seed: int,
    return_se: bool = False,
):
    """Monte Carlo estimate of the expected straggler round time.

    Draws `trials` independent uniform k-subsets (via random keys and
    argpartition, chunked to bound memory) and averages the subset max.
    Deterministic for a given seed.  With return_se=True also returns the
    standard error of the estimate.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = pop.n_devices
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    times = pop.round_times_s(e)
    rng = substream(seed, "round-time-mc")
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        m = min(_MC_CHUNK, trials - done)
        keys = rng.random((m, n))
        subset = np.argpartition(keys, k - 1, axis=1)[:, :k]
        maxima = times[subset].max(axis=1)
        total += float(maxima.sum())
        total_sq += float(np.square(maxima).sum())
        done += m
    mean = total / trials
    if not return_se:
        return mean
    variance = max(total_sq / trials - mean * mean, 0.0)
    return mean, math.sqrt(variance / trials)


def approx_expected_time(pop: Population | CostMeans, e: float, r: float) -> float:
    """Mean-field total time (t_comp_mean * e + t_comm_mean) * r.

    Exact for homogeneous populations and for k = 1; otherwise it ignores
    the straggler effect and underestimates the exact expectation.
    """
    return _as_means(pop).round_time_s(e) * r


def expected_energy(pop: Population | CostMeans, k: float, e: float, r: float) -> float:
    """Expected total energy k * (e_comp_mean * e + e_comm_mean) * r.

    Exact for uniform sampling: the expected sum over a uniform k-subset
    is k times the population mean.
    """
    return k * _as_means(pop).round_energy_j(e) * r


def exact_expected_total_cost(
    pop: Population, weights: CostWeights, k: int, e: float, r: float
) -> CostBreakdown:
    """Expected totals for r rounds using the exact straggler time."""
    time_s = expected_round_time_exact(pop, k, e) * r
    energy_j = expected_energy(pop, k, e, r)
    return CostBreakdown(
        time_s=time_s,
        energy_j=energy_j,
        weighted_total=weights.time_weight * time_s + weights.energy_weight * energy_j,
    )


def rounds_factor(rho: float, n: int, k, e):
    """Ratio-normalized rounds-to-target factor (rho + (1 + penalty) e^2) / e.

    Multiplying by b0/epsilon gives the actual round count required to
    push the convergence bound below epsilon.  Broadcasts over k and e.
    """
    pen = sampling_penalty(k, n)
    e_arr = np.asarray(e, dtype=float)
    return (rho + (1.0 + pen) * e_arr * e_arr) / e_arr


def p3_relative(means: CostMeans, gamma: float, rho: float, n: int, k, e):
    """Scale-free control objective: blended per-round cost times rounds factor.

    Equals the absolute objective divided by b0/epsilon.  Broadcasts over
    arrays of k and e for grid evaluation.
    """
    k_arr = np.asarray(k, dtype=float)
    e_arr = np.asarray(e, dtype=float)
    per_round = (1.0 - gamma) * (means.t_comp_per_iter_s * e_arr + means.t_comm_s) + (
        gamma * k_arr * (means.e_comp_per_iter_j * e_arr + means.e_comm_j)
    )
    return per_round * rounds_factor(rho, n, k_arr, e_arr)


def p3_objective(
    pop: Population | CostMeans,
    weights: CostWeights,
    bound: BoundParams,
    point: ControlPoint,
    n: int | None = None,
) -> P3Value:
    """Approximate expected blended cost of training to the target gap.

    Uses the mean-field per-round cost and the bound-implied round count.
    With absolute bound constants (and epsilon) the value is in blended
    cost units; with ratio-only constants it is flagged relative and is
    correct up to the positive factor b0/epsilon.
    """
    n = _resolve_n(pop, n)
    value = float(
        p3_relative(_as_means(pop), weights.gamma, bound.ratio_rho, n, point.k, point.e)
    )
    if bound.has_absolutes and bound.epsilon is not None:
        return P3Value(value=value * bound.scale, relative=False)
    return P3Value(value=value, relative=True)


def r_required(bound: BoundParams, point: ControlPoint, n: int) -> float:
    """Rounds needed to drive the convergence bound below epsilon.

    Requires absolute constants: (a0 + b0 (1 + penalty) e^2) / (epsilon e).
    Raises UnidentifiedBoundError when only the ratio is known.
    """
    scale = bound.scale  # raises UnidentifiedBoundError on ratio-only params
    return scale * float(rounds_factor(bound.ratio_rho, n, point.k, point.e))
