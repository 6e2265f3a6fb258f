"""Alternating biconvex optimizer for clients-per-round and local iterations.

The control objective (expected blended round cost times bound-implied
round count) is strictly convex in each coordinate with the other fixed,
so block coordinate descent with closed-form block minimizers converges:
the clients-per-round step has a square-root closed form, the
local-iteration step reduces to one cubic with a single positive root.
The final continuous point is rounded by evaluating its integer
neighbors on the objective, with each coordinate re-optimized at the
other's rounded values so quantizing one never strands the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cardano import real_cubic_roots
from .core import BoundParams, ControlPoint, CostMeans, CostWeights, Population
from .costs import _as_means, _resolve_n, p3_objective, p3_relative, sampling_penalty

__all__ = [
    "AcsTrace",
    "GridSearchResult",
    "PropertyCheck",
    "PropertyReport",
    "closed_form_k",
    "solve_cubic_e",
    "acs_optimize",
    "grid_search_p3",
    "property_check_suite",
]

DEFAULT_EPS0 = 1e-6
DEFAULT_MAX_ITERS = 100


def closed_form_k(
    pop: Population | CostMeans,
    weights: CostWeights,
    rho: float,
    e: float,
    n: int | None = None,
) -> float:
    """Unconstrained minimizer of the objective in clients-per-round, e fixed.

    Returns +inf when gamma = 0 (time-only cost keeps improving with more
    clients; callers project onto [1, n]) and 0 when gamma = 1 (projected
    up to 1).  A single-device population always yields 1.
    """
    means = _as_means(pop)
    n = _resolve_n(pop, n)
    if rho <= 0.0 or e < 1.0:
        raise ValueError("need rho > 0 and e >= 1")
    if n == 1:
        return 1.0
    gamma = weights.gamma
    numerator = (1.0 - gamma) * n * (means.t_comp_per_iter_s * e ** 3 + means.t_comm_s * e ** 2)
    denominator = gamma * ((n - 2) * e * e + rho * (n - 1)) * means.round_energy_j(e)
    if denominator == 0.0:
        return math.inf
    return math.sqrt(numerator / denominator)


def solve_cubic_e(
    pop: Population | CostMeans,
    weights: CostWeights,
    rho: float,
    k: float,
    n: int | None = None,
) -> float:
    """Unconstrained minimizer of the objective in local iterations, k fixed.

    Stationarity reduces to c3 e^3 + e^2 - rho / (1 + penalty(k)) = 0 with
    c3 = 2 ((1-gamma) t_comp + gamma k e_comp) / ((1-gamma) t_comm + gamma k e_comm),
    which has exactly one positive root (the left side is increasing on
    e > 0 and negative at 0).  Zero computation cost degenerates to the
    quadratic e = sqrt(rho / (1 + penalty)).
    """
    means = _as_means(pop)
    n = _resolve_n(pop, n)
    if rho <= 0.0:
        raise ValueError("need rho > 0")
    gamma = weights.gamma
    target = rho / (1.0 + sampling_penalty(k, n))
    comp_rate = (1.0 - gamma) * means.t_comp_per_iter_s + gamma * k * means.e_comp_per_iter_j
    comm_rate = (1.0 - gamma) * means.t_comm_s + gamma * k * means.e_comm_j
    if comm_rate <= 0.0:
        raise ValueError("per-round communication cost must be positive")
    c3 = 2.0 * comp_rate / comm_rate
    if c3 == 0.0:
        return math.sqrt(target)
    positive = [r for r in real_cubic_roots(c3, 1.0, 0.0, -target) if r > 0.0]
    if not positive:
        raise ArithmeticError("cubic solver found no positive root")
    if len(positive) == 1:
        return positive[0]
    # cannot happen mathematically; pick the objective minimizer defensively
    values = [p3_relative(means, gamma, rho, n, k, r) for r in positive]
    return positive[int(np.argmin(values))]


@dataclass
class AcsTrace:
    """Iterate history and rounded result of the alternating optimizer."""

    iterates: list[ControlPoint]
    objectives: list[float]
    converged: bool
    k_star: int
    e_star: int
    objective_star: float
    relative: bool

    @property
    def final_continuous(self) -> ControlPoint:
        return self.iterates[-1]


def _round_candidates(
    point: ControlPoint,
    means: CostMeans,
    weights: CostWeights,
    rho: float,
    n: int,
) -> list[tuple[int, int]]:
    """Integer candidates around a continuous iterate.

    The four floor/ceil corners alone can miss the integer optimum: fixing
    k to a corner moves the conditional minimizer in e (and vice versa), and
    the shifted coordinate may round to a different integer.  So for each
    corner value of one coordinate the other coordinate's closed-form step
    is re-solved and its floor/ceil pair added.  Convexity in each
    coordinate then guarantees the best integer point in every candidate
    row and column is covered.
    """
    ks = {math.floor(point.k), math.ceil(point.k)}
    es = {math.floor(point.e), math.ceil(point.e)}
    candidates = {(k, e) for k in ks for e in es}
    for k in sorted(ks):
        if not 1 <= k <= n:
            continue
        e_cond = max(solve_cubic_e(means, weights, rho, float(k), n=n), 1.0)
        candidates.update({(k, math.floor(e_cond)), (k, math.ceil(e_cond))})
    for e in sorted(es):
        if e < 1:
            continue
        k_cond = min(max(closed_form_k(means, weights, rho, float(e), n=n), 1.0), float(n))
        candidates.update({(math.floor(k_cond), e), (math.ceil(k_cond), e)})
    return sorted((k, e) for k, e in candidates if 1 <= k <= n and e >= 1)


def acs_optimize(
    pop: Population | CostMeans,
    weights: CostWeights,
    bound: BoundParams,
    n: int | None = None,
    eps0: float = DEFAULT_EPS0,
    max_iters: int = DEFAULT_MAX_ITERS,
    init: ControlPoint | None = None,
) -> AcsTrace:
    """Alternate the two closed-form block minimizers until the iterate settles.

    Each half-step minimizes the objective exactly over its own coordinate
    (projected onto [1, n] and [1, inf)), so the objective never increases.
    Stops when the Euclidean distance between successive (k, e) iterates
    drops to eps0, then rounds by evaluating the floor/ceil combinations.
    """
    means = _as_means(pop)
    n = _resolve_n(pop, n)
    rho = bound.ratio_rho

    def objective(point: ControlPoint) -> float:
        return p3_objective(means, weights, bound, point, n=n).value

    current = init if init is not None else ControlPoint(k=float(n), e=10.0)
    iterates = [current]
    objectives = [objective(current)]
    converged = False
    for _ in range(max_iters):
        k_new = min(max(closed_form_k(means, weights, rho, current.e, n=n), 1.0), float(n))
        e_new = max(solve_cubic_e(means, weights, rho, k_new, n=n), 1.0)
        step = math.hypot(k_new - current.k, e_new - current.e)
        current = ControlPoint(k=k_new, e=e_new)
        iterates.append(current)
        objectives.append(objective(current))
        if step <= eps0:
            converged = True
            break

    best = None
    for k_int, e_int in _round_candidates(current, means, weights, rho, n):
        value = objective(ControlPoint(k=float(k_int), e=float(e_int)))
        key = (value, k_int, e_int)  # deterministic tie-break: smaller k, then e
        if best is None or key < best:
            best = key
    value_star, k_star, e_star = best
    return AcsTrace(
        iterates=iterates,
        objectives=objectives,
        converged=converged,
        k_star=k_star,
        e_star=e_star,
        objective_star=value_star,
        relative=not (bound.has_absolutes and bound.epsilon is not None),
    )


@dataclass(frozen=True)
class GridSearchResult:
    """Exhaustive integer-grid minimum of the control objective."""

    k_star: int
    e_star: int
    objective_star: float
    relative: bool
    k_values: np.ndarray
    e_values: np.ndarray
    objective_grid: np.ndarray


def grid_search_p3(
    pop: Population | CostMeans,
    weights: CostWeights,
    bound: BoundParams,
    k_values,
    e_values,
    n: int | None = None,
) -> GridSearchResult:
    """Evaluate the objective on a (k, e) grid and take the first argmin.

    Rows ascend in k and columns in e, so the flat argmin breaks ties
    toward smaller k, then smaller e.
    """
    means = _as_means(pop)
    n = _resolve_n(pop, n)
    k_arr = np.asarray(list(k_values), dtype=float)
    e_arr = np.asarray(list(e_values), dtype=float)
    if k_arr.size == 0 or e_arr.size == 0:
        raise ValueError("grid must be nonempty")
    grid = p3_relative(means, weights.gamma, bound.ratio_rho, n, k_arr[:, None], e_arr[None, :])
    relative = not (bound.has_absolutes and bound.epsilon is not None)
    if not relative:
        grid = grid * bound.scale
    flat = int(np.argmin(grid))
    i, j = divmod(flat, e_arr.size)
    return GridSearchResult(
        k_star=int(round(k_arr[i])),
        e_star=int(round(e_arr[j])),
        objective_star=float(grid[i, j]),
        relative=relative,
        k_values=k_arr,
        e_values=e_arr,
        objective_grid=grid,
    )


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class PropertyReport:
    checks: tuple[PropertyCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        return "\n".join(
            f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks
        )


def _sign_changes(diffs: np.ndarray) -> int:
    signs = np.sign(diffs)
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def property_check_suite(
    pop: Population | CostMeans,
    bound: BoundParams,
    n: int | None = None,
    e_max: int | None = None,
) -> PropertyReport:
    """Check the qualitative structure of the objective on the given costs.

    Covers: time-only cost is strictly decreasing in clients-per-round
    (full participation optimal), energy-only strictly increasing (single
    client optimal), unimodality in local iterations at both extremes,
    the optimal local-iteration count growing with the communication share
    of time (and of energy), and, when energy/time unit-cost ratios match,
    both optimizer coordinates shrinking as the energy weight rises.
    """
    means = _as_means(pop)
    n = _resolve_n(pop, n)
    rho = bound.ratio_rho
    if n < 3:
        raise ValueError("property suite needs n >= 3")
    if e_max is None:
        e_max = max(int(2.0 * math.sqrt(rho)) + 10, 20)
    checks: list[PropertyCheck] = []

    k_all = np.arange(1, n + 1, dtype=float)
    e_probe = np.unique(np.clip(np.array([1, 2, 5, 10, 20, 50, 100]), 1, e_max)).astype(float)

    # time-only: strictly decreasing in k for every probed e
    grid = p3_relative(means, 0.0, rho, n, k_all[:, None], e_probe[None, :])
    diffs = np.diff(grid, axis=0)
    passed = bool(np.all(diffs < 0.0))
    checks.append(
        PropertyCheck(
            "time-only cost strictly decreases with clients per round",
            passed,
            f"max adjacent difference {diffs.max():.3e} over k=1..{n}, e in {e_probe.astype(int).tolist()}",
        )
    )

    # energy-only: strictly increasing in k
    grid = p3_relative(means, 1.0, rho, n, k_all[:, None], e_probe[None, :])
    diffs = np.diff(grid, axis=0)
    passed = bool(np.all(diffs > 0.0))
    checks.append(
        PropertyCheck(
            "energy-only cost strictly increases with clients per round",
            passed,
            f"min adjacent difference {diffs.min():.3e}",
        )
    )

    # unimodal in e at both extremes: first differences change sign exactly once
    e_all = np.arange(1, e_max + 1, dtype=float)
    unimodal_ok = True
    witness = ""
    for gamma in (0.0, 1.0):
        for k_fix in (1.0, float(max(2, n // 2)), float(n)):
            seq = p3_relative(means, gamma, rho, n, k_fix, e_all)
            diffs = np.diff(seq)
            changes = _sign_changes(diffs)
            shape_ok = changes == 1 and diffs[0] < 0.0 and diffs[-1] > 0.0
            if not shape_ok:
                unimodal_ok = False
                witness = f"gamma={gamma}, k={k_fix:.0f}: {changes} sign changes"
                break
        if not unimodal_ok:
            break
    checks.append(
        PropertyCheck(
            "cost in local iterations falls then rises at both extremes",
            unimodal_ok,
            witness or f"single minimum over e=1..{e_max} at gamma in {{0, 1}}",
        )
    )

    # optimal e grows with the communication share of round time (time-only)
    ratios = np.geomspace(0.1, 100.0, 13)
    base_t = means.t_comp_per_iter_s if means.t_comp_per_iter_s > 0 else 0.1
    roots = []
    for ratio in ratios:
        scaled = CostMeans(base_t, base_t * ratio, means.e_comp_per_iter_j, means.e_comm_j)
        roots.append(solve_cubic_e(scaled, CostWeights(0.0), rho, float(n), n=n))
    increasing = bool(np.all(np.diff(roots) > 0.0))
    checks.append(
        PropertyCheck(
            "time-only optimal local iterations grow with comm/comp time ratio",
            increasing,
            f"e* spans {roots[0]:.3f} -> {roots[-1]:.3f} over ratio 0.1..100",
        )
    )

    # same for the communication share of round energy (energy-only)
    base_e = means.e_comp_per_iter_j if means.e_comp_per_iter_j > 0 else 0.001
    roots = []
    for ratio in ratios:
        scaled = CostMeans(means.t_comp_per_iter_s, means.t_comm_s, base_e, base_e * ratio)
        roots.append(solve_cubic_e(scaled, CostWeights(1.0), rho, 1.0, n=n))
    increasing = bool(np.all(np.diff(roots) > 0.0))
    checks.append(
        PropertyCheck(
            "energy-only optimal local iterations grow with comm/comp energy ratio",
            increasing,
            f"e* spans {roots[0]:.3f} -> {roots[-1]:.3f} over ratio 0.1..100",
        )
    )

    # matched unit-cost ratios: optimizer coordinates nonincreasing in gamma
    ratio_t = means.e_comp_per_iter_j / means.t_comp_per_iter_s if means.t_comp_per_iter_s else None
    ratio_m = means.e_comm_j / means.t_comm_s
    if ratio_t is not None and abs(ratio_t - ratio_m) <= 1e-9 * max(ratio_t, ratio_m):
        gammas = np.linspace(0.0, 1.0, 11)
        ks, es = [], []
        for gamma in gammas:
            trace = acs_optimize(means, CostWeights(float(gamma)), BoundParams.from_ratio(rho), n=n)
            ks.append(trace.final_continuous.k)
            es.append(trace.final_continuous.e)
        tol = 1e-9
        monotone = bool(
            np.all(np.diff(ks) <= tol * np.maximum(1.0, np.abs(ks[:-1])))
            and np.all(np.diff(es) <= tol * np.maximum(1.0, np.abs(es[:-1])))
        )
        checks.append(
            PropertyCheck(
                "with matched energy/time unit-cost ratios both optima shrink as gamma rises",
                monotone,
                f"k*: {ks[0]:.2f} -> {ks[-1]:.2f}, e*: {es[0]:.2f} -> {es[-1]:.2f} over gamma 0..1",
            )
        )
    else:
        checks.append(
            PropertyCheck(
                "with matched energy/time unit-cost ratios both optima shrink as gamma rises",
                False,
                "not applicable: population unit-cost ratios differ "
                f"(comp {ratio_t!r} vs comm {ratio_m!r})",
            )
        )

    return PropertyReport(checks=tuple(checks))
