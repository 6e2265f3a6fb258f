"""Estimating the convergence-bound constant ratio from probe runs.

The bound predicts that the rounds needed to reach a fixed loss level
grow like d + scale * (rho + (1 + penalty(k)) e^2) / e, where d and scale
are unknown but shared across probes at the same loss level.  Differencing
the round counts at two loss levels cancels d; taking the ratio of two
probes' differences cancels the scale and leaves one linear equation in
rho per probe pair.  Pairs are inverted independently, implausible
estimates are discarded, and the survivors are averaged.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import BoundParams, ControlPoint, EstimationError, UnreachableLossError
from .costs import sampling_penalty

__all__ = [
    "EstimationSample",
    "RatioEstimate",
    "probe_pair",
    "planted_round_counts",
    "estimate_ratio",
    "overhead_ratio",
]


@dataclass(frozen=True)
class EstimationSample:
    """Rounds one probe configuration took to cross two loss levels.

    rounds_to_fa / rounds_to_fb count rounds until the global loss first
    fell to the higher (f_a) and lower (f_b) level; real probes yield
    integers, while planted-bound tests may carry exact real values.
    """

    k: float
    e: float
    rounds_to_fa: float
    rounds_to_fb: float
    seed: int

    def __post_init__(self) -> None:
        if self.k < 1 or self.e < 1:
            raise ValueError("probe needs k >= 1 and e >= 1")
        if not (self.rounds_to_fb > self.rounds_to_fa >= 1):
            raise ValueError(
                f"need rounds_to_fb > rounds_to_fa >= 1, got "
                f"({self.rounds_to_fa!r}, {self.rounds_to_fb!r})"
            )


@dataclass(frozen=True)
class RatioEstimate:
    """Averaged pairwise inversion result."""

    rho: float
    pairs_used: int
    pairs_discarded: int


def probe_pair(sim, k: int, e: int, f_a: float, f_b: float, max_rounds: int, seed: int) -> EstimationSample:
    """Run one probe from a zero model and record both loss crossings.

    f_a must sit above f_b; raises UnreachableLossError naming the first
    threshold that was not crossed within max_rounds.
    """
    if not f_a > f_b:
        raise ValueError(f"f_a must exceed f_b, got ({f_a!r}, {f_b!r})")
    record = sim.run(k, e, seed=seed, target_loss=f_b, max_rounds=max_rounds)
    rounds_fa = record.rounds_to(f_a)
    if rounds_fa is None:
        raise UnreachableLossError(
            f"probe (k={k}, e={e}) never reached f_a={f_a} within {max_rounds} rounds"
        )
    if not record.reached_target:
        raise UnreachableLossError(
            f"probe (k={k}, e={e}) never reached f_b={f_b} within {max_rounds} rounds"
        )
    if record.rounds == rounds_fa:
        raise EstimationError(
            f"probe (k={k}, e={e}) crossed f_a={f_a} and f_b={f_b} in the same round; "
            "spread the thresholds further apart"
        )
    return EstimationSample(
        k=float(k), e=float(e), rounds_to_fa=float(rounds_fa), rounds_to_fb=float(record.rounds), seed=seed
    )


def planted_round_counts(
    k: float,
    e: float,
    n: int,
    a0: float,
    b0: float,
    f_a: float,
    f_b: float,
    f_star: float,
    d: float = 0.0,
) -> tuple[float, float]:
    """Exact round counts implied by the bound; inverse test fixture.

    rounds(level) = d + (a0 + b0 (1 + penalty(k)) e^2) / (e (level - f_star)).
    """
    if not (f_a > f_b > f_star):
        raise ValueError("need f_a > f_b > f_star")
    if d < 0.0:
        raise ValueError("offset d must be nonnegative")
    numerator = a0 + b0 * (1.0 + sampling_penalty(k, n)) * e * e
    return (
        d + numerator / (e * (f_a - f_star)),
        d + numerator / (e * (f_b - f_star)),
    )


def estimate_ratio(samples: list[EstimationSample] | tuple[EstimationSample, ...], n: int) -> RatioEstimate:
    """Invert every unordered probe pair for rho and average the survivors.

    For probes i, j the bound implies
        e_i (R_b,i - R_a,i) / (e_j (R_b,j - R_a,j))
            = (rho + (1 + pen_i) e_i^2) / (rho + (1 + pen_j) e_j^2),
    a linear equation in rho.  Pairs with nonfinite or nonpositive
    solutions (including identical effective coefficients, where the
    equation is degenerate) are discarded; raises EstimationError when
    nothing survives.
    """
    if len(samples) < 2:
        raise EstimationError("need at least two probes to estimate the ratio")
    effective = [
        (
            s.e * (s.rounds_to_fb - s.rounds_to_fa),
            (1.0 + sampling_penalty(s.k, n)) * s.e * s.e,
        )
        for s in samples
    ]
    estimates = []
    discarded = 0
    for (g_i, q_i), (g_j, q_j) in itertools.combinations(effective, 2):
        ratio = g_i / g_j
        denom = ratio - 1.0
        rho = (q_i - ratio * q_j) / denom if denom != 0.0 else math.nan
        if math.isfinite(rho) and rho > 0.0:
            estimates.append(rho)
        else:
            discarded += 1
    if not estimates:
        raise EstimationError(f"all {discarded} probe pairs were degenerate or implausible")
    return RatioEstimate(
        rho=sum(estimates) / len(estimates),
        pairs_used=len(estimates),
        pairs_discarded=discarded,
    )


def overhead_ratio(
    samples,
    bound: BoundParams,
    final_point: ControlPoint,
    f_gap: float,
    n: int,
) -> float:
    """Probe effort relative to the bound-implied effort at the chosen point.

    Sums rounds-to-f_b times local iterations over the probes, multiplies
    by the final optimality gap, and divides by the bound value at the
    final (k, e).  With ratio-only constants the result is per unit b0.
    """
    if f_gap <= 0.0:
        raise ValueError("f_gap must be positive")
    total = sum(s.rounds_to_fb * s.e for s in samples)
    pen = sampling_penalty(final_point.k, n)
    if bound.has_absolutes:
        denom = bound.a0 + bound.b0 * (1.0 + pen) * final_point.e ** 2
    else:
        denom = bound.ratio_rho + (1.0 + pen) * final_point.e ** 2
    return total * f_gap / denom
