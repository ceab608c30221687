# polar_fault_lab/core/analysis/optimizer.py

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from typing_extensions import Literal, TypeAlias

from ..errors import ConfigError, check_level, check_probability
from .bounds import DEFAULT_N_MAX, FerBounds, bounds_grid
from .construction import CodeSpec, k_from_rate, select_info_set
from .polarization import compute_z_table

logger = logging.getLogger(__name__)

Method: TypeAlias = Literal["analytic_unique", "uncoded_shortcut", "monte_carlo_tiebreak"]


@dataclass
class BlocklengthDecision:
    """Chosen blocklength exponent and the evidence behind it"""
    n_star: int
    method: Method
    rate: float
    p: float
    delta: float
    n_max: int
    bounds: Dict[int, FerBounds] = field(default_factory=dict)
    candidates: Tuple[int, ...] = ()
    capped: Tuple[int, ...] = ()
    mc_fer: Dict[int, float] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return 1 << self.n_star

    def decision_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for n in sorted(self.bounds):
            b = self.bounds[n]
            rows.append({
                "n": n,
                "N": 1 << n,
                "K": k_from_rate(n, self.rate),
                "upper": b.upper,
                "lower": b.lower,
                "mc_fer": self.mc_fer.get(n),
                "chosen": n == self.n_star,
            })
        return rows

    def __repr__(self):
        return (
            f"BlocklengthDecision(n_star={self.n_star}, N={self.N}, method={self.method!r}, "
            f"candidates={list(self.candidates)})"
        )


def _capped_bounds(n: int, rate: float, p: float, delta: float, protected_levels: int) -> FerBounds:
    """Union bound with the max-Z lower bound; needs no covariance"""
    z = compute_z_table(n, p, delta, min(protected_levels, n + 1))
    info = select_info_set(z, k_from_rate(n, rate))
    values = z.values[list(info.indices)]
    union = float(values.sum())
    return FerBounds(
        upper=min(1.0, union),
        lower=float(values.max()) if info.K else 0.0,
        upper_trivialized=union > 1.0,
        lower_trivialized=True,
        union_sum=union,
        bonferroni=float("nan"),
    )


def unique_minimizer(bounds: Dict[int, FerBounds]) -> Optional[int]:
    """The n whose upper bound lies below every other lower bound, if exactly one exists"""
    winners = [
        n for n, b in bounds.items()
        if all(b.upper <= other.lower for m, other in bounds.items() if m != n)
    ]
    return winners[0] if len(winners) == 1 else None


def overlap_candidates(bounds: Dict[int, FerBounds]) -> Tuple[int, ...]:
    """Every n whose bound interval meets the interval of the smallest upper bound"""
    best = min(sorted(bounds), key=lambda n: bounds[n].upper)
    return tuple(n for n in sorted(bounds) if bounds[n].overlaps(bounds[best]))


def optimal_blocklength(
    R: float,
    p: float,
    delta: float,
    n_max: int,
    mc_budget: int = 100000,
    seed: int = 0,
    protected_levels: int = 0,
    n_max_bounds: int = DEFAULT_N_MAX,
    max_workers: Optional[int] = None,
    **simulation: Any,
) -> BlocklengthDecision:
    """FER-minimizing n in 0..n_max for rate R.

    If p < delta no code beats the uncoded channel. Otherwise the bounds of
    every n decide when one upper bound lies under all other lower bounds;
    the remaining overlapping candidates (and every n above the covariance
    cap) are compared by simulation, ties going to the smaller n.
    """
    R = check_probability("R", R)
    if not 0.0 < R < 1.0:
        raise ConfigError(f"rate must lie strictly between 0 and 1, got {R}")
    p = check_probability("p", p)
    delta = check_probability("delta", delta)
    n_max = check_level("n_max", n_max)
    base = dict(rate=R, p=p, delta=delta, n_max=n_max)

    if p < delta:
        logger.info(f"p={p} < delta={delta}: uncoded transmission is optimal")
        return BlocklengthDecision(0, "uncoded_shortcut", **base)

    grid = bounds_grid(
        [R], range(n_max + 1), p, delta, protected_levels, check_level("n_max_bounds", n_max_bounds),
        skip_capped=True, max_workers=max_workers,
    )
    capped = tuple(n for n in range(n_max + 1) if grid[(R, n)] is None)
    bounds = {
        n: grid[(R, n)] if grid[(R, n)] is not None
        else _capped_bounds(n, R, p, delta, protected_levels)
        for n in range(n_max + 1)
    }
    if capped:
        logger.warning(f"covariance cap exceeded for n in {list(capped)}; simulating them")

    if not capped:
        n_star = unique_minimizer(bounds)
        if n_star is not None:
            logger.info(f"R={R}: n*={n_star} decided by the bounds")
            return BlocklengthDecision(
                n_star, "analytic_unique", bounds=bounds, candidates=(n_star,), **base
            )

    candidates = tuple(sorted(set(overlap_candidates(bounds)) | set(capped)))
    from ..simulation.montecarlo import estimate_fer

    simulation.setdefault("target_erasures", None)
    mc_fer: Dict[int, float] = {}
    for n in candidates:
        spec = CodeSpec.from_rate(n, R, p, delta, min(protected_levels, n + 1))
        estimate = estimate_fer(spec, mc_budget, seed, max_workers=max_workers, **simulation)
        mc_fer[n] = estimate.fer
        logger.info(f"R={R}, n={n}: simulated fer={estimate.fer:.4g}")

    fers = np.array([mc_fer[n] for n in candidates])
    n_star = candidates[int(np.argmin(fers))]
    logger.info(f"R={R}: n*={n_star} decided by simulation over {list(candidates)}")
    return BlocklengthDecision(
        n_star, "monte_carlo_tiebreak", bounds=bounds, candidates=candidates,
        capped=capped, mc_fer=mc_fer, **base
    )
