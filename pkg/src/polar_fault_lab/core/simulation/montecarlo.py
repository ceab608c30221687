# polar_fault_lab/core/simulation/montecarlo.py

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import stats
from typing_extensions import Literal, TypeAlias

from ..analysis.bounds import DEFAULT_N_MAX, FerBounds, fer_bounds
from ..analysis.construction import CodeSpec, InfoSet, construct_code
from ..errors import ConfigError, check_level
from .codec import ERASURE, FaultPattern, indicator_tree, polar_encode, sc_decode

logger = logging.getLogger(__name__)

Engine: TypeAlias = Literal["indicator", "decoder"]
StopReason: TypeAlias = Literal["trial_budget", "target_erasures"]

THREADS_ENV = "POLAR_FAULT_LAB_THREADS"
DEFAULT_BATCH_SIZE = 512
DEFAULT_TARGET_ERASURES = 200


def resolve_workers(max_workers: Optional[int] = None) -> int:
    """Worker count from the argument, then POLAR_FAULT_LAB_THREADS, then the CPU count"""
    if max_workers is not None:
        if int(max_workers) < 1:
            raise ConfigError(f"max_workers must be positive, got {max_workers}")
        return int(max_workers)
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
        if value < 1:
            raise ConfigError(f"{THREADS_ENV} must be positive, got {value}")
        return value
    return os.cpu_count() or 1


def wilson_interval(erasures: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion"""
    if trials <= 0:
        return (0.0, 1.0)
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    fer = erasures / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (fer + z2 / (2.0 * trials)) / denom
    margin = z * np.sqrt(fer * (1.0 - fer) / trials + z2 / (4.0 * trials * trials)) / denom
    low = max(0.0, min(fer, center - margin))
    high = min(1.0, max(fer, center + margin))
    return (low, high)


@dataclass
class FerEstimate:
    """Empirical frame erasure rate with a 95% Wilson interval"""
    trials: int
    erasures: int
    fer: float
    ci_low: float
    ci_high: float
    stop_reason: StopReason = "trial_budget"

    @classmethod
    def from_counts(cls, erasures: int, trials: int, stop_reason: StopReason = "trial_budget"):
        low, high = wilson_interval(erasures, trials)
        fer = erasures / trials if trials else 0.0
        return cls(trials, erasures, fer, low, high, stop_reason)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def __repr__(self):
        return (
            f"FerEstimate(fer={self.fer:.4g}, erasures={self.erasures}/{self.trials}, "
            f"ci=[{self.ci_low:.4g}, {self.ci_high:.4g}], stop={self.stop_reason})"
        )


def _batch_rng(seed: int, batch_index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based stream for one batch; independent of scheduling"""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch_index, stream)))
    )


def _draw_batch(
    spec: CodeSpec, seed: int, batch_index: int, frames: int
) -> Tuple[np.ndarray, FaultPattern]:
    rng = _batch_rng(seed, batch_index)
    erasures = rng.random((frames, spec.N)) < spec.p
    faults = FaultPattern.sample(spec.n, spec.delta, rng, spec.protected_levels, batch=(frames,))
    return erasures, faults


def _count_indicator(spec: CodeSpec, info: InfoSet, seed: int, batch_index: int, frames: int) -> int:
    erasures, faults = _draw_batch(spec, seed, batch_index, frames)
    if info.K == 0:
        return 0
    roots = indicator_tree(erasures, faults, spec.n)
    return int(np.count_nonzero(roots[:, list(info.indices)].any(axis=1)))


def _count_decoder(spec: CodeSpec, info: InfoSet, seed: int, batch_index: int, frames: int) -> int:
    erasures, faults = _draw_batch(spec, seed, batch_index, frames)
    data_rng = _batch_rng(seed, batch_index, stream=1)
    mask = info.mask()
    count = 0
    for j in range(frames):
        u = np.where(mask, data_rng.integers(0, 2, size=spec.N), 0).astype(np.uint8)
        x = polar_encode(u, spec.n)
        y = np.where(erasures[j], ERASURE, 1 - 2 * x.astype(np.int8)).astype(np.int8)
        result = sc_decode(y, spec, info, faults=FaultPattern(faults.flags[j]))
        if not result.decoded:
            count += 1
        elif not np.array_equal(result.decoded_bits, u):
            logger.warning(f"batch {batch_index} frame {j}: decoded bits differ from the input")
            count += 1
    return count


_ENGINES = {"indicator": _count_indicator, "decoder": _count_decoder}


def estimate_fer(
    spec: CodeSpec,
    trials: int,
    seed: int,
    info: Optional[InfoSet] = None,
    target_erasures: Optional[int] = DEFAULT_TARGET_ERASURES,
    engine: Engine = "indicator",
    batch_size: int = DEFAULT_BATCH_SIZE,
    max_workers: Optional[int] = None,
) -> FerEstimate:
    """Estimate the frame erasure rate of ``spec`` from seeded simulated frames.

    Frames are split into fixed batches, batch ``b`` drawing from its own
    Philox stream keyed by (seed, b). Batches are accumulated in order and
    the run stops at the end of the first batch that reaches
    ``target_erasures``, so the result does not depend on the worker count.
    """
    if int(trials) < 1:
        raise ConfigError(f"trials must be at least 1, got {trials}")
    trials = int(trials)
    seed = check_level("seed", seed)
    batch_size = check_level("batch_size", batch_size)
    if batch_size < 1:
        raise ConfigError("batch_size must be positive")
    if target_erasures is not None:
        target_erasures = check_level("target_erasures", target_erasures)
    if engine not in _ENGINES:
        raise ConfigError(f"unknown engine {engine!r}, expected one of {sorted(_ENGINES)}")
    if info is None:
        _, info = construct_code(spec)
    elif info.n != spec.n:
        raise ConfigError(f"information set is for n={info.n}, code has n={spec.n}")

    count_batch = _ENGINES[engine]
    workers = resolve_workers(max_workers)
    n_batches = -(-trials // batch_size)
    sizes = [min(batch_size, trials - b * batch_size) for b in range(n_batches)]

    done, erased = 0, 0
    stop_reason: StopReason = "trial_budget"
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for start in range(0, n_batches, workers):
            window = range(start, min(n_batches, start + workers))
            counts = list(
                executor.map(lambda b: count_batch(spec, info, seed, b, sizes[b]), window)
            )
            for b, count in zip(window, counts):
                done += sizes[b]
                erased += count
                if target_erasures is not None and target_erasures > 0 and erased >= target_erasures:
                    stop_reason = "target_erasures"
                    break
            logger.info(f"simulated {done}/{trials} frames, fer={erased / done:.4g}")
            if stop_reason == "target_erasures":
                break

    return FerEstimate.from_counts(erased, done, stop_reason)


@dataclass
class BoundsValidation:
    """Monte-Carlo estimate checked against the analytic bounds"""
    passed: bool
    estimate: FerEstimate
    bounds: FerBounds
    spec: CodeSpec
    info_size: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            **self.spec.to_dict(),
            "K": self.info_size,
            **self.estimate.to_dict(),
            "upper": self.bounds.upper,
            "lower": self.bounds.lower,
            "upper_trivialized": self.bounds.upper_trivialized,
            "lower_trivialized": self.bounds.lower_trivialized,
        }

    def __repr__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"BoundsValidation({verdict}: ci=[{self.estimate.ci_low:.4g}, {self.estimate.ci_high:.4g}] "
            f"vs bounds=[{self.bounds.lower:.4g}, {self.bounds.upper:.4g}])"
        )


def validate_bounds(
    spec: CodeSpec,
    info: Optional[InfoSet],
    trials: int,
    seed: int,
    n_max: int = DEFAULT_N_MAX,
    **simulation: Any,
) -> BoundsValidation:
    """Pass when the Wilson interval of the estimate intersects [lower, upper]"""
    if info is None:
        _, info = construct_code(spec)
    bounds = fer_bounds(spec, info, n_max=n_max, max_workers=simulation.get("max_workers"))
    estimate = estimate_fer(spec, trials, seed, info=info, **simulation)
    if info.K == 0:
        passed = True
    else:
        passed = estimate.ci_low <= bounds.upper and estimate.ci_high >= bounds.lower
    return BoundsValidation(passed, estimate, bounds, spec, info.K)


def repeated_estimates(spec: CodeSpec, trials: int, seeds: List[int], **simulation: Any) -> List[FerEstimate]:
    return [estimate_fer(spec, trials, seed, **simulation) for seed in seeds]
