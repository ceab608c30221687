# polar_fault_lab/core/analysis/bounds.py

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, ResourceLimitError, check_level, check_probability
from .construction import CodeSpec, InfoSet, k_from_rate, select_info_set
from .polarization import ZTable, faulty_levels, iter_z_tables, t_minus_faulty, t_plus_faulty

logger = logging.getLogger(__name__)

DEFAULT_N_MAX = 13
# below this many parent rows a single thread is faster than the pool
_PARALLEL_MIN_ROWS = 256


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Covariances of the erasure indicators of all 2^level channel types"""
    level: int
    entries: np.ndarray

    def __post_init__(self):
        size = 1 << self.level
        if self.entries.shape != (size, size):
            raise ConfigError(
                f"a level-{self.level} covariance needs shape ({size}, {size}), got {self.entries.shape}"
            )

    def __getitem__(self, key):
        return self.entries[key]

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.entries)

    def __repr__(self):
        return f"CovarianceMatrix(level={self.level})"


@dataclass(frozen=True)
class FerBounds:
    """Upper and lower bounds on the frame erasure rate"""
    upper: float
    lower: float
    upper_trivialized: bool = False
    lower_trivialized: bool = False
    union_sum: float = 0.0
    bonferroni: float = 0.0

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def overlaps(self, other: "FerBounds") -> bool:
        return self.lower <= other.upper and other.lower <= self.upper


def covariance_bytes(n: int) -> int:
    return 8 * (1 << (2 * n))


def _check_cap(n: int, n_max: int):
    if n > n_max:
        raise ResourceLimitError(
            f"dense covariance at n={n} is O(4^n): {covariance_bytes(n)} bytes "
            f"per level exceeds the cap n_max_bounds={n_max}"
        )


def _child_rows(C: np.ndarray, Z: np.ndarray, rows: slice, scale: float) -> np.ndarray:
    """Rows 2*rows.start .. 2*rows.stop of the next-level matrix"""
    c = C[rows]
    zs = Z[rows, None]
    zt = Z[None, :]
    c2 = c * c
    block = np.empty((2 * c.shape[0], 2 * C.shape[1]))
    block[0::2, 0::2] = scale * (2.0 * ((1.0 - zs) * (1.0 - zt)) * c + c2)
    block[0::2, 1::2] = scale * (2.0 * ((1.0 - zs) * zt) * c - c2)
    block[1::2, 0::2] = scale * (2.0 * (zs * (1.0 - zt)) * c - c2)
    block[1::2, 1::2] = scale * (2.0 * (zs * zt) * c + c2)
    return block


def covariance_step(
    c_prev: CovarianceMatrix,
    z_prev: ZTable,
    delta_level: float,
    max_workers: Optional[int] = None,
) -> CovarianceMatrix:
    """One level of the covariance recursion.

    Every pair of parent types (s, t) yields four child pairs scaled by
    (1 - delta)^2. Siblings of one parent use the parent variance on the
    diagonal of ``c_prev``. The child diagonal is set to Z(1 - Z).
    """
    delta_level = check_probability("delta_level", delta_level)
    if c_prev.level != z_prev.level:
        raise ConfigError(
            f"covariance level {c_prev.level} does not match Z table level {z_prev.level}"
        )
    C, Z = c_prev.entries, z_prev.values
    M = len(Z)
    scale = (1.0 - delta_level) ** 2

    if max_workers and max_workers > 1 and M >= _PARALLEL_MIN_ROWS:
        chunk = -(-M // max_workers)
        slices = [slice(r, min(M, r + chunk)) for r in range(0, M, chunk)]
        out = np.empty((2 * M, 2 * M))
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures = [(sl, executor.submit(_child_rows, C, Z, sl, scale)) for sl in slices]
            for sl, future in futures:
                out[2 * sl.start:2 * sl.stop] = future.result()
    else:
        out = _child_rows(C, Z, slice(0, M), scale)

    z_next = np.empty(2 * M)
    z_next[0::2] = t_minus_faulty(Z, delta_level)
    z_next[1::2] = t_plus_faulty(Z, delta_level)
    np.fill_diagonal(out, z_next * (1.0 - z_next))
    return CovarianceMatrix(c_prev.level + 1, out)


def iter_covariance(
    n: int,
    p: float,
    delta: float,
    protected_levels: int = 0,
    max_workers: Optional[int] = None,
) -> Iterator[Tuple[ZTable, CovarianceMatrix]]:
    """Yield (Z table, covariance) for levels 0..n"""
    n_u = faulty_levels(n, protected_levels)
    tables = iter_z_tables(n, p, delta, protected_levels)
    z = next(tables)
    cov = CovarianceMatrix(0, np.array([[z.values[0] * (1.0 - z.values[0])]]))
    yield z, cov
    for s, z_next in enumerate(tables, start=1):
        cov = covariance_step(cov, z, delta if s <= n_u else 0.0, max_workers)
        z = z_next
        logger.debug(f"covariance level {s} of {n} computed")
        yield z, cov


def compute_covariance(
    spec: CodeSpec, n_max: int = DEFAULT_N_MAX, max_workers: Optional[int] = None
) -> CovarianceMatrix:
    _check_cap(spec.n, n_max)
    cov = None
    for _, cov in iter_covariance(spec.n, spec.p, spec.delta, spec.protected_levels, max_workers):
        pass
    return cov


def _bounds_from(z: ZTable, cov: Optional[CovarianceMatrix], info: InfoSet) -> FerBounds:
    if info.K == 0:
        return FerBounds(0.0, 0.0)
    idx = np.asarray(info.indices)
    z_a = z.values[idx]
    union = float(z_a.sum())
    z_max = float(z_a.max())

    if info.K == 1:
        bonferroni = union
    else:
        joint = np.outer(z_a, z_a) + cov.entries[np.ix_(idx, idx)]
        bonferroni = union - float(np.triu(joint, k=1).sum())

    upper, upper_trivial = (1.0, True) if union > 1.0 else (union, False)
    lower, lower_trivial = (z_max, True) if bonferroni < z_max else (bonferroni, False)
    return FerBounds(
        upper=upper,
        lower=min(lower, upper),
        upper_trivialized=upper_trivial,
        lower_trivialized=lower_trivial,
        union_sum=union,
        bonferroni=bonferroni,
    )


def fer_bounds(
    spec: CodeSpec,
    info: InfoSet,
    z: Optional[ZTable] = None,
    cov: Optional[CovarianceMatrix] = None,
    n_max: int = DEFAULT_N_MAX,
    max_workers: Optional[int] = None,
) -> FerBounds:
    """Union upper bound and pairwise lower bound, with trivial-bound substitution"""
    if info.n != spec.n:
        raise ConfigError(f"information set is for n={info.n}, code has n={spec.n}")
    if info.K <= 1:
        if z is None:
            z = next(t for t in iter_z_tables(spec.n, spec.p, spec.delta, spec.protected_levels)
                     if t.level == spec.n)
        return _bounds_from(z, None, info)
    if z is None or cov is None:
        _check_cap(spec.n, n_max)
        for z, cov in iter_covariance(
            spec.n, spec.p, spec.delta, spec.protected_levels, max_workers
        ):
            pass
    return _bounds_from(z, cov, info)


def bounds_grid(
    rates: Sequence[float],
    n_values: Sequence[int],
    p: float,
    delta: float,
    protected_levels: int = 0,
    n_max: int = DEFAULT_N_MAX,
    skip_capped: bool = False,
    max_workers: Optional[int] = None,
) -> Dict[Tuple[float, int], Optional[FerBounds]]:
    """FerBounds for every (rate, n) with K = ceil(R 2^n).

    Without protection the tables of smaller n are the intermediate levels of
    the largest one, so a single pass serves every n. With ``skip_capped``
    the entries above the covariance cap are ``None`` instead of raising.
    """
    for rate in rates:
        check_probability("rate", rate)
    n_values = sorted(set(check_level("n", n) for n in n_values))
    wanted = {n for n in n_values if n <= n_max}
    capped = [n for n in n_values if n > n_max]
    if capped and not skip_capped:
        _check_cap(capped[0], n_max)

    results: Dict[Tuple[float, int], Optional[FerBounds]] = {
        (rate, n): None for rate in rates for n in capped
    }

    def collect(z: ZTable, cov: CovarianceMatrix):
        for rate in rates:
            info = select_info_set(z, k_from_rate(z.level, rate))
            results[(rate, z.level)] = _bounds_from(z, cov, info)

    if not wanted:
        return results
    if protected_levels == 0:
        for z, cov in iter_covariance(max(wanted), p, delta, 0, max_workers):
            if z.level in wanted:
                collect(z, cov)
    else:
        for n in sorted(wanted):
            spec = CodeSpec(n, 0, p, delta, min(protected_levels, n + 1))
            for z, cov in iter_covariance(n, p, delta, spec.protected_levels, max_workers):
                pass
            collect(z, cov)
    return results


def bounds_sweep_rate(
    n: int,
    p: float,
    delta: float,
    n_p: int,
    rates: Sequence[float],
    n_max: int = DEFAULT_N_MAX,
    max_workers: Optional[int] = None,
) -> List[Tuple[float, FerBounds]]:
    grid = bounds_grid(rates, [n], p, delta, n_p, n_max, max_workers=max_workers)
    return [(rate, grid[(rate, n)]) for rate in rates]


def bounds_sweep_blocklength(
    rate: float,
    p: float,
    delta: float,
    n_values: Sequence[int],
    protected_levels: int = 0,
    n_max: int = DEFAULT_N_MAX,
    max_workers: Optional[int] = None,
) -> List[Tuple[int, FerBounds]]:
    grid = bounds_grid([rate], n_values, p, delta, protected_levels, n_max, max_workers=max_workers)
    return [(n, grid[(rate, n)]) for n in sorted(set(n_values))]


def upper_bound_only(spec: CodeSpec, z: Optional[ZTable] = None) -> float:
    """Union bound clamped to 1; needs only the Z table"""
    if z is None:
        for z in iter_z_tables(spec.n, spec.p, spec.delta, spec.protected_levels):
            pass
    info = select_info_set(z, spec.k)
    return min(1.0, float(z.values[list(info.indices)].sum()))


def exhaustive_statistics(
    n: int, p: float, delta: float, protected_levels: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance of the root indicators by full enumeration.

    Every channel-erasure pattern and every pattern of faulted writes on the
    unprotected levels is pushed through the indicator tree and weighted by
    its probability.
    """
    from ..simulation.codec import FaultPattern, indicator_tree

    p = check_probability("p", p)
    delta = check_probability("delta", delta)
    N = 1 << n
    n_u = faulty_levels(n, protected_levels)
    n_bits = N + n_u * N
    if n_bits > 20:
        raise ResourceLimitError(f"exhaustive enumeration over 2^{n_bits} outcomes is too large")

    codes = np.arange(1 << n_bits)
    bits = ((codes[:, None] >> np.arange(n_bits)) & 1).astype(bool)
    erasures = bits[:, :N]
    flags = np.zeros((len(codes), n, N), dtype=bool)
    weights = np.prod(np.where(erasures, p, 1.0 - p), axis=1)
    if n_u:
        flags[:, :n_u, :] = bits[:, N:].reshape(len(codes), n_u, N)
        weights = weights * np.prod(np.where(bits[:, N:], delta, 1.0 - delta), axis=1)

    roots = indicator_tree(erasures, FaultPattern(flags), n).astype(float)
    mean = weights @ roots
    second = roots.T @ (weights[:, None] * roots)
    return mean, second - np.outer(mean, mean)
