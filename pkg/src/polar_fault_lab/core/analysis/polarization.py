# polar_fault_lab/core/analysis/polarization.py

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigError, check_level, check_probability

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

MINUS = "-"
PLUS = "+"
_SIGN_ALIASES = {"-": 0, "−": 0, "+": 1}


def _check_unit(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ConfigError(f"{name} must lie in [0, 1]")
    return arr


def _unwrap(result: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(result) if np.ndim(like) == 0 else result


def t_minus(eps: ArrayLike) -> ArrayLike:
    """Erasure probability of the worse synthetic channel, 2e - e^2"""
    e = _check_unit("eps", eps)
    return _unwrap(2.0 * e - e * e, eps)


def t_plus(eps: ArrayLike) -> ArrayLike:
    """Erasure probability of the better synthetic channel, e^2"""
    e = _check_unit("eps", eps)
    return _unwrap(e * e, eps)


def t_minus_faulty(eps: ArrayLike, delta: float) -> ArrayLike:
    """Minus transform followed by a decoder-internal erasure with probability delta"""
    e = _check_unit("eps", eps)
    d = float(_check_unit("delta", delta))
    return _unwrap((2.0 * e - e * e) * (1.0 - d) + d, eps)


def t_plus_faulty(eps: ArrayLike, delta: float) -> ArrayLike:
    """Plus transform followed by a decoder-internal erasure with probability delta"""
    e = _check_unit("eps", eps)
    d = float(_check_unit("delta", delta))
    return _unwrap((e * e) * (1.0 - d) + d, eps)


def t_plus_fixed_points(delta: float) -> Tuple[float, ...]:
    """Fixed points of the faulty plus transform inside [0, 1]"""
    d = check_probability("delta", delta)
    if d < 0.5:
        return (d / (1.0 - d), 1.0)
    return (1.0,)


def sign_string_to_index(signs: str) -> int:
    index = 0
    for ch in signs:
        if ch not in _SIGN_ALIASES:
            raise ConfigError(f"invalid sign character {ch!r} in {signs!r}")
        index = (index << 1) | _SIGN_ALIASES[ch]
    return index


def index_to_sign_string(index: int, level: int) -> str:
    level = check_level("level", level)
    if not 0 <= index < (1 << level):
        raise ConfigError(f"index {index} out of range for level {level}")
    return "".join(PLUS if (index >> (level - 1 - b)) & 1 else MINUS for b in range(level))


def faulty_levels(n: int, protected_levels: int) -> int:
    """Leaf-side levels that run the faulty transforms"""
    n = check_level("n", n)
    protected_levels = check_level("protected_levels", protected_levels, n + 1)
    return max(0, n - protected_levels)


@dataclass(frozen=True, eq=False)
class ZTable:
    """Erasure probabilities of all 2^level synthetic channel types"""
    level: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (1 << self.level,):
            raise ConfigError(
                f"a level-{self.level} table needs {1 << self.level} entries, got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index):
        return self.values[index]

    def sign_string(self, index: int) -> str:
        return index_to_sign_string(index, self.level)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def sorted_values(self) -> np.ndarray:
        return np.sort(self.values)

    def fraction_above(self, threshold: float) -> float:
        return float(np.count_nonzero(self.values > threshold)) / len(self.values)

    def to_rows(self) -> List[Tuple[int, str, float]]:
        return [(i, self.sign_string(i), float(z)) for i, z in enumerate(self.values)]

    def __repr__(self):
        return f"ZTable(level={self.level}, mean={self.mean():.6g})"


def iter_z_tables(
    n: int, p: float, delta: float, protected_levels: int = 0
) -> Iterator[ZTable]:
    """Yield the tables of levels 0..n.

    Levels 1..n_u use the faulty transforms, the remaining levels up to the
    root are protected and use delta = 0. Child ``2i`` of entry ``i`` is the
    minus channel and ``2i + 1`` the plus channel.
    """
    p = check_probability("p", p)
    delta = check_probability("delta", delta)
    n_u = faulty_levels(n, protected_levels)

    values = np.array([p])
    yield ZTable(0, values)
    for s in range(1, n + 1):
        d = delta if s <= n_u else 0.0
        child = np.empty(2 * len(values))
        child[0::2] = t_minus_faulty(values, d)
        child[1::2] = t_plus_faulty(values, d)
        values = child
        yield ZTable(s, values)


def compute_z_table(n: int, p: float, delta: float, protected_levels: int = 0) -> ZTable:
    table = None
    for table in iter_z_tables(n, p, delta, protected_levels):
        pass
    logger.debug(f"Z table built: n={n}, p={p}, delta={delta}, n_p={protected_levels}")
    return table


def expected_epsilon(p: float, delta: float, s: int) -> float:
    """Mean of the faulty polarization process after s steps"""
    p = check_probability("p", p)
    delta = check_probability("delta", delta)
    s = check_level("s", s)
    return 1.0 - (1.0 - p) * (1.0 - delta) ** s


def rate_loss(delta: float, p: float, n_u: int) -> float:
    """Capacity lost to n_u unprotected levels"""
    delta = check_probability("delta", delta)
    p = check_probability("p", p)
    n_u = check_level("n_u", n_u)
    return (1.0 - (1.0 - delta) ** n_u) * (1.0 - p)


def sample_epsilon_path(
    p: float,
    delta: float,
    s: int,
    rng_seed: Optional[int] = None,
    signs: Optional[Sequence[str]] = None,
    protected_levels: int = 0,
) -> np.ndarray:
    """One realisation eps_0..eps_s of the polarization process.

    Each step picks the plus or minus transform with probability 1/2 from a
    generator seeded with ``rng_seed``; ``signs`` fixes the choices instead.
    """
    p = check_probability("p", p)
    delta = check_probability("delta", delta)
    s = check_level("s", s)
    n_u = faulty_levels(s, protected_levels)

    if signs is None:
        choices = np.random.default_rng(rng_seed).integers(0, 2, size=s)
    else:
        if len(signs) != s:
            raise ConfigError(f"expected {s} signs, got {len(signs)}")
        choices = [sign_string_to_index(ch) for ch in signs]

    path = np.empty(s + 1)
    path[0] = p
    for step, plus in enumerate(choices, start=1):
        d = delta if step <= n_u else 0.0
        transform = t_plus_faulty if plus else t_minus_faulty
        path[step] = transform(path[step - 1], d)
    return path
