# polar_fault_lab/core/analysis/construction.py

import math
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterable, Tuple

import numpy as np

from ..errors import ConfigError, check_level, check_probability
from .polarization import ZTable, compute_z_table, rate_loss


@dataclass(frozen=True)
class CodeSpec:
    """A polar code over BEC(p) decoded by an SC decoder with fault probability delta"""
    n: int
    k: int
    p: float
    delta: float
    protected_levels: int = 0

    def __post_init__(self):
        check_level("n", self.n)
        check_level("k", self.k, self.N)
        check_probability("p", self.p)
        check_probability("delta", self.delta)
        check_level("protected_levels", self.protected_levels, self.n + 1)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def rate(self) -> float:
        return self.k / self.N

    @classmethod
    def from_rate(
        cls, n: int, rate: float, p: float, delta: float, protected_levels: int = 0
    ) -> "CodeSpec":
        return cls(n, k_from_rate(n, rate), p, delta, protected_levels)

    def replace(self, **changes) -> "CodeSpec":
        fields = self.to_dict()
        fields.update(changes)
        return CodeSpec.from_dict(fields)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "p": self.p,
            "delta": self.delta,
            "protected_levels": self.protected_levels,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "CodeSpec":
        try:
            return cls(
                n=int(doc["n"]),
                k=int(doc["k"]),
                p=float(doc["p"]),
                delta=float(doc["delta"]),
                protected_levels=int(doc.get("protected_levels", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed code definition: {exc}") from exc


@dataclass(frozen=True)
class InfoSet:
    """Indices of the synthetic channels that carry information"""
    n: int
    indices: Tuple[int, ...]

    def __post_init__(self):
        indices = tuple(sorted(int(i) for i in self.indices))
        if len(set(indices)) != len(indices):
            raise ConfigError("information set contains duplicate indices")
        if indices and not (0 <= indices[0] and indices[-1] < (1 << self.n)):
            raise ConfigError(f"information indices must lie in [0, {1 << self.n})")
        object.__setattr__(self, "indices", indices)

    @property
    def K(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, index) -> bool:
        return index in self.indices

    def mask(self) -> np.ndarray:
        mask = np.zeros(1 << self.n, dtype=bool)
        mask[list(self.indices)] = True
        return mask

    def frozen_indices(self) -> Tuple[int, ...]:
        return tuple(np.flatnonzero(~self.mask()).tolist())


@dataclass(frozen=True)
class ProtectionReport:
    """Hardware overhead and rate loss of protecting the n_p root-side levels"""
    n: int
    n_p: int
    n_u: int
    protected_units: int
    total_units: int
    fraction: float
    rate_loss: float


def select_info_set(z: ZTable, K: int) -> InfoSet:
    """The K indices with smallest erasure probability, ties to the lower index"""
    K = check_level("K", K, len(z))
    order = np.argsort(z.values, kind="stable")
    return InfoSet(z.level, tuple(order[:K].tolist()))


def k_from_rate(n: int, R: float) -> int:
    n = check_level("n", n)
    R = check_probability("R", R)
    return int(math.ceil(R * (1 << n)))


def good_channels(z: ZTable, eta: float) -> FrozenSet[int]:
    """Indices whose erasure probability is at most eta"""
    return frozenset(np.flatnonzero(z.values <= eta).tolist())


def protection_report(n: int, n_p: int, p: float, delta: float) -> ProtectionReport:
    n = check_level("n", n)
    n_p = check_level("n_p", n_p, n + 1)
    n_u = max(0, (n + 1) - n_p)
    protected = (1 << n_p) - 1 if n_p > 0 else 0
    total = (1 << (n + 1)) - 1
    return ProtectionReport(
        n=n,
        n_p=n_p,
        n_u=n_u,
        protected_units=protected,
        total_units=total,
        fraction=protected / total,
        rate_loss=rate_loss(delta, p, n_u),
    )


def protected_fraction_limit(n_u: int) -> float:
    """Limit of the protected fraction for fixed n_u as n grows"""
    return 2.0 ** -check_level("n_u", n_u)


def construct_code(spec: CodeSpec) -> Tuple[ZTable, InfoSet]:
    z = compute_z_table(spec.n, spec.p, spec.delta, spec.protected_levels)
    return z, select_info_set(z, spec.k)


def code_definition(spec: CodeSpec, info: InfoSet) -> Dict[str, Any]:
    return {**spec.to_dict(), "info_set": list(info.indices)}


def load_code_definition(doc: Dict[str, Any]) -> Tuple[CodeSpec, InfoSet]:
    spec = CodeSpec.from_dict(doc)
    indices: Iterable[int] = doc.get("info_set")
    if indices is None:
        _, info = construct_code(spec)
        return spec, info
    info = InfoSet(spec.n, tuple(indices))
    if info.K != spec.k:
        raise ConfigError(f"info_set has {info.K} indices but k = {spec.k}")
    return spec, info
