# polar_fault_lab/core/simulation/codec.py

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from typing_extensions import Literal, TypeAlias

from ..analysis.construction import CodeSpec, InfoSet
from ..analysis.polarization import faulty_levels
from ..errors import ConfigError, check_level, check_probability

# Message alphabet: +1 is bit 0, -1 is bit 1, 0 is an erasure
ERASURE = 0

DecodeStatus: TypeAlias = Literal["decoded", "frame_erasure"]
TraceRow: TypeAlias = Tuple[int, int, int, int]


def _log2_length(length: int) -> int:
    n = length.bit_length() - 1
    if length <= 0 or (1 << n) != length:
        raise ConfigError(f"length must be a power of two, got {length}")
    return n


@lru_cache(maxsize=32)
def _bit_reversal(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    rev.setflags(write=False)
    return rev


def bit_reversal_indices(n: int) -> np.ndarray:
    return _bit_reversal(check_level("n", n))


def natural_transform(u: np.ndarray) -> np.ndarray:
    """u F^{(x)n} over GF(2), butterfly stages on the last axis"""
    x = np.array(u, dtype=np.uint8)
    N = x.shape[-1]
    _log2_length(N)
    step = 1
    while step < N:
        view = x.reshape(x.shape[:-1] + (N // (2 * step), 2, step))
        view[..., 0, :] ^= view[..., 1, :]
        step *= 2
    return x


def polar_encode(u: Sequence[int], n: int) -> np.ndarray:
    """Codeword x = u B_n F^{(x)n}"""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != (1 << n):
        raise ConfigError(f"expected {1 << n} input bits, got {u.shape[-1]}")
    return natural_transform(u)[..., bit_reversal_indices(n)]


def transmit_bec(x: Sequence[int], p: float, rng: np.random.Generator) -> np.ndarray:
    """Map bits to +-1 and erase each position independently with probability p"""
    p = check_probability("p", p)
    x = np.asarray(x, dtype=np.uint8)
    y = (1 - 2 * x.astype(np.int8)).astype(np.int8)
    y[rng.random(x.shape) < p] = ERASURE
    return y


def f_minus(m1, m2):
    out = np.multiply(np.asarray(m1, dtype=np.int8), np.asarray(m2, dtype=np.int8))
    return int(out) if out.ndim == 0 else out


def f_plus(m1, m2, u, ties: Literal["away", "zero"] = "away"):
    """Combine two observations of the same bit once the partial sum u is known.

    ``ties="away"`` rounds the half-integers to +-1, so a single surviving
    observation decides the output and only a double erasure (or a
    disagreement) erases it. ``ties="zero"`` rounds them to 0.
    """
    v = np.where(np.asarray(u) % 2 == 1, -1, 1) * np.asarray(m1, dtype=np.int8) + np.asarray(
        m2, dtype=np.int8
    )
    if ties == "away":
        out = np.sign(v)
    elif ties == "zero":
        out = np.where(np.abs(v) == 2, np.sign(v), 0)
    else:
        raise ConfigError(f"unknown tie rule {ties!r}")
    out = out.astype(np.int8)
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class FaultPattern:
    """Internal erasure flags: row s-1 holds the 2^n writes of level s (type * copies + copy)"""
    flags: np.ndarray

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=bool)
        if flags.ndim < 2:
            raise ConfigError("fault flags need shape (..., n, 2^n)")
        n = flags.shape[-2]
        if flags.shape[-1] != (1 << n):
            raise ConfigError(f"fault flags for n={n} need {1 << n} columns, got {flags.shape[-1]}")
        object.__setattr__(self, "flags", flags)

    @property
    def n(self) -> int:
        return self.flags.shape[-2]

    @classmethod
    def none(cls, n: int) -> "FaultPattern":
        return cls(np.zeros((n, 1 << n), dtype=bool))

    @classmethod
    def all(cls, n: int) -> "FaultPattern":
        return cls(np.ones((n, 1 << n), dtype=bool))

    @classmethod
    def sample(
        cls,
        n: int,
        delta: float,
        rng: np.random.Generator,
        protected_levels: int = 0,
        batch: Tuple[int, ...] = (),
    ) -> "FaultPattern":
        delta = check_probability("delta", delta)
        n_u = faulty_levels(n, protected_levels)
        flags = np.zeros(tuple(batch) + (n, 1 << n), dtype=bool)
        if n_u and delta > 0.0:
            flags[..., :n_u, :] = rng.random(tuple(batch) + (n_u, 1 << n)) < delta
        return cls(flags)

    def level(self, s: int) -> np.ndarray:
        return self.flags[..., s - 1, :]


@dataclass
class DecodeResult:
    """Outcome of one SC decoding attempt"""
    status: DecodeStatus
    decoded_bits: Optional[np.ndarray] = None
    first_erased_index: Optional[int] = None

    @property
    def decoded(self) -> bool:
        return self.status == "decoded"

    def __repr__(self):
        return f"DecodeResult(status={self.status!r}, first_erased_index={self.first_erased_index})"


def indicator_tree(channel_erasures: np.ndarray, faults: FaultPattern, n: int) -> np.ndarray:
    """Erasure indicators of the 2^n root channels.

    Minus nodes OR their inputs, plus nodes AND them, and every write is then
    ORed with its fault flag. ``channel_erasures`` is in codeword order and
    may carry leading batch dimensions shared with ``faults``.
    """
    erasures = np.asarray(channel_erasures, dtype=bool)
    N = 1 << n
    if erasures.shape[-1] != N or faults.n != n:
        raise ConfigError(f"expected {N} channel positions and faults for n={n}")
    batch = erasures.shape[:-1]

    # (..., types, copies); leaves are read in bit-reversed order
    level = erasures[..., bit_reversal_indices(n)].reshape(batch + (1, N))
    for s in range(1, n + 1):
        half = N >> s
        a, b = level[..., :half], level[..., half:]
        child = np.stack((a | b, a & b), axis=-2)
        level = child.reshape(batch + (1 << s, half))
        level = level | faults.level(s).reshape(faults.flags.shape[:-2] + (1 << s, half))
    return level.reshape(level.shape[:-2] + (N,))


def sc_decode(
    y: Sequence[int],
    spec: CodeSpec,
    info: InfoSet,
    frozen_values: Optional[Sequence[int]] = None,
    faults: Optional[FaultPattern] = None,
    trace: Optional[List[TraceRow]] = None,
) -> DecodeResult:
    """Successive cancellation decoding with internal erasures.

    Indices are decoded in ascending order. Each level-s node is computed once
    per frame and erased if its fault flag is set; partial sums are exact.
    Decoding halts at the first information index whose root message is an
    erasure.
    """
    n, N = spec.n, spec.N
    y = np.asarray(y, dtype=np.int8)
    if y.shape != (N,):
        raise ConfigError(f"expected {N} channel outputs, got {y.shape}")
    if info.n != n:
        raise ConfigError(f"information set is for n={info.n}, code has n={n}")
    faults = faults if faults is not None else FaultPattern.none(n)
    if faults.flags.shape != (n, N):
        raise ConfigError(f"fault pattern shape {faults.flags.shape} does not match n={n}")
    frozen = np.zeros(N, dtype=np.uint8) if frozen_values is None else np.asarray(frozen_values, dtype=np.uint8)
    if frozen.shape != (N,):
        raise ConfigError(f"expected {N} frozen values, got {frozen.shape}")

    info_mask = info.mask()
    messages = [y[bit_reversal_indices(n)]] + [None] * n
    current = [0] + [-1] * n
    u_hat = np.zeros(N, dtype=np.uint8)

    for i in range(N):
        for s in range(1, n + 1):
            t = i >> (n - s)
            if current[s] == t:
                continue
            half = N >> s
            parent = messages[s - 1]
            m1, m2 = parent[:half], parent[half:]
            if t & 1:
                start = (t - 1) * half
                partial = natural_transform(u_hat[start:start + half])
                msg = f_plus(m1, m2, partial)
            else:
                msg = f_minus(m1, m2)
            flags = faults.level(s)[t * half:(t + 1) * half]
            msg = np.where(flags, ERASURE, msg).astype(np.int8)
            if trace is not None:
                trace.extend(
                    (s, t * half + k, int(msg[k]), int(flags[k])) for k in range(half)
                )
            messages[s] = msg
            current[s] = t

        root = int(messages[n][0])
        if info_mask[i]:
            if root == ERASURE:
                return DecodeResult("frame_erasure", first_erased_index=i)
            u_hat[i] = 0 if root > 0 else 1
        else:
            u_hat[i] = frozen[i]

    return DecodeResult("decoded", decoded_bits=u_hat)
