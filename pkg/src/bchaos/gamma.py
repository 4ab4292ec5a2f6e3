"""Finite subsets of the nonnegative integers, packed into one machine word.

A :class:`GammaIndex` labels a chaos coefficient.  Coordinate ``k`` belongs to
the index iff bit ``k`` of :attr:`GammaIndex.bits` is set, so the canonical
enumeration of the truncation ``Gamma_n`` (all subsets of ``{0, ..., n}``) is
simply ``bits = 0, 1, ..., 2**(n+1) - 1`` and an index's position in that
enumeration equals its bit pattern.  Dense arrays over ``Gamma_n`` throughout
the package rely on this.

The weight ``lambda(sigma) = prod_{k in sigma} (1 + k)`` is carried as its
natural logarithm.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .errors import LevelError

N_MAX = 63
ZETA_TERMS = 200

_WORD = 1 << (N_MAX + 1)


@dataclass(frozen=True, order=True, slots=True)
class GammaIndex:
    """A finite subset of ``{0, ..., 63}`` stored as a bitset."""

    bits: int = 0

    def __post_init__(self):
        if not 0 <= self.bits < _WORD:
            raise LevelError(f"bits {self.bits:#x} do not fit coordinates 0..{N_MAX}")

    @classmethod
    def of(cls, *coords: int) -> "GammaIndex":
        return cls.from_coords(coords)

    @classmethod
    def from_coords(cls, coords: Iterable[int]) -> "GammaIndex":
        bits = 0
        for k in coords:
            if not 0 <= k <= N_MAX:
                raise LevelError(f"coordinate {k} outside 0..{N_MAX}")
            bits |= 1 << k
        return cls(bits)

    @classmethod
    def parse(cls, text: str) -> "GammaIndex":
        """Read the ``"{0,2,5}"`` form (or a bare integer bit pattern)."""
        text = text.strip()
        if re.fullmatch(r"\d+", text):
            return cls(int(text))
        m = re.fullmatch(r"\{\s*([\d\s,]*)\}", text)
        if m is None:
            raise ValueError(f"cannot parse index {text!r}")
        body = m.group(1).strip()
        coords = [int(tok) for tok in body.split(",")] if body else []
        return cls.from_coords(coords)

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, k: object) -> bool:
        return isinstance(k, int) and 0 <= k <= N_MAX and bool(self.bits >> k & 1)

    def __bool__(self) -> bool:
        return self.bits != 0

    def __or__(self, other: "GammaIndex") -> "GammaIndex":
        return GammaIndex(self.bits | other.bits)

    def __and__(self, other: "GammaIndex") -> "GammaIndex":
        return GammaIndex(self.bits & other.bits)

    def __sub__(self, other: "GammaIndex") -> "GammaIndex":
        return GammaIndex(self.bits & ~other.bits)

    def __xor__(self, other: "GammaIndex") -> "GammaIndex":
        return GammaIndex(self.bits ^ other.bits)

    @property
    def max_coord(self) -> int:
        """Largest member, or -1 for the empty index."""
        return self.bits.bit_length() - 1

    def issubset(self, other: "GammaIndex") -> bool:
        return self.bits & ~other.bits == 0

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self)) + "}"

    def __repr__(self) -> str:
        return f"GammaIndex({self})"


EMPTY = GammaIndex(0)


def as_index(sigma: GammaIndex | int | Iterable[int]) -> GammaIndex:
    """Coerce a bit pattern or an iterable of coordinates to a GammaIndex."""
    if isinstance(sigma, GammaIndex):
        return sigma
    if isinstance(sigma, (int, np.integer)):
        return GammaIndex(int(sigma))
    return GammaIndex.from_coords(sigma)


def check_level(level: int) -> int:
    if not isinstance(level, (int, np.integer)) or not 0 <= level <= N_MAX:
        raise LevelError(f"truncation level must be an integer in 0..{N_MAX}, got {level!r}")
    return int(level)


def gamma_size(level: int) -> int:
    """Number of elements of Gamma_level."""
    return 1 << (check_level(level) + 1)


# -- set algebra -------------------------------------------------------------

def sym_diff(sigma: GammaIndex, tau: GammaIndex) -> GammaIndex:
    return sigma ^ tau


def union(sigma: GammaIndex, tau: GammaIndex) -> GammaIndex:
    return sigma | tau


def intersect(sigma: GammaIndex, tau: GammaIndex) -> GammaIndex:
    return sigma & tau


def set_minus(sigma: GammaIndex, tau: GammaIndex) -> GammaIndex:
    return sigma - tau


def subsets_of(sigma: GammaIndex) -> Iterator[GammaIndex]:
    """All ``2**len(sigma)`` subsets, in ascending bit-pattern order."""
    s = sigma.bits
    sub = 0
    while True:
        yield GammaIndex(sub)
        if sub == s:
            return
        # next subset of s in increasing order
        sub = (sub - s) & s


def enumerate_gamma_n(level: int) -> list[GammaIndex]:
    """Gamma_level in canonical (ascending bit pattern) order."""
    return [GammaIndex(b) for b in range(gamma_size(level))]


# -- weights -----------------------------------------------------------------

def lambda_log(sigma: GammaIndex) -> float:
    """Natural log of ``lambda(sigma)``; zero for the empty index."""
    return math.fsum(math.log1p(k) for k in sigma)


def weight(sigma: GammaIndex) -> int:
    """``lambda(sigma)`` as an exact integer."""
    return math.prod(1 + k for k in sigma)


@lru_cache(maxsize=32)
def log_weights(level: int) -> np.ndarray:
    """``log lambda`` for every element of Gamma_level, indexed by bit pattern (read-only, cached)."""
    level = check_level(level)
    out = np.zeros(1, dtype=np.float64)
    for k in range(level + 1):
        out = np.concatenate([out, out + math.log1p(k)])
    out.flags.writeable = False
    return out


def weight_powers(level: int, exponent: float) -> np.ndarray:
    """``lambda(sigma) ** exponent`` over Gamma_level, exponentiated from logs."""
    return np.exp(exponent * log_weights(level))


def weight_series_sum(r: float, level: int) -> float:
    """Truncated series ``sum_{sigma in Gamma_level} lambda(sigma) ** -r`` for ``r > 1``."""
    if not r > 1:
        raise ValueError(f"the weight series needs r > 1, got {r}")
    # numpy sums pairwise: relative error ~ eps * log2(size), far below 1e-12
    return float(np.sum(np.exp(-r * log_weights(level))))


def zeta_upper(r: float, terms: int = ZETA_TERMS) -> float:
    """``sum_{m=1}^{terms} m ** -r`` plus the integral bound on the tail."""
    if not r > 1:
        raise ValueError(f"zeta envelope needs r > 1, got {r}")
    head = math.fsum(m ** -r for m in range(1, terms + 1))
    tail = terms ** (1.0 - r) / (r - 1.0)
    return head + tail


def weight_series_envelope(r: float, terms: int = ZETA_TERMS) -> float:
    """Certified upper bound ``exp(zeta(r))`` for the full weight series."""
    return math.exp(zeta_upper(r, terms))
