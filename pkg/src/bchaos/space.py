"""The Bernoulli product space at a finite level.

Atoms of level ``m`` are full sign assignments on coordinates ``0..m``.  An
atom is identified with an integer ``a`` in ``[0, 2**(m+1))``: bit ``k`` of
``a`` is set iff ``omega(k) = +1``.  A :class:`CylinderSet` is a union of
atoms, stored as a bitmask over those integers, so every event of the finite
algebra is exactly integrable by enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import LevelError, PartitionError, SupportError
from .gamma import GammaIndex, check_level, gamma_size


@dataclass(frozen=True)
class ThetaSequence:
    """Parameters ``theta_n`` in ``(0, 1)``: the probability that ``omega(n) = +1``."""

    func: Callable[[int], float] = field(repr=False)
    symmetric: bool = False
    values: tuple[float, ...] | None = None

    @classmethod
    def make_symmetric(cls) -> "ThetaSequence":
        return cls(lambda n: 0.5, symmetric=True)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "ThetaSequence":
        vals = tuple(float(v) for v in values)
        for n, t in enumerate(vals):
            if not 0.0 < t < 1.0:
                raise ValueError(f"theta_{n} = {t} is not in (0, 1)")

        def lookup(n: int) -> float:
            if n >= len(vals):
                raise LevelError(f"theta given for coordinates 0..{len(vals) - 1} only, asked for {n}")
            return vals[n]

        return cls(lookup, symmetric=all(t == 0.5 for t in vals), values=vals)

    def __call__(self, n: int) -> float:
        t = float(self.func(n))
        if not 0.0 < t < 1.0:
            raise ValueError(f"theta_{n} = {t} is not in (0, 1)")
        return t

    def first(self, level: int) -> np.ndarray:
        return np.array([self(k) for k in range(level + 1)])

    def to_json(self, level: int | None = None):
        if self.symmetric and self.values is None:
            return "symmetric"
        if level is None:
            if self.values is None:
                raise ValueError("a functional theta needs an explicit level to serialize")
            return list(self.values)
        return [self(k) for k in range(level + 1)]

    @classmethod
    def from_json(cls, obj) -> "ThetaSequence":
        if obj == "symmetric":
            return SYMMETRIC
        return cls.from_values(obj)


SYMMETRIC = ThetaSequence.make_symmetric()


@dataclass(frozen=True)
class Atom:
    level: int
    signs: tuple[int, ...]
    prob: float

    @property
    def index(self) -> int:
        return sum(1 << k for k, s in enumerate(self.signs) if s > 0)

    @classmethod
    def from_index(cls, index: int, level: int, theta: ThetaSequence = SYMMETRIC) -> "Atom":
        level = check_level(level)
        if not 0 <= index < gamma_size(level):
            raise LevelError(f"atom index {index} out of range for level {level}")
        signs = tuple(1 if index >> k & 1 else -1 for k in range(level + 1))
        prob = math.prod(theta(k) if s > 0 else 1.0 - theta(k) for k, s in enumerate(signs))
        return cls(level, signs, prob)


def atoms(level: int, theta: ThetaSequence = SYMMETRIC) -> list[Atom]:
    return [Atom.from_index(a, level, theta) for a in range(gamma_size(level))]


def atom_probabilities(level: int, theta: ThetaSequence = SYMMETRIC) -> np.ndarray:
    """Probability of every level-``level`` atom, indexed by atom integer."""
    probs = np.ones(1)
    for k in range(check_level(level) + 1):
        t = theta(k)
        probs = np.concatenate([probs * (1.0 - t), probs * t])
    return probs


@dataclass(frozen=True)
class CylinderSet:
    """An event determined by coordinates ``0..level``."""

    level: int
    mask: int

    def __post_init__(self):
        check_level(self.level)
        if self.level > 20:
            raise LevelError("cylinder levels above 20 are not enumerable")
        if not 0 <= self.mask < 1 << self.n_atoms:
            raise LevelError("atom mask does not fit the level")

    @property
    def n_atoms(self) -> int:
        return gamma_size(self.level)

    @classmethod
    def full(cls, level: int) -> "CylinderSet":
        return cls(level, (1 << gamma_size(level)) - 1)

    @classmethod
    def empty(cls, level: int) -> "CylinderSet":
        return cls(level, 0)

    @classmethod
    def from_atoms(cls, level: int, indices) -> "CylinderSet":
        mask = 0
        for a in indices:
            mask |= 1 << int(a)
        return cls(level, mask)

    @classmethod
    def atom(cls, level: int, index: int) -> "CylinderSet":
        return cls.from_atoms(level, [index])

    @classmethod
    def where(cls, level: int, condition: Mapping[int, int]) -> "CylinderSet":
        """Event ``{omega : omega(k) = s for every (k, s) in condition}``."""
        for k, s in condition.items():
            if not 0 <= k <= level or s not in (-1, 1):
                raise LevelError(f"bad condition omega({k}) = {s} at level {level}")
        keep = [
            a for a in range(gamma_size(level))
            if all((a >> k & 1) == (s > 0) for k, s in condition.items())
        ]
        return cls.from_atoms(level, keep)

    def indicator(self) -> np.ndarray:
        """Boolean vector over the atoms of this level."""
        n = self.n_atoms
        raw = self.mask.to_bytes((n + 7) // 8, "little")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return bits[:n].astype(bool)

    def atom_indices(self) -> list[int]:
        return np.flatnonzero(self.indicator()).tolist()

    def __contains__(self, atom) -> bool:
        if isinstance(atom, Atom):
            if atom.level < self.level:
                raise LevelError("atom is coarser than the cylinder")
            index = atom.index & (self.n_atoms - 1)
        else:
            index = int(atom)
        return bool(self.mask >> index & 1)

    def lift(self, level: int) -> "CylinderSet":
        """The same event described at a finer level."""
        if level < self.level:
            raise LevelError("cannot lift a cylinder to a coarser level")
        if level == self.level:
            return self
        low = self.n_atoms - 1
        keep = [a for a in range(gamma_size(level)) if self.mask >> (a & low) & 1]
        return CylinderSet.from_atoms(level, keep)

    def _align(self, other: "CylinderSet") -> tuple["CylinderSet", "CylinderSet"]:
        level = max(self.level, other.level)
        return self.lift(level), other.lift(level)

    def __and__(self, other: "CylinderSet") -> "CylinderSet":
        a, b = self._align(other)
        return CylinderSet(a.level, a.mask & b.mask)

    def __or__(self, other: "CylinderSet") -> "CylinderSet":
        a, b = self._align(other)
        return CylinderSet(a.level, a.mask | b.mask)

    def complement(self) -> "CylinderSet":
        return CylinderSet(self.level, ((1 << self.n_atoms) - 1) ^ self.mask)

    def isdisjoint(self, other: "CylinderSet") -> bool:
        return (self & other).mask == 0

    def to_json(self) -> dict:
        return {"level": self.level, "atom_mask": format(self.mask, "x")}

    @classmethod
    def from_json(cls, obj: Mapping) -> "CylinderSet":
        return cls(int(obj["level"]), int(str(obj["atom_mask"]), 16))


def common_level(events: Sequence[CylinderSet]) -> int:
    levels = {e.level for e in events}
    if len(levels) != 1:
        raise PartitionError(f"events live on different levels: {sorted(levels)}")
    return levels.pop()


def check_disjoint(events: Sequence[CylinderSet]) -> None:
    common_level(events)
    seen = 0
    for i, e in enumerate(events):
        if seen & e.mask:
            raise PartitionError(f"event {i} overlaps an earlier event")
        seen |= e.mask


# -- the coordinate variables ------------------------------------------------

def z_value(n: int, sign: int, theta: ThetaSequence = SYMMETRIC) -> float:
    """Value of the normalized variable ``Z_n`` when ``omega(n) = sign``."""
    if n < 0:
        raise LevelError("coordinates are nonnegative")
    t = theta(n)
    if sign > 0:
        return math.sqrt((1.0 - t) / t)
    return -math.sqrt(t / (1.0 - t))


def eval_Z_sigma(sigma: GammaIndex, atom: Atom, theta: ThetaSequence = SYMMETRIC) -> float:
    if sigma.max_coord > atom.level:
        raise SupportError(f"{sigma} reaches beyond atom level {atom.level}")
    return math.prod(z_value(i, atom.signs[i], theta) for i in sigma)


def z_table(level: int, theta: ThetaSequence = SYMMETRIC, n_indices: int | None = None) -> np.ndarray:
    """Matrix ``Z[a, sigma]`` of every ``Z_sigma`` at every level-``level`` atom.

    Rows run over atoms, columns over Gamma_level (both by integer code).
    ``n_indices`` keeps only the first columns, i.e. a coarser Gamma_n.
    """
    level = check_level(level)
    n_atoms = gamma_size(level)
    atom_ids = np.arange(n_atoms)
    table = np.ones((n_atoms, 1))
    for k in range(level + 1):
        t = theta(k)
        plus, minus = math.sqrt((1.0 - t) / t), -math.sqrt(t / (1.0 - t))
        zk = np.where(atom_ids >> k & 1, plus, minus)
        table = np.hstack([table, table * zk[:, None]])
    if n_indices is not None:
        table = table[:, :n_indices]
    return table


def _support_arrays(f, level: int) -> tuple[np.ndarray, np.ndarray]:
    keys, vals = [], []
    for sigma, c in f.coeffs.items():
        if sigma.max_coord > level:
            raise SupportError(f"coefficient at {sigma} reaches beyond level {level}")
        keys.append(sigma.bits)
        vals.append(c)
    return np.array(keys, dtype=np.int64), np.array(vals, dtype=np.complex128)


def evaluate_on_atoms(f, level: int, theta: ThetaSequence = SYMMETRIC) -> np.ndarray:
    """Values of the chaos vector ``f`` on every atom of the level."""
    keys, vals = _support_arrays(f, level)
    if keys.size == 0:
        return np.zeros(gamma_size(level), dtype=np.complex128)
    table = z_table(level, theta)
    return table[:, keys] @ vals


def integrate_cylinder(f, event: CylinderSet, theta: ThetaSequence = SYMMETRIC) -> complex:
    """Exact ``int_E f dmu`` by summing over the atoms of ``E``."""
    values = evaluate_on_atoms(f, event.level, theta)
    weights = atom_probabilities(event.level, theta) * event.indicator()
    return complex(np.dot(weights, values))


def measure(event: CylinderSet, theta: ThetaSequence = SYMMETRIC) -> float:
    return float(np.dot(atom_probabilities(event.level, theta), event.indicator()))


# -- Monte Carlo -------------------------------------------------------------

def _sample_sign_bits(rng: np.random.Generator, level: int, count: int, theta) -> np.ndarray:
    thetas = theta.first(level)
    return rng.random((count, level + 1)) < thetas


def sample_atoms(level: int, count: int, seed: int, theta: ThetaSequence = SYMMETRIC) -> Iterator[Atom]:
    """I.i.d. atoms under the product law; reproducible for a fixed seed."""
    level = check_level(level)
    rng = np.random.default_rng(seed)
    bits = _sample_sign_bits(rng, level, count, theta)
    weights = 1 << np.arange(level + 1)
    for row in bits @ weights:
        yield Atom.from_index(int(row), level, theta)


def sample_codes(level: int, count: int, seed, theta: ThetaSequence = SYMMETRIC) -> np.ndarray:
    """Integer codes of ``count`` i.i.d. atoms; vectorized counterpart of :func:`sample_atoms`."""
    level = check_level(level)
    bits = _sample_sign_bits(np.random.default_rng(seed), level, count, theta)
    return bits @ (1 << np.arange(level + 1))


def mc_inner_product(sigma: GammaIndex, tau: GammaIndex, level: int, count: int, seed,
                     theta: ThetaSequence = SYMMETRIC) -> tuple[float, float]:
    """Monte Carlo ``E[Z_sigma Z_tau]`` over level-``level`` atoms with its standard error."""
    if max(sigma.max_coord, tau.max_coord) > level:
        raise SupportError("indices reach beyond the sampling level")
    codes = sample_codes(level, count, seed, theta)
    z = z_table(level, theta)
    samples = z[codes, sigma.bits] * z[codes, tau.bits]
    return float(samples.mean()), float(samples.std() / math.sqrt(count))


def mc_expectation(f, event: CylinderSet, count: int, seed: int,
                   theta: ThetaSequence = SYMMETRIC) -> tuple[complex, float]:
    """Monte Carlo estimate of ``int_E f dmu`` and its standard error."""
    if count < 1:
        raise ValueError("need at least one sample")
    level = event.level
    rng = np.random.default_rng(seed)
    bits = _sample_sign_bits(rng, level, count, theta)
    codes = bits @ (1 << np.arange(level + 1))
    samples = evaluate_on_atoms(f, level, theta)[codes] * event.indicator()[codes]
    estimate = samples.mean()
    spread = math.sqrt(float(np.mean(np.abs(samples - estimate) ** 2)))
    return complex(estimate), spread / math.sqrt(count)


def evaluate_at(f, atom: Atom, theta: ThetaSequence = SYMMETRIC) -> complex:
    """Value of the chaos vector ``f`` at a single atom."""
    return complex(sum(c * eval_Z_sigma(sigma, atom, theta) for sigma, c in f.coeffs.items()))
