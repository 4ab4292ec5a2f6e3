"""Test functionals, generalized functionals and the norm ladder between them.

A :class:`ChaosVector` is a finite expansion ``sum_sigma c_sigma Z_sigma``.
A :class:`GeneralizedFunctional` is known through its Fock transform
``sigma -> <<Phi, Z_sigma>>``, materialized as a dense array over some
``Gamma_n`` (index = bit pattern).

The pairing ``<<Phi, xi>>`` is bilinear: ``sum_sigma Phi^(sigma) c_sigma``.
The L2 inner product is conjugate-linear in its first slot, so the Riesz map
conjugates coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import CertificateError, LevelError, SupportError, SymmetryError
from .gamma import (
    EMPTY,
    GammaIndex,
    as_index,
    check_level,
    gamma_size,
    log_weights,
    weight_series_sum,
)
from .space import SYMMETRIC, ThetaSequence, atom_probabilities, z_table

CERT_RTOL = 1e-12


class ChaosVector:
    """A finitely supported coefficient map ``GammaIndex -> complex``.

    Zero coefficients are dropped, so two vectors compare equal exactly when
    their nonzero coefficients agree.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping | Iterable = ()):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[GammaIndex, complex] = {}
        for sigma, c in items:
            sigma = as_index(sigma)
            acc[sigma] = acc.get(sigma, 0j) + complex(c)
        self._coeffs = {s: c for s, c in sorted(acc.items()) if c != 0}

    @classmethod
    def basis(cls, sigma) -> "ChaosVector":
        return cls({as_index(sigma): 1.0})

    @classmethod
    def from_array(cls, values) -> "ChaosVector":
        """Dense coefficients over Gamma_n, indexed by bit pattern."""
        values = np.asarray(values)
        nz = np.flatnonzero(values)
        return cls((GammaIndex(int(b)), values[b]) for b in nz)

    @property
    def coeffs(self) -> dict[GammaIndex, complex]:
        return self._coeffs

    @property
    def max_coord(self) -> int:
        return max((s.max_coord for s in self._coeffs), default=-1)

    def support(self) -> list[GammaIndex]:
        return list(self._coeffs)

    def __getitem__(self, sigma) -> complex:
        return self._coeffs.get(as_index(sigma), 0j)

    def __len__(self) -> int:
        return len(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def to_array(self, level: int) -> np.ndarray:
        out = np.zeros(gamma_size(level), dtype=np.complex128)
        for sigma, c in self._coeffs.items():
            if sigma.max_coord > level:
                raise SupportError(f"{sigma} lies outside Gamma_{level}")
            out[sigma.bits] = c
        return out

    def __add__(self, other: "ChaosVector") -> "ChaosVector":
        return ChaosVector(list(self.items()) + list(other.items()))

    def __neg__(self) -> "ChaosVector":
        return ChaosVector({s: -c for s, c in self.items()})

    def __sub__(self, other: "ChaosVector") -> "ChaosVector":
        return self + (-other)

    def __mul__(self, alpha) -> "ChaosVector":
        alpha = complex(alpha)
        return ChaosVector({s: alpha * c for s, c in self.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, ChaosVector) and self._coeffs == other._coeffs

    def __hash__(self):
        return hash(tuple(self._coeffs.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{s}: {c:g}" for s, c in self.items())
        return f"ChaosVector({{{body}}})"

    def conjugate(self) -> "ChaosVector":
        return conjugate(self)

    def to_json(self) -> list:
        return [[s.bits, c.real, c.imag] for s, c in self.items()]

    @classmethod
    def from_json(cls, rows) -> "ChaosVector":
        return cls((GammaIndex(int(b)), complex(re, im)) for b, re, im in rows)


ONE = ChaosVector.basis(EMPTY)


@dataclass(frozen=True)
class GrowthCertificate:
    """Claim ``|value| <= C * lambda**p`` (per index) on a materialized domain."""

    C: float
    p: float

    def __post_init__(self):
        if self.C < 0 or self.p < 0:
            raise ValueError("certificate constants must be nonnegative")

    def to_json(self) -> dict:
        return {"C": self.C, "p": self.p}

    @classmethod
    def from_json(cls, obj) -> "GrowthCertificate | None":
        return None if obj is None else cls(float(obj["C"]), float(obj["p"]))


def _violations(ratio: np.ndarray, C: float) -> np.ndarray:
    return np.flatnonzero(ratio > C * (1 + CERT_RTOL) + 1e-300)


@dataclass(frozen=True, eq=False)
class GeneralizedFunctional:
    """Fock transform of a generalized functional, materialized on Gamma_level."""

    level: int
    values: np.ndarray = field(repr=False)
    certificate: GrowthCertificate | None = None

    def __post_init__(self):
        check_level(self.level)
        vals = np.array(self.values, dtype=np.complex128)
        if vals.shape != (gamma_size(self.level),):
            raise LevelError(f"expected {gamma_size(self.level)} Fock values, got shape {vals.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.certificate is not None:
            cert = self.certificate
            ratio = np.abs(vals) * np.exp(-cert.p * log_weights(self.level))
            bad = _violations(ratio, cert.C)
            if bad.size:
                b = int(bad[0])
                raise CertificateError(
                    f"|Phi^({GammaIndex(b)})| exceeds C*lambda^p for {cert}",
                    witness={"sigma": b, "ratio": float(ratio[b])},
                )

    @classmethod
    def from_oracle(cls, fock: Callable[[GammaIndex], complex], level: int,
                    certificate: GrowthCertificate | None = None) -> "GeneralizedFunctional":
        vals = [fock(GammaIndex(b)) for b in range(gamma_size(level))]
        return cls(level, np.array(vals, dtype=np.complex128), certificate)

    @classmethod
    def from_entries(cls, entries: Mapping, level: int,
                     certificate: GrowthCertificate | None = None) -> "GeneralizedFunctional":
        vals = np.zeros(gamma_size(level), dtype=np.complex128)
        for sigma, v in entries.items():
            sigma = as_index(sigma)
            if sigma.max_coord > level:
                raise SupportError(f"{sigma} lies outside Gamma_{level}")
            vals[sigma.bits] = v
        return cls(level, vals, certificate)

    @classmethod
    def zero(cls, level: int) -> "GeneralizedFunctional":
        return cls(level, np.zeros(gamma_size(level)))

    def __call__(self, sigma) -> complex:
        sigma = as_index(sigma)
        if sigma.max_coord > self.level:
            raise SupportError(f"{sigma} is not materialized (level {self.level})")
        return complex(self.values[sigma.bits])

    def truncate(self, level: int) -> "GeneralizedFunctional":
        if level > self.level:
            raise LevelError(f"functional is materialized only up to level {self.level}")
        return GeneralizedFunctional(level, self.values[: gamma_size(level)])

    def with_certificate(self, certificate: GrowthCertificate | None) -> "GeneralizedFunctional":
        return GeneralizedFunctional(self.level, self.values, certificate)

    def _check_level(self, other: "GeneralizedFunctional") -> None:
        if self.level != other.level:
            raise LevelError(f"level mismatch: {self.level} vs {other.level}")

    def __add__(self, other: "GeneralizedFunctional") -> "GeneralizedFunctional":
        self._check_level(other)
        return GeneralizedFunctional(self.level, self.values + other.values)

    def __neg__(self) -> "GeneralizedFunctional":
        return GeneralizedFunctional(self.level, -self.values)

    def __sub__(self, other: "GeneralizedFunctional") -> "GeneralizedFunctional":
        return self + (-other)

    def __mul__(self, alpha) -> "GeneralizedFunctional":
        return GeneralizedFunctional(self.level, complex(alpha) * self.values)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        nz = np.flatnonzero(self.values)
        return {
            "level": self.level,
            "entries": [[int(b), self.values[b].real, self.values[b].imag] for b in nz],
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "GeneralizedFunctional":
        level = int(obj["level"])
        vals = np.zeros(gamma_size(level), dtype=np.complex128)
        for b, re, im in obj["entries"]:
            if not 0 <= int(b) < vals.size:
                raise SupportError(f"entry {b} outside Gamma_{level}")
            vals[int(b)] = complex(re, im)
        return cls(level, vals, GrowthCertificate.from_json(obj.get("certificate")))


# -- norms and pairing -------------------------------------------------------

def norm_p(xi: ChaosVector, p: float) -> float:
    """``||xi||_p = sqrt(sum lambda^{2p} |c|^2)``."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    if not len(xi):
        return 0.0
    logs = np.array([sum(math.log1p(k) for k in s) for s in xi.coeffs])
    mags = np.abs(np.fromiter(xi.coeffs.values(), dtype=np.complex128))
    return float(np.sqrt(np.sum(np.exp(2 * p * logs) * mags**2)))


def dual_norm(phi: GeneralizedFunctional, p: float, level: int | None = None) -> float:
    """Truncated ``||Phi||_{-p}`` over Gamma_level (default: the whole materialization)."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    vals = phi.values if level is None else phi.truncate(level).values
    lvl = phi.level if level is None else level
    return float(np.sqrt(np.sum(np.exp(-2 * p * log_weights(lvl)) * np.abs(vals) ** 2)))


def pair(phi: GeneralizedFunctional, xi: ChaosVector) -> complex:
    """Bilinear pairing ``<<Phi, xi>> = sum Phi^(sigma) c_sigma``."""
    if xi.max_coord > phi.level:
        raise SupportError(f"test functional reaches coordinate {xi.max_coord}, "
                           f"functional materialized to level {phi.level}")
    total = 0j
    for sigma, c in xi.items():
        total += phi.values[sigma.bits] * c
    return total


def riesz(eta: ChaosVector, level: int | None = None) -> GeneralizedFunctional:
    """The functional ``xi -> <eta, xi>``; its Fock transform is ``conj(c(eta))``."""
    if level is None:
        level = max(eta.max_coord, 0)
    return GeneralizedFunctional(level, np.conj(eta.to_array(level)))


def conjugate(xi: ChaosVector) -> ChaosVector:
    return ChaosVector({s: c.conjugate() for s, c in xi.items()})


def mult_symmetric(xi: ChaosVector, eta: ChaosVector, theta: ThetaSequence = SYMMETRIC) -> ChaosVector:
    """Pointwise product; under the symmetric measure ``Z_sigma Z_tau = Z_{sigma ^ tau}``."""
    if not theta.symmetric:
        raise SymmetryError("the symmetric-difference product rule needs theta = 1/2")
    terms = [(s ^ t, a * b) for s, a in xi.items() for t, b in eta.items()]
    return ChaosVector(terms)


def chaos_from_atom_values(values, level: int, theta: ThetaSequence = SYMMETRIC) -> ChaosVector:
    """Chaos expansion of the function taking ``values[a]`` on level-``level`` atom ``a``.

    Uses ``c_sigma = E[Z_sigma f]``, exact since ``Z_sigma`` are real and
    orthonormal and the functions of coordinates ``0..level`` are spanned by
    ``Z_sigma, sigma in Gamma_level``.
    """
    values = np.asarray(values, dtype=np.complex128)
    if values.shape != (gamma_size(level),):
        raise LevelError("one value per atom is required")
    probs = atom_probabilities(level, theta)
    return ChaosVector.from_array(z_table(level, theta).T @ (probs * values))


def inclusion_hs_norm_squared(p: float, q: float, level: int) -> float:
    """Squared Hilbert-Schmidt norm of the inclusion ``S_q -> S_p`` restricted to Gamma_level.

    The images of the orthonormal basis ``lambda^-q Z_sigma`` have ``p``-norm
    ``lambda^(p-q)``, so the sum is ``sum lambda^{-2(q-p)}``; finite for ``q > p + 1/2``.
    """
    if not q > p + 0.5:
        raise ValueError("the inclusion is Hilbert-Schmidt only for q > p + 1/2")
    return weight_series_sum(2 * (q - p), level)
