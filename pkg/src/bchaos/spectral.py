"""Spectral measures on the finite cylinder algebras of the Bernoulli space.

A spectral measure is seen through its matrices ``<pi(E) Z_sigma, Z_tau>``
over ``Gamma_n``.  The canonical measure ``pi0(E) xi = 1_E xi`` is the only
one shipped; its matrices come from the definition (multiplication by the
indicator), while :func:`pi0_matrix` computes them through the density
``Z_{sigma ^ tau}``.  The two routes are checked against each other.

Note that for an event depending on coordinates beyond ``n`` the
Gamma_n block of ``pi0(E)`` is only a compression of a projection.
:func:`verify_axioms` therefore checks projection properties on
``Gamma_m`` with ``m`` the larger of the two levels, where the block is
invariant and the matrices are exact projections.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

from .chaos import ChaosVector
from .errors import SymmetryError
from .gamma import GammaIndex, as_index, check_level, gamma_size
from .report import Report
from .space import (
    SYMMETRIC,
    Atom,
    CylinderSet,
    ThetaSequence,
    atom_probabilities,
    check_disjoint,
    evaluate_on_atoms,
    integrate_cylinder,
    z_table,
)

AXIOM_TOL = 1e-10
EXACT_TOL = 1e-12
PSD_TOL = 1e-10


def _require_symmetric(theta: ThetaSequence) -> None:
    if not theta.symmetric:
        raise SymmetryError("the canonical spectral measure tools assume theta = 1/2")


def multiplication_matrix(values, atom_level: int, level: int,
                          theta: ThetaSequence = SYMMETRIC) -> np.ndarray:
    """``<f Z_sigma, Z_tau>`` over Gamma_level for ``f`` given on level-``atom_level`` atoms.

    Here ``f`` is real-or-complex valued and enters unconjugated: the entry is
    ``int f Z_sigma Z_tau dmu``.  Requires ``atom_level >= level``.
    """
    check_level(level)
    if atom_level < level:
        raise ValueError("atom level must be at least the index level")
    z = z_table(atom_level, theta, n_indices=gamma_size(level))
    w = atom_probabilities(atom_level, theta) * np.asarray(values)
    return z.T @ (w[:, None] * z)


def indicator_matrix(event: CylinderSet, level: int, theta: ThetaSequence = SYMMETRIC) -> np.ndarray:
    """``<1_E Z_sigma, Z_tau>``: the canonical measure straight from its definition."""
    m = max(event.level, level)
    return multiplication_matrix(event.lift(m).indicator().astype(float), m, level, theta)


def pi0_matrix(event: CylinderSet, level: int, theta: ThetaSequence = SYMMETRIC) -> np.ndarray:
    """``<pi0(E) Z_sigma, Z_tau> = int_E Z_{sigma ^ tau} dmu`` over Gamma_level."""
    _require_symmetric(theta)
    m = max(event.level, check_level(level))
    lifted = event.lift(m)
    # integrals of every Z_gamma over E
    w = z_table(m, theta).T @ (atom_probabilities(m, theta) * lifted.indicator())
    idx = np.arange(gamma_size(level))
    return w[np.bitwise_xor.outer(idx, idx)]


@dataclass(frozen=True)
class SpectralMeasureOracle:
    """A spectral measure restricted to cylinder events.

    ``matrix_of(E, level)`` returns the matrix of ``<pi(E) Z_sigma, Z_tau>``
    indexed ``[sigma, tau]`` over Gamma_level.
    """

    name: str
    matrix_of: Callable[[CylinderSet, int], np.ndarray]


PI0 = SpectralMeasureOracle("pi0", lambda event, level: indicator_matrix(event, level))


def conjugated_measure(measure: SpectralMeasureOracle, unitary_of: Callable[[int], np.ndarray],
                       name: str) -> SpectralMeasureOracle:
    """The measure ``E -> U pi(E) U*`` for a unitary on each Gamma_level."""
    def matrix_of(event, level):
        u = unitary_of(level)
        return u @ measure.matrix_of(event, level) @ u.conj().T
    return SpectralMeasureOracle(name, matrix_of)


@dataclass(frozen=True)
class DensityTable:
    """Numerical densities ``(sigma, tau) -> phi_{sigma,tau}`` of an S-smooth measure."""

    name: str
    density: Callable[[GammaIndex, GammaIndex], ChaosVector]

    def __call__(self, sigma, tau) -> ChaosVector:
        return self.density(as_index(sigma), as_index(tau))

    def values_on_atoms(self, level: int, atom_level: int, theta: ThetaSequence = SYMMETRIC) -> np.ndarray:
        """Array ``F[a, sigma, tau] = phi_{sigma,tau}(a)`` over Gamma_level and level-``atom_level`` atoms."""
        n = gamma_size(level)
        out = np.empty((gamma_size(atom_level), n, n), dtype=np.complex128)
        for s in range(n):
            for t in range(n):
                out[:, s, t] = evaluate_on_atoms(self(GammaIndex(s), GammaIndex(t)), atom_level, theta)
        return out


def pi0_density(sigma: GammaIndex, tau: GammaIndex) -> ChaosVector:
    """``phi_{sigma,tau} = Z_{sigma ^ tau}`` for the canonical measure."""
    return ChaosVector.basis(as_index(sigma) ^ as_index(tau))


PI0_DENSITY = DensityTable("pi0", pi0_density)


def _max_abs(x) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


def verify_axioms(measure: SpectralMeasureOracle, partition: Sequence[CylinderSet], level: int,
                  family: Sequence[CylinderSet] | None = None, tol: float = AXIOM_TOL) -> list[Report]:
    """Projection values, unit, finite additivity, and multiplicativity on cylinder events.

    Returns two reports: the axioms (Hermitian idempotent values, ``pi(Sigma)
    = I``, additivity over ``partition``) and multiplicativity over all pairs
    of ``family`` (default: the partition itself).
    """
    check_level(level)
    check_disjoint(partition)
    family = list(partition) if family is None else list(family)
    ev_level = max(e.level for e in list(partition) + family)
    work = max(level, ev_level)
    full = CylinderSet.full(ev_level)

    def mat(event, lvl=work):
        return np.asarray(measure.matrix_of(event, lvl))

    union = partition[0]
    for e in partition[1:]:
        union = union | e

    residuals: dict[str, float] = {}
    witness = {}
    herm = idem = 0.0
    for e in list(partition) + family + [union, full]:
        m = mat(e)
        h, d = _max_abs(m - m.conj().T), _max_abs(m @ m - m)
        if max(h, d) > max(herm, idem):
            witness["projection_event"] = e.to_json()
        herm, idem = max(herm, h), max(idem, d)
    residuals["hermitian"] = herm
    residuals["idempotent"] = idem
    residuals["unit"] = _max_abs(mat(full) - np.eye(gamma_size(work)))
    residuals["additivity"] = _max_abs(sum(mat(e) for e in partition) - mat(union))
    if union.mask == full.lift(union.level).mask:
        residuals["additivity_to_identity"] = _max_abs(sum(mat(e) for e in partition) - np.eye(gamma_size(work)))

    # the Gamma_level block: additivity and symmetry survive compression
    comp = {
        "hermitian": max(_max_abs(mat(e, level) - mat(e, level).conj().T) for e in partition),
        "additivity": _max_abs(sum(mat(e, level) for e in partition) - mat(union, level)),
        "unit": _max_abs(mat(full, level) - np.eye(gamma_size(level))),
    }
    worst = max(max(residuals.values()), max(comp.values()))
    axioms = Report(
        suite="axioms",
        result="spectral-axioms",
        passed=worst <= tol,
        max_residual=worst,
        tolerance=tol,
        witness=witness or None,
        details={"invariant_level": work, "residuals": residuals, "block_residuals": comp},
        config={"measure": measure.name, "level": level, "event_level": ev_level,
                "partition_size": len(partition)},
    )

    mats = [mat(e) for e in family]
    mult, pair = 0.0, None
    for i, j in combinations_with_replacement(range(len(family)), 2):
        r = _max_abs(mat(family[i] & family[j]) - mats[i] @ mats[j])
        if pair is None or r > mult:
            mult, pair = r, [i, j]
    multiplicative = Report(
        suite="axioms",
        result="multiplicativity",
        passed=mult <= tol,
        max_residual=mult,
        tolerance=tol,
        witness={"pair": pair},
        details={"invariant_level": work, "family_size": len(family)},
        config={"measure": measure.name, "level": level, "event_level": ev_level},
    )
    return [axioms, multiplicative]


def verify_smoothness(measure: SpectralMeasureOracle, table: DensityTable, level: int,
                      cylinder_level: int, events: Sequence[CylinderSet] | None = None,
                      theta: ThetaSequence = SYMMETRIC, tol: float = EXACT_TOL) -> Report:
    """Entrywise ``<pi(E) Z_sigma, Z_tau> = int_E phi_{sigma,tau} dmu``.

    Defaults to every single-atom cylinder of ``cylinder_level``.
    """
    if events is None:
        events = [CylinderSet.atom(cylinder_level, a) for a in range(gamma_size(cylinder_level))]
    n = gamma_size(level)
    worst, where = 0.0, None
    for e in events:
        lhs = np.asarray(measure.matrix_of(e, level))
        rhs = np.array([[integrate_cylinder(table(GammaIndex(s), GammaIndex(t)), e.lift(max(e.level, level)), theta)
                         for t in range(n)] for s in range(n)])
        diff = np.abs(lhs - rhs)
        k = np.unravel_index(int(np.argmax(diff)), diff.shape)
        if where is None or diff[k] > worst:
            worst, where = float(diff[k]), {"event": e.to_json(), "sigma": int(k[0]), "tau": int(k[1])}
    return Report(
        suite="density",
        result="canonical-density" if table.name == measure.name == "pi0" else "s-smoothness",
        passed=worst <= tol,
        max_residual=worst,
        tolerance=tol,
        witness=where,
        details={"events": len(events)},
        config={"measure": measure.name, "density": table.name, "level": level,
                "cylinder_level": cylinder_level},
    )


def density_form_matrix(table: DensityTable, atom: Atom, level: int,
                        theta: ThetaSequence = SYMMETRIC) -> np.ndarray:
    """``F(sigma, tau) = phi_{sigma,tau}(atom)`` over Gamma_level."""
    vals = table.values_on_atoms(level, atom.level, theta)
    return vals[atom.index]


def density_form_psd(table: DensityTable, atom: Atom, level: int,
                     theta: ThetaSequence = SYMMETRIC, tol: float = PSD_TOL) -> Report:
    """Positive semidefiniteness of the pointwise density form at one atom."""
    f = density_form_matrix(table, atom, level, theta)
    herm = _max_abs(f - f.conj().T)
    eig = np.linalg.eigvalsh((f + f.conj().T) / 2)
    lowest = float(eig[0])
    return Report(
        suite="density",
        result="density-psd",
        passed=lowest >= -tol and herm <= tol,
        max_residual=max(-lowest, herm, 0.0),
        tolerance=tol,
        witness={"atom": atom.index},
        details={"min_eigenvalue": lowest, "max_eigenvalue": float(eig[-1]),
                 "numerical_rank": int(np.sum(eig > tol * max(1.0, abs(eig[-1]))))},
        config={"density": table.name, "level": level, "atom_level": atom.level},
    )


def integrated_density_form(table: DensityTable, xi: ChaosVector, event: CylinderSet, level: int,
                            theta: ThetaSequence = SYMMETRIC) -> complex:
    """``int_E sum conj(c_sigma) c_tau phi_{sigma,tau} dmu`` for ``xi`` on Gamma_level."""
    c = xi.to_array(level)
    m = max(event.level, level)
    vals = table.values_on_atoms(level, m, theta)
    pointwise = np.einsum("s,ast,t->a", c.conj(), vals, c)
    weights = atom_probabilities(m, theta) * event.lift(m).indicator()
    return complex(np.dot(weights, pointwise))
