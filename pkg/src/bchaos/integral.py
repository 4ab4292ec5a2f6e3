"""Spectral integrals of generalized functionals and the calculus around them.

``spectral_integral(Phi, table, n)`` builds the kernel
``K(sigma, tau) = <<Phi, phi_{sigma,tau}>>`` over Gamma_n from a table of
numerical densities.  For the canonical measure the density is
``Z_{sigma ^ tau}`` and the kernel is ``Phi^(sigma ^ tau)``; a direct
shortcut is provided and checked against the general route.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chaos import (
    ChaosVector,
    GeneralizedFunctional,
    GrowthCertificate,
    chaos_from_atom_values,
    conjugate,
    dual_norm,
    pair,
    riesz,
)
from .errors import CertificateError, LevelError, SupportError
from .gamma import GammaIndex, check_level, gamma_size, log_weights, weight_series_sum
from .operators import DEFAULT_P_GRID, Kernel2D, apply, check_growth, op_norm_q
from .report import Report
from .space import SYMMETRIC, ThetaSequence, evaluate_on_atoms, z_table
from .spectral import PI0_DENSITY, DensityTable, multiplication_matrix

EXACT_TOL = 1e-12
SHORTCUT_TOL = 1e-15
FORM_TOL = 1e-10


@dataclass(frozen=True)
class IntegrabilityCertificate:
    """``|<<Phi, phi_{sigma,tau}>>| <= C lambda_sigma^p lambda_tau^p`` on the materialized block."""

    C: float
    p: float
    measure_name: str

    def __post_init__(self):
        if self.C < 0 or self.p < 0:
            raise ValueError("certificate constants must be nonnegative")

    @property
    def growth(self) -> GrowthCertificate:
        return GrowthCertificate(self.C, self.p)


def functional_id(phi: GeneralizedFunctional) -> str:
    """Short content hash identifying a materialized functional."""
    h = hashlib.sha256(str(phi.level).encode() + phi.values.tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class SpectralIntegralOp:
    kernel: Kernel2D
    phi_id: str
    measure_name: str
    level: int

    @property
    def provenance(self) -> tuple[str, str, int]:
        return (self.phi_id, self.measure_name, self.level)


def _xor_grid(level: int) -> np.ndarray:
    idx = np.arange(gamma_size(level))
    return np.bitwise_xor.outer(idx, idx)


def pi0_kernel_matrix(phi: GeneralizedFunctional, level: int) -> np.ndarray:
    """``Phi^(sigma ^ tau)`` over Gamma_level."""
    if phi.level < check_level(level):
        raise LevelError(f"functional materialized to level {phi.level}, kernel needs {level}")
    return phi.values[_xor_grid(level)]


def density_kernel_matrix(phi: GeneralizedFunctional, table: DensityTable, level: int) -> np.ndarray:
    """``<<Phi, phi_{sigma,tau}>>`` entry by entry from the density table."""
    check_level(level)
    if phi.level < level:
        raise LevelError(f"functional materialized to level {phi.level}, kernel needs {level}")
    n = gamma_size(level)
    out = np.empty((n, n), dtype=np.complex128)
    try:
        for s in range(n):
            for t in range(n):
                out[s, t] = pair(phi, table(GammaIndex(s), GammaIndex(t)))
    except SupportError as exc:
        raise LevelError(f"insufficient materialization level: {exc}") from exc
    return out


def spectral_integral(phi: GeneralizedFunctional, table: DensityTable = PI0_DENSITY, level: int | None = None,
                      shortcut: bool = True) -> SpectralIntegralOp:
    """The operator ``int Phi dpi`` as a kernel over Gamma_level.

    With ``shortcut`` and the canonical density the kernel is read off as
    ``Phi^(sigma ^ tau)``; otherwise every entry is a pairing with a density.
    """
    level = phi.level if level is None else level
    if shortcut and table is PI0_DENSITY:
        mat = pi0_kernel_matrix(phi, level)
    else:
        mat = density_kernel_matrix(phi, table, level)
    return SpectralIntegralOp(Kernel2D(level, mat), functional_id(phi), table.name, level)


def verify_shortcut(phi: GeneralizedFunctional, level: int, tol: float = SHORTCUT_TOL) -> Report:
    """The direct canonical kernel against the density-by-density construction."""
    direct = pi0_kernel_matrix(phi, level)
    general = density_kernel_matrix(phi, PI0_DENSITY, level)
    diff = np.abs(direct - general)
    k = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return Report(
        suite="density",
        result="canonical-density",
        passed=diff[k] <= tol,
        max_residual=float(diff[k]),
        tolerance=tol,
        witness={"sigma": int(k[0]), "tau": int(k[1])},
        config={"level": level, "route": "shortcut-vs-density"},
    )


# -- integrability -----------------------------------------------------------

def integrability_check(phi: GeneralizedFunctional, table: DensityTable = PI0_DENSITY, level: int | None = None,
                        p_grid: Sequence[float] = DEFAULT_P_GRID) -> IntegrabilityCertificate:
    """Minimal grid certificate for the kernel of ``int Phi dpi``.

    For the canonical measure the constant ``||Phi||_{-p}`` must also certify
    the kernel at the chosen ``p``; a failure there raises ``CertificateError``.
    """
    op = spectral_integral(phi, table, level)
    cert = check_growth(op.kernel, p_grid)
    if table is PI0_DENSITY:
        op.kernel.check_certificate(GrowthCertificate(dual_norm(phi, cert.p, op.level), cert.p))
    return IntegrabilityCertificate(cert.C, cert.p, table.name)


def verify_universal_integrability(phi: GeneralizedFunctional, p: float, level: int | None = None) -> Report:
    """``|Phi^(sigma ^ tau)| <= ||Phi||_{-p} lambda_sigma^p lambda_tau^p`` on every entry."""
    level = phi.level if level is None else level
    mat = pi0_kernel_matrix(phi, level)
    d = dual_norm(phi, p, level)
    scale = np.exp(-p * log_weights(level))
    ratio = np.abs(mat) * np.outer(scale, scale)
    k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    worst = float(ratio[k])
    return Report(
        suite="bounds",
        result="universal-integrability",
        passed=worst <= d * (1 + EXACT_TOL),
        max_residual=max(worst - d, 0.0),
        tolerance=EXACT_TOL,
        witness={"sigma": int(k[0]), "tau": int(k[1])},
        details={"dual_norm": d, "max_ratio": worst},
        config={"level": level, "p": p},
    )


# -- linearity ---------------------------------------------------------------

def _entry_report(lhs: np.ndarray, rhs: np.ndarray, suite: str, result: str, tol: float,
                  details: dict | None = None, config: dict | None = None) -> Report:
    diff = np.abs(lhs - rhs)
    k = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return Report(
        suite=suite,
        result=result,
        passed=diff[k] <= tol,
        max_residual=float(diff[k]),
        tolerance=tol,
        witness={"sigma": int(k[0]), "tau": int(k[1])},
        details=details or {},
        config=config or {},
    )


def verify_linearity(phi: GeneralizedFunctional, psi: GeneralizedFunctional, alpha: complex, beta: complex,
                     table: DensityTable = PI0_DENSITY, level: int | None = None,
                     tol: float = EXACT_TOL) -> Report:
    """``int (a Phi + b Psi) dpi = a int Phi dpi + b int Psi dpi`` entrywise."""
    level = min(phi.level, psi.level) if level is None else level
    combo = alpha * phi.truncate(level) + beta * psi.truncate(level)
    lhs = spectral_integral(combo, table, level).kernel.dense()
    rhs = (alpha * spectral_integral(phi, table, level).kernel
           + beta * spectral_integral(psi, table, level).kernel).dense()
    return _entry_report(lhs, rhs, "linearity", "linearity", tol,
                         config={"measure": table.name, "level": level,
                                 "alpha": complex(alpha), "beta": complex(beta)})


# -- positivity --------------------------------------------------------------

def positivity_form(phi: GeneralizedFunctional, xi: ChaosVector, table: DensityTable = PI0_DENSITY,
                    level: int | None = None, kernel: Kernel2D | None = None) -> float:
    """``<<(int Phi dpi) conj(xi), xi>>``, checked to be real.

    Pass ``kernel`` to reuse an already built integral.
    """
    if kernel is None:
        kernel = spectral_integral(phi, table, level).kernel
    value = pair(apply(kernel, conjugate(xi)), xi)
    if abs(value.imag) > FORM_TOL * max(1.0, abs(value.real)):
        raise ValueError(f"quadratic form is not real: {value}")
    return float(value.real)


def positive_functional(atom_values, level: int, theta: ThetaSequence = SYMMETRIC) -> GeneralizedFunctional:
    """``riesz(eta)`` for the function ``eta`` with the given nonnegative atom values."""
    vals = np.asarray(atom_values, dtype=float)
    if np.any(vals < 0):
        raise ValueError("atom values must be nonnegative")
    return riesz(chaos_from_atom_values(vals, level, theta), level)


def is_constructively_positive(phi: GeneralizedFunctional, theta: ThetaSequence = SYMMETRIC,
                               tol: float = FORM_TOL) -> bool:
    """Whether ``Phi = riesz(eta)`` with ``eta`` real and nonnegative on every atom of Phi's level."""
    coeffs = np.conj(phi.values)
    vals = z_table(phi.level, theta) @ coeffs
    return bool(np.all(np.abs(vals.imag) <= tol) and np.all(vals.real >= -tol))


def random_chaos(rng: np.random.Generator, level: int) -> ChaosVector:
    """Complex Gaussian coefficients on all of Gamma_level."""
    n = gamma_size(level)
    return ChaosVector.from_array(rng.standard_normal(n) + 1j * rng.standard_normal(n))


def verify_positivity(phi: GeneralizedFunctional, xis: Sequence[ChaosVector], table: DensityTable = PI0_DENSITY,
                      level: int | None = None, tol: float = FORM_TOL) -> Report:
    """The quadratic form stays above ``-tol`` on every supplied ``xi``."""
    kernel = spectral_integral(phi, table, level).kernel
    forms = np.array([positivity_form(phi, xi, table, kernel=kernel) for xi in xis])
    i = int(np.argmin(forms))
    return Report(
        suite="positivity",
        result="positivity",
        passed=forms[i] >= -tol,
        max_residual=max(-float(forms[i]), 0.0),
        tolerance=tol,
        witness={"draw": i},
        details={"min_form": float(forms[i]), "draws": len(forms),
                 "constructively_positive": is_constructively_positive(phi.truncate(kernel.level))},
        config={"measure": table.name, "level": kernel.level, "phi": functional_id(phi)},
    )


def find_negative_witness(phi: GeneralizedFunctional, rng: np.random.Generator, draws: int = 100,
                          table: DensityTable = PI0_DENSITY, level: int | None = None,
                          tol: float = FORM_TOL) -> tuple[int, ChaosVector, float] | None:
    """First random ``xi`` with form below ``-tol``: ``(draw, xi, form)``, or ``None``."""
    kernel = spectral_integral(phi, table, level).kernel
    for k in range(draws):
        xi = random_chaos(rng, kernel.level)
        form = positivity_form(phi, xi, table, kernel=kernel)
        if form < -tol:
            return k, xi, form
    return None


# -- convolution and Wick calculus -------------------------------------------

def _same_level(a, b) -> int:
    if a.level != b.level:
        raise LevelError(f"level mismatch: {a.level} vs {b.level}")
    return a.level


def convolve_f(phi: GeneralizedFunctional, psi: GeneralizedFunctional) -> GeneralizedFunctional:
    """Entrywise product of Fock transforms."""
    return GeneralizedFunctional(_same_level(phi, psi), phi.values * psi.values)


def convolve_k(k1: Kernel2D, k2: Kernel2D) -> Kernel2D:
    """Entrywise product of 2D-Fock transforms."""
    level = _same_level(k1, k2)
    if k1.is_sparse or k2.is_sparse:
        import scipy.sparse as sp
        return Kernel2D(level, sp.csr_array(k1.matrix).multiply(k2.matrix))
    return Kernel2D(level, k1.matrix * k2.matrix)


def wick(phi: GeneralizedFunctional, psi: GeneralizedFunctional, chunk: int = 512) -> GeneralizedFunctional:
    """Subset convolution ``sum_{tau in sigma} Phi^(tau) Psi^(sigma - tau)``."""
    level = _same_level(phi, psi)
    n = gamma_size(level)
    a, b = phi.values, psi.values
    re = np.zeros(n)
    im = np.zeros(n)
    cols = np.arange(n)
    # every disjoint pair (tau, rho) contributes a[tau] b[rho] to sigma = tau | rho
    for start in range(0, n, chunk):
        rows = np.arange(start, min(start + chunk, n))
        r, c = np.nonzero((rows[:, None] & cols[None, :]) == 0)
        tau, rho = rows[r], cols[c]
        prod = a[tau] * b[rho]
        target = tau | rho
        re += np.bincount(target, prod.real, minlength=n)
        im += np.bincount(target, prod.imag, minlength=n)
    return GeneralizedFunctional(level, re + 1j * im)


def verify_factorization(phi: GeneralizedFunctional, psi: GeneralizedFunctional, level: int | None = None,
                         tol: float = EXACT_TOL) -> Report:
    """``int Phi*Psi dpi0 = (int Phi dpi0) * (int Psi dpi0)`` entrywise."""
    level = min(phi.level, psi.level) if level is None else level
    phi, psi = phi.truncate(level), psi.truncate(level)
    lhs = spectral_integral(convolve_f(phi, psi), PI0_DENSITY, level).kernel.dense()
    rhs = convolve_k(spectral_integral(phi, PI0_DENSITY, level).kernel,
                     spectral_integral(psi, PI0_DENSITY, level).kernel).dense()
    return _entry_report(lhs, rhs, "factorization", "convolution-factorization", tol,
                         details={"second_factor": "Psi"}, config={"level": level})


def continuity_bound(phi: GeneralizedFunctional, p: float, q: float, level: int | None = None) -> float:
    """``[sum lambda^{-2(q-p)}] ||Phi||_{-p}`` over Gamma_level."""
    if not q > p + 0.5:
        raise ValueError(f"the continuity bound needs q > p + 1/2 (p = {p}, q = {q})")
    level = phi.level if level is None else level
    return weight_series_sum(2 * (q - p), level) * dual_norm(phi, p, level)


def verify_continuity_bound(phi: GeneralizedFunctional, p: float, q: float, level: int | None = None,
                            rtol: float = 1e-9) -> Report:
    """Operator norm of ``int Phi dpi0`` from S_q to S_q* against the dual-norm bound."""
    level = phi.level if level is None else level
    bound = continuity_bound(phi, p, q, level)
    norm = op_norm_q(spectral_integral(phi, PI0_DENSITY, level).kernel, q)
    return Report(
        suite="bounds",
        result="continuity-bound",
        passed=norm <= bound * (1 + rtol),
        max_residual=max(norm - bound, 0.0),
        tolerance=rtol,
        details={"op_norm": norm, "bound": bound, "slack": bound - norm},
        config={"level": level, "p": p, "q": q},
    )


def regularity_report(phi: GeneralizedFunctional, psi: GeneralizedFunctional, p: float,
                      q_wick: float | None = None, q_conv: float | None = None,
                      level: int | None = None, rtol: float = 1e-12) -> Report:
    """Norm chains for Wick products and convolutions, then the continuity bound on each.

    Checks ``||Phi <> Psi||_{-(p+1)} <= ||Phi||_{-p} ||Psi||_{-p} sqrt(sum lambda^-2)``
    and ``||Phi * Psi||_{-2p} <= ||Phi||_{-p} ||Psi||_{-p}``, and then the operator
    bounds at ``q_wick = p + 2`` and ``q_conv = 2p + 1``.
    """
    level = min(phi.level, psi.level) if level is None else level
    q_wick = p + 2 if q_wick is None else q_wick
    q_conv = 2 * p + 1 if q_conv is None else q_conv
    phi, psi = phi.truncate(level), psi.truncate(level)
    base = dual_norm(phi, p) * dual_norm(psi, p)
    w, c = wick(phi, psi), convolve_f(phi, psi)

    wick_lhs = dual_norm(w, p + 1)
    wick_rhs = base * math.sqrt(weight_series_sum(2, level))
    conv_lhs = dual_norm(c, 2 * p)
    conv_rhs = base
    wick_op = verify_continuity_bound(w, p + 1, q_wick, level)
    conv_op = verify_continuity_bound(c, 2 * p, q_conv, level)

    excess = {
        "wick_chain": wick_lhs - wick_rhs * (1 + rtol),
        "conv_chain": conv_lhs - conv_rhs * (1 + rtol),
    }
    passed = all(v <= 0 for v in excess.values()) and wick_op.passed and conv_op.passed
    worst = max(0.0, *excess.values(), wick_op.max_residual, conv_op.max_residual)
    return Report(
        suite="regularity",
        result="wick-convolution-regularity",
        passed=passed,
        max_residual=worst,
        tolerance=rtol,
        details={
            "wick_chain": {"lhs": wick_lhs, "rhs": wick_rhs},
            "conv_chain": {"lhs": conv_lhs, "rhs": conv_rhs},
            "wick_operator": wick_op.details,
            "conv_operator": conv_op.details,
        },
        config={"level": level, "p": p, "q_wick": q_wick, "q_conv": q_conv},
    )


# -- convergence -------------------------------------------------------------

def convergence_harness(phi_seq: Sequence[GeneralizedFunctional], phi0: GeneralizedFunctional, xi: ChaosVector,
                        q: float, table: DensityTable = PI0_DENSITY, level: int | None = None,
                        certificate: GrowthCertificate | None = None) -> list[float]:
    """Residuals ``||(int Phi_n dpi - int Phi0 dpi) xi||_{-q}``.

    The sequence must share one growth certificate on the integral kernels.
    If none is given the uniform one is ``C = max_n C_n`` at the smallest
    ``p`` for which ``q > p + 1/2``.  Violations raise ``CertificateError``
    whose witness names ``(sigma, tau, n)``; ``n`` counts from 1.
    """
    level = phi0.level if level is None else level
    kernels = [spectral_integral(f, table, level).kernel for f in phi_seq]
    k0 = spectral_integral(phi0, table, level).kernel
    if certificate is None:
        p = 0.0
        C = max([check_growth(k, [p]).C for k in kernels] + [0.0])
        certificate = GrowthCertificate(C, p)
    if not q > certificate.p + 0.5:
        raise ValueError(f"convergence in S_q* needs q > p + 1/2 (p = {certificate.p}, q = {q})")
    for n, k in enumerate(kernels, start=1):
        try:
            k.check_certificate(certificate)
        except CertificateError as exc:
            raise CertificateError(f"uniform certificate violated at n = {n}: {exc}",
                                   witness={**exc.witness, "n": n}) from exc
    target = apply(k0, xi)
    return [dual_norm(apply(k, xi) - target, q) for k in kernels]


def verify_convergence(residuals: Sequence[float], final_tol: float = 1e-8) -> Report:
    """Residuals end below ``final_tol``; reports the worst tail residual."""
    r = np.asarray(residuals, dtype=float)
    return Report(
        suite="convergence",
        result="convergence",
        passed=bool(r.size) and r[-1] < final_tol,
        max_residual=float(r[-1]) if r.size else math.inf,
        tolerance=final_tol,
        witness={"n": int(r.size)},
        details={"first": float(r[0]) if r.size else None,
                 "monotone": bool(np.all(np.diff(r) <= 0))},
    )


# -- classical integrals -----------------------------------------------------

def verify_riesz_consistency(phi: ChaosVector, level: int, theta: ThetaSequence = SYMMETRIC,
                             tol: float = EXACT_TOL) -> Report:
    """Multiplication by ``phi`` against the spectral integral of ``riesz(phi)``.

    The exact matrix ``M(sigma, tau) = int phi Z_sigma Z_tau dmu`` conjugated
    must equal ``<<(int riesz(phi) dpi0) Z_sigma, Z_tau>>``.
    """
    vals = evaluate_on_atoms(phi, level, theta)
    mult = multiplication_matrix(vals, level, level, theta)
    kernel = spectral_integral(riesz(phi, level), PI0_DENSITY, level).kernel.dense()
    return _entry_report(np.conj(mult), kernel, "remark", "riesz-consistency", tol,
                         config={"level": level})
