"""Operators S -> S* represented by their 2D-Fock transforms on Gamma_n x Gamma_n.

``Kernel2D.matrix[sigma, tau]`` holds ``<<T Z_sigma, Z_tau>>`` with both
indices given by bit pattern.  Kernels are dense numpy arrays up to
``DENSE_MAX_LEVEL`` and scipy sparse arrays above.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .chaos import CERT_RTOL, ChaosVector, GeneralizedFunctional, GrowthCertificate
from .errors import CertificateError, ConvergenceError, LevelError, SupportError
from .gamma import GammaIndex, as_index, check_level, gamma_size, log_weights, weight_series_sum
from .report import Report

DENSE_MAX_LEVEL = 12
POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000
DEFAULT_P_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 3.0)


def _growth_ratio(matrix, level: int, p: float):
    """``|K| lambda_sigma^-p lambda_tau^-p`` entrywise (dense) or on the nonzeros (sparse)."""
    scale = np.exp(-p * log_weights(level))
    if sp.issparse(matrix):
        coo = matrix.tocoo()
        return np.abs(coo.data) * scale[coo.row] * scale[coo.col], coo.row, coo.col
    ratio = np.abs(matrix) * np.outer(scale, scale)
    rows, cols = np.indices(ratio.shape)
    return ratio.ravel(), rows.ravel(), cols.ravel()


@dataclass(frozen=True, eq=False)
class Kernel2D:
    level: int
    matrix: np.ndarray | sp.sparray = field(repr=False)
    certificate: GrowthCertificate | None = None

    def __post_init__(self):
        check_level(self.level)
        n = gamma_size(self.level)
        m = self.matrix
        if sp.issparse(m):
            m = sp.csr_array(m, dtype=np.complex128)
        else:
            m = np.array(m, dtype=np.complex128)
            m.flags.writeable = False
        if m.shape != (n, n):
            raise LevelError(f"kernel over Gamma_{self.level} must be {n}x{n}, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        if self.certificate is not None:
            self.check_certificate(self.certificate)

    def check_certificate(self, cert: GrowthCertificate) -> None:
        ratio, rows, cols = _growth_ratio(self.matrix, self.level, cert.p)
        bad = np.flatnonzero(ratio > cert.C * (1 + CERT_RTOL) + 1e-300)
        if bad.size:
            i = int(bad[0])
            raise CertificateError(
                f"kernel entry exceeds C*lambda^p*lambda^p for {cert}",
                witness={"sigma": int(rows[i]), "tau": int(cols[i]), "ratio": float(ratio[i])},
            )

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    @property
    def dim(self) -> int:
        return gamma_size(self.level)

    @classmethod
    def from_function(cls, fn: Callable[[GammaIndex, GammaIndex], complex], level: int,
                      certificate: GrowthCertificate | None = None) -> "Kernel2D":
        n = gamma_size(level)
        idx = [GammaIndex(b) for b in range(n)]
        mat = np.array([[fn(s, t) for t in idx] for s in idx], dtype=np.complex128)
        return cls(level, mat, certificate)

    @classmethod
    def from_entries(cls, entries: Mapping, level: int,
                     certificate: GrowthCertificate | None = None) -> "Kernel2D":
        n = gamma_size(level)
        rows, cols, vals = [], [], []
        for (s, t), v in entries.items():
            s, t = as_index(s), as_index(t)
            if max(s.max_coord, t.max_coord) > level:
                raise SupportError(f"entry ({s}, {t}) lies outside Gamma_{level}")
            rows.append(s.bits)
            cols.append(t.bits)
            vals.append(complex(v))
        if level > DENSE_MAX_LEVEL:
            mat = sp.csr_array((vals, (rows, cols)), shape=(n, n), dtype=np.complex128)
        else:
            mat = np.zeros((n, n), dtype=np.complex128)
            mat[rows, cols] = vals
        return cls(level, mat, certificate)

    @classmethod
    def identity(cls, level: int) -> "Kernel2D":
        n = gamma_size(level)
        mat = sp.identity(n, dtype=np.complex128, format="csr") if level > DENSE_MAX_LEVEL else np.eye(n)
        return cls(level, mat)

    def entry(self, sigma, tau) -> complex:
        s, t = as_index(sigma), as_index(tau)
        if max(s.max_coord, t.max_coord) > self.level:
            raise SupportError(f"({s}, {t}) lies outside Gamma_{self.level}")
        return complex(self.matrix[s.bits, t.bits])

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def _check_level(self, other: "Kernel2D") -> None:
        if self.level != other.level:
            raise LevelError(f"level mismatch: {self.level} vs {other.level}")

    def __add__(self, other: "Kernel2D") -> "Kernel2D":
        self._check_level(other)
        return Kernel2D(self.level, self.matrix + other.matrix)

    def __neg__(self) -> "Kernel2D":
        return Kernel2D(self.level, -self.matrix)

    def __sub__(self, other: "Kernel2D") -> "Kernel2D":
        return self + (-other)

    def __mul__(self, alpha) -> "Kernel2D":
        return Kernel2D(self.level, complex(alpha) * self.matrix)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        if self.is_sparse:
            coo = self.matrix.tocoo()
            triples = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
        else:
            rs, cs = np.nonzero(self.matrix)
            triples = [(int(r), int(c), self.matrix[r, c]) for r, c in zip(rs, cs)]
        return {
            "level": self.level,
            "entries": [[r, c, complex(v).real, complex(v).imag] for r, c, v in triples if v != 0],
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Kernel2D":
        entries = {(int(s), int(t)): complex(re, im) for s, t, re, im in obj["entries"]}
        return cls.from_entries(entries, int(obj["level"]),
                                GrowthCertificate.from_json(obj.get("certificate")))


def apply(kernel: Kernel2D, xi: ChaosVector) -> GeneralizedFunctional:
    """``(K xi)^(tau) = sum_sigma c_sigma K(sigma, tau)``."""
    if xi.max_coord > kernel.level:
        raise SupportError(f"test functional reaches coordinate {xi.max_coord}, "
                           f"kernel lives on Gamma_{kernel.level}")
    c = xi.to_array(kernel.level)
    return GeneralizedFunctional(kernel.level, kernel.matrix.T @ c)


def scaled_matrix(kernel: Kernel2D, q: float):
    """``M(tau, sigma) = lambda_tau^-q K(sigma, tau) lambda_sigma^-q``.

    The operator norm S_q -> S_q* on the truncation is the top singular value of M.
    """
    d = np.exp(-q * log_weights(kernel.level))
    if kernel.is_sparse:
        dm = sp.diags_array(d)
        return sp.csr_array(dm @ kernel.matrix.T @ dm)
    return d[:, None] * kernel.matrix.T * d[None, :]


@dataclass(frozen=True)
class PowerResult:
    value: float
    vector: np.ndarray = field(repr=False)
    iterations: int
    residual: float


def power_iteration(matvec, rmatvec, dim: int, tol: float = POWER_TOL,
                    max_iter: int = POWER_MAX_ITER) -> PowerResult:
    """Largest singular value by power iteration on ``M^H M``.

    Starts from the normalized all-ones vector and stops once the Rayleigh
    quotient changes by at most ``tol`` relative on two consecutive steps.
    """
    v = np.full(dim, 1 / math.sqrt(dim), dtype=np.complex128)
    rho_prev = None
    calm = 0
    residual = math.inf
    for it in range(1, max_iter + 1):
        w = rmatvec(matvec(v))
        w_norm = float(np.linalg.norm(w))
        if w_norm == 0.0:
            return PowerResult(0.0, v, it, 0.0)
        rho = float(np.vdot(v, w).real)
        residual = float(np.linalg.norm(w - rho * v)) / max(rho, np.finfo(float).tiny)
        if rho_prev is not None and abs(rho - rho_prev) <= tol * rho:
            calm += 1
            if calm >= 2 or residual <= tol:
                return PowerResult(math.sqrt(max(rho, 0.0)), v, it, residual)
        else:
            calm = 0
        rho_prev = rho
        v = w / w_norm
    raise ConvergenceError(
        f"power iteration did not settle in {max_iter} steps (residual {residual:.2e})",
        value=math.sqrt(max(rho_prev or 0.0, 0.0)), vector=v, residual=residual, iterations=max_iter,
    )


def op_norm_q(kernel: Kernel2D, q: float, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Operator norm of the kernel as a map ``(S_q, ||.||_q) -> S_q*`` on Gamma_level."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    m = scaled_matrix(kernel, q)
    mh = m.conj().T
    return power_iteration(lambda x: m @ x, lambda y: mh @ y, kernel.dim, tol, max_iter).value


def jacobi_singular_values(matrix, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """All singular values by one-sided (Hestenes) Jacobi sweeps, descending.

    Brute force, meant for small matrices as an independent check on
    :func:`op_norm_q`.
    """
    u = np.array(matrix, dtype=np.complex128, copy=True)
    n = u.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                a = float(np.vdot(u[:, i], u[:, i]).real)
                b = float(np.vdot(u[:, j], u[:, j]).real)
                g = np.vdot(u[:, i], u[:, j])
                ag = abs(g)
                if ag <= tol * math.sqrt(a * b) or ag == 0.0:
                    continue
                rotated = True
                # rotate column j by the phase of g so the coupling is real
                uj = u[:, j] * (g.conjugate() / ag)
                zeta = (b - a) / (2.0 * ag)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                ui = u[:, i].copy()
                u[:, i] = c * ui - s * uj
                u[:, j] = s * ui + c * uj
        if not rotated:
            break
    return np.sort(np.linalg.norm(u, axis=0))[::-1]


# -- growth certificates -----------------------------------------------------

def growth_profile(kernel: Kernel2D, p_grid: Sequence[float] = DEFAULT_P_GRID) -> list[tuple[float, float]]:
    """``[(p, C_min(p))]`` with ``C_min(p) = max |K| lambda^-p lambda^-p``."""
    out = []
    for p in p_grid:
        ratio, _, _ = _growth_ratio(kernel.matrix, kernel.level, p)
        out.append((float(p), float(ratio.max()) if ratio.size else 0.0))
    return out


def check_growth(kernel: Kernel2D, p_grid: Sequence[float] = DEFAULT_P_GRID,
                 objective: str = "p") -> GrowthCertificate:
    """Best grid certificate; ``objective='p'`` minimizes (p, C), ``'C'`` minimizes (C, p)."""
    if not p_grid:
        raise ValueError("p_grid must be nonempty")
    if list(p_grid) != sorted(p_grid):
        raise ValueError("p_grid must be ascending")
    profile = growth_profile(kernel, p_grid)
    if objective == "p":
        p, C = profile[0]
    elif objective == "C":
        best = min(C for _, C in profile)
        p, C = next((p, C) for p, C in profile if C <= best * (1 + CERT_RTOL))
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return GrowthCertificate(C, p)


def regularity_bound(cert: GrowthCertificate, q: float, level: int) -> float:
    """``C * sum_{Gamma_level} lambda^{-2(q-p)}``, valid for ``q > p + 1/2``."""
    if not q > cert.p + 0.5:
        raise ValueError(f"the regularity bound needs q > p + 1/2 (p = {cert.p}, q = {q})")
    return cert.C * weight_series_sum(2 * (q - cert.p), level)


def verify_regularity(kernel: Kernel2D, q: float, cert: GrowthCertificate | None = None,
                      rtol: float = 1e-9) -> Report:
    """Check the operator-norm bound and the per-basis-vector chain behind it."""
    if cert is None:
        cert = kernel.certificate or check_growth(kernel)
    else:
        kernel.check_certificate(cert)
    bound = regularity_bound(cert, q, kernel.level)
    norm = op_norm_q(kernel, q)
    series = weight_series_sum(2 * (q - cert.p), kernel.level)
    # row-wise: ||K Z_sigma||_{-q} <= C lambda_sigma^p sqrt(series)
    dq = np.exp(-q * log_weights(kernel.level))
    if kernel.is_sparse:
        rows = np.sqrt(np.asarray(abs(kernel.matrix).power(2) @ (dq**2))).ravel()
    else:
        rows = np.sqrt(np.abs(kernel.matrix) ** 2 @ dq**2)
    row_bounds = cert.C * np.exp(cert.p * log_weights(kernel.level)) * math.sqrt(series)
    row_excess = rows - row_bounds * (1 + rtol)
    worst = int(np.argmax(row_excess))
    passed = norm <= bound * (1 + rtol) and row_excess[worst] <= 0
    return Report(
        suite="bounds",
        result="regularity-extension",
        passed=passed,
        max_residual=max(norm - bound, float(row_excess[worst]), 0.0),
        tolerance=rtol,
        witness={"row_sigma": worst},
        details={"op_norm": norm, "bound": bound, "C": cert.C, "p": cert.p, "q": q,
                 "slack": bound - norm, "full_series_envelope_factor": series},
        config={"level": kernel.level},
    )


def write_scaled_csv(kernel: Kernel2D, q: float, path) -> None:
    """Dump ``M(tau, sigma)`` as CSV rows ``tau,sigma,re,im`` (nonzeros only)."""
    m = scaled_matrix(kernel, q)
    coo = sp.coo_array(m)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "sigma", "re", "im"])
        for r, c, v in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
            w.writerow([r, c, repr(v.real), repr(v.imag)])
