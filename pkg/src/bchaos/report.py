"""Structured verification reports and the registry of checked results."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

SCHEMA = "bc-report/1"

# tag -> one-line statement of the result a report certifies
RESULTS: dict[str, str] = {
    "weight-series": "sum over Gamma of lambda^-r converges for r > 1 and is at most exp(zeta(r))",
    "orthonormal-basis": "the Z_sigma are orthonormal in L2 of the Bernoulli measure",
    "hs-inclusion": "the inclusion S_q -> S_p is Hilbert-Schmidt for q > p + 1/2",
    "dual-norm": "||Phi||_{-p}^2 = sum lambda^{-2p} |Phi^(sigma)|^2",
    "fock-growth": "a kernel is an S -> S* operator iff |G(sigma,tau)| <= C lambda_sigma^p lambda_tau^p",
    "regularity-extension": "|T^| <= C lambda^p lambda^p gives ||T||_(S_q,S_q*) <= C sum lambda^{-2(q-p)} for q > p + 1/2",
    "spectral-axioms": "pi(Sigma) = I and pi is additive over disjoint events with projection values",
    "multiplicativity": "pi(E1 & E2) = pi(E1) pi(E2)",
    "s-smoothness": "<pi(E) Z_sigma, Z_tau> = int_E phi_{sigma,tau} dmu for test-functional densities",
    "density-psd": "sum conj(c_sigma) c_tau phi_{sigma,tau} >= 0 almost everywhere",
    "riesz-consistency": "the integral of R0 phi equals R0 composed with the classical integral of phi",
    "linearity": "the spectral integral is linear in the integrand",
    "positivity": "<<(int Phi dpi) conj(xi), xi>> >= 0 for positive Phi",
    "convergence": "weak convergence plus uniform integrability gives strong convergence of integrals",
    "canonical-density": "the canonical measure pi0(E) = 1_E is S-smooth with density Z_{sigma ^ tau}",
    "universal-integrability": "every generalized functional is pi0-integrable with C = ||Phi||_{-p}",
    "continuity-bound": "||int Phi dpi0||_(S_q,S_q*) <= [sum lambda^{-2(q-p)}] ||Phi||_{-p}",
    "convolution-factorization": "int Phi*Psi dpi0 = (int Phi dpi0) * (int Psi dpi0)",
    "wick-convolution-regularity": "Wick products land in S*_{p+1}, convolutions in S*_{2p}",
}


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj) + 0.0  # drops the sign of negative zero
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real) + 0.0, float(obj.imag) + 0.0]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


@dataclass
class Report:
    """Outcome of one verification: pass flag, worst residual and where it occurred."""

    suite: str
    result: str
    passed: bool
    max_residual: float
    tolerance: float | None = None
    witness: Any = None
    details: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    timing: float | None = None

    def __post_init__(self):
        if self.result not in RESULTS:
            raise KeyError(f"unknown result tag {self.result!r}")
        self.passed = bool(self.passed)
        self.max_residual = float(self.max_residual)

    def __bool__(self) -> bool:
        return self.passed

    def sort_key(self):
        return (self.suite, self.result, json.dumps(_jsonable(self.witness), sort_keys=True))

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "suite": self.suite,
            "result": self.result,
            "statement": RESULTS[self.result],
            "passed": self.passed,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "witness": self.witness,
            "details": self.details,
            "config": self.config,
        }
        if timing and self.timing is not None:
            out["timing_s"] = self.timing
        return _jsonable(out)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.suite:<16} {self.result:<28} max_residual={self.max_residual:.3e}"


def bundle(reports: Iterable[Report], config: dict, timing: bool = False) -> dict:
    """Deterministically ordered report document."""
    ordered = sorted(reports, key=Report.sort_key)
    return {
        "schema": SCHEMA,
        "config": _jsonable(config),
        "passed": all(r.passed for r in ordered),
        "reports": [r.to_dict(timing) for r in ordered],
    }


def dumps(doc: dict) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def results_table() -> str:
    """Markdown table of result tags, generated from the registry."""
    rows = ["| tag | statement |", "|---|---|"]
    rows += [f"| `{tag}` | {text} |" for tag, text in RESULTS.items()]
    return "\n".join(rows)
