"""Bernoulli chaos: generalized functionals, 2D-Fock kernels and spectral integrals."""

from .chaos import (
    ONE,
    ChaosVector,
    GeneralizedFunctional,
    GrowthCertificate,
    dual_norm,
    norm_p,
    pair,
    riesz,
)
from .errors import (
    BChaosError,
    CertificateError,
    ConvergenceError,
    LevelError,
    PartitionError,
    SupportError,
    SymmetryError,
)
from .gamma import EMPTY, GammaIndex, enumerate_gamma_n, weight, weight_series_sum
from .integral import IntegrabilityCertificate, SpectralIntegralOp, spectral_integral, wick
from .operators import Kernel2D, apply, op_norm_q
from .space import SYMMETRIC, Atom, CylinderSet, ThetaSequence
from .spectral import PI0, PI0_DENSITY

__version__ = "0.1.0"

__all__ = [
    "ONE", "ChaosVector", "GeneralizedFunctional", "GrowthCertificate", "dual_norm", "norm_p", "pair", "riesz",
    "BChaosError", "CertificateError", "ConvergenceError", "LevelError", "PartitionError", "SupportError",
    "SymmetryError", "EMPTY", "GammaIndex", "enumerate_gamma_n", "weight", "weight_series_sum",
    "IntegrabilityCertificate", "SpectralIntegralOp", "spectral_integral", "wick",
    "Kernel2D", "apply", "op_norm_q", "SYMMETRIC", "Atom", "CylinderSet", "ThetaSequence",
    "PI0", "PI0_DENSITY",
]
