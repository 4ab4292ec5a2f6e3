import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bchaos.chaos import ONE, ChaosVector, GeneralizedFunctional, GrowthCertificate, dual_norm, riesz
from bchaos.errors import CertificateError, LevelError
from bchaos.gamma import EMPTY, GammaIndex, gamma_size, log_weights, subsets_of, weight
from bchaos.integral import (
    IntegrabilityCertificate,
    continuity_bound,
    convergence_harness,
    convolve_f,
    convolve_k,
    density_kernel_matrix,
    find_negative_witness,
    functional_id,
    integrability_check,
    is_constructively_positive,
    positive_functional,
    positivity_form,
    random_chaos,
    regularity_report,
    spectral_integral,
    verify_continuity_bound,
    verify_convergence,
    verify_factorization,
    verify_linearity,
    verify_positivity,
    verify_riesz_consistency,
    verify_shortcut,
    verify_universal_integrability,
    wick,
)
from bchaos.operators import Kernel2D
from bchaos.spectral import PI0_DENSITY, DensityTable


def random_functional(rng, level):
    n = gamma_size(level)
    return GeneralizedFunctional(level, rng.standard_normal(n) + 1j * rng.standard_normal(n))


def brute_wick(phi, psi):
    """Subset convolution straight from the definition, over each index's subsets."""
    out = np.zeros(gamma_size(phi.level), complex)
    for b in range(out.size):
        s = GammaIndex(b)
        out[b] = sum(phi(t) * psi(s - t) for t in subsets_of(s))
    return out


def test_integral_examples():
    k = spectral_integral(riesz(ONE, 3)).kernel
    np.testing.assert_array_equal(k.dense(), np.eye(16))
    lam = GeneralizedFunctional.from_oracle(lambda s: float(weight(s)), 3)
    k = spectral_integral(lam).kernel
    for s in range(16):
        for t in range(16):
            assert k.entry(s, t) == weight(GammaIndex(s) ^ GammaIndex(t))
    gamma = GammaIndex.of(0, 2)
    k = spectral_integral(riesz(ChaosVector.basis(gamma), 3)).kernel.dense()
    want = np.array([[float(s ^ t == gamma.bits) for t in range(16)] for s in range(16)])
    np.testing.assert_array_equal(k, want)
    assert np.all(k.sum(axis=0) == 1) and np.all(k.sum(axis=1) == 1)


def test_integral_provenance(rng):
    phi = random_functional(rng, 2)
    op = spectral_integral(phi, level=1)
    assert op.provenance == (functional_id(phi), "pi0", 1)
    assert functional_id(phi) != functional_id(2 * phi)


def test_integral_needs_materialization(rng):
    phi = random_functional(rng, 2)
    with pytest.raises(LevelError):
        spectral_integral(phi, level=3)
    with pytest.raises(LevelError):
        spectral_integral(phi, level=3, shortcut=False)
    wide = DensityTable("wide", lambda s, t: ChaosVector.basis(GammaIndex.of(5)))
    with pytest.raises(LevelError):
        density_kernel_matrix(phi, wide, 1)


@pytest.mark.parametrize("level", [0, 2, 4])
def test_shortcut_matches_densities(level, rng):
    phi = random_functional(rng, level)
    r = verify_shortcut(phi, level)
    assert r.passed and r.max_residual <= 1e-15
    general = spectral_integral(phi, level=level, shortcut=False).kernel.dense()
    for s in range(gamma_size(level)):
        for t in range(gamma_size(level)):
            assert general[s, t] == phi(GammaIndex(s) ^ GammaIndex(t))


def test_integrability_examples(rng):
    cert = integrability_check(riesz(ChaosVector.basis(GammaIndex.of(1, 3)), 3))
    assert cert == IntegrabilityCertificate(1.0, 0.0, "pi0")
    phi = random_functional(rng, 4)
    for p in (0.0, 1.0, 2.0):
        d = dual_norm(phi, p)
        spectral_integral(phi).kernel.check_certificate(GrowthCertificate(d, p))
        assert verify_universal_integrability(phi, p).passed
    base = integrability_check(phi, p_grid=[1.0])
    scaled = integrability_check((3 - 4j) * phi, p_grid=[1.0])
    assert scaled.C == pytest.approx(5 * base.C)


def test_linearity_examples(rng):
    phi, psi = random_functional(rng, 5), random_functional(rng, 5)
    assert verify_linearity(phi, psi, 1, 0).passed
    r = verify_linearity(phi, psi, 2 - 1j, 3)
    assert r.passed and r.max_residual <= 1e-12
    zero = spectral_integral(phi + (-phi)).kernel.dense()
    assert not zero.any()
    assert verify_linearity(phi, -phi, 1, 1).passed


def test_linearity_through_density_route(rng):
    phi, psi = random_functional(rng, 2), random_functional(rng, 2)
    assert verify_linearity(phi, psi, 0.5j, -2, PI0_DENSITY, 2).passed


def test_positivity_examples(rng):
    unit = riesz(ONE, 3)
    for _ in range(10):
        xi = random_chaos(rng, 3)
        assert positivity_form(unit, xi) == pytest.approx(np.linalg.norm(xi.to_array(3)) ** 2)
    phi = positive_functional(rng.random(16), 3)
    assert is_constructively_positive(phi)
    r = verify_positivity(phi, [random_chaos(rng, 3) for _ in range(100)])
    assert r.passed and r.details["min_form"] >= -1e-10


def test_positivity_form_is_weighted_norm(rng):
    # for Phi = riesz(eta) the form is E[eta |xi|^2]
    values = rng.random(16)
    phi = positive_functional(values, 3)
    xi = random_chaos(rng, 3)
    from bchaos.space import atom_probabilities, evaluate_on_atoms
    want = np.sum(atom_probabilities(3) * values * np.abs(evaluate_on_atoms(xi, 3)) ** 2)
    assert positivity_form(phi, xi) == pytest.approx(want, rel=1e-12)


def test_non_positive_witness(rng):
    phi = riesz(ChaosVector.basis(GammaIndex.of(0)), 3)
    assert not is_constructively_positive(phi)
    found = find_negative_witness(phi, rng, draws=100)
    assert found is not None and found[2] < 0
    assert positivity_form(phi, found[1]) == pytest.approx(found[2])


def test_positive_functional_rejects_negative_values():
    with pytest.raises(ValueError):
        positive_functional([1.0, -0.1, 0.0, 0.0], 1)


def test_positivity_form_rejects_complex_values():
    # a non-Hermitian kernel gives a non-real form
    phi = GeneralizedFunctional(1, np.array([0, 1j, 0, 0]))
    xi = ChaosVector({EMPTY: 1.0, GammaIndex.of(0): 1.0})
    with pytest.raises(ValueError):
        positivity_form(phi, xi)


def test_convolution_examples(rng):
    phi = random_functional(rng, 3)
    ones = GeneralizedFunctional(3, np.ones(16))
    np.testing.assert_array_equal(convolve_f(phi, ones).values, phi.values)
    with pytest.raises(LevelError):
        convolve_f(phi, random_functional(rng, 2))
    k1, k2 = Kernel2D(1, rng.standard_normal((4, 4))), Kernel2D(1, rng.standard_normal((4, 4)))
    np.testing.assert_array_equal(convolve_k(k1, k2).dense(), k1.dense() * k2.dense())
    with pytest.raises(LevelError):
        convolve_k(k1, Kernel2D.identity(2))


def test_wick_examples():
    z0 = riesz(ChaosVector.basis(GammaIndex.of(0)), 2)
    z1 = riesz(ChaosVector.basis(GammaIndex.of(1)), 2)
    assert not wick(z0, z0).values.any()
    w = wick(z0, z1)
    assert np.flatnonzero(w.values).tolist() == [GammaIndex.of(0, 1).bits] and w(GammaIndex.of(0, 1)) == 1
    unit = riesz(ONE, 2)
    phi = GeneralizedFunctional(2, np.arange(8) + 1j)
    np.testing.assert_array_equal(wick(unit, phi).values, phi.values)


@pytest.mark.parametrize("level", [0, 3, 5])
def test_wick_matches_definition(level, rng):
    phi, psi = random_functional(rng, level), random_functional(rng, level)
    np.testing.assert_allclose(wick(phi, psi).values, brute_wick(phi, psi), atol=1e-12)
    # chunked accumulation must not change the result
    np.testing.assert_allclose(wick(phi, psi, chunk=3).values, wick(phi, psi).values, atol=1e-13)


@given(st.integers(0, 2 ** 32 - 1))
def test_wick_is_commutative(seed):
    rng = np.random.default_rng(seed)
    phi, psi = random_functional(rng, 3), random_functional(rng, 3)
    np.testing.assert_allclose(wick(phi, psi).values, wick(psi, phi).values, atol=1e-12)


def test_factorization_examples(rng):
    phi, psi = random_functional(rng, 4), random_functional(rng, 4)
    r = verify_factorization(phi, psi)
    assert r.passed and r.max_residual <= 1e-14
    assert r.details["second_factor"] == "Psi"
    ones = GeneralizedFunctional(4, np.ones(32))
    np.testing.assert_array_equal(spectral_integral(convolve_f(phi, ones)).kernel.dense(),
                                  spectral_integral(phi).kernel.dense())
    sq = spectral_integral(convolve_f(phi, phi)).kernel.dense()
    np.testing.assert_allclose(sq, spectral_integral(phi).kernel.dense() ** 2)


def test_regularity_examples(rng):
    unit = riesz(ONE, 3)
    r = regularity_report(unit, unit, 0.0)
    assert r.passed
    assert r.details["wick_chain"]["lhs"] == pytest.approx(1.0)
    for p in (0.0, 1.0):
        for _ in range(10):
            r = regularity_report(random_functional(rng, 5), random_functional(rng, 5), p)
            assert r.passed, r.details


@pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
def test_continuity_bound(p, rng):
    phi = random_functional(rng, 5)
    r = verify_continuity_bound(phi, p, p + 1)
    assert r.passed and r.details["op_norm"] <= r.details["bound"]
    with pytest.raises(ValueError):
        continuity_bound(phi, p, p + 0.5)


def test_convergence_examples(rng):
    phi0 = random_functional(rng, 3)
    xi = random_chaos(rng, 3)
    cert = GrowthCertificate(dual_norm(phi0, 0), 0.0)
    res = convergence_harness([(1 - 1 / n) * phi0 for n in range(1, 21)], phi0, xi, 1.0, certificate=cert)
    res = np.array(res)
    np.testing.assert_allclose(res * np.arange(1, 21), res[0], rtol=1e-12)
    assert np.all(np.diff(res) < 0)
    same = convergence_harness([phi0] * 5, phi0, xi, 1.0, certificate=cert)
    assert same == [0.0] * 5
    osc = convergence_harness([(1 + (-1) ** n / n) * phi0 for n in range(1, 21)], phi0, xi, 1.0,
                              certificate=GrowthCertificate(2 * cert.C, 0.0))
    # the difference flips sign with n, its norm is exactly r_1 / n
    np.testing.assert_allclose(np.array(osc) * np.arange(1, 21), osc[0], rtol=1e-12)
    assert verify_convergence([3.0, 1e-9]).passed
    assert not verify_convergence([3.0, 1e-3]).passed


def test_convergence_gate_names_the_offender(rng):
    phi0 = random_functional(rng, 2)
    cert = GrowthCertificate(dual_norm(phi0, 0), 0.0)
    seq = [phi0, phi0, 3 * phi0]
    with pytest.raises(CertificateError) as info:
        convergence_harness(seq, phi0, random_chaos(rng, 2), 1.0, certificate=cert)
    w = info.value.witness
    assert w["n"] == 3 and {"sigma", "tau"} <= set(w)


def test_convergence_needs_gap(rng):
    phi0 = random_functional(rng, 2)
    with pytest.raises(ValueError):
        convergence_harness([phi0], phi0, random_chaos(rng, 2), 1.0, certificate=GrowthCertificate(10.0, 1.0))


def test_riesz_consistency(rng):
    for _ in range(5):
        r = verify_riesz_consistency(random_chaos(rng, 3), 3)
        assert r.passed and r.max_residual <= 1e-12


def test_riesz_consistency_detects_missing_conjugation(rng):
    from bchaos.space import evaluate_on_atoms
    from bchaos.spectral import multiplication_matrix
    phi = random_chaos(rng, 2)
    mult = multiplication_matrix(evaluate_on_atoms(phi, 2), 2, 2)
    kernel = spectral_integral(riesz(phi, 2)).kernel.dense()
    np.testing.assert_allclose(np.conj(mult), kernel, atol=1e-12)
    assert np.abs(mult - kernel).max() > 1e-3
