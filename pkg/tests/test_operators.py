import csv
import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from bchaos.chaos import ChaosVector, GeneralizedFunctional, GrowthCertificate, dual_norm
from bchaos.errors import CertificateError, ConvergenceError, LevelError, SupportError
from bchaos.gamma import EMPTY, GammaIndex, gamma_size, log_weights, weight_series_sum
from bchaos.operators import (
    Kernel2D,
    apply,
    check_growth,
    growth_profile,
    jacobi_singular_values,
    op_norm_q,
    power_iteration,
    regularity_bound,
    scaled_matrix,
    verify_regularity,
    write_scaled_csv,
)


def random_kernel(rng, level, p=0.0, C=1.0):
    n = gamma_size(level)
    scale = np.exp(p * log_weights(level))
    mag = rng.uniform(0, 1, (n, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, (n, n)))
    return Kernel2D(level, C * mag * np.outer(scale, scale))


def lam_power_kernel(level, p):
    s = np.exp(p * log_weights(level))
    return Kernel2D(level, np.outer(s, s))


def test_apply_examples(rng):
    xi = ChaosVector.from_array(rng.standard_normal(8) + 1j * rng.standard_normal(8))
    np.testing.assert_allclose(apply(Kernel2D.identity(2), xi).values, xi.to_array(2))
    corner = Kernel2D.from_entries({(EMPTY, EMPTY): 1.0}, 2)
    out = apply(corner, xi)
    assert out(EMPTY) == xi[EMPTY] and np.count_nonzero(out.values) == 1
    k1, k2 = random_kernel(rng, 2), random_kernel(rng, 2)
    a, b = 2 - 1j, 0.5
    np.testing.assert_allclose(apply(a * k1 + b * k2, xi).values,
                               a * apply(k1, xi).values + b * apply(k2, xi).values, atol=1e-12)
    with pytest.raises(SupportError):
        apply(k1, ChaosVector.basis(GammaIndex.of(3)))


def test_apply_matches_defining_sum(rng):
    k = random_kernel(rng, 2)
    xi = ChaosVector.from_array(rng.standard_normal(8))
    # <<T xi, Z_tau>> = sum_sigma c_sigma <<T Z_sigma, Z_tau>>
    for t in range(8):
        want = sum(c * k.entry(s, t) for s, c in xi.items())
        assert apply(k, xi)(t) == pytest.approx(want)


def test_kernel_validation():
    with pytest.raises(LevelError):
        Kernel2D(1, np.zeros((3, 3)))
    with pytest.raises(SupportError):
        Kernel2D.from_entries({(GammaIndex.of(2), EMPTY): 1}, 1)
    with pytest.raises(CertificateError) as info:
        Kernel2D(1, np.full((4, 4), 2.0), GrowthCertificate(1.0, 0.0))
    assert set(info.value.witness) == {"sigma", "tau", "ratio"}


def test_sparse_kernel_above_dense_limit():
    k = Kernel2D.from_entries({(GammaIndex.of(13), EMPTY): 3.0, (EMPTY, EMPTY): 1.0}, 13)
    assert k.is_sparse
    assert k.entry(GammaIndex.of(13), EMPTY) == 3
    out = apply(k, ChaosVector.basis(GammaIndex.of(13)))
    assert out(EMPTY) == 3
    assert check_growth(k, [0.0]).C == 3
    assert Kernel2D.identity(13).is_sparse
    assert op_norm_q(Kernel2D.identity(13), 1.0) == pytest.approx(1.0)


def test_kernel_json_round_trip(rng):
    k = random_kernel(rng, 2)
    back = Kernel2D.from_json(json.loads(json.dumps(k.to_json())))
    np.testing.assert_array_equal(back.dense(), k.dense())


@pytest.mark.parametrize("q", [0.0, 0.7, 2.0])
def test_op_norm_examples(q, rng):
    assert op_norm_q(Kernel2D.identity(4), q) == pytest.approx(1.0)
    # K = lambda^q lambda^q scales to the all-ones matrix
    assert op_norm_q(lam_power_kernel(4, q), q) == pytest.approx(gamma_size(4), rel=1e-12)
    k = random_kernel(rng, 3)
    assert op_norm_q(-2.5 * k, q) == pytest.approx(2.5 * op_norm_q(k, q), rel=1e-9)


@pytest.mark.parametrize("level", [1, 3, 5])
def test_power_iteration_matches_svd(level, rng):
    for _ in range(5):
        k = random_kernel(rng, level)
        m = scaled_matrix(k, 1.0)
        exact = np.linalg.svd(m, compute_uv=False)[0]
        assert op_norm_q(k, 1.0) == pytest.approx(exact, rel=1e-9)


@pytest.mark.parametrize("shape", [(4, 4), (8, 8), (16, 16), (6, 3)])
def test_jacobi_matches_lapack(shape, rng):
    m = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    np.testing.assert_allclose(jacobi_singular_values(m)[: min(shape)],
                               np.linalg.svd(m, compute_uv=False), rtol=1e-12)


def test_power_iteration_reports_non_convergence(rng):
    m = rng.standard_normal((16, 16))
    with pytest.raises(ConvergenceError) as info:
        power_iteration(lambda x: m @ x, lambda y: m.T @ y, 16, max_iter=2)
    err = info.value
    assert err.iterations == 2 and err.vector.shape == (16,) and err.residual > 0


def test_power_iteration_zero_operator():
    assert op_norm_q(Kernel2D(2, np.zeros((8, 8))), 1.0) == 0.0


def test_check_growth_examples():
    cert = check_growth(Kernel2D.identity(4))
    assert (cert.C, cert.p) == (1.0, 0.0)
    k = lam_power_kernel(4, 1.0)
    # default objective takes the smallest p; minimizing C recovers (1, 1)
    cert = check_growth(k, [1.0])
    assert cert.p == 1.0 and cert.C == pytest.approx(1.0, rel=1e-15)
    best = check_growth(k, objective="C")
    assert best.p == 1.0 and best.C == pytest.approx(1.0)
    assert check_growth(k).p == 0.0
    doubled = dict(growth_profile(2 * k))
    for p, C in growth_profile(k):
        assert doubled[p] == pytest.approx(2 * C)
    with pytest.raises(ValueError):
        check_growth(k, [1.0, 0.0])
    with pytest.raises(ValueError):
        check_growth(k, [])


@given(st.floats(0.1, 10), st.sampled_from([0.0, 0.5, 1.0]))
def test_growth_certificate_is_valid(C, p):
    rng = np.random.default_rng(int(C * 1000))
    k = random_kernel(rng, 3, p, C)
    cert = check_growth(k, [p])
    assert cert.C <= C * (1 + 1e-12)
    k.check_certificate(cert)


def test_regularity_examples():
    ident = Kernel2D.identity(10)
    report = verify_regularity(ident, 1.0, GrowthCertificate(1.0, 0.0))
    assert report.passed and report.details["op_norm"] == pytest.approx(1.0)
    assert report.details["bound"] == pytest.approx(weight_series_sum(2, 10))
    for p in (0.0, 1.0):
        k = lam_power_kernel(6, p)
        r = verify_regularity(k, p + 1, GrowthCertificate(1.0, p))
        assert r.passed
        assert r.details["op_norm"] == pytest.approx(r.details["bound"], rel=1e-9)


@pytest.mark.parametrize("p, q", [(0.0, 1.0), (1.0, 2.0), (0.5, 1.2)])
def test_regularity_random(p, q, rng):
    for _ in range(10):
        C = rng.uniform(0.5, 2)
        r = verify_regularity(random_kernel(rng, 5, p, C), q, GrowthCertificate(C, p))
        assert r.passed, r.details


def test_regularity_needs_gap():
    with pytest.raises(ValueError):
        regularity_bound(GrowthCertificate(1.0, 1.0), 1.5, 3)


def test_scaled_csv(tmp_path, rng):
    k = random_kernel(rng, 1)
    path = tmp_path / "k.csv"
    write_scaled_csv(k, 1.0, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["tau", "sigma", "re", "im"]
    m = scaled_matrix(k, 1.0)
    for t, s, re, im in rows[1:]:
        assert complex(float(re), float(im)) == m[int(t), int(s)]
    assert len(rows) == 17


def test_scaled_matrix_sparse_matches_dense(rng):
    k = random_kernel(rng, 2)
    sparse = Kernel2D(2, sp.csr_array(k.matrix))
    np.testing.assert_allclose(scaled_matrix(sparse, 1.0).toarray(), scaled_matrix(k, 1.0))
