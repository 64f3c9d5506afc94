#!/usr/bin/env python3
import cmath
import math

import numpy as np
import pytest
import scipy.linalg

from construct import (
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    build_w0,
    build_w1,
    check_dagger_relation,
    check_tridiagonal_relations,
    fit_aw_constants,
    kron,
    q_sigma3,
)
from params import DerivedScalars, DimensionError, GenericityTolerances, ModelParams, ParameterError, derive
from spectral import eigenvalues


def _assert_spectrum(matrix, values, multiplicities, tol=1e-7):
    computed = scipy.linalg.eigvals(matrix)
    assert len(computed) == sum(multiplicities)
    for value, count in zip(values, multiplicities):
        assert np.sum(np.abs(computed - value) < tol) == count


def test_kron_identity():
    assert np.array_equal(kron(IDENTITY_2, IDENTITY_2), np.eye(4))


def test_kron_sigma_plus():
    result = kron(SIGMA_PLUS, IDENTITY_2)
    expected = np.zeros((4, 4))
    expected[0, 2] = expected[1, 3] = 1
    assert np.array_equal(result, expected)


def test_kron_q_sigma3():
    q_half = cmath.exp(0.2j)
    q = q_half ** 2
    result = kron(q_sigma3(q_half), q_sigma3(q_half))
    assert np.allclose(result, np.diag([q, 1, 1, 1 / q]))


def test_kron_dimension_cap():
    with pytest.raises(DimensionError):
        kron(np.eye(4), np.eye(4), dimension_cap=3)


def test_w0_n1_closed_form(make_params):
    params = make_params(1)
    s = derive(params)
    expected = np.array([[s.q_half * cmath.cosh(params.alpha), s.k_plus],
                         [s.k_minus, cmath.cosh(params.alpha) / s.q_half]])
    assert np.allclose(build_w0(params), expected, atol=1e-14)


def test_w1_n1_closed_form(make_params):
    params = make_params(1)
    s = derive(params)
    expected = np.array([[cmath.cosh(params.alpha_star) / s.q_half, s.k_plus],
                         [s.k_minus, s.q_half * cmath.cosh(params.alpha_star)]])
    assert np.allclose(build_w1(params), expected, atol=1e-14)


def test_w0_n2_spectrum(example_params):
    a, p = example_params.alpha, example_params.phi
    _assert_spectrum(build_w0(example_params), [cmath.cosh(a + p), cmath.cosh(a), cmath.cosh(a - p)], [1, 2, 1])


@pytest.mark.parametrize("N", [1, 2, 3])
def test_spectra_multiplicities(make_params, N):
    params = make_params(N)
    multiplicities = [math.comb(N, n) for n in range(N + 1)]
    _assert_spectrum(build_w0(params), eigenvalues(params), multiplicities)
    _assert_spectrum(build_w1(params), eigenvalues(params, dual=True), multiplicities)


def test_complex_parameters_spectrum(make_complex_params):
    params = make_complex_params(3)
    _assert_spectrum(build_w0(params), eigenvalues(params), [1, 3, 3, 1])


def test_dimension_cap_on_build(example_params):
    with pytest.raises((DimensionError, ParameterError)):
        build_w0(example_params.with_size(5), GenericityTolerances(dimension_cap=4))


@pytest.mark.parametrize("N", range(1, 9))
def test_tridiagonal_relations(make_params, N):
    params = make_params(N)
    first, second = check_tridiagonal_relations(build_w0(params), build_w1(params), derive(params))
    assert first.relative <= 1e-10
    assert second.relative <= 1e-10


def test_tridiagonal_relations_complex(make_complex_params):
    params = make_complex_params(3)
    first, second = check_tridiagonal_relations(build_w0(params), build_w1(params), derive(params))
    assert max(first.relative, second.relative) <= 1e-10


def test_wrong_rho_breaks_relation(example_params):
    scalars = derive(example_params)
    first, _ = check_tridiagonal_relations(build_w0(example_params), build_w1(example_params), scalars,
                                           rho=scalars.rho + 1)
    assert first.relative > 1e-3


def test_diagonal_pair_satisfies_relation_trivially():
    w0 = np.diag([1.0, 2.0]).astype(complex)
    w1 = np.diag([3.0, -1.0]).astype(complex)
    scalars = DerivedScalars(q=1.0, q_half=1.0, k_plus=0.0, k_minus=0.0, rho=0.0)
    first, second = check_tridiagonal_relations(w0, w1, scalars)
    assert first.residual == 0.0
    assert second.residual == 0.0


def test_relation_shape_mismatch():
    with pytest.raises(DimensionError):
        check_tridiagonal_relations(np.eye(2), np.eye(4), DerivedScalars(1, 1, 0, 0, 0))
    with pytest.raises(DimensionError):
        check_tridiagonal_relations(np.eye(3), np.eye(3), DerivedScalars(1, 1, 0, 0, 0))


def test_askey_wilson_n1(make_params):
    params = make_params(1)
    fit = fit_aw_constants(build_w0(params), build_w1(params), derive(params).q)
    assert fit.relative_residual <= 1e-10
    assert len(fit.constants()) == 7


def test_askey_wilson_fails_for_n2(make_params):
    params = make_params(2)
    fit = fit_aw_constants(build_w0(params), build_w1(params), derive(params).q)
    assert fit.relative_residual > 1e-3


def test_askey_wilson_identity():
    eye = np.eye(2, dtype=complex)
    fit = fit_aw_constants(eye, eye, cmath.exp(0.3j))
    assert fit.residual <= 1e-12


def test_dagger_relation(make_params):
    for N in (1, 2, 3):
        assert check_dagger_relation(make_params(N)).relative <= 1e-12


def test_dagger_relation_needs_imaginary_regime(make_complex_params):
    with pytest.raises(ParameterError):
        check_dagger_relation(make_complex_params(1))


@pytest.mark.parametrize("N", range(2, 9))
@pytest.mark.parametrize("operator, sign", [(build_w0, 1), (build_w1, -1)])
def test_generator_peels_one_tensor_factor(make_params, N, operator, sign):
    params = make_params(N)
    s = derive(params)
    coupling = s.k_plus * SIGMA_PLUS + s.k_minus * SIGMA_MINUS
    peeled = operator(params) - kron(coupling, np.eye(2 ** (N - 1)))
    assert np.array_equal(peeled, kron(q_sigma3(s.q_half, sign), operator(params.with_size(N - 1))))
