#!/usr/bin/env python3
"""Kronecker construction of W0, W1 and the relations they satisfy."""
from __future__ import annotations

import cmath
import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from params import (
    DerivedScalars,
    DimensionError,
    GenericityTolerances,
    ModelParams,
    ParameterError,
    derive,
)

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class RelationResidual:
    lhs_norm: float
    rhs_norm: float
    residual: float

    @property
    def relative(self) -> float:
        return self.residual / max(self.lhs_norm, self.rhs_norm, 1.0)


@dataclass(frozen=True)
class AskeyWilsonFit:
    gamma: complex
    gamma_star: complex
    varrho: complex
    varrho_star: complex
    omega: complex
    eta: complex
    eta_star: complex
    residual: float
    relative_residual: float

    def constants(self) -> tuple[complex, ...]:
        return (self.gamma, self.gamma_star, self.varrho, self.varrho_star,
                self.omega, self.eta, self.eta_star)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def kron(a: np.ndarray, b: np.ndarray, dimension_cap: int | None = None) -> np.ndarray:
    """Kronecker product; dimension_cap is the largest allowed number of tensor factors."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if dimension_cap is not None:
        rows = a.shape[0] * b.shape[0]
        if rows > 2 ** dimension_cap:
            raise DimensionError(f"dimension {rows} exceeds the cap 2^{dimension_cap}")
    return np.kron(a, b)


def q_sigma3(q_half: complex, sign: int = 1) -> np.ndarray:
    """q^{sign*sigma_3/2}"""
    return np.diag([q_half ** sign, q_half ** -sign]).astype(complex)


def _build(params: ModelParams, base: complex, sign: int, tol: GenericityTolerances | None) -> np.ndarray:
    tol = tol or GenericityTolerances()
    if params.N > tol.dimension_cap:
        raise DimensionError(f"N = {params.N} exceeds the dimension cap {tol.dimension_cap}")
    scalars = derive(params, tol)
    coupling = scalars.k_plus * SIGMA_PLUS + scalars.k_minus * SIGMA_MINUS
    grading = q_sigma3(scalars.q_half, sign)
    w = np.array([[base]], dtype=complex)
    for size in range(1, params.N + 1):
        identity = np.eye(w.shape[0], dtype=complex)
        w = kron(coupling, identity, tol.dimension_cap) + kron(grading, w, tol.dimension_cap)
        logging.debug(f"Built level {size} generator of dimension {w.shape[0]}")
    return w


def build_w0(params: ModelParams, tol: GenericityTolerances | None = None) -> np.ndarray:
    return _build(params, cmath.cosh(params.alpha), 1, tol)


def build_w1(params: ModelParams, tol: GenericityTolerances | None = None) -> np.ndarray:
    return _build(params, cmath.cosh(params.alpha_star), -1, tol)


def q_commutator(a: np.ndarray, b: np.ndarray, q_half: complex) -> np.ndarray:
    """[a, b]_q = q^{1/2} ab - q^{-1/2} ba"""
    return q_half * (a @ b) - (b @ a) / q_half


def _check_same_shape(w0: np.ndarray, w1: np.ndarray) -> None:
    if w0.shape != w1.shape or w0.ndim != 2 or w0.shape[0] != w0.shape[1]:
        raise DimensionError(f"dimension mismatch: {w0.shape} vs {w1.shape}")
    if not _is_power_of_two(w0.shape[0]):
        raise DimensionError(f"dimension {w0.shape[0]} is not a power of two")


def _relation(a: np.ndarray, b: np.ndarray, q_half: complex, rho: complex) -> RelationResidual:
    inner = q_commutator(a, b, q_half)
    middle = q_commutator(a, inner, 1 / q_half)
    lhs = a @ middle - middle @ a
    rhs = rho * (a @ b - b @ a)
    return RelationResidual(
        lhs_norm=float(np.linalg.norm(lhs)),
        rhs_norm=float(np.linalg.norm(rhs)),
        residual=float(np.linalg.norm(lhs - rhs)),
    )


def check_tridiagonal_relations(
    w0: np.ndarray,
    w1: np.ndarray,
    scalars: DerivedScalars,
    rho: complex | None = None,
) -> tuple[RelationResidual, RelationResidual]:
    """
    Residuals of [A,[A,[A,A*]_q]_{q^-1}] - rho [A,A*] and of the same relation with
    A and A* exchanged, A = w0, A* = w1. rho defaults to the derived value.
    """
    _check_same_shape(w0, w1)
    rho = scalars.rho if rho is None else rho
    first = _relation(w0, w1, scalars.q_half, rho)
    second = _relation(w1, w0, scalars.q_half, rho)
    logging.debug(f"Tridiagonal relation residuals: {first.relative:.3e}, {second.relative:.3e}")
    return first, second


def fit_aw_constants(w0: np.ndarray, w1: np.ndarray, q: complex) -> AskeyWilsonFit:
    """
    Least-squares fit of (gamma, gamma*, varrho, varrho*, omega, eta, eta*) to

      A^2 A* - beta A A* A + A* A^2 - gamma (A A* + A* A) - varrho A* = gamma* A^2 + omega A + eta
      A*^2 A - beta A* A A* + A A*^2 - gamma* (A* A + A A*) - varrho* A = gamma A*^2 + omega A* + eta*

    with beta = q + 1/q, stacking every entry of both relations.
    """
    _check_same_shape(w0, w1)
    a, b = w0, w1
    dim = a.shape[0]
    beta = q + 1 / q
    eye = np.eye(dim, dtype=complex)
    zero = np.zeros_like(eye)

    def stack(top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
        return np.concatenate([top.ravel(), bottom.ravel()])

    target = stack(a @ a @ b - beta * (a @ b @ a) + b @ a @ a,
                   b @ b @ a - beta * (b @ a @ b) + a @ b @ b)
    columns = [
        stack(a @ b + b @ a, b @ b),
        stack(a @ a, b @ a + a @ b),
        stack(b, zero),
        stack(zero, a),
        stack(a, b),
        stack(eye, zero),
        stack(zero, eye),
    ]
    design = np.column_stack(columns)
    solution, _, _, _ = scipy.linalg.lstsq(design, target)
    residual = float(np.linalg.norm(design @ solution - target))
    scale = float(np.linalg.norm(target))
    relative = residual / scale if scale > 0 else residual
    logging.debug(f"Askey-Wilson fit on dimension {dim}: relative residual {relative:.3e}")
    return AskeyWilsonFit(*(complex(x) for x in solution), residual=residual, relative_residual=relative)


def check_dagger_relation(params: ModelParams, tol: GenericityTolerances | None = None) -> RelationResidual:
    """Compare W0^dagger with W1 at alpha* = alpha; needs alpha, alpha*, phi purely imaginary."""
    if not params.is_imaginary_regime():
        raise ParameterError("the dagger relation needs alpha, alpha* and phi purely imaginary")
    w0 = build_w0(params, tol)
    w1 = build_w1(replace(params, alpha_star=params.alpha), tol)
    lhs = w0.conj().T
    return RelationResidual(
        lhs_norm=float(np.linalg.norm(lhs)),
        rhs_norm=float(np.linalg.norm(w1)),
        residual=float(np.linalg.norm(lhs - w1)),
    )
