#!/usr/bin/env python3
"""
Overlap functions F_n[ik](lambda~_s) between the phi_tilde bras and the psi
basis, their recurrence and q-difference systems, the discrete weight and the
orthogonality check, plus the N = 2 rational closed forms.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from blocktri import BlockTriMatrix, entries_recursive
from params import (
    DimensionError,
    GenericityError,
    GenericityTolerances,
    ModelParams,
    ParameterError,
    require_valid,
)
from spectral import NormCoeffs, eigenbasis, eigenvalues, level_offsets, norm_coeffs


def u_levels(params: ModelParams) -> dict[int, np.ndarray]:
    """
    U_k(s) for every level s, one tensor factor at a time from U^(0)_1(0) = 1:
      k <= C(M-1, s) : (exp(alpha - alpha* + s phi) + 1) U^(M-1)_k(s)
      otherwise      : (exp(alpha + alpha* + (M - s) phi) + 1) U^(M-1)_{k-C}(s-1)
    """
    alpha = complex(params.alpha)
    alpha_star = complex(params.alpha_star)
    phi = complex(params.phi)
    levels = {0: np.ones(1, dtype=complex)}
    for size in range(1, params.N + 1):
        grown = {}
        for s in range(size + 1):
            parts = []
            if s in levels:
                parts.append((cmath.exp(alpha - alpha_star + s * phi) + 1) * levels[s])
            if s - 1 in levels:
                parts.append((cmath.exp(alpha + alpha_star + (size - s) * phi) + 1) * levels[s - 1])
            grown[s] = np.concatenate(parts)
        levels = grown
    return levels


def overlap_U(params: ModelParams, k: int, s: int) -> complex:
    if not 0 <= s <= params.N or not 1 <= k <= math.comb(params.N, s):
        raise DimensionError(f"(k, s) = ({k}, {s}) out of range for N = {params.N}")
    return complex(u_levels(params)[s][k - 1])


@dataclass
class OverlapTable:
    """
    values[(n, i), (s, k)] = F_n[ik](lambda~_s), rows and columns in canonical
    order; U, weights and lambda_tilde indexed by level then 0-based rank.
    """
    N: int
    values: np.ndarray
    U: dict[int, np.ndarray]
    weights: dict[int, np.ndarray]
    lambda_tilde: np.ndarray
    u_mismatch: float = 0.0

    def F(self, n: int, i: int, k: int, s: int) -> complex:
        offsets = level_offsets(self.N)
        return complex(self.values[offsets[n] + i - 1, offsets[s] + k - 1])

    def block(self, n: int, s: int) -> np.ndarray:
        """F_n[ik](lambda~_s) as an (i, k) array."""
        offsets = level_offsets(self.N)
        return self.values[offsets[n]:offsets[n + 1], offsets[s]:offsets[s + 1]]

    def column(self, s: int, k: int) -> np.ndarray:
        return self.values[:, level_offsets(self.N)[s] + k - 1]

    def u(self, k: int, s: int) -> complex:
        return complex(self.U[s][k - 1])

    def weight(self, k: int, s: int) -> complex:
        return complex(self.weights[s][k - 1])

    def weight_vector(self) -> np.ndarray:
        return np.concatenate([self.weights[s] for s in range(self.N + 1)])

    def rows(self) -> Iterator[tuple[int, int, int, int, complex]]:
        """(n, i, k, s, F) with 1-based ranks, n outer, then i, s, k."""
        for n in range(self.N + 1):
            for i in range(1, math.comb(self.N, n) + 1):
                for s in range(self.N + 1):
                    for k in range(1, math.comb(self.N, s) + 1):
                        yield n, i, k, s, self.F(n, i, k, s)


def overlap_F(params: ModelParams, tol: GenericityTolerances | None = None) -> OverlapTable:
    """F = <phi_tilde_s[k], psi_n[i]> / U_k(s); the level-0 row is divided by itself."""
    tol = tol or GenericityTolerances()
    require_valid(params, tol)
    psi = eigenbasis(params, "psi", tol=tol)
    bras = eigenbasis(params, "phi_tilde", tol=tol)
    paired = bras.vectors.T @ psi.vectors
    U = u_levels(params)
    u_flat = np.concatenate([U[s] for s in range(params.N + 1)])
    if np.min(np.abs(u_flat)) <= tol.guard:
        raise GenericityError("overlap coefficient U below tolerance")
    direct = paired[:, 0]
    mismatch = float(np.max(np.abs(direct - u_flat) / np.abs(u_flat)))
    values = (paired / direct[:, None]).T
    tilde_norms = norm_coeffs(params, tilde=True, tol=tol)
    weights = {s: tilde_norms.levels[s] * U[s] ** 2 for s in range(params.N + 1)}
    logging.debug(f"Overlap table for N = {params.N}: U recursion vs pairing {mismatch:.3e}")
    return OverlapTable(N=params.N, values=values, U=U, weights=weights,
                        lambda_tilde=eigenvalues(params, dual=True), u_mismatch=mismatch)


@dataclass
class ResidualReport:
    max_residual: float
    max_relative: float
    equations: int


def _residual(lhs: np.ndarray, rhs: np.ndarray, scale: np.ndarray) -> tuple[float, float]:
    diff = np.abs(lhs - rhs)
    relative = diff / np.maximum(scale, np.finfo(float).tiny)
    return float(diff.max(initial=0.0)), float(relative.max(initial=0.0))


def check_recurrence(params: ModelParams, table: OverlapTable, blocks: BlockTriMatrix) -> ResidualReport:
    """
    lambda~ F_n[j] = sum_i b_n[ij] F_{n+1}[i] + a_n[ij] F_n[i] + c_n[ij] F_{n-1}[i]
    for every (s, k) column; i.e. lambda~_s f = T^T f with T the assembled blocks.
    """
    if blocks.N != table.N or params.N != table.N:
        raise DimensionError("table, blocks and params disagree on N")
    transfer = blocks.assemble().T
    offsets = level_offsets(table.N)
    worst_abs, worst_rel = 0.0, 0.0
    for s in range(table.N + 1):
        lam = table.lambda_tilde[s]
        cols = table.values[:, offsets[s]:offsets[s + 1]]
        lhs = lam * cols
        rhs = transfer @ cols
        scale = abs(lam) * np.abs(cols) + np.abs(transfer) @ np.abs(cols)
        res_abs, res_rel = _residual(lhs, rhs, scale)
        worst_abs, worst_rel = max(worst_abs, res_abs), max(worst_rel, res_rel)
    return ResidualReport(max_residual=worst_abs, max_relative=worst_rel, equations=table.values.size)


@dataclass
class QDiffOperator:
    s: int
    Phi: np.ndarray
    PhiBar: np.ndarray
    Mu: np.ndarray


def qdiff_operator(
    params: ModelParams,
    s: int,
    dual_blocks: BlockTriMatrix,
    U: dict[int, np.ndarray],
    tol: GenericityTolerances | None = None,
) -> QDiffOperator:
    """
    [Phi]_kl = b~_s[lk] U_l(s+1)/U_k(s), [PhiBar]_kl = c~_s[lk] U_l(s-1)/U_k(s),
    [Mu]_kl = a~_s[lk] U_l(s)/U_k(s). Phi is empty at s = N, PhiBar at s = 0.
    """
    tol = tol or GenericityTolerances()
    N = params.N
    if not 0 <= s <= N:
        raise DimensionError(f"level {s} out of range for N = {N}")
    here = U[s]
    if np.min(np.abs(here)) <= tol.guard:
        raise GenericityError(f"U(s = {s}) below tolerance")
    width = math.comb(N, s)
    mu = dual_blocks.block("a", s).T * here[None, :] / here[:, None]
    if s < N:
        phi = dual_blocks.block("b", s).T * U[s + 1][None, :] / here[:, None]
    else:
        phi = np.zeros((width, 0), dtype=complex)
    if s > 0:
        phi_bar = dual_blocks.block("c", s).T * U[s - 1][None, :] / here[:, None]
    else:
        phi_bar = np.zeros((width, 0), dtype=complex)
    return QDiffOperator(s=s, Phi=phi, PhiBar=phi_bar, Mu=mu)


def check_qdiff(params: ModelParams, table: OverlapTable, dual_blocks: BlockTriMatrix) -> ResidualReport:
    """D(s) F_n[i] = lambda_n F_n[i] for every s and every row (n, i)."""
    lam = eigenvalues(params)
    offsets = level_offsets(table.N)
    row_levels = np.repeat(np.arange(table.N + 1), np.diff(offsets))
    worst_abs, worst_rel = 0.0, 0.0
    for s in range(table.N + 1):
        op = qdiff_operator(params, s, dual_blocks, table.U)
        here = table.values[:, offsets[s]:offsets[s + 1]]
        rhs = here @ op.Mu.T
        scale = np.abs(here) @ np.abs(op.Mu).T
        if s < table.N:
            up = table.values[:, offsets[s + 1]:offsets[s + 2]]
            rhs = rhs + up @ op.Phi.T
            scale = scale + np.abs(up) @ np.abs(op.Phi).T
        if s > 0:
            down = table.values[:, offsets[s - 1]:offsets[s]]
            rhs = rhs + down @ op.PhiBar.T
            scale = scale + np.abs(down) @ np.abs(op.PhiBar).T
        lhs = lam[row_levels][:, None] * here
        scale = scale + np.abs(lhs)
        res_abs, res_rel = _residual(lhs, rhs, scale)
        worst_abs, worst_rel = max(worst_abs, res_abs), max(worst_rel, res_rel)
    return ResidualReport(max_residual=worst_abs, max_relative=worst_rel, equations=table.values.size)


@dataclass
class OrthogonalityReport:
    gram: np.ndarray
    weights: np.ndarray
    off_diagonal: float
    diagonal_deviation: float
    weight_imaginary: float

    @property
    def deviation(self) -> float:
        return max(self.off_diagonal, self.diagonal_deviation)


def weights_and_orthogonality(params: ModelParams, table: OverlapTable, norms: NormCoeffs) -> OrthogonalityReport:
    """
    Gram[(n,i),(m,j)] = sum_s sum_k w_k(s) F_n[ik] F_m[jk], summed s outer, k inner,
    with w_k(s) = N~_s[k] U_k(s)^2. Deviations are measured on N_n[i] * Gram,
    which should be the identity.
    """
    weights = table.weight_vector()
    dim = table.values.shape[0]
    gram = np.zeros((dim, dim), dtype=complex)
    for column in range(dim):
        f = table.values[:, column]
        gram += weights[column] * np.outer(f, f)
    scaled = norms.flat()[:, None] * gram
    off = scaled - np.diag(np.diag(scaled))
    imaginary = np.abs(weights.imag) / np.maximum(np.abs(weights), np.finfo(float).tiny)
    return OrthogonalityReport(
        gram=gram,
        weights=weights,
        off_diagonal=float(np.max(np.abs(off), initial=0.0)),
        diagonal_deviation=float(np.max(np.abs(np.diag(scaled) - 1))),
        weight_imaginary=float(imaginary.max()),
    )


@dataclass(frozen=True)
class N2ZerosPoles:
    u11: complex
    v: complex
    u12_plus: complex
    u12_minus: complex
    u21: complex
    U: complex
    V: complex
    denominator: complex


def n2_zeros_and_poles(params: ModelParams) -> N2ZerosPoles:
    if params.N != 2:
        raise ParameterError(f"zeros and poles are closed-form for N = 2 only, got N = {params.N}")
    a = complex(params.alpha)
    b = complex(params.alpha_star)
    p = complex(params.phi)
    sh, ch = cmath.sinh, cmath.cosh

    pole_den = 2 * (sh(a - b - p / 2) + sh(a + b - p / 2) + sh(2 * a + p / 2) - 3 * sh(p / 2))
    # +3 sinh(a + 3p/2): with -3 v is not a root of the determinant of the
    # three defining recurrences.
    v = (sh(a + 2 * b + p / 2) + sh(a - 2 * b + p / 2) + sh(2 * a + b + 3 * p / 2) + sh(2 * a - b + 3 * p / 2)
         + sh(a + p / 2) - 3 * sh(a - p / 2) + sh(a - 3 * p / 2) + 3 * sh(a + 3 * p / 2)
         + 3 * sh(b + p / 2) - 3 * sh(b - p / 2)) / pole_den
    U = (4 * ch(a + p / 2) + 2 * ch(b + p / 2) + 2 * ch(b - p / 2) - 2 * ch(a + 3 * p / 2) - 2 * ch(a - p / 2)
         - ch(b + 2 * a - p / 2) - ch(b - 2 * a + p / 2) - ch(b + 2 * a + 3 * p / 2) - ch(b - 2 * a - 3 * p / 2))
    V = (ch(2 * a) + ch(2 * a + p) - 2) * (
        8 + 4 * ch(a + b) + 4 * ch(a - b) + 4 * ch(a + b + p) + 4 * ch(a - b + p) + 4 * ch(p) - 2 * ch(2 * a)
        + 2 * ch(2 * a + p) + ch(2 * a + 2 * b) + ch(2 * a - 2 * b) + ch(2 * a + 2 * b + p) + ch(2 * a - 2 * b + p))
    root = cmath.sqrt(V)
    quad_den = 4 * (ch(p / 2) - ch(2 * a + p / 2))
    return N2ZerosPoles(
        u11=-ch(a),
        v=v,
        u12_plus=(U + 2 * sh(p / 2) * root) / quad_den,
        u12_minus=(U - 2 * sh(p / 2) * root) / quad_den,
        u21=(sh(a - b - p / 2) + sh(a + b - p / 2) - sh(p / 2) - sh(3 * p / 2)) / (2 * sh(a + p / 2)),
        U=U,
        V=V,
        denominator=sh(a - p / 2) * ch(b) + ch(a + p / 2) * sh(a) - sh(p / 2),
    )


@dataclass(frozen=True)
class N2ClosedForm:
    lam: complex
    f11: complex
    f12: complex
    f21: complex

    def as_vector(self) -> np.ndarray:
        """(F_0, F_1[1], F_1[2], F_2[1]) in canonical order."""
        return np.array([1.0, self.f11, self.f12, self.f21], dtype=complex)


def n2_rational(params: ModelParams, lam: complex, tol: GenericityTolerances | None = None) -> N2ClosedForm:
    """The three rational functions of lambda~ that solve the N = 2 recurrences."""
    tol = tol or GenericityTolerances()
    zp = n2_zeros_and_poles(params)
    if abs(lam - zp.v) <= tol.guard:
        raise GenericityError(f"lambda~ = {lam} is too close to the pole v = {zp.v}")
    a = complex(params.alpha)
    b = complex(params.alpha_star)
    p = complex(params.phi)
    pole = lam - zp.v
    coupling = cmath.cosh(a) + cmath.cosh(b)
    f11 = -cmath.exp(-a - p / 2) * cmath.sinh(p) * coupling / zp.denominator * (lam - zp.u11) / pole
    f12 = (cmath.exp(-a - p / 2) * cmath.sinh(a + p / 2) * cmath.sinh(a)
           / (cmath.sinh(p / 2) * zp.denominator) * (lam - zp.u12_plus) * (lam - zp.u12_minus) / pole)
    f21 = -cmath.exp(-2 * a) * cmath.sinh(a + p / 2) * coupling / zp.denominator * (lam - zp.u21) / pole
    return N2ClosedForm(lam=lam, f11=f11, f12=f12, f21=f21)


def n2_closed_form(params: ModelParams, s: int, tol: GenericityTolerances | None = None) -> N2ClosedForm:
    require_valid(params, tol)
    if not 0 <= s <= 2:
        raise DimensionError(f"s = {s} out of range for N = 2")
    return n2_rational(params, eigenvalues(params, dual=True)[s], tol)


@dataclass
class RootReport:
    roots: np.ndarray
    expected: np.ndarray
    max_error: float


def _leftover(params: ModelParams, blocks: BlockTriMatrix, lam: complex) -> complex:
    """Remaining recurrence once F is fixed by the others, cleared of its pole."""
    if params.N == 1:
        f1 = (lam - blocks.a[0][0, 0]) / blocks.b[0][0, 0]
        return blocks.a[1][0, 0] * f1 + blocks.c[1][0, 0] - lam * f1
    closed = n2_rational(params, lam)
    zp = n2_zeros_and_poles(params)
    residual = (blocks.c[1][0, 1] + blocks.a[1][0, 1] * closed.f11 + blocks.a[1][1, 1] * closed.f12
                + blocks.b[1][0, 1] * closed.f21 - lam * closed.f12)
    return residual * (lam - zp.v)


def eigenvalue_root_check(params: ModelParams, tol: GenericityTolerances | None = None) -> RootReport:
    """
    The equation left over after solving the others is a polynomial in lambda~
    of degree N + 1; its roots must be the dual eigenvalues. The polynomial is
    recovered by interpolation on a circle around the spectrum.
    """
    if params.N not in (1, 2):
        raise ParameterError(f"the root check covers N = 1 and N = 2, got N = {params.N}")
    blocks = entries_recursive(params, tol)
    expected = eigenvalues(params, dual=True)
    degree = params.N + 1
    center = complex(np.mean(expected))
    radius = 1.0 + float(np.max(np.abs(expected - center)))
    nodes = radius * np.exp(2j * np.pi * (np.arange(degree + 1) + 0.25) / (degree + 1))
    samples = np.array([_leftover(params, blocks, center + z) for z in nodes])
    coefficients = np.linalg.solve(np.vander(nodes, degree + 1), samples)
    roots = np.roots(coefficients) + center

    remaining = list(roots)
    worst = 0.0
    for value in expected:
        nearest = min(range(len(remaining)), key=lambda idx: abs(remaining[idx] - value))
        worst = max(worst, abs(remaining.pop(nearest) - value))
    return RootReport(roots=roots, expected=expected, max_error=float(worst))
