#!/usr/bin/env python3
"""
Closed-form eigenbases of W0 (psi) and W1 (phi), their tilde partners, the
canonical ordering of sign sequences and the normalization coefficients.

Tensor factor l = N is the leftmost Kronecker factor. Tilde vectors are
returned as bras by default: with the bilinear pairing they are the left
eigenvectors dual to psi and phi. For alpha, alpha*, phi purely imaginary and
theta real the bra is the complex conjugate of the substituted ket
(psi|_{alpha*->alpha} for phi_tilde, ...), which as_bra=False returns verbatim.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterator

import numpy as np

from params import (
    DimensionError,
    GenericityError,
    GenericityTolerances,
    ModelParams,
    require_valid,
)

KINDS = ("psi", "phi", "psi_tilde", "phi_tilde")


@dataclass(frozen=True)
class EigenIndex:
    epsilons: tuple[int, ...]
    level: int
    rank: int

    @property
    def N(self) -> int:
        return len(self.epsilons)


def level_of(epsilons: tuple[int, ...]) -> int:
    return (len(epsilons) - sum(epsilons)) // 2


@lru_cache(maxsize=None)
def _order(N: int, n: int) -> tuple[tuple[int, ...], ...]:
    if n < 0 or n > N:
        return ()
    if N == 0:
        return ((),)
    plus = tuple(e + (1,) for e in _order(N - 1, n))
    minus = tuple(e + (-1,) for e in _order(N - 1, n - 1))
    return plus + minus


def canonical_order(N: int, n: int) -> list[tuple[int, ...]]:
    """
    Sign sequences (eps_1, ..., eps_N) of level n. The first C(N-1, n) extend the
    level-n sequences of size N-1 by eps_N = +1, the rest extend the level-(n-1)
    sequences by eps_N = -1.
    """
    if N < 0 or n < 0 or n > N:
        raise DimensionError(f"level {n} out of range for N = {N}")
    return list(_order(N, n))


def index_of(epsilons: tuple[int, ...] | list[int]) -> EigenIndex:
    eps = tuple(int(e) for e in epsilons)
    if any(e not in (1, -1) for e in eps):
        raise DimensionError(f"signs must be +1 or -1, got {eps}")
    rank = 1
    for size in range(len(eps), 0, -1):
        if eps[size - 1] == -1:
            rank += math.comb(size - 1, level_of(eps[:size]))
    return EigenIndex(epsilons=eps, level=level_of(eps), rank=rank)


def eigen_indices(N: int) -> list[EigenIndex]:
    return [
        EigenIndex(epsilons=eps, level=n, rank=rank)
        for n in range(N + 1)
        for rank, eps in enumerate(canonical_order(N, n), start=1)
    ]


def level_offsets(N: int) -> list[int]:
    """Position of the first vector of each level in the canonical order."""
    offsets = [0]
    for n in range(N + 1):
        offsets.append(offsets[-1] + math.comb(N, n))
    return offsets


def product_vector(epsilons: tuple[int, ...], a: complex, f: complex, theta: float) -> np.ndarray:
    """(x) over l of (exp(eps_l (a + S_l f/2) + i theta), 1), S_l = sum_{k<l} eps_k, factor N leftmost."""
    factors = []
    partial = 0
    for eps in epsilons:
        factors.append(np.array([cmath.exp(eps * (a + partial * f / 2) + 1j * theta), 1.0], dtype=complex))
        partial += eps
    return reduce(np.kron, reversed(factors), np.ones(1, dtype=complex))


def _vector_data(params: ModelParams, kind: str, as_bra: bool) -> tuple[complex, complex, float]:
    alpha = complex(params.alpha)
    alpha_star = complex(params.alpha_star)
    phi = complex(params.phi)
    theta = float(params.theta)
    if kind == "psi":
        return alpha, phi, theta
    if kind == "phi":
        return -alpha_star, -phi, theta + math.pi
    if kind == "psi_tilde":
        return (alpha, phi, math.pi - theta) if as_bra else (-alpha, -phi, theta + math.pi)
    if kind == "phi_tilde":
        return (-alpha_star, -phi, -theta) if as_bra else (alpha_star, phi, theta)
    raise DimensionError(f"unknown basis kind {kind!r}, expected one of {KINDS}")


def _check_index(params: ModelParams, idx: EigenIndex) -> None:
    if idx.N != params.N or index_of(idx.epsilons) != idx:
        raise DimensionError(f"index {idx} is inconsistent with N = {params.N}")


def psi_vector(params: ModelParams, idx: EigenIndex) -> np.ndarray:
    _check_index(params, idx)
    return product_vector(idx.epsilons, *_vector_data(params, "psi", True))


def phi_vector(params: ModelParams, idx: EigenIndex) -> np.ndarray:
    _check_index(params, idx)
    return product_vector(idx.epsilons, *_vector_data(params, "phi", True))


def eigenvalues(params: ModelParams, dual: bool = False) -> np.ndarray:
    """lambda_n = cosh(alpha + (N-2n) phi/2); dual: cosh(alpha* + (N-2s) phi/2)."""
    base = complex(params.alpha_star if dual else params.alpha)
    phi = complex(params.phi)
    return np.array([cmath.cosh(base + (params.N - 2 * n) * phi / 2) for n in range(params.N + 1)])


def eigenvalue_ratios(values: np.ndarray) -> np.ndarray:
    """(l_{n-2} - l_{n+1}) / (l_{n-1} - l_n) for 2 <= n <= N-1."""
    return np.array([
        (values[n - 2] - values[n + 1]) / (values[n - 1] - values[n])
        for n in range(2, len(values) - 1)
    ], dtype=complex)


@dataclass
class EigenBasis:
    kind: str
    N: int
    vectors: np.ndarray
    indices: list[EigenIndex]
    eigenvalues: np.ndarray
    as_bra: bool = True

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def vector(self, n: int, rank: int) -> np.ndarray:
        return self.vectors[:, level_offsets(self.N)[n] + rank - 1]

    def __iter__(self) -> Iterator[tuple[EigenIndex, np.ndarray, complex]]:
        for position, idx in enumerate(self.indices):
            yield idx, self.vectors[:, position], self.eigenvalues[position]

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.vectors))


def eigenbasis(
    params: ModelParams,
    kind: str = "psi",
    as_bra: bool = True,
    tol: GenericityTolerances | None = None,
) -> EigenBasis:
    require_valid(params, tol)
    a, f, theta = _vector_data(params, kind, as_bra)
    indices = eigen_indices(params.N)
    vectors = np.column_stack([product_vector(idx.epsilons, a, f, theta) for idx in indices])
    values = eigenvalues(params, dual=kind in ("phi", "phi_tilde"))
    per_vector = np.array([values[idx.level] for idx in indices])
    logging.debug(f"Built {kind} basis for N = {params.N} ({len(indices)} vectors)")
    return EigenBasis(kind=kind, N=params.N, vectors=vectors, indices=indices,
                      eigenvalues=per_vector, as_bra=as_bra)


def tilde_vectors(
    params: ModelParams,
    kind: str = "psi_tilde",
    as_bra: bool = True,
    tol: GenericityTolerances | None = None,
) -> EigenBasis:
    if kind not in ("psi_tilde", "phi_tilde"):
        raise DimensionError(f"tilde kind must be psi_tilde or phi_tilde, got {kind!r}")
    return eigenbasis(params, kind, as_bra, tol)


def pairing(u: np.ndarray, v: np.ndarray) -> complex:
    """Bilinear form sum_i u_i v_i, no conjugation."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise DimensionError(f"cannot pair vectors of shapes {u.shape} and {v.shape}")
    return complex(np.dot(u, v))


@dataclass
class NormCoeffs:
    N: int
    tilde: bool
    levels: dict[int, np.ndarray]

    @property
    def values(self) -> dict[tuple[int, int], complex]:
        return {
            (n, rank): complex(value)
            for n, row in self.levels.items()
            for rank, value in enumerate(row, start=1)
        }

    def value(self, n: int, rank: int) -> complex:
        return complex(self.levels[n][rank - 1])

    def flat(self) -> np.ndarray:
        return np.concatenate([self.levels[n] for n in range(self.N + 1)])


def norm_coeffs(params: ModelParams, tilde: bool = False, tol: GenericityTolerances | None = None) -> NormCoeffs:
    """
    N_n[i] built one tensor factor at a time from N^(0) = 1:
      plus family  : N^(M-1)_n[i] / (1 - exp(2a + (M-1-2n) f))
      minus family : N^(M-1)_{n-1}[i] / (1 - exp(-2a - (M+1-2n) f))
    with (a, f) = (alpha, phi), or (-alpha*, -phi) for the tilde coefficients.
    """
    tol = tol or GenericityTolerances()
    require_valid(params, tol)
    a = -complex(params.alpha_star) if tilde else complex(params.alpha)
    f = -complex(params.phi) if tilde else complex(params.phi)

    def factor(denominator: complex) -> complex:
        if abs(denominator) <= tol.guard:
            raise GenericityError(f"normalization denominator {denominator:.3g} below tolerance")
        return 1 / denominator

    levels = {0: np.ones(1, dtype=complex)}
    for size in range(1, params.N + 1):
        grown = {}
        for n in range(size + 1):
            parts = []
            if n in levels:
                parts.append(levels[n] * factor(1 - cmath.exp(2 * a + (size - 1 - 2 * n) * f)))
            if n - 1 in levels:
                parts.append(levels[n - 1] * factor(1 - cmath.exp(-2 * a - (size + 1 - 2 * n) * f)))
            grown[n] = np.concatenate(parts)
        levels = grown
    return NormCoeffs(N=params.N, tilde=tilde, levels=levels)


def biorthogonality_residual(params: ModelParams, dual: bool = False, tol: GenericityTolerances | None = None) -> float:
    """max |N_a <tilde_a, v_b> - delta_ab| over the psi (or phi) family."""
    kets = eigenbasis(params, "phi" if dual else "psi", tol=tol)
    bras = eigenbasis(params, "phi_tilde" if dual else "psi_tilde", tol=tol)
    norms = norm_coeffs(params, tilde=dual, tol=tol).flat()
    gram = norms[:, None] * (bras.vectors.T @ kets.vectors)
    return float(np.max(np.abs(gram - np.eye(kets.dim))))
