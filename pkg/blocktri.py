#!/usr/bin/env python3
"""
Block-tridiagonal representation of W1 in the psi basis (and of W0 in the phi
basis): the tensor-factor recursion for the entries, the basis-change oracle
and runtime checks of the tridiagonal pair axioms.

Entries are stored as x_n[i, j], the coefficient of the i-th vector of the
target level in W1 psi_n[j]; a_n maps level n to itself, b_n to level n+1 and
c_n to level n-1. The transposed blocks X_n = x_n^T are only produced by
BlockTriMatrix.capital.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from construct import build_w0, build_w1
from params import (
    DimensionError,
    GenericityError,
    GenericityTolerances,
    ModelParams,
    require_valid,
)
from spectral import EigenBasis, NormCoeffs, eigenbasis, eigenvalues, level_offsets, norm_coeffs


@dataclass
class BlockTriMatrix:
    N: int
    a: dict[int, np.ndarray]
    b: dict[int, np.ndarray]
    c: dict[int, np.ndarray]
    dual: bool = False
    method: str = "recursive"
    off_band: float = 0.0

    def block(self, name: str, n: int) -> np.ndarray:
        """Block of level n; B_N and C_0 are empty with the shapes they would have."""
        if not 0 <= n <= self.N:
            raise DimensionError(f"level {n} out of range for N = {self.N}")
        width = math.comb(self.N, n)
        if name == "a":
            return self.a[n]
        if name == "b":
            return self.b[n] if n < self.N else np.zeros((0, width), dtype=complex)
        if name == "c":
            return self.c[n] if n > 0 else np.zeros((0, width), dtype=complex)
        raise DimensionError(f"unknown block {name!r}")

    def capital(self, name: str, n: int) -> np.ndarray:
        """(X_n)_{ji} = (x_n)_{ij}"""
        return self.block(name.lower(), n).T

    def entry(self, name: str, n: int, i: int, j: int) -> complex:
        """1-based (i, j)."""
        return complex(self.block(name, n)[i - 1, j - 1])

    def assemble(self) -> np.ndarray:
        offsets = level_offsets(self.N)
        dim = offsets[-1]
        full = np.zeros((dim, dim), dtype=complex)
        for n in range(self.N + 1):
            cols = slice(offsets[n], offsets[n + 1])
            full[offsets[n]:offsets[n + 1], cols] = self.a[n]
            if n < self.N:
                full[offsets[n + 1]:offsets[n + 2], cols] = self.b[n]
            if n > 0:
                full[offsets[n - 1]:offsets[n], cols] = self.c[n]
        return full


def _seed(alpha: complex, alpha_star: complex, phi: complex) -> tuple[dict, dict, dict]:
    """Closed forms at N = 1."""
    h = cmath.sinh(phi / 2)
    sinh_a = cmath.sinh(alpha)
    coupling = (cmath.cosh(alpha) + cmath.cosh(alpha_star)) * h / sinh_a
    a = {
        0: np.array([[(cmath.cosh(alpha_star) * cmath.sinh(alpha - phi / 2) - h) / sinh_a]]),
        1: np.array([[(cmath.cosh(alpha_star) * cmath.sinh(alpha + phi / 2) + h) / sinh_a]]),
    }
    b = {0: np.array([[cmath.exp(alpha) * coupling]])}
    c = {1: np.array([[-cmath.exp(-alpha) * coupling]])}
    return a, b, c


def _lift(old: tuple[dict, dict, dict], size: int, alpha: complex, phi: complex, guard: float) -> tuple[dict, dict, dict]:
    """
    Entries for `size` tensor factors from those for size - 1. At level n the
    first P = C(size-1, n) vectors carry eps_size = +1 (old level n), the
    remaining Q = C(size-1, n-1) carry eps_size = -1 (old level n-1).
    """
    old_a, old_b, old_c = old
    h = cmath.sinh(phi / 2)
    sinh_phi = cmath.sinh(phi)
    a, b, c = {}, {}, {}

    for n in range(size + 1):
        def sh(k: int) -> complex:
            value = cmath.sinh(alpha + (size + k - 2 * n) * phi / 2)
            if abs(value) <= guard:
                raise GenericityError(f"sinh(alpha + {size + k - 2 * n}*phi/2) below tolerance")
            return value

        def ex(sign: int, k: int) -> complex:
            return cmath.exp(sign * (alpha + (size + k - 2 * n) * phi / 2))

        P = math.comb(size - 1, n)
        Q = math.comb(size - 1, n - 1) if n >= 1 else 0

        block = np.zeros((P + Q, P + Q), dtype=complex)
        if P:
            block[:P, :P] = sh(-2) / sh(-1) * old_a[n]
            plus = np.arange(P)
            block[plus, plus] = (np.diag(old_a[n]) * sh(-2) - h) / sh(-1)
        if Q:
            block[P:, P:] = sh(2) / sh(1) * old_a[n - 1]
            minus = P + np.arange(Q)
            block[minus, minus] = (np.diag(old_a[n - 1]) * sh(2) + h) / sh(1)
        if P and Q:
            block[:P, P:] = -ex(-1, 0) * sinh_phi / sh(-1) * old_b[n - 1]
            block[P:, :P] = ex(1, 0) * sinh_phi / sh(1) * old_c[n]
        a[n] = block

        if n < size:
            P_up = math.comb(size - 1, n + 1)
            block = np.zeros((P_up + P, P + Q), dtype=complex)
            if P_up and P:
                block[:P_up, :P] = cmath.exp(phi / 2) * old_b[n]
            # rows of the eps_size = -1 family at level n+1, old sources of level n-1
            if P and Q:
                block[P_up:, P:] = cmath.exp(-phi / 2) * sh(1) / sh(-1) * old_b[n - 1]
            if P:
                shifted = old_a[n] + cmath.cosh(alpha + (size - 1 - 2 * n) * phi / 2) * np.eye(P)
                block[P_up:, :P] = ex(1, -1) * h / sh(-1) * shifted
            b[n] = block

        if n >= 1:
            R_down = math.comb(size - 1, n - 2) if n >= 2 else 0
            block = np.zeros((Q + R_down, P + Q), dtype=complex)
            if R_down:
                block[Q:, P:] = cmath.exp(phi / 2) * old_c[n - 1]
            # block[Q:, :P] vanishes. The eps_size = -1 rows start at offset C(size-1, n-1);
            # the alternative reading C(size-2, n) does not reproduce oracle_entries.
            if P:
                block[:Q, :P] = cmath.exp(-phi / 2) * sh(-1) / sh(1) * old_c[n]
            shifted = old_a[n - 1] + cmath.cosh(alpha + (size + 1 - 2 * n) * phi / 2) * np.eye(Q)
            block[:Q, P:] = -ex(-1, 1) * h / sh(1) * shifted
            c[n] = block

    return a, b, c


def entries_recursive(
    params: ModelParams,
    tol: GenericityTolerances | None = None,
    seed: str = "closed_form",
) -> BlockTriMatrix:
    """
    Entries of W1 in the psi basis, grown one tensor factor at a time.

    seed:
      - "closed_form": start from the N = 1 closed forms
      - "scalar": start from N = 0, where W1 is the scalar cosh(alpha*)
    """
    tol = tol or GenericityTolerances()
    require_valid(params, tol)
    alpha = complex(params.alpha)
    phi = complex(params.phi)
    if seed == "closed_form":
        entries = _seed(alpha, complex(params.alpha_star), phi)
        start = 2
    elif seed == "scalar":
        entries = ({0: np.array([[cmath.cosh(params.alpha_star)]], dtype=complex)}, {}, {})
        start = 1
    else:
        raise ValueError(f"unknown seed {seed!r}")
    for size in range(start, params.N + 1):
        entries = _lift(entries, size, alpha, phi, tol.guard)
        logging.debug(f"Lifted block entries to N = {size}")
    a, b, c = entries
    return BlockTriMatrix(N=params.N, a=a, b=b, c=c, method="recursive")


def _split(full: np.ndarray, N: int) -> tuple[dict, dict, dict, float]:
    offsets = level_offsets(N)
    a, b, c = {}, {}, {}
    leak = np.abs(full).copy()
    for n in range(N + 1):
        cols = slice(offsets[n], offsets[n + 1])
        a[n] = full[offsets[n]:offsets[n + 1], cols].copy()
        leak[offsets[n]:offsets[n + 1], cols] = 0
        if n < N:
            b[n] = full[offsets[n + 1]:offsets[n + 2], cols].copy()
            leak[offsets[n + 1]:offsets[n + 2], cols] = 0
        if n > 0:
            c[n] = full[offsets[n - 1]:offsets[n], cols].copy()
            leak[offsets[n - 1]:offsets[n], cols] = 0
    return a, b, c, float(leak.max(initial=0.0))


def entries_by_basis_change(
    w1: np.ndarray,
    basis: EigenBasis,
    norms: NormCoeffs,
    bras: EigenBasis,
    max_condition: float = 1e12,
) -> BlockTriMatrix:
    """
    Coefficient of basis vector (m, i) in w1 applied to (n, j), computed as
    N_m[i] <bra_m[i], w1 v_n[j]>. Coefficients outside the three block
    diagonals are measured into off_band, not dropped silently.
    """
    if w1.shape != (basis.dim, basis.dim) or bras.vectors.shape != basis.vectors.shape:
        raise DimensionError(f"shapes do not match: {w1.shape}, {basis.vectors.shape}, {bras.vectors.shape}")
    condition = basis.condition_number()
    if not np.isfinite(condition) or condition > max_condition:
        raise GenericityError(f"basis is ill-conditioned (condition number {condition:.3g})")
    full = norms.flat()[:, None] * (bras.vectors.T @ w1 @ basis.vectors)
    a, b, c, leak = _split(full, basis.N)
    logging.debug(f"Basis-change entries for N = {basis.N}: off-band magnitude {leak:.3e}")
    return BlockTriMatrix(N=basis.N, a=a, b=b, c=c, dual=basis.kind == "phi",
                          method="oracle", off_band=leak)


def oracle_entries(params: ModelParams, tol: GenericityTolerances | None = None) -> BlockTriMatrix:
    return entries_by_basis_change(
        build_w1(params, tol),
        eigenbasis(params, "psi", tol=tol),
        norm_coeffs(params, tol=tol),
        eigenbasis(params, "psi_tilde", tol=tol),
    )


def dual_entries(params: ModelParams, via: str = "substitution", tol: GenericityTolerances | None = None) -> BlockTriMatrix:
    """Entries of W0 in the phi basis."""
    if via == "substitution":
        blocks = entries_recursive(params.substituted(), tol)
        blocks.dual = True
        return blocks
    if via == "basis_change":
        return entries_by_basis_change(
            build_w0(params, tol),
            eigenbasis(params, "phi", tol=tol),
            norm_coeffs(params, tilde=True, tol=tol),
            eigenbasis(params, "phi_tilde", tol=tol),
        )
    raise ValueError(f"unknown route {via!r}, expected substitution or basis_change")


@dataclass
class SpectrumReport:
    annihilator: float
    multiplicities: list[int]
    expected: list[int]
    trace_error: float

    @property
    def multiplicities_ok(self) -> bool:
        return self.multiplicities == self.expected


def spectrum_report(blocks: BlockTriMatrix, params: ModelParams, rank_tol: float = 1e-9) -> SpectrumReport:
    """
    Compares the assembled matrix with the spectrum {lambda~_s} (or {lambda_n}
    for dual blocks) without an eigensolver: prod_s (T - l_s) must vanish and
    each kernel must have dimension C(N, s).
    """
    full = blocks.assemble()
    values = eigenvalues(params, dual=not blocks.dual)
    eye = np.eye(full.shape[0])
    product = eye.astype(complex)
    scale = 1.0
    multiplicities = []
    for value in values:
        shifted = full - value * eye
        product = product @ shifted
        singular = np.linalg.svd(shifted, compute_uv=False)
        scale *= max(singular[0], 1.0)
        cutoff = rank_tol * max(singular[0], 1.0)
        multiplicities.append(int(np.sum(singular <= cutoff)))
    expected_trace = sum(math.comb(params.N, s) * v for s, v in enumerate(values))
    return SpectrumReport(
        annihilator=float(np.linalg.norm(product) / scale),
        multiplicities=multiplicities,
        expected=[math.comb(params.N, s) for s in range(params.N + 1)],
        trace_error=float(abs(np.trace(full) - expected_trace) / max(abs(expected_trace), 1.0)),
    )


def algebra_dimension(generators: list[np.ndarray], rel_tol: float = 1e-10) -> int:
    """Dimension of the unital algebra generated by the matrices (span of all words)."""
    dim = generators[0].shape[0]
    target = dim * dim
    basis: list[np.ndarray] = []

    def absorb(word: np.ndarray) -> np.ndarray | None:
        vec = word.ravel().astype(complex)
        norm = np.linalg.norm(vec)
        if norm == 0:
            return None
        for _ in range(2):
            for q in basis:
                vec = vec - np.vdot(q, vec) * q
        residual = np.linalg.norm(vec)
        if residual <= rel_tol * norm:
            return None
        vec = vec / residual
        basis.append(vec)
        return vec.reshape(dim, dim)

    frontier = [absorb(np.eye(dim, dtype=complex))]
    while frontier and len(basis) < target:
        grown = []
        for word in frontier:
            for generator in generators:
                added = absorb(generator @ word)
                if added is not None:
                    grown.append(added)
                if len(basis) == target:
                    break
        frontier = grown
    return len(basis)


@dataclass
class AxiomReport:
    N: int
    condition_psi: float
    condition_phi: float
    w1_off_band: float
    w0_off_band: float
    shape: tuple[int, ...]
    algebra_dim: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def shape_ok(self) -> bool:
        shape = self.shape
        peak = len(shape) // 2
        symmetric = shape == shape[::-1]
        unimodal = all(shape[i] <= shape[i + 1] for i in range(peak)) and \
            all(shape[i] >= shape[i + 1] for i in range(peak, len(shape) - 1))
        return symmetric and unimodal and len(shape) == self.N + 1

    @property
    def irreducible(self) -> bool | None:
        if self.algebra_dim is None:
            return None
        return self.algebra_dim == 4 ** self.N


def check_td_pair_axioms(
    params: ModelParams,
    tol: GenericityTolerances | None = None,
    irreducibility_cap: int = 4,
) -> AxiomReport:
    """
    Runtime version of the tridiagonal pair definition: both generators
    diagonalizable, each block-tridiagonal on the other's ordered eigenspaces,
    no common invariant subspace, and the shape vector of binomials.
    """
    psi = eigenbasis(params, "psi", tol=tol)
    phi = eigenbasis(params, "phi", tol=tol)
    direct = oracle_entries(params, tol)
    dual = dual_entries(params, via="basis_change", tol=tol)
    report = AxiomReport(
        N=params.N,
        condition_psi=psi.condition_number(),
        condition_phi=phi.condition_number(),
        w1_off_band=direct.off_band,
        w0_off_band=dual.off_band,
        shape=tuple(math.comb(params.N, n) for n in range(params.N + 1)),
    )
    if params.N <= irreducibility_cap:
        report.algebra_dim = algebra_dimension([build_w0(params, tol), build_w1(params, tol)])
    else:
        report.notes.append(f"irreducibility skipped above N = {irreducibility_cap}")
    return report


def max_entry_difference(first: BlockTriMatrix, second: BlockTriMatrix) -> float:
    """max |x - y| / max(1, max |y|) over all blocks."""
    if first.N != second.N:
        raise DimensionError(f"cannot compare N = {first.N} with N = {second.N}")
    worst = 0.0
    for name in ("a", "b", "c"):
        for n in range(first.N + 1):
            x = first.block(name, n)
            y = second.block(name, n)
            if y.size == 0:
                continue
            worst = max(worst, float(np.max(np.abs(x - y)) / max(1.0, float(np.max(np.abs(y))))))
    return worst
