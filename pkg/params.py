#!/usr/bin/env python3
"""Model parameters (N, alpha, alpha*, phi, theta), derived scalars and genericity guards."""
from __future__ import annotations

import cmath
import logging
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any


class ParameterError(ValueError):
    """Invalid model parameters or unparseable parameter input."""


class GenericityError(ValueError):
    """A guarded denominator or overlap coefficient fell below tolerance."""


class DimensionError(ValueError):
    """Dimension cap exceeded, mismatched dimensions or index out of range."""


@dataclass(frozen=True)
class GenericityTolerances:
    guard: float = 1e-8
    dimension_cap: int = 12
    imaginary: float = 1e-12


@dataclass(frozen=True)
class ModelParams:
    N: int
    alpha: complex
    alpha_star: complex
    phi: complex
    theta: float = 0.0

    def substituted(self) -> ModelParams:
        """Duality map alpha -> -alpha*, alpha* -> -alpha, phi -> -phi, theta -> theta + pi."""
        return ModelParams(
            N=self.N,
            alpha=-complex(self.alpha_star),
            alpha_star=-complex(self.alpha),
            phi=-complex(self.phi),
            theta=float(self.theta) + math.pi,
        )

    def with_size(self, N: int) -> ModelParams:
        return replace(self, N=N)

    def is_imaginary_regime(self, tol: float = 1e-12) -> bool:
        return all(abs(complex(z).real) <= tol for z in (self.alpha, self.alpha_star, self.phi))

    def to_dict(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "alpha": encode_complex(self.alpha),
            "alpha_star": encode_complex(self.alpha_star),
            "phi": encode_complex(self.phi),
            "theta": float(self.theta),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelParams:
        try:
            return cls(
                N=int(data["N"]),
                alpha=parse_complex(data["alpha"]),
                alpha_star=parse_complex(data["alpha_star"]),
                phi=parse_complex(data["phi"]),
                theta=float(data.get("theta", 0.0)),
            )
        except KeyError as e:
            raise ParameterError(f"missing model parameter {e}") from e
        except (TypeError, ValueError) as e:
            if isinstance(e, ParameterError):
                raise
            raise ParameterError(f"malformed model parameters: {e}") from e


@dataclass(frozen=True)
class DerivedScalars:
    q: complex
    q_half: complex
    k_plus: complex
    k_minus: complex
    rho: complex


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


_COMPLEX_TEXT = re.compile(r"^[0-9eE+\-.ij]+$")
_DANGLING_EXPONENT = re.compile(r"[eE](?![+\-]?[0-9])")


def parse_complex(value: Any) -> complex:
    """
    Accepts:
      - a number (int, float, complex)
      - a two-element [re, im] sequence
      - text "RE+IMi", "IMi", "RE" ("j" works as well as "i")
    """
    if isinstance(value, bool):
        raise ParameterError(f"not a complex number: {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ParameterError(f"complex arrays need exactly [re, im], got {value!r}")
        try:
            return complex(float(value[0]), float(value[1]))
        except (TypeError, ValueError) as e:
            raise ParameterError(f"not a complex number: {value!r}") from e
    if isinstance(value, str):
        text = value.strip().replace(" ", "")
        if not text or not _COMPLEX_TEXT.match(text) or _DANGLING_EXPONENT.search(text):
            raise ParameterError(f"not a complex number: {value!r}")
        text = re.sub(r"(^|[+\-])j", r"\g<1>1j", text.replace("i", "j"))
        try:
            return complex(text)
        except ValueError as e:
            raise ParameterError(f"not a complex number: {value!r}") from e
    raise ParameterError(f"not a complex number: {value!r}")


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def validate(params: ModelParams, tol: GenericityTolerances | None = None) -> ValidationReport:
    """Collect every violated invariant; never raises."""
    tol = tol or GenericityTolerances()
    report = ValidationReport()
    violations = report.violations

    if not isinstance(params.N, int) or isinstance(params.N, bool) or params.N < 1:
        violations.append(f"N must be a positive integer, got {params.N!r}")
        return report
    try:
        alpha = complex(params.alpha)
        alpha_star = complex(params.alpha_star)
        phi = complex(params.phi)
    except (TypeError, ValueError):
        violations.append("alpha, alpha_star and phi must be complex numbers")
        return report
    theta = params.theta
    if isinstance(theta, complex):
        if abs(theta.imag) > tol.imaginary:
            violations.append("theta must be real")
    elif not isinstance(theta, (int, float)) or not math.isfinite(theta):
        violations.append("theta must be a finite real number")

    if not all(cmath.isfinite(z) for z in (alpha, alpha_star, phi)):
        violations.append("alpha, alpha_star and phi must be finite")
        return report
    if abs(phi.real) > tol.imaginary:
        violations.append(f"phi must be purely imaginary, got Re(phi) = {phi.real:.3g}")
    if alpha == 0:
        violations.append("α must be nonzero")
    if alpha_star == 0:
        violations.append("α* must be nonzero")
    if params.N > tol.dimension_cap:
        violations.append(f"N = {params.N} exceeds the dimension cap {tol.dimension_cap}")

    q = cmath.exp(phi)
    for m in range(1, 4 * params.N + 1):
        if abs(q ** m - 1) <= tol.guard:
            violations.append(f"q is a root of unity: |q^{m} - 1| <= {tol.guard:g}")
            break

    for name, value in (("alpha", alpha), ("alpha_star", alpha_star)):
        for m in range(-(params.N + 1), params.N + 2):
            if abs(cmath.sinh(value + m * phi / 2)) <= tol.guard:
                violations.append(f"non-generic {name}: sinh({name} + {m}*phi/2) vanishes")

    if violations:
        logging.debug(f"Validation found {len(violations)} violation(s): {violations}")
    return report


def require_valid(params: ModelParams, tol: GenericityTolerances | None = None) -> None:
    report = validate(params, tol)
    if not report.ok:
        raise ParameterError("; ".join(report.violations))


def derive(params: ModelParams, tol: GenericityTolerances | None = None) -> DerivedScalars:
    require_valid(params, tol)
    phi = complex(params.phi)
    q = cmath.exp(phi)
    q_half = cmath.exp(phi / 2)
    k_plus = -(q_half - 1 / q_half) * cmath.exp(1j * params.theta) / 2
    k_minus = k_plus.conjugate()
    rho = (q_half + 1 / q_half) ** 2 * k_plus * k_minus

    expected = -((q - 1 / q) ** 2) / 4
    if abs(rho - expected) > 1e-12 * max(abs(expected), 1.0):
        raise ParameterError(f"inconsistent rho: {rho} vs {expected}")
    return DerivedScalars(q=q, q_half=q_half, k_plus=k_plus, k_minus=k_minus, rho=rho)
