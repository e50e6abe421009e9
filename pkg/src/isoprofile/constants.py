"""Comparison constants for the first-order (diameter-dependent) profile bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import integrate
from .spaceform import DomainError, ck


def gamma_n(n: int) -> float:
    """Integral of ``cos^(n-1)`` over ``[-pi/2, pi/2]``."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    return integrate(lambda t: np.cos(t) ** (n - 1), -math.pi / 2, math.pi / 2)


def lambda_kappa(n: int, kappa: float, d: float) -> float:
    """Integral of ``c_kappa^(n-1)`` over ``[-d/2, d/2]`` for ``kappa > 0``."""
    if kappa <= 0:
        raise ValueError("lambda_kappa is defined for kappa > 0; use lambda0 for kappa = 0")
    limit = math.pi / math.sqrt(kappa)
    if not 0 < d <= limit * (1 + 1e-14):
        raise DomainError(f"diameter {d} outside (0, {limit}] for kappa={kappa}")
    d = min(d, limit)
    return integrate(lambda t: ck(kappa, t) ** (n - 1), -d / 2, d / 2)


def alpha(n: int, d: float) -> float:
    """BBG improvement factor ``(gamma_n / lambda^1_{n,d})^(1/n)``; unit curvature."""
    return (gamma_n(n) / lambda_kappa(n, 1.0, d)) ** (1.0 / n)


def lambda0(n: int, d: float) -> float:
    if d <= 0:
        raise DomainError("diameter must be positive")
    return integrate(lambda t: (1.0 + t * t) ** ((n - 1) / 2), 0.0, d)


def alpha_prime(n: int, d: float) -> float:
    return (gamma_n(n) / lambda0(n, d)) ** (1.0 / n)


@dataclass(frozen=True)
class ComparisonConstants:
    n: int
    kappa: float
    d: float
    gamma_n: float
    lam: float
    alpha: float

    def as_row(self) -> dict:
        return {"n": self.n, "kappa": self.kappa, "d": self.d,
                "gamma_n": self.gamma_n, "lambda": self.lam, "alpha": self.alpha}


def comparison_constants(n: int, kappa: float, d: float) -> ComparisonConstants:
    """Constants for ``Ric >= (n-1) kappa`` and diameter ``d``.

    For ``kappa > 0`` the factor is the unit-curvature one at the rescaled
    diameter ``sqrt(kappa) d``; ``kappa = 0`` uses the polynomial weight.
    """
    g = gamma_n(n)
    if kappa > 0:
        lam = lambda_kappa(n, kappa, d)
        return ComparisonConstants(n, kappa, d, g, lam, alpha(n, min(math.sqrt(kappa) * d, math.pi)))
    if kappa == 0:
        lam = lambda0(n, d)
        return ComparisonConstants(n, kappa, d, g, lam, (g / lam) ** (1.0 / n))
    raise ValueError("no sharp first-order constants for kappa < 0")
